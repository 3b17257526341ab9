#pragma once

#include <algorithm>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "bcg/model.hpp"

#ifndef BCG_FIXTURE_DIR
#error "BCG_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace testing_support {

inline std::string fixture_path(const std::string& name) { return std::string(BCG_FIXTURE_DIR) + "/" + name; }

inline bcg::Model fixture(const std::string& name) { return bcg::load_model(fixture_path(name + ".json")); }

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{"fig2", "coding", "kalman"};
  return names;
}

/// C-ish tokens with whitespace dropped.
inline std::vector<std::string> tokens(const std::string& text) {
  static const std::regex tok(R"([A-Za-z_][A-Za-z_0-9]*|[0-9]+(\.[0-9]*)?([eE][-+]?[0-9]+)?|->|==|!=|<=|>=|\S)");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), tok); it != std::sregex_iterator(); ++it) {
    out.push_back(it->str());
  }
  return out;
}

/// Renames tmp_<n> to t0, t1, ... by first appearance so two listings that
/// differ only in temp numbering compare equal.
inline std::vector<std::string> normalize_temps(std::vector<std::string> toks) {
  static const std::regex tmp("tmp_[0-9]+");
  std::map<std::string, std::string> seen;
  for (auto& t : toks) {
    if (!std::regex_match(t, tmp)) continue;
    auto it = seen.find(t);
    if (it == seen.end()) it = seen.emplace(t, "t" + std::to_string(seen.size())).first;
    t = it->second;
  }
  return toks;
}

inline std::vector<std::string> canon(const std::string& text) { return normalize_temps(tokens(text)); }

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& t : v) s += t + " ";
  return s;
}

/// Text of `void name(...){ ... }` up to the matching closing brace.
inline std::string function_text(const std::string& text, const std::string& name) {
  const auto at = text.find("void " + name + "(");
  if (at == std::string::npos) return {};
  auto open = text.find('{', at);
  int depth = 0;
  for (auto i = open; i < text.size(); ++i) {
    if (text[i] == '{') ++depth;
    if (text[i] == '}' && --depth == 0) return text.substr(at, i + 1 - at);
  }
  return {};
}

inline std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + needle.size())) ++n;
  return n;
}

}  // namespace testing_support
