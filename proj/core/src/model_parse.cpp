#include <fstream>
#include <set>
#include <sstream>

#include "bcg/model.hpp"
#include "json.hpp"

namespace bcg {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::ParseError, msg); }

Dtype dtype_of(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where + ": dtype must be a string");
  auto d = parse_dtype(j.get<std::string>());
  if (!d) fail(where + ": unknown dtype " + j.get<std::string>());
  return *d;
}

Shape shape_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned()) {
    fail(where + ": shape must be [rows, cols]");
  }
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

Signature signature_of(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where + ": expected {\"dtype\", \"shape\"}");
  Signature s;
  if (j.contains("dtype")) s.dtype = dtype_of(j["dtype"], where);
  if (j.contains("shape")) s.shape = shape_of(j["shape"], where);
  return s;
}

// A number is an f64 scalar; an object gives dtype, rows, cols and row-major
// data.
MatValue matrix_of(const json& j, const std::string& where) {
  if (j.is_number()) return MatValue::scalar(j.get<double>());
  if (!j.is_object() || !j.contains("data") || !j["data"].is_array()) {
    fail(where + ": matrix literal needs a data array");
  }
  const Dtype d = j.contains("dtype") ? dtype_of(j["dtype"], where) : Dtype::f64;
  std::vector<double> rm;
  for (const auto& v : j["data"]) {
    if (v.is_boolean()) {
      rm.push_back(v.get<bool>() ? 1.0 : 0.0);
    } else if (v.is_number()) {
      rm.push_back(v.get<double>());
    } else {
      fail(where + ": matrix entries must be numbers");
    }
  }
  const std::size_t rows = j.value("rows", rm.size() == 1 ? std::size_t{1} : rm.size());
  const std::size_t cols = j.value("cols", rows ? rm.size() / rows : std::size_t{0});
  if (rows * cols != rm.size()) {
    fail(where + ": " + std::to_string(rm.size()) + " entries for " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  MatValue v = MatValue::from_rows(rows, cols, std::span<const double>(rm), Dtype::f64);
  return d == Dtype::f64 ? v : convert(v, d);
}

Endpoint endpoint_of(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where + ": endpoint must be a string like \"3.1\", \"in.1\" or \"out.2\"");
  const std::string s = j.get<std::string>();
  const auto dot = s.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == s.size()) fail(where + ": bad endpoint " + s);
  const std::string head = s.substr(0, dot);
  Endpoint e;
  try {
    std::size_t used = 0;
    const long port = std::stol(s.substr(dot + 1), &used);
    if (used != s.size() - dot - 1 || port < 1) fail(where + ": bad port in " + s);
    e.port = static_cast<std::size_t>(port);
    if (head == "in") {
      e.kind = Endpoint::Kind::input;
    } else if (head == "out") {
      e.kind = Endpoint::Kind::output;
    } else {
      e.kind = Endpoint::Kind::block;
      e.id = std::stoi(head, &used);
      if (used != head.size()) fail(where + ": bad block id in " + s);
    }
  } catch (const std::logic_error&) {
    fail(where + ": bad endpoint " + s);
  }
  return e;
}

std::vector<int> id_list(const json& j, const std::string& where) {
  std::vector<int> out;
  if (j.is_null()) return out;
  if (!j.is_array()) fail(where + ": expected an array of block ids");
  for (const auto& v : j) {
    if (!v.is_number_integer()) fail(where + ": block ids are integers");
    out.push_back(v.get<int>());
  }
  return out;
}

struct Arity {
  std::size_t min_in, max_in, min_out, max_out;
};

Arity arity(BlockKind k) {
  constexpr std::size_t many = 1u << 20;
  switch (k) {
    case BlockKind::UnitDelay:
    case BlockKind::Gain: return {1, 1, 1, 1};
    case BlockKind::Summation: return {1, many, 1, 1};
    case BlockKind::Mux: return {2, many, 1, 1};
    case BlockKind::RelationalOp: return {2, 2, 1, 1};
    case BlockKind::Select: return {2, 2, 1, 1};
    case BlockKind::IfThenElse: return {1, 1, 0, 0};
    case BlockKind::Const: return {0, 0, 1, 1};
    case BlockKind::SciBlk: return {0, many, 0, many};
  }
  return {0, 0, 0, 0};
}

void validate(Model& m) {
  std::set<int> block_ids;
  for (const auto& b : m.blocks) {
    if (!block_ids.insert(b.id).second) fail("duplicate block id " + std::to_string(b.id));
  }
  std::set<int> link_ids;
  for (const auto& l : m.links) {
    if (!link_ids.insert(l.id).second) fail("duplicate link id " + std::to_string(l.id));
  }

  // every block input and Super Block output is driven by exactly one link
  std::map<std::pair<int, std::size_t>, int> driven;
  std::map<std::size_t, int> out_driven;
  std::map<std::pair<int, std::size_t>, int> sourced;
  std::set<std::size_t> in_sourced;
  for (const auto& l : m.links) {
    const std::string where = "link " + std::to_string(l.id);
    switch (l.from.kind) {
      case Endpoint::Kind::output: fail(where + ": cannot start at a Super Block output");
      case Endpoint::Kind::input:
        if (l.from.port > m.inputs.size()) fail(where + ": no Super Block input " + std::to_string(l.from.port));
        if (!in_sourced.insert(l.from.port).second) fail(where + ": input port already has a link");
        break;
      case Endpoint::Kind::block:
        if (!block_ids.count(l.from.id)) fail(where + ": unknown block " + std::to_string(l.from.id));
        if (!sourced.emplace(std::pair{l.from.id, l.from.port}, l.id).second) {
          fail(where + ": output " + to_string(l.from) + " already has a link");
        }
        break;
    }
    if (l.to.empty()) fail(where + ": no destination");
    for (const auto& t : l.to) {
      switch (t.kind) {
        case Endpoint::Kind::input: fail(where + ": cannot end at a Super Block input");
        case Endpoint::Kind::output:
          if (t.port > m.outputs.size()) fail(where + ": no Super Block output " + std::to_string(t.port));
          if (!out_driven.emplace(t.port, l.id).second) fail(where + ": output port already driven");
          break;
        case Endpoint::Kind::block:
          if (!block_ids.count(t.id)) fail(where + ": unknown block " + std::to_string(t.id));
          if (!driven.emplace(std::pair{t.id, t.port}, l.id).second) {
            fail(where + ": input " + to_string(t) + " already driven");
          }
          break;
      }
    }
  }
  for (std::size_t k = 1; k <= m.outputs.size(); ++k) {
    if (!out_driven.count(k)) fail("Super Block output " + std::to_string(k) + " is not driven");
  }

  for (auto& b : m.blocks) {
    const std::string where = "block " + std::to_string(b.id);
    std::size_t n_in = 0, n_out = 0;
    for (const auto& [key, _] : driven) {
      if (key.first == b.id) n_in = std::max(n_in, key.second);
    }
    for (const auto& [key, _] : sourced) {
      if (key.first == b.id) n_out = std::max(n_out, key.second);
    }
    for (std::size_t p = 1; p <= n_in; ++p) {
      if (!driven.count({b.id, p})) fail(where + ": input " + std::to_string(p) + " is not connected");
    }
    n_out = std::max(n_out, b.out_sigs.size());
    b.n_in = n_in;
    b.n_out = n_out;
    b.out_sigs.resize(n_out);
    const Arity a = arity(b.kind);
    if (n_in < a.min_in || n_in > a.max_in || n_out < a.min_out || n_out > a.max_out) {
      throw Error(ErrorCode::ArityViolation, where + " (" + std::string(kind_name(b.kind)) + ") has " +
                                                 std::to_string(n_in) + " inputs and " + std::to_string(n_out) +
                                                 " outputs");
    }
    if (b.kind == BlockKind::SciBlk) {
      if (b.behavior.empty()) fail(where + ": SciBlk needs a behavior name");
      if (!find_sciblk(b.behavior)) throw Error(ErrorCode::UnknownName, where + ": no SciBlk behavior " + b.behavior);
    }
    if (b.kind == BlockKind::Const && !b.params.count("p1")) fail(where + ": Const needs p1");
    if (b.kind == BlockKind::Gain && !b.params.count("p1")) fail(where + ": Gain needs p1");
  }

  std::set<int> in_region;
  for (const auto& r : m.regions) {
    const std::string where = "region of block " + std::to_string(r.if_block);
    auto kind_is = [&](int id, BlockKind k) {
      return block_ids.count(id) && m.block(id).kind == k;
    };
    if (!kind_is(r.if_block, BlockKind::IfThenElse)) fail(where + ": not an IfThenElse block");
    if (!kind_is(r.select_block, BlockKind::Select)) fail(where + ": select " + std::to_string(r.select_block) + " is not a Select block");
    std::vector<int> members = r.then_blocks;
    members.insert(members.end(), r.else_blocks.begin(), r.else_blocks.end());
    members.push_back(r.if_block);
    members.push_back(r.select_block);
    for (int id : members) {
      if (!block_ids.count(id)) fail(where + ": unknown block " + std::to_string(id));
      if (!in_region.insert(id).second) fail(where + ": block " + std::to_string(id) + " belongs to two regions");
      const BlockDef& b = m.block(id);
      if (b.kind == BlockKind::UnitDelay || b.stateful) {
        throw Error(ErrorCode::InvalidParameter, where + ": branch block " + std::to_string(id) + " has a state");
      }
    }
  }
  for (const auto& b : m.blocks) {
    if ((b.kind == BlockKind::IfThenElse || b.kind == BlockKind::Select) && !in_region.count(b.id)) {
      fail("block " + std::to_string(b.id) + ": " + std::string(kind_name(b.kind)) + " outside a region");
    }
  }
}

}  // namespace

Model parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(e.what());
  }
  if (!doc.is_object()) fail("model must be a JSON object");
  Model m;
  try {
    if (doc.contains("block_id")) {
      if (!doc["block_id"].is_number_integer() || doc["block_id"].get<int>() < 0) fail("block_id must be a nonnegative integer");
      m.block_id = doc["block_id"].get<int>();
    }
    if (doc.contains("ports")) {
      const auto& p = doc["ports"];
      for (const auto& s : p.value("inputs", json::array())) m.inputs.push_back(signature_of(s, "ports.inputs"));
      for (const auto& s : p.value("outputs", json::array())) m.outputs.push_back(signature_of(s, "ports.outputs"));
    }
    if (!doc.contains("blocks") || !doc["blocks"].is_array()) fail("missing blocks array");
    for (const auto& jb : doc["blocks"]) {
      if (!jb.is_object() || !jb.contains("id") || !jb["id"].is_number_integer()) fail("every block needs an integer id");
      BlockDef b;
      b.id = jb["id"].get<int>();
      const std::string where = "block " + std::to_string(b.id);
      if (!jb.contains("kind") || !jb["kind"].is_string()) fail(where + ": missing kind");
      auto k = parse_kind(jb["kind"].get<std::string>());
      if (!k) fail(where + ": unknown kind " + jb["kind"].get<std::string>());
      b.kind = *k;
      if (jb.contains("behavior")) b.behavior = jb["behavior"].get<std::string>();
      b.stateful = jb.value("stateful", false);
      if (jb.contains("params")) {
        if (!jb["params"].is_object()) fail(where + ": params must be an object");
        for (const auto& [name, v] : jb["params"].items()) b.params[name] = matrix_of(v, where + " param " + name);
      }
      if (jb.contains("outputs")) {
        if (!jb["outputs"].is_array()) fail(where + ": outputs must be an array");
        for (const auto& s : jb["outputs"]) {
          if (s.is_null()) {
            b.out_sigs.emplace_back();
          } else {
            b.out_sigs.push_back(signature_of(s, where + " outputs"));
          }
        }
      }
      m.blocks.push_back(std::move(b));
    }
    if (!doc.contains("links") || !doc["links"].is_array()) fail("missing links array");
    for (const auto& jl : doc["links"]) {
      if (!jl.is_object() || !jl.contains("id") || !jl["id"].is_number_integer()) fail("every link needs an integer id");
      LinkDef l;
      l.id = jl["id"].get<int>();
      const std::string where = "link " + std::to_string(l.id);
      if (!jl.contains("from")) fail(where + ": missing from");
      l.from = endpoint_of(jl["from"], where);
      if (!jl.contains("to")) fail(where + ": missing to");
      const json& to = jl["to"];
      if (to.is_array()) {
        for (const auto& t : to) l.to.push_back(endpoint_of(t, where));
      } else {
        l.to.push_back(endpoint_of(to, where));
      }
      if (jl.contains("init")) l.init = matrix_of(jl["init"], where + " init");
      if (jl.contains("dtype") || jl.contains("shape")) l.sig = signature_of(jl, where);
      m.links.push_back(std::move(l));
    }
    for (const auto& jr : doc.value("regions", json::array())) {
      Region r;
      if (!jr.contains("if") || !jr.contains("select")) fail("region needs if and select");
      r.if_block = jr["if"].get<int>();
      r.select_block = jr["select"].get<int>();
      r.then_blocks = id_list(jr.value("then", json()), "region then");
      r.else_blocks = id_list(jr.value("else", json()), "region else");
      m.regions.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    fail(e.what());
  }
  validate(m);
  return m;
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace bcg
