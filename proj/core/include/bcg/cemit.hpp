#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcg/ir.hpp"

namespace bcg {

enum class EmitMode { runtime, freestanding };

struct EmitConfig {
  std::optional<int> block_id;  // suffix for initialize / entry / markers
  std::string entry_name;       // defaults to "toto<block_id>"
  EmitMode mode = EmitMode::runtime;
};

std::string_view c_type(Dtype d);
/// C spelling of a literal of dtype d.
std::string c_literal(double v, Dtype d);

/// Prints the body of `fn` (and its local declarations first when
/// `with_decls`), one entry per emitted line, without indentation.
std::vector<std::string> code_printer_c(const Function& fn, std::span<const Decl> statics, bool with_decls = true);

/// Statics, initialize and every function; no includes, markers or entry.
std::string emit_body(const Program& prog);

/// A complete translation unit.
std::string emit_program(const Program& prog, const EmitConfig& cfg);

/// Source of a runtime helper ("mult", "quote" or "minv").
std::string emit_helper(std::string_view name);

}  // namespace bcg
