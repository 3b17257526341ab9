#pragma once

#include <span>

#include "bcg/ir.hpp"

namespace bcg {

struct OptOptions {
  bool dce = true;
  bool fold = true;
  bool copy_propagation = false;
  /// Inline scalar temporaries that are read exactly once. This is what turns
  /// a chain of per-element defs into the nested expressions of the listings.
  bool forward = true;
};

/// Well-formedness: every name an instruction touches resolves to a
/// parameter, local or static, and every called function exists in `callees`
/// (helpers always do). Throws MalformedIR.
void check_function(const Function& fn, std::span<const Decl> statics, const std::vector<Function>* callees = nullptr);

/// Optimizes one function in place until a fixpoint. At top level
/// (`toplevel`), named locals count as results and are never removed.
void optimize_function(Function& fn, std::span<const Decl> statics, const OptOptions& opts, bool toplevel = false);

/// Optimizes every function, then drops statics no function references
/// (only when dce is on).
Program code_optimize(Program prog, const OptOptions& opts = {});

/// Folds literal-only subexpressions.
Expr fold_expr(const Expr& e);

}  // namespace bcg
