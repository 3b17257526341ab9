#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bcg/matval.hpp"

namespace bcg {

// ---------------------------------------------------------------------------
// Scalar expressions. Every Expr denotes one element; matrix operations are
// recorded as one instruction per element or as a helper call.
// ---------------------------------------------------------------------------

enum class ExprKind { literal, ref, elem, negate, binary, compare, call, select, convert };

/// Integer overflow behavior carried on arithmetic nodes. Only wrapping is
/// implemented; the attribute is kept so a printer can specialize later.
enum class Overflow { wrap };

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprKind kind = ExprKind::literal;
  Dtype dtype = Dtype::f64;  // dtype of the value this node produces
  double literal = 0.0;
  std::string name;        // ref / elem
  std::size_t index = 0;   // elem, 0-based column-major
  BinOp binop = BinOp::add;
  CmpOp cmpop = CmpOp::eq;
  MathFn fn = MathFn::sqrt;
  Overflow overflow = Overflow::wrap;
  std::vector<Expr> args;
};

namespace ex {
Expr lit(double v, Dtype d);
Expr ref(std::string name, Dtype d);
Expr elem(std::string name, std::size_t index, Dtype d);
Expr neg(Expr a);
Expr binary(BinOp op, Expr a, Expr b);
Expr compare(CmpOp op, Expr a, Expr b);
Expr call(MathFn fn, std::vector<Expr> args);
Expr select(Expr cond, Expr a, Expr b);
Expr convert(Expr a, Dtype to);
}  // namespace ex

bool is_literal(const Expr& e);
bool expr_equal(const Expr& a, const Expr& b);
void collect_reads(const Expr& e, std::set<std::string>& out);
std::size_t count_uses(const Expr& e, std::string_view name);
/// Replaces every ref to `name` by `replacement`.
Expr substitute(const Expr& e, std::string_view name, const Expr& replacement);

// ---------------------------------------------------------------------------
// Instructions
// ---------------------------------------------------------------------------

struct CallTarget {
  std::string function;
  std::vector<std::string> args;
  friend bool operator==(const CallTarget&, const CallTarget&) = default;
};

/// Binds a fresh scalar temporary.
struct Def {
  std::string name;
  Expr value;
};
/// name[index] <- value; 1x1 targets print as a scalar store.
struct SetElement {
  std::string target;
  std::size_t index = 0;
  Expr value;
};
/// Whole-matrix block copy of `count` elements.
struct Copy {
  std::string target;
  std::string source;
  std::size_t count = 0;
};
struct Annotation {
  std::string text;
};
/// Call to a generated function or to one of the runtime helpers.
struct Call {
  CallTarget target;
};
/// Structural conditional: exactly one branch call runs.
struct IfExpr {
  Expr cond;
  CallTarget then_call;
  CallTarget else_call;
};

using Instr = std::variant<Def, SetElement, Copy, Annotation, Call, IfExpr>;

std::string_view instr_kind(const Instr& in);

inline constexpr std::string_view kHelperMult = "mult";
inline constexpr std::string_view kHelperQuote = "quote";
inline constexpr std::string_view kHelperInverse = "minv";
bool is_helper(std::string_view function);

/// Names an instruction reads.
std::set<std::string> instr_reads(const Instr& in);
/// Names an instruction writes; `full` is set when every written name is
/// completely overwritten.
std::set<std::string> instr_writes(const Instr& in, bool* full = nullptr);
/// True for instructions whose effects are not captured by instr_writes
/// (calls into generated functions may touch any static).
bool has_side_effects(const Instr& in);

// ---------------------------------------------------------------------------
// Declarations, functions, programs
// ---------------------------------------------------------------------------

struct VarInfo {
  std::string name;
  Dtype dtype = Dtype::f64;
  Shape shape{1, 1};
};

struct Decl {
  VarInfo var;
  std::optional<MatValue> init;
  bool is_static = false;  // function-local static (initialize uses these)
  bool temp = false;       // introduced by a Def rather than by a directive
};

struct Function {
  std::string name;
  std::vector<VarInfo> params;
  std::vector<Decl> locals;
  std::vector<Instr> body;

  const VarInfo* find_param(std::string_view n) const;
  const Decl* find_local(std::string_view n) const;
};

struct EntryPoints {
  std::string init_function;
  std::string output_function;
  std::string state_function;
  std::vector<VarInfo> inputs;
  std::vector<VarInfo> outputs;
};

struct Program {
  std::vector<Decl> statics;
  std::vector<Function> functions;
  std::optional<EntryPoints> entry;

  const Function* find_function(std::string_view n) const;
  const Decl* find_static(std::string_view n) const;
  std::size_t instruction_count() const;
};

enum class Storage { param, local, global };

struct Resolved {
  Storage storage;
  VarInfo var;
  const Decl* decl = nullptr;  // null for params
};

std::optional<Resolved> resolve(const Function& fn, std::span<const Decl> statics, std::string_view name);

std::string dump_expr(const Expr& e);
std::string dump_function(const Function& fn);
std::string dump_ir(const Program& prog);

}  // namespace bcg
