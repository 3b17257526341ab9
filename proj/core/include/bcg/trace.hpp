#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bcg/ir.hpp"
#include "bcg/matval.hpp"

namespace bcg {

class TraceContext;

/// Results with at most this many elements are unrolled into per-element
/// instructions; larger f64 products, transposes and inverses become calls
/// to the runtime helpers.
inline constexpr std::size_t kUnrollThreshold = 6;

/// A block variable: a matrix that is either numeric (value known while
/// tracing) or symbolic (only dtype and shape known; value() is nominal).
/// Operations on numerics fold silently. Operations involving a symbolic
/// operand record instructions into the symbolic operand's TraceContext.
class BVar {
 public:
  BVar() = default;
  BVar(double v) : value_(MatValue::scalar(v)) {}  // NOLINT: literal operands in block code
  BVar(MatValue v) : value_(std::move(v)) {}       // NOLINT

  bool is_symbolic() const { return sym_; }
  bool is_numeric() const { return !sym_; }
  const MatValue& value() const { return value_; }
  const std::string& name() const { return name_; }
  TraceContext* context() const { return ctx_; }

  Dtype dtype() const { return value_.dtype(); }
  Shape shape() const { return value_.shape(); }
  std::size_t rows() const { return value_.rows(); }
  std::size_t cols() const { return value_.cols(); }
  std::size_t numel() const { return value_.numel(); }

  // 1-based indexing, source-language convention.
  BVar operator()(std::size_t k) const;
  BVar operator()(std::size_t i, std::size_t j) const;
  void set(std::size_t k, const BVar& rhs);
  void set(std::size_t i, std::size_t j, const BVar& rhs);

  /// Truth of a numeric value (all entries nonzero). Branching on a symbolic
  /// value cannot be partially evaluated and raises SymbolicCondition.
  explicit operator bool() const;

 private:
  friend class TraceContext;
  BVar(bool sym, MatValue v, std::string name, TraceContext* ctx)
      : sym_(sym), value_(std::move(v)), name_(std::move(name)), ctx_(ctx) {}

  bool sym_ = false;
  MatValue value_;
  std::string name_;
  TraceContext* ctx_ = nullptr;
};

BVar numerics(MatValue v);
/// Declares `name` (or a fresh temporary when empty) in the current scope.
BVar symbolics(TraceContext& ctx, MatValue nominal, std::string name = {});

/// A recording session: the instruction stream of the current scope, the
/// declaration pools, finished functions and the unique-name counter.
class TraceContext {
 public:
  TraceContext() = default;
  TraceContext(const TraceContext&) = delete;
  TraceContext& operator=(const TraceContext&) = delete;

  std::string getunique();
  std::size_t unique_counter() const { return counter_; }

  void emit(Instr in);
  void declare(Decl d);
  void declare_static(Decl d);
  bool is_declared(std::string_view name) const;

  /// Handle to an existing name: the result is symbolic and never declared.
  BVar handle(const VarInfo& var);
  BVar handle(const VarInfo& var, MatValue nominal);

  /// Scope of the instructions currently being recorded: the open function,
  /// or the top-level scope when no function is open.
  const Function& current() const { return open_ ? *open_ : toplevel_; }
  const Function& toplevel() const { return toplevel_; }
  bool in_function() const { return open_.has_value(); }
  const std::vector<Decl>& top_declarations() const { return statics_; }
  const std::vector<Function>& functions() const { return functions_; }

  void start_function(std::string name, std::vector<VarInfo> params);
  void end_function(std::string_view name);

  std::vector<std::string>& warnings() { return warnings_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Registry for persistent pools so finalize can see every registered
  /// persistent even when pools were threaded by value.
  std::vector<std::string>& persistent_registry() { return persistents_; }
  const std::vector<std::string>& persistent_registry() const { return persistents_; }

 private:
  Function& scope() { return open_ ? *open_ : toplevel_; }

  Function toplevel_;
  std::optional<Function> open_;
  std::vector<Function> functions_;
  std::vector<Decl> statics_;
  std::vector<std::string> persistents_;
  std::set<std::string> names_;
  std::vector<std::string> warnings_;
  std::size_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Overloaded operations. The explicit-context forms are the primitive API;
// the operators pick the context from whichever operand is symbolic.
// ---------------------------------------------------------------------------

BVar bv_binop(TraceContext& ctx, BinOp op, const BVar& a, const BVar& b);
BVar bv_unary_minus(TraceContext& ctx, const BVar& a);
BVar bv_index_get(TraceContext& ctx, const BVar& a, std::size_t i, std::size_t j);
BVar bv_index_get(TraceContext& ctx, const BVar& a, std::size_t k);
BVar bv_index_set(TraceContext& ctx, const BVar& a, std::size_t i, std::size_t j, const BVar& rhs);
MatValue bv_size(const BVar& a);
Dtype bv_datatype(const BVar& a);
BVar bv_matmul(TraceContext& ctx, const BVar& a, const BVar& b);
BVar bv_transpose(TraceContext& ctx, const BVar& a);
BVar bv_concat_rows(TraceContext& ctx, const BVar& a, const BVar& b);
BVar bv_concat_cols(TraceContext& ctx, const BVar& a, const BVar& b);
BVar bv_convert(TraceContext& ctx, const BVar& a, Dtype d);
BVar bv_sum(TraceContext& ctx, const BVar& a);
BVar bv_compare(TraceContext& ctx, CmpOp op, const BVar& a, const BVar& b);
BVar bv_elem_math(TraceContext& ctx, MathFn fn, const BVar& a);
BVar bv_elem_math(TraceContext& ctx, MathFn fn, const BVar& a, const BVar& b);
BVar bv_inv(TraceContext& ctx, const BVar& a);
/// Elementwise cond ? a : b with a 1x1 condition; a and b share dtype and shape.
BVar bv_select(TraceContext& ctx, const BVar& cond, const BVar& a, const BVar& b);
/// Fresh symbolic with a's dtype and shape; numeric a initializes the
/// declaration with its value.
BVar bv_fresh_like(TraceContext& ctx, const BVar& a);

BVar operator+(const BVar& a, const BVar& b);
BVar operator-(const BVar& a, const BVar& b);
BVar operator-(const BVar& a);
BVar operator*(const BVar& a, const BVar& b);
/// Right division: elementwise for a 1x1 divisor, a * inv(b) otherwise.
BVar operator/(const BVar& a, const BVar& b);
BVar operator==(const BVar& a, const BVar& b);
BVar operator!=(const BVar& a, const BVar& b);
BVar operator<(const BVar& a, const BVar& b);
BVar operator<=(const BVar& a, const BVar& b);
BVar operator>(const BVar& a, const BVar& b);
BVar operator>=(const BVar& a, const BVar& b);

BVar elem_mul(const BVar& a, const BVar& b);
BVar elem_div(const BVar& a, const BVar& b);
BVar transpose(const BVar& a);
BVar vcat(const BVar& a, const BVar& b);
BVar vcat(std::initializer_list<BVar> parts);
BVar hcat(const BVar& a, const BVar& b);
BVar hcat(std::initializer_list<BVar> parts);
BVar convert(const BVar& a, Dtype d);
BVar sum(const BVar& a);
BVar sqrt(const BVar& a);
BVar sin(const BVar& a);
BVar cos(const BVar& a);
BVar atan2(const BVar& y, const BVar& x);
BVar inv(const BVar& a);
MatValue size(const BVar& a);
Dtype datatype(const BVar& a);
BVar eye(std::size_t n);
BVar ones(Shape s, Dtype d = Dtype::f64);

}  // namespace bcg
