#include "bcg/trace.hpp"

#include <algorithm>
#include <functional>

namespace bcg {

// ---------------------------------------------------------------------------
// TraceContext
// ---------------------------------------------------------------------------

std::string TraceContext::getunique() {
  std::string name;
  do {
    name = "tmp_" + std::to_string(++counter_);
  } while (names_.count(name));
  names_.insert(name);
  return name;
}

void TraceContext::emit(Instr in) { scope().body.push_back(std::move(in)); }

bool TraceContext::is_declared(std::string_view name) const {
  const Function& fn = current();
  if (fn.find_param(name) || fn.find_local(name)) return true;
  return std::any_of(statics_.begin(), statics_.end(), [&](const Decl& d) { return d.var.name == name; });
}

void TraceContext::declare(Decl d) {
  if (d.var.name.empty()) throw Error(ErrorCode::InvalidValue, "declaration needs a name");
  if (is_declared(d.var.name)) throw Error(ErrorCode::DuplicateName, d.var.name);
  names_.insert(d.var.name);
  scope().locals.push_back(std::move(d));
}

void TraceContext::declare_static(Decl d) {
  for (const auto& s : statics_) {
    if (s.var.name == d.var.name) throw Error(ErrorCode::DuplicateName, d.var.name);
  }
  names_.insert(d.var.name);
  statics_.push_back(std::move(d));
}

BVar TraceContext::handle(const VarInfo& var) { return handle(var, MatValue::zeros(var.dtype, var.shape)); }

BVar TraceContext::handle(const VarInfo& var, MatValue nominal) {
  return BVar(true, std::move(nominal), var.name, this);
}

void TraceContext::start_function(std::string name, std::vector<VarInfo> params) {
  if (open_) throw Error(ErrorCode::NestedFunction, "cannot start " + name + " inside " + open_->name);
  for (const auto& f : functions_) {
    if (f.name == name) throw Error(ErrorCode::DuplicateName, "function " + name);
  }
  Function fn;
  fn.name = std::move(name);
  for (const auto& p : params) names_.insert(p.name);
  fn.params = std::move(params);
  open_ = std::move(fn);
}

void TraceContext::end_function(std::string_view name) {
  if (!open_) throw Error(ErrorCode::NoOpenFunction, std::string(name));
  if (open_->name != name) {
    throw Error(ErrorCode::UnbalancedFunction, "EndFunction(" + std::string(name) + ") closes " + open_->name);
  }
  functions_.push_back(std::move(*open_));
  open_.reset();
}

// ---------------------------------------------------------------------------
// Element expression helpers
// ---------------------------------------------------------------------------

namespace {

Expr element_expr(const BVar& v, std::size_t k) {
  if (v.numel() == 1) k = 0;
  if (v.is_numeric()) return ex::lit(v.value().at(k), v.dtype());
  if (v.numel() == 1) return ex::ref(v.name(), v.dtype());
  return ex::elem(v.name(), k, v.dtype());
}

Expr element_expr(const BVar& v, std::size_t i, std::size_t j) {
  return element_expr(v, v.numel() == 1 ? 0 : i + v.rows() * j);
}

bool lit_is(const Expr& e, double v) { return is_literal(e) && e->literal == v; }

Expr mk_neg(const Expr& a) {
  if (is_literal(a)) return ex::lit(scalar_negate(a->dtype, a->literal), a->dtype);
  return ex::neg(a);
}

// Literal folding plus the identities x+0, x-0, 0-x, x*1, x*0, x/1.
Expr mk_binary(BinOp op, const Expr& a, const Expr& b) {
  const Dtype d = a->dtype;
  if (is_literal(a) && is_literal(b)) return ex::lit(scalar_binop(op, d, a->literal, b->literal), d);
  switch (op) {
    case BinOp::add:
      if (lit_is(a, 0)) return b;
      if (lit_is(b, 0)) return a;
      break;
    case BinOp::sub:
      if (lit_is(b, 0)) return a;
      if (lit_is(a, 0)) return mk_neg(b);
      break;
    case BinOp::mul_elem:
      if (lit_is(a, 1)) return b;
      if (lit_is(b, 1)) return a;
      if (lit_is(a, 0) || lit_is(b, 0)) return ex::lit(0.0, d);
      break;
    case BinOp::div_elem:
      if (lit_is(b, 1)) return a;
      break;
  }
  return ex::binary(op, a, b);
}

Expr mk_compare(CmpOp op, const Expr& a, const Expr& b) {
  if (is_literal(a) && is_literal(b)) return ex::lit(scalar_compare(op, a->literal, b->literal) ? 1.0 : 0.0, Dtype::boolean);
  return ex::compare(op, a, b);
}

Expr mk_call(MathFn fn, std::vector<Expr> args) {
  if (std::all_of(args.begin(), args.end(), [](const Expr& e) { return is_literal(e); })) {
    return ex::lit(scalar_math(fn, args[0]->literal, args.size() > 1 ? args[1]->literal : 0.0), Dtype::f64);
  }
  return ex::call(fn, std::move(args));
}

Expr mk_convert(const Expr& a, Dtype to) {
  if (a->dtype == to) return a;
  if (is_literal(a)) return ex::lit(scalar_convert(a->literal, to), to);
  return ex::convert(a, to);
}

// Records a result computed element by element. When every element folds to
// a literal the result is numeric and nothing is emitted.
BVar materialize(TraceContext& ctx, Dtype d, Shape s, const std::function<Expr(std::size_t, std::size_t)>& gen) {
  std::vector<Expr> exprs(s.numel());
  for (std::size_t i = 0; i < s.rows; ++i) {
    for (std::size_t j = 0; j < s.cols; ++j) exprs[i + s.rows * j] = gen(i, j);
  }
  if (std::all_of(exprs.begin(), exprs.end(), [](const Expr& e) { return is_literal(e); })) {
    std::vector<double> data(exprs.size());
    for (std::size_t k = 0; k < exprs.size(); ++k) data[k] = exprs[k]->literal;
    return BVar(MatValue(d, s.rows, s.cols, std::move(data)));
  }
  if (s.is_scalar() && exprs[0]->kind == ExprKind::ref) {
    // x*1, x+0 and friends: no new variable, just another handle on x
    return ctx.handle({exprs[0]->name, d, s});
  }
  const std::string name = ctx.getunique();
  if (s.is_scalar()) {
    ctx.declare(Decl{{name, d, s}, std::nullopt, false, true});
    ctx.emit(Def{name, exprs[0]});
    return ctx.handle({name, d, s});
  }
  ctx.declare(Decl{{name, d, s}, std::nullopt, false, false});
  // row-major emission order, as the source language's loops do
  for (std::size_t i = 0; i < s.rows; ++i) {
    for (std::size_t j = 0; j < s.cols; ++j) ctx.emit(SetElement{name, i + s.rows * j, exprs[i + s.rows * j]});
  }
  return ctx.handle({name, d, s});
}

// A named array holding `v`: symbolics are used as they are, numerics become
// an initialized local.
std::string named_operand(TraceContext& ctx, const BVar& v) {
  if (v.is_symbolic()) return v.name();
  const std::string name = ctx.getunique();
  ctx.declare(Decl{{name, v.dtype(), v.shape()}, v.value(), false, false});
  return name;
}

std::string dim_local(TraceContext& ctx, std::size_t n) {
  const std::string name = ctx.getunique();
  ctx.declare(Decl{{name, Dtype::f64, {1, 1}}, MatValue::scalar(static_cast<double>(n)), false, false});
  return name;
}

void require_same_dtype(const BVar& a, const BVar& b, std::string_view what) {
  if (a.dtype() != b.dtype()) {
    throw Error(ErrorCode::DtypeMismatch, std::string(what) + ": " + std::string(dtype_name(a.dtype())) + " vs " +
                                              std::string(dtype_name(b.dtype())));
  }
}

void require_arith(Dtype d, std::string_view what) {
  if (d == Dtype::boolean) throw Error(ErrorCode::DtypeMismatch, std::string(what) + " on bool; convert first");
}

void require_f64(Dtype d, std::string_view what) {
  if (d != Dtype::f64) throw Error(ErrorCode::DtypeMismatch, std::string(what) + " requires f64");
}

std::size_t linear_index(const BVar& a, std::size_t i, std::size_t j) {
  if (i < 1 || j < 1 || i > a.rows() || j > a.cols()) {
    throw Error(ErrorCode::IndexOutOfRange, "(" + std::to_string(i) + "," + std::to_string(j) + ") in " +
                                                shape_string(a.shape()));
  }
  return (i - 1) + a.rows() * (j - 1);
}

TraceContext* pick(const BVar& a, const BVar& b) {
  if (a.context() && b.context() && a.context() != b.context()) {
    throw Error(ErrorCode::InvalidParameter, "operands belong to different trace contexts");
  }
  return a.context() ? a.context() : b.context();
}

}  // namespace

// ---------------------------------------------------------------------------
// BVar
// ---------------------------------------------------------------------------

BVar numerics(MatValue v) { return BVar(std::move(v)); }

BVar symbolics(TraceContext& ctx, MatValue nominal, std::string name) {
  if (name.empty()) name = ctx.getunique();
  VarInfo var{name, nominal.dtype(), nominal.shape()};
  ctx.declare(Decl{var, std::nullopt, false, false});
  return ctx.handle(var, std::move(nominal));
}

BVar BVar::operator()(std::size_t k) const {
  if (k < 1 || k > numel()) throw Error(ErrorCode::IndexOutOfRange, std::to_string(k) + " in " + shape_string(shape()));
  if (is_numeric()) return BVar(MatValue::scalar(value_.at(k - 1), dtype()));
  return bv_index_get(*ctx_, *this, k);
}

BVar BVar::operator()(std::size_t i, std::size_t j) const {
  if (is_numeric()) {
    linear_index(*this, i, j);
    return BVar(MatValue::scalar(value_(i - 1, j - 1), dtype()));
  }
  return bv_index_get(*ctx_, *this, i, j);
}

void BVar::set(std::size_t k, const BVar& rhs) {
  if (k < 1 || k > numel()) throw Error(ErrorCode::IndexOutOfRange, std::to_string(k) + " in " + shape_string(shape()));
  const std::size_t k0 = k - 1;
  set(k0 % rows() + 1, k0 / rows() + 1, rhs);
}

void BVar::set(std::size_t i, std::size_t j, const BVar& rhs) {
  TraceContext* ctx = pick(*this, rhs);
  if (!ctx) {
    TraceContext scratch;  // numeric store, nothing is recorded
    *this = bv_index_set(scratch, *this, i, j, rhs);
    return;
  }
  *this = bv_index_set(*ctx, *this, i, j, rhs);
}

BVar::operator bool() const {
  if (sym_) throw Error(ErrorCode::SymbolicCondition, "condition on symbolic value " + name_ + " cannot be evaluated");
  const auto d = value_.data();
  return !d.empty() && std::all_of(d.begin(), d.end(), [](double v) { return v != 0.0; });
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

BVar bv_binop(TraceContext& ctx, BinOp op, const BVar& a, const BVar& b) {
  if (a.is_numeric() && b.is_numeric()) return BVar(elem_binop(op, a.value(), b.value()));
  require_same_dtype(a, b, op_symbol(op));
  require_arith(a.dtype(), op_symbol(op));
  const Shape s = broadcast_shape(a.shape(), b.shape());
  return materialize(ctx, a.dtype(), s, [&](std::size_t i, std::size_t j) {
    return mk_binary(op, element_expr(a, i, j), element_expr(b, i, j));
  });
}

BVar bv_unary_minus(TraceContext& ctx, const BVar& a) {
  if (a.is_numeric()) return BVar(negate(a.value()));
  require_arith(a.dtype(), "-");
  return materialize(ctx, a.dtype(), a.shape(), [&](std::size_t i, std::size_t j) { return mk_neg(element_expr(a, i, j)); });
}

BVar bv_index_get(TraceContext& ctx, const BVar& a, std::size_t i, std::size_t j) {
  const std::size_t k = linear_index(a, i, j);
  if (a.is_numeric()) return BVar(MatValue::scalar(a.value().at(k), a.dtype()));
  const std::string name = ctx.getunique();
  ctx.declare(Decl{{name, a.dtype(), {1, 1}}, std::nullopt, false, true});
  ctx.emit(Def{name, element_expr(a, k)});
  return ctx.handle({name, a.dtype(), {1, 1}});
}

BVar bv_index_get(TraceContext& ctx, const BVar& a, std::size_t k) {
  if (k < 1 || k > a.numel()) throw Error(ErrorCode::IndexOutOfRange, std::to_string(k) + " in " + shape_string(a.shape()));
  return bv_index_get(ctx, a, (k - 1) % a.rows() + 1, (k - 1) / a.rows() + 1);
}

BVar bv_index_set(TraceContext& ctx, const BVar& a, std::size_t i, std::size_t j, const BVar& rhs) {
  const std::size_t k = linear_index(a, i, j);
  if (rhs.numel() != 1) throw Error(ErrorCode::ShapeMismatch, "element assignment needs a 1x1 right-hand side");
  require_same_dtype(a, rhs, "element assignment");
  if (a.is_numeric() && rhs.is_numeric()) {
    std::vector<double> data(a.value().data().begin(), a.value().data().end());
    data[k] = rhs.value().at(0);
    return BVar(MatValue(a.dtype(), a.rows(), a.cols(), std::move(data)));
  }
  if (a.numel() == 1) {
    // a scalar is replaced, not written through: the handle may alias a
    // persistent or an argument
    if (rhs.is_numeric()) return rhs;
    return materialize(ctx, a.dtype(), a.shape(), [&](std::size_t, std::size_t) { return element_expr(rhs, 0); });
  }
  BVar target = a;
  if (a.is_numeric()) {
    // promote: materialize the numeric matrix under a fresh name first
    const std::string name = ctx.getunique();
    ctx.declare(Decl{{name, a.dtype(), a.shape()}, a.value(), false, false});
    target = ctx.handle({name, a.dtype(), a.shape()}, a.value());
  }
  ctx.emit(SetElement{target.name(), k, element_expr(rhs, 0)});
  return target;
}

MatValue bv_size(const BVar& a) {
  return MatValue::from_rows(1, 2, {static_cast<double>(a.rows()), static_cast<double>(a.cols())});
}

Dtype bv_datatype(const BVar& a) { return a.dtype(); }

BVar bv_matmul(TraceContext& ctx, const BVar& a, const BVar& b) {
  if (a.is_numeric() && b.is_numeric()) return BVar(matmul(a.value(), b.value()));
  require_same_dtype(a, b, "*");
  require_arith(a.dtype(), "*");
  if (a.numel() == 1 || b.numel() == 1) return bv_binop(ctx, BinOp::mul_elem, a, b);
  const Shape s = matmul_shape(a.shape(), b.shape());
  if (s.numel() > kUnrollThreshold && a.dtype() == Dtype::f64) {
    ctx.emit(Annotation{"Product of matrices resulting size " + std::to_string(s.numel()) + ">" +
                        std::to_string(kUnrollThreshold) + ": calling external function"});
    const std::string lhs = named_operand(ctx, a);
    const std::string rhs = named_operand(ctx, b);
    const std::string res = ctx.getunique();
    ctx.declare(Decl{{res, Dtype::f64, s}, std::nullopt, false, false});
    std::vector<std::string> args = {res, lhs, rhs};
    for (std::size_t n : {a.rows(), a.cols(), b.rows(), b.cols()}) args.push_back(dim_local(ctx, n));
    ctx.emit(Call{{std::string(kHelperMult), std::move(args)}});
    return ctx.handle({res, Dtype::f64, s});
  }
  return materialize(ctx, a.dtype(), s, [&](std::size_t i, std::size_t j) {
    Expr acc;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      Expr t = mk_binary(BinOp::mul_elem, element_expr(a, i, k), element_expr(b, k, j));
      acc = acc ? mk_binary(BinOp::add, acc, t) : t;
    }
    return acc ? acc : ex::lit(0.0, a.dtype());
  });
}

BVar bv_transpose(TraceContext& ctx, const BVar& a) {
  if (a.is_numeric()) return BVar(transpose(a.value()));
  const Shape s{a.cols(), a.rows()};
  if (s.numel() > kUnrollThreshold && a.dtype() == Dtype::f64) {
    ctx.emit(Annotation{"Transpose of matrix of size " + std::to_string(s.numel()) + ">" +
                        std::to_string(kUnrollThreshold) + ": calling external function"});
    const std::string res = ctx.getunique();
    ctx.declare(Decl{{res, Dtype::f64, s}, std::nullopt, false, false});
    std::vector<std::string> args = {res, a.name(), dim_local(ctx, a.rows()), dim_local(ctx, a.cols())};
    ctx.emit(Call{{std::string(kHelperQuote), std::move(args)}});
    ctx.emit(Annotation{"End of Transpose"});
    return ctx.handle({res, Dtype::f64, s});
  }
  if (a.numel() == 1) return a;
  return materialize(ctx, a.dtype(), s, [&](std::size_t i, std::size_t j) { return element_expr(a, j, i); });
}

BVar bv_concat_rows(TraceContext& ctx, const BVar& a, const BVar& b) {
  if (a.is_numeric() && b.is_numeric()) return BVar(concat_rows(a.value(), b.value()));
  if (a.numel() == 0) return b;
  if (b.numel() == 0) return a;
  require_same_dtype(a, b, "concat");
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "row concatenation of " + shape_string(a.shape()) + " and " +
                                              shape_string(b.shape()));
  }
  const Shape s{a.rows() + b.rows(), a.cols()};
  return materialize(ctx, a.dtype(), s, [&](std::size_t i, std::size_t j) {
    return i < a.rows() ? element_expr(a, i, j) : element_expr(b, i - a.rows(), j);
  });
}

BVar bv_concat_cols(TraceContext& ctx, const BVar& a, const BVar& b) {
  if (a.is_numeric() && b.is_numeric()) return BVar(concat_cols(a.value(), b.value()));
  if (a.numel() == 0) return b;
  if (b.numel() == 0) return a;
  require_same_dtype(a, b, "concat");
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "column concatenation of " + shape_string(a.shape()) + " and " +
                                              shape_string(b.shape()));
  }
  const Shape s{a.rows(), a.cols() + b.cols()};
  return materialize(ctx, a.dtype(), s, [&](std::size_t i, std::size_t j) {
    return j < a.cols() ? element_expr(a, i, j) : element_expr(b, i, j - a.cols());
  });
}

BVar bv_convert(TraceContext& ctx, const BVar& a, Dtype d) {
  if (a.is_numeric()) return BVar(convert(a.value(), d));
  if (a.dtype() == d) return a;
  return materialize(ctx, d, a.shape(), [&](std::size_t i, std::size_t j) { return mk_convert(element_expr(a, i, j), d); });
}

BVar bv_sum(TraceContext& ctx, const BVar& a) {
  if (a.is_numeric()) return BVar(sum_all(a.value()));
  require_arith(a.dtype(), "sum");
  return materialize(ctx, a.dtype(), {1, 1}, [&](std::size_t, std::size_t) {
    Expr acc;
    for (std::size_t k = 0; k < a.numel(); ++k) {
      Expr t = element_expr(a, k);
      acc = acc ? mk_binary(BinOp::add, acc, t) : t;
    }
    return acc;
  });
}

BVar bv_compare(TraceContext& ctx, CmpOp op, const BVar& a, const BVar& b) {
  if (a.is_numeric() && b.is_numeric()) return BVar(compare(op, a.value(), b.value()));
  require_same_dtype(a, b, op_symbol(op));
  const Shape s = broadcast_shape(a.shape(), b.shape());
  return materialize(ctx, Dtype::boolean, s, [&](std::size_t i, std::size_t j) {
    return mk_compare(op, element_expr(a, i, j), element_expr(b, i, j));
  });
}

BVar bv_elem_math(TraceContext& ctx, MathFn fn, const BVar& a) {
  if (a.is_numeric()) return BVar(elem_math(fn, a.value()));
  require_f64(a.dtype(), fn_name(fn));
  return materialize(ctx, Dtype::f64, a.shape(), [&](std::size_t i, std::size_t j) {
    return mk_call(fn, {element_expr(a, i, j)});
  });
}

BVar bv_elem_math(TraceContext& ctx, MathFn fn, const BVar& a, const BVar& b) {
  if (a.is_numeric() && b.is_numeric()) return BVar(elem_math(fn, a.value(), b.value()));
  require_f64(a.dtype(), fn_name(fn));
  require_f64(b.dtype(), fn_name(fn));
  const Shape s = broadcast_shape(a.shape(), b.shape());
  return materialize(ctx, Dtype::f64, s, [&](std::size_t i, std::size_t j) {
    return mk_call(fn, {element_expr(a, i, j), element_expr(b, i, j)});
  });
}

BVar bv_fresh_like(TraceContext& ctx, const BVar& a) {
  const std::string name = ctx.getunique();
  std::optional<MatValue> init;
  if (a.is_numeric()) init = a.value();
  ctx.declare(Decl{{name, a.dtype(), a.shape()}, init, false, false});
  return ctx.handle({name, a.dtype(), a.shape()}, a.is_numeric() ? a.value() : MatValue::zeros(a.dtype(), a.shape()));
}

BVar bv_inv(TraceContext& ctx, const BVar& a) {
  if (a.is_numeric()) return BVar(invert(a.value()));
  if (a.rows() != a.cols()) throw Error(ErrorCode::NonSquare, "Division by non square matrix not supported.");
  require_f64(a.dtype(), "inv");
  const std::size_t n = a.rows();
  if (n == 0) return a;
  if (n == 1) return bv_binop(ctx, BinOp::div_elem, BVar(1.0), a);
  if (n == 2) {
    BVar out = bv_fresh_like(ctx, a);
    out = bv_index_set(ctx, out, 1, 1, bv_index_get(ctx, a, 2, 2));
    out = bv_index_set(ctx, out, 2, 2, bv_index_get(ctx, a, 1, 1));
    out = bv_index_set(ctx, out, 1, 2, bv_unary_minus(ctx, bv_index_get(ctx, a, 1, 2)));
    out = bv_index_set(ctx, out, 2, 1, bv_unary_minus(ctx, bv_index_get(ctx, a, 2, 1)));
    const BVar det = bv_binop(ctx, BinOp::sub,
                              bv_binop(ctx, BinOp::mul_elem, bv_index_get(ctx, a, 1, 1), bv_index_get(ctx, a, 2, 2)),
                              bv_binop(ctx, BinOp::mul_elem, bv_index_get(ctx, a, 1, 2), bv_index_get(ctx, a, 2, 1)));
    return bv_binop(ctx, BinOp::div_elem, out, det);
  }
  ctx.emit(Annotation{"Inverse of matrix of size " + std::to_string(n) + "x" + std::to_string(n) +
                      ": calling external function"});
  const std::string res = ctx.getunique();
  ctx.declare(Decl{{res, Dtype::f64, a.shape()}, std::nullopt, false, false});
  ctx.emit(Call{{std::string(kHelperInverse), {res, a.name(), dim_local(ctx, n)}}});
  return ctx.handle({res, Dtype::f64, a.shape()});
}

BVar bv_select(TraceContext& ctx, const BVar& cond, const BVar& a, const BVar& b) {
  if (cond.numel() != 1) throw Error(ErrorCode::ShapeMismatch, "condition must be 1x1");
  require_same_dtype(a, b, "select");
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::ShapeMismatch, "select branches " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
  if (cond.is_numeric()) return cond.value().at(0) != 0.0 ? a : b;
  const Expr c = mk_convert(element_expr(cond, 0), Dtype::boolean);
  return materialize(ctx, a.dtype(), a.shape(), [&](std::size_t i, std::size_t j) {
    return ex::select(c, element_expr(a, i, j), element_expr(b, i, j));
  });
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

namespace {

template <class F>
BVar dispatch(const BVar& a, const BVar& b, F&& f) {
  TraceContext* ctx = pick(a, b);
  if (!ctx) {
    // both numeric: the context is never touched
    thread_local TraceContext scratch;
    return f(scratch);
  }
  return f(*ctx);
}

}  // namespace

BVar operator+(const BVar& a, const BVar& b) {
  return dispatch(a, b, [&](TraceContext& c) { return bv_binop(c, BinOp::add, a, b); });
}
BVar operator-(const BVar& a, const BVar& b) {
  return dispatch(a, b, [&](TraceContext& c) { return bv_binop(c, BinOp::sub, a, b); });
}
BVar operator-(const BVar& a) {
  return dispatch(a, a, [&](TraceContext& c) { return bv_unary_minus(c, a); });
}
BVar operator*(const BVar& a, const BVar& b) {
  return dispatch(a, b, [&](TraceContext& c) { return bv_matmul(c, a, b); });
}
BVar operator/(const BVar& a, const BVar& b) {
  return dispatch(a, b, [&](TraceContext& c) {
    if (b.numel() == 1) return bv_binop(c, BinOp::div_elem, a, b);
    return bv_matmul(c, a, bv_inv(c, b));
  });
}
BVar operator==(const BVar& a, const BVar& b) {
  return dispatch(a, b, [&](TraceContext& c) { return bv_compare(c, CmpOp::eq, a, b); });
}
BVar operator!=(const BVar& a, const BVar& b) {
  return dispatch(a, b, [&](TraceContext& c) { return bv_compare(c, CmpOp::ne, a, b); });
}
BVar operator<(const BVar& a, const BVar& b) {
  return dispatch(a, b, [&](TraceContext& c) { return bv_compare(c, CmpOp::lt, a, b); });
}
BVar operator<=(const BVar& a, const BVar& b) {
  return dispatch(a, b, [&](TraceContext& c) { return bv_compare(c, CmpOp::le, a, b); });
}
BVar operator>(const BVar& a, const BVar& b) {
  return dispatch(a, b, [&](TraceContext& c) { return bv_compare(c, CmpOp::gt, a, b); });
}
BVar operator>=(const BVar& a, const BVar& b) {
  return dispatch(a, b, [&](TraceContext& c) { return bv_compare(c, CmpOp::ge, a, b); });
}

BVar elem_mul(const BVar& a, const BVar& b) {
  return dispatch(a, b, [&](TraceContext& c) { return bv_binop(c, BinOp::mul_elem, a, b); });
}
BVar elem_div(const BVar& a, const BVar& b) {
  return dispatch(a, b, [&](TraceContext& c) { return bv_binop(c, BinOp::div_elem, a, b); });
}
BVar transpose(const BVar& a) {
  return dispatch(a, a, [&](TraceContext& c) { return bv_transpose(c, a); });
}
BVar vcat(const BVar& a, const BVar& b) {
  return dispatch(a, b, [&](TraceContext& c) { return bv_concat_rows(c, a, b); });
}
BVar vcat(std::initializer_list<BVar> parts) {
  BVar out;
  for (const auto& p : parts) out = vcat(out, p);
  return out;
}
BVar hcat(const BVar& a, const BVar& b) {
  return dispatch(a, b, [&](TraceContext& c) { return bv_concat_cols(c, a, b); });
}
BVar hcat(std::initializer_list<BVar> parts) {
  BVar out;
  for (const auto& p : parts) out = hcat(out, p);
  return out;
}
BVar convert(const BVar& a, Dtype d) {
  return dispatch(a, a, [&](TraceContext& c) { return bv_convert(c, a, d); });
}
BVar sum(const BVar& a) {
  return dispatch(a, a, [&](TraceContext& c) { return bv_sum(c, a); });
}
BVar sqrt(const BVar& a) {
  return dispatch(a, a, [&](TraceContext& c) { return bv_elem_math(c, MathFn::sqrt, a); });
}
BVar sin(const BVar& a) {
  return dispatch(a, a, [&](TraceContext& c) { return bv_elem_math(c, MathFn::sin, a); });
}
BVar cos(const BVar& a) {
  return dispatch(a, a, [&](TraceContext& c) { return bv_elem_math(c, MathFn::cos, a); });
}
BVar atan2(const BVar& y, const BVar& x) {
  return dispatch(y, x, [&](TraceContext& c) { return bv_elem_math(c, MathFn::atan2, y, x); });
}
BVar inv(const BVar& a) {
  return dispatch(a, a, [&](TraceContext& c) { return bv_inv(c, a); });
}
MatValue size(const BVar& a) { return bv_size(a); }
Dtype datatype(const BVar& a) { return bv_datatype(a); }
BVar eye(std::size_t n) { return BVar(MatValue::identity(n)); }
BVar ones(Shape s, Dtype d) { return BVar(MatValue::filled(d, s, 1.0)); }

}  // namespace bcg
