#include "bcg/directives.hpp"

namespace bcg {

namespace {

void require_match(const VarInfo& target, const BVar& v) {
  if (v.dtype() != target.dtype) {
    throw Error(ErrorCode::DtypeMismatch, target.name + " is " + std::string(dtype_name(target.dtype)) + ", got " +
                                              std::string(dtype_name(v.dtype())));
  }
  if (v.shape() != target.shape) {
    throw Error(ErrorCode::ShapeMismatch,
                target.name + " is " + shape_string(target.shape) + ", got " + shape_string(v.shape()));
  }
}

}  // namespace

const PersistentPool::Entry* PersistentPool::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const VarInfo* IoSeq::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

BVar IoSeq::get(TraceContext& ctx, std::string_view name) const {
  const VarInfo* v = find(name);
  if (!v) throw Error(ErrorCode::UnknownName, std::string(name));
  return ctx.handle(*v);
}

TraceContext codegen_init() { return TraceContext(); }

Program finalize_program(TraceContext& ctx, const OptOptions& opts, const std::string& init_name) {
  if (ctx.in_function()) throw Error(ErrorCode::UnbalancedFunction, "function " + ctx.current().name + " still open");
  if (!ctx.toplevel().body.empty()) {
    ctx.warnings().push_back("instructions recorded outside any function are not part of the program");
  }
  Program prog;
  prog.statics = ctx.top_declarations();
  prog.functions = ctx.functions();
  prog = code_optimize(std::move(prog), opts);

  Function init;
  init.name = init_name;
  for (const auto& s : prog.statics) {
    const std::size_t n = s.var.shape.numel();
    if (n == 0) continue;
    const std::string tmp = ctx.getunique();
    init.locals.push_back(Decl{{tmp, s.var.dtype, s.var.shape},
                               s.init ? *s.init : MatValue::zeros(s.var.dtype, s.var.shape), true, false});
    if (n == 1) {
      init.body.push_back(SetElement{s.var.name, 0, ex::ref(tmp, s.var.dtype)});
    } else {
      init.body.push_back(Copy{s.var.name, tmp, n});
    }
  }
  prog.functions.insert(prog.functions.begin(), std::move(init));
  return prog;
}

std::string codegen_finalize(TraceContext& ctx, const OptOptions& opts) {
  return emit_body(finalize_program(ctx, opts));
}

void start_function(TraceContext& ctx, const std::string& name, const IoSeq& io) {
  ctx.start_function(name, io.entries());
}

void end_function(TraceContext& ctx, const std::string& name) { ctx.end_function(name); }

PersistentPool persistent_create() { return {}; }

void store_into(TraceContext& ctx, const VarInfo& target, const BVar& v) {
  require_match(target, v);
  const std::size_t n = target.shape.numel();
  if (n == 0) return;
  if (v.is_symbolic()) {
    if (v.name() == target.name) return;
    if (n == 1) {
      ctx.emit(SetElement{target.name, 0, ex::ref(v.name(), v.dtype())});
    } else {
      ctx.emit(Copy{target.name, v.name(), n});
    }
    return;
  }
  if (n == 1) {
    ctx.emit(SetElement{target.name, 0, ex::lit(v.value().at(0), v.dtype())});
    return;
  }
  const std::string tmp = ctx.getunique();
  ctx.declare(Decl{{tmp, v.dtype(), v.shape()}, v.value(), false, false});
  ctx.emit(Copy{target.name, tmp, n});
}

PersistentPool persistent_insert(TraceContext& ctx, PersistentPool pool, const std::string& name, const BVar& v) {
  if (const auto* e = pool.find(name)) {
    store_into(ctx, {name, e->default_value.dtype(), e->default_value.shape()}, v);
    return pool;
  }
  if (v.is_symbolic()) {
    throw Error(ErrorCode::InvalidValue, "persistent " + name + " needs a numeric default on first insert");
  }
  ctx.declare_static(Decl{{name, v.dtype(), v.shape()}, v.value(), false, false});
  ctx.persistent_registry().push_back(name);
  pool.entries_.push_back({name, v.value()});
  return pool;
}

BVar persistent_extract(TraceContext& ctx, const PersistentPool& pool, const std::string& name) {
  const auto* e = pool.find(name);
  if (!e) throw Error(ErrorCode::UnknownName, "persistent " + name);
  return ctx.handle({name, e->default_value.dtype(), e->default_value.shape()});
}

IoSeq inouts() { return {}; }

IoSeq inouts_insert(TraceContext& ctx, IoSeq io, const std::string& name, const BVar& v) {
  if (const VarInfo* var = io.find(name)) {
    if (!ctx.in_function() || !ctx.current().find_param(name)) {
      require_match(*var, v);
      throw Error(ErrorCode::UnknownName, name + " is not an argument of the open function");
    }
    store_into(ctx, *var, v);
    return io;
  }
  io.entries_.push_back({name, v.dtype(), v.shape()});
  return io;
}

BVar constant(TraceContext& ctx, const MatValue& v, const std::string& name) {
  const std::string n = name.empty() ? ctx.getunique() : name;
  ctx.declare(Decl{{n, v.dtype(), v.shape()}, v, false, false});
  return ctx.handle({n, v.dtype(), v.shape()}, v);
}

BVar expand(TraceContext& ctx, const BVar& in, std::size_t m, std::size_t n) {
  if (in.numel() != 1) throw Error(ErrorCode::ShapeMismatch, "expand needs a 1x1 input");
  if (in.is_numeric()) return constant(ctx, MatValue::filled(in.dtype(), {m, n}, in.value().at(0)));
  if (m * n == 1) return bvarcopy(ctx, in);
  const std::string name = ctx.getunique();
  ctx.declare(Decl{{name, in.dtype(), {m, n}}, std::nullopt, false, false});
  for (std::size_t k = 0; k < m * n; ++k) ctx.emit(SetElement{name, k, ex::ref(in.name(), in.dtype())});
  return ctx.handle({name, in.dtype(), {m, n}});
}

BVar bvarempty(TraceContext& ctx, const BVar& in) { return bv_fresh_like(ctx, in); }

BVar bvarcopy(TraceContext& ctx, const BVar& in) {
  BVar out = bv_fresh_like(ctx, in);
  // a numeric source is already the declaration's initializer
  if (in.is_symbolic()) store_into(ctx, {out.name(), out.dtype(), out.shape()}, in);
  return out;
}

void put_annotation(TraceContext& ctx, const std::string& text) { ctx.emit(Annotation{text}); }

void code_insert(TraceContext& ctx, Instr in) { ctx.emit(std::move(in)); }

BVar if_exp(TraceContext& ctx, const BVar& cond, const BVar& e1, const BVar& e2) {
  return bv_select(ctx, cond, e1, e2);
}

BVar select_exp(TraceContext& ctx, const BVar& selector, const std::vector<BVar>& choices) {
  if (choices.empty()) throw Error(ErrorCode::InvalidValue, "select_exp needs at least one choice");
  if (selector.numel() != 1) throw Error(ErrorCode::ShapeMismatch, "selector must be 1x1");
  if (selector.is_numeric()) {
    const double k = selector.value().at(0);
    if (k < 1 || k > static_cast<double>(choices.size()) || k != static_cast<double>(static_cast<std::size_t>(k))) {
      throw Error(ErrorCode::IndexOutOfRange, "selector " + to_string(selector.value()) + " of " +
                                                  std::to_string(choices.size()) + " choices");
    }
    return choices[static_cast<std::size_t>(k) - 1];
  }
  BVar out = choices.back();
  for (std::size_t k = choices.size() - 1; k >= 1; --k) {
    const BVar hit = bv_compare(ctx, CmpOp::eq, selector, BVar(MatValue::scalar(static_cast<double>(k), selector.dtype())));
    out = if_exp(ctx, hit, choices[k - 1], out);
  }
  return out;
}

void if_cos(TraceContext& ctx, const BVar& in, const CallTarget& f1, const CallTarget& f2) {
  if (in.numel() != 1) throw Error(ErrorCode::ShapeMismatch, "if_cos condition must be 1x1");
  const BVar positive = bv_compare(ctx, CmpOp::gt, in, BVar(MatValue::scalar(0.0, in.dtype())));
  if (positive.is_numeric()) {
    ctx.emit(Call{positive.value().at(0) != 0.0 ? f1 : f2});
    return;
  }
  ctx.emit(IfExpr{ex::ref(positive.name(), Dtype::boolean), f1, f2});
}

}  // namespace bcg
