#include "bcg/irinterp.hpp"

namespace bcg {

Machine::Machine(Program prog) : prog_(std::move(prog)) {
  for (const auto& d : prog_.statics) {
    statics_[d.var.name] = slot_of(d.init ? *d.init : MatValue::zeros(d.var.dtype, d.var.shape));
  }
}

Machine::Slot Machine::slot_of(const MatValue& v) {
  return Slot{v.dtype(), v.shape(), std::vector<double>(v.data().begin(), v.data().end())};
}

MatValue Machine::value_of(const Slot& s) { return MatValue(s.dtype, s.shape.rows, s.shape.cols, s.data); }

void Machine::run_init() {
  const std::string name = prog_.entry ? prog_.entry->init_function : "initialize";
  if (name.empty()) return;
  if (!prog_.find_function(name)) {
    if (!prog_.entry) return;
    throw Error(ErrorCode::UnknownName, "function " + name);
  }
  run_function(name, {});
}

std::vector<MatValue> Machine::run_function(const std::string& name, std::vector<MatValue> args) {
  const Function* fn = prog_.find_function(name);
  if (!fn) throw Error(ErrorCode::UnknownName, "function " + name);
  if (args.size() != fn->params.size()) {
    throw Error(ErrorCode::ArityViolation, name + " takes " + std::to_string(fn->params.size()) + " arguments");
  }
  std::vector<Slot> slots;
  slots.reserve(args.size());
  for (std::size_t k = 0; k < args.size(); ++k) {
    const VarInfo& p = fn->params[k];
    if (args[k].dtype() != p.dtype) throw Error(ErrorCode::DtypeMismatch, "argument " + p.name);
    if (args[k].shape() != p.shape) throw Error(ErrorCode::ShapeMismatch, "argument " + p.name);
    slots.push_back(slot_of(args[k]));
  }
  std::vector<Slot*> ptrs;
  for (auto& s : slots) ptrs.push_back(&s);
  exec(*fn, ptrs, nullptr, nullptr);
  for (std::size_t k = 0; k < args.size(); ++k) args[k] = value_of(slots[k]);
  return args;
}

std::vector<std::vector<MatValue>> Machine::run_steps(const std::vector<std::vector<MatValue>>& inputs) {
  if (!prog_.entry) throw Error(ErrorCode::MalformedIR, "program has no entry points");
  const EntryPoints& e = *prog_.entry;
  std::vector<MatValue> ports;
  for (const auto& v : e.inputs) ports.push_back(MatValue::zeros(v.dtype, v.shape));
  for (const auto& v : e.outputs) ports.push_back(MatValue::zeros(v.dtype, v.shape));
  std::vector<std::vector<MatValue>> out;
  out.reserve(inputs.size());
  for (const auto& step : inputs) {
    if (step.size() != e.inputs.size()) throw Error(ErrorCode::ArityViolation, "wrong number of step inputs");
    for (std::size_t k = 0; k < step.size(); ++k) ports[k] = step[k];
    if (!e.output_function.empty()) ports = run_function(e.output_function, ports);
    out.emplace_back(ports.begin() + static_cast<std::ptrdiff_t>(e.inputs.size()), ports.end());
    if (!e.state_function.empty()) ports = run_function(e.state_function, ports);
  }
  return out;
}

std::map<std::string, MatValue> Machine::run_body(const Function& fn, const std::map<std::string, MatValue>& preset,
                                                  std::vector<MatValue>* args) {
  std::vector<Slot> slots;
  if (args) {
    for (const auto& a : *args) slots.push_back(slot_of(a));
  }
  if (slots.size() != fn.params.size()) throw Error(ErrorCode::ArityViolation, fn.name);
  std::vector<Slot*> ptrs;
  for (auto& s : slots) ptrs.push_back(&s);
  std::map<std::string, MatValue> locals;
  exec(fn, ptrs, &locals, &preset);
  if (args) {
    for (std::size_t k = 0; k < slots.size(); ++k) (*args)[k] = value_of(slots[k]);
  }
  return locals;
}

MatValue Machine::static_value(const std::string& name) const {
  auto it = statics_.find(name);
  if (it == statics_.end()) throw Error(ErrorCode::UnboundName, name);
  return value_of(it->second);
}

std::map<std::string, MatValue> Machine::statics() const {
  std::map<std::string, MatValue> out;
  for (const auto& [k, v] : statics_) out.emplace(k, value_of(v));
  return out;
}

void Machine::exec(const Function& fn, std::vector<Slot*> params, std::map<std::string, MatValue>* locals_out,
                   const std::map<std::string, MatValue>* preset) {
  if (++depth_ > 64) {
    --depth_;
    throw Error(ErrorCode::MalformedIR, "call depth exceeded in " + fn.name);
  }
  Frame fr;
  fr.fn = &fn;
  for (std::size_t k = 0; k < fn.params.size(); ++k) fr.names[fn.params[k].name] = params[k];
  std::deque<Slot> locals;
  for (const auto& d : fn.locals) {
    MatValue v = d.init ? *d.init : MatValue::zeros(d.var.dtype, d.var.shape);
    if (preset) {
      auto it = preset->find(d.var.name);
      if (it != preset->end()) v = it->second;
    }
    locals.push_back(slot_of(v));
    fr.names[d.var.name] = &locals.back();
  }
  try {
    for (const auto& in : fn.body) exec_instr(in, fr);
  } catch (...) {
    --depth_;
    throw;
  }
  --depth_;
  if (locals_out) {
    std::size_t k = 0;
    for (const auto& d : fn.locals) (*locals_out)[d.var.name] = value_of(locals[k++]);
  }
}

Machine::Slot& Machine::lookup(const std::string& name, const Frame& fr) const {
  auto it = fr.names.find(name);
  if (it != fr.names.end()) return *it->second;
  auto st = statics_.find(name);
  if (st == statics_.end()) throw Error(ErrorCode::UnboundName, name + " in " + fr.fn->name);
  return const_cast<Slot&>(st->second);
}

double Machine::eval(const Expr& e, const Frame& fr) const {
  switch (e->kind) {
    case ExprKind::literal: return e->literal;
    case ExprKind::ref: {
      const Slot& s = lookup(e->name, fr);
      if (s.data.empty()) throw Error(ErrorCode::ShapeMismatch, "read of empty " + e->name);
      return s.data[0];
    }
    case ExprKind::elem: {
      const Slot& s = lookup(e->name, fr);
      if (e->index >= s.data.size()) throw Error(ErrorCode::IndexOutOfRange, e->name + "[" + std::to_string(e->index) + "]");
      return s.data[e->index];
    }
    case ExprKind::negate: return scalar_negate(e->dtype, eval(e->args[0], fr));
    case ExprKind::binary: return scalar_binop(e->binop, e->dtype, eval(e->args[0], fr), eval(e->args[1], fr));
    case ExprKind::compare:
      return scalar_compare(e->cmpop, eval(e->args[0], fr), eval(e->args[1], fr)) ? 1.0 : 0.0;
    case ExprKind::call:
      return scalar_math(e->fn, eval(e->args[0], fr), e->args.size() > 1 ? eval(e->args[1], fr) : 0.0);
    case ExprKind::select:
      // C's ?: evaluates only the chosen operand
      return eval(e->args[0], fr) != 0.0 ? eval(e->args[1], fr) : eval(e->args[2], fr);
    case ExprKind::convert: return scalar_convert(eval(e->args[0], fr), e->dtype);
  }
  throw Error(ErrorCode::UnsupportedInstr, "expression kind");
}

void Machine::exec_instr(const Instr& in, Frame& fr) {
  std::visit(
      [&](const auto& i) {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, Def>) {
          Slot& s = lookup(i.name, fr);
          s.data.assign(1, scalar_convert(eval(i.value, fr), s.dtype));
        } else if constexpr (std::is_same_v<T, SetElement>) {
          const double v = eval(i.value, fr);
          Slot& s = lookup(i.target, fr);
          if (i.index >= s.data.size()) {
            throw Error(ErrorCode::IndexOutOfRange, i.target + "[" + std::to_string(i.index) + "]");
          }
          s.data[i.index] = scalar_convert(v, s.dtype);
        } else if constexpr (std::is_same_v<T, Copy>) {
          Slot& dst = lookup(i.target, fr);
          const Slot& src = lookup(i.source, fr);
          if (i.count > dst.data.size() || i.count > src.data.size()) {
            throw Error(ErrorCode::ShapeMismatch, "copy of " + std::to_string(i.count) + " into " + i.target);
          }
          std::copy_n(src.data.begin(), i.count, dst.data.begin());
        } else if constexpr (std::is_same_v<T, Annotation>) {
        } else if constexpr (std::is_same_v<T, Call>) {
          call(i.target, fr);
        } else if constexpr (std::is_same_v<T, IfExpr>) {
          call(eval(i.cond, fr) != 0.0 ? i.then_call : i.else_call, fr);
        }
      },
      in);
}

void Machine::call(const CallTarget& t, Frame& fr) {
  auto dim = [&](std::size_t k) {
    if (k >= t.args.size()) throw Error(ErrorCode::ArityViolation, t.function);
    return static_cast<std::size_t>(lookup(t.args[k], fr).data.at(0));
  };
  if (t.function == kHelperMult) {
    const std::size_t m1 = dim(3), n1 = dim(4), m2 = dim(5), n2 = dim(6);
    Slot& res = lookup(t.args[0], fr);
    const Slot& a = lookup(t.args[1], fr);
    const Slot& b = lookup(t.args[2], fr);
    if (res.data.size() < m1 * n2 || a.data.size() < m1 * n1 || b.data.size() < m2 * n2) {
      throw Error(ErrorCode::ShapeMismatch, "mult operands");
    }
    for (std::size_t i = 0; i < m1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n1; ++k) acc = acc + a.data[i + m1 * k] * b.data[k + m2 * j];
        res.data[i + m1 * j] = acc;
      }
    }
    return;
  }
  if (t.function == kHelperQuote) {
    const std::size_t m1 = dim(2), n1 = dim(3);
    Slot& res = lookup(t.args[0], fr);
    const Slot& a = lookup(t.args[1], fr);
    if (res.data.size() < m1 * n1 || a.data.size() < m1 * n1) throw Error(ErrorCode::ShapeMismatch, "quote operands");
    for (std::size_t i = 0; i < m1; ++i) {
      for (std::size_t j = 0; j < n1; ++j) res.data[j + n1 * i] = a.data[i + m1 * j];
    }
    return;
  }
  if (t.function == kHelperInverse) {
    const std::size_t n = dim(2);
    Slot& res = lookup(t.args[0], fr);
    const Slot& a = lookup(t.args[1], fr);
    if (res.data.size() < n * n || a.data.size() < n * n) throw Error(ErrorCode::ShapeMismatch, "minv operands");
    std::vector<double> out(n * n);
    lu_inverse_raw(out, std::span<const double>(a.data.data(), n * n), n);
    std::copy(out.begin(), out.end(), res.data.begin());
    return;
  }
  const Function* fn = prog_.find_function(t.function);
  if (!fn) throw Error(ErrorCode::UnknownName, "function " + t.function);
  if (fn->params.size() != t.args.size()) throw Error(ErrorCode::ArityViolation, t.function);
  std::vector<Slot*> params;
  for (const auto& a : t.args) params.push_back(&lookup(a, fr));
  exec(*fn, params, nullptr, nullptr);
}

}  // namespace bcg
