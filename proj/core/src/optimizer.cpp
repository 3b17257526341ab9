#include "bcg/optimizer.hpp"

#include <algorithm>

namespace bcg {

namespace {

std::set<std::string> touched(const Instr& in) {
  std::set<std::string> names = instr_reads(in);
  const auto w = instr_writes(in);
  names.insert(w.begin(), w.end());
  return names;
}

bool is_temp(const Function& fn, std::string_view name) {
  const Decl* d = fn.find_local(name);
  return d && d->temp;
}

// Uses of `name` inside expressions (substitutable) and elsewhere (call
// arguments, copy sources: not substitutable).
struct Uses {
  std::size_t in_exprs = 0;
  std::size_t opaque = 0;
};

Uses uses_in(const Instr& in, std::string_view name) {
  Uses u;
  std::visit(
      [&](const auto& i) {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, Def> || std::is_same_v<T, SetElement>) {
          u.in_exprs += count_uses(i.value, name);
          if constexpr (std::is_same_v<T, SetElement>) u.opaque += i.target == name;
        } else if constexpr (std::is_same_v<T, Copy>) {
          u.opaque += (i.source == name) + (i.target == name);
        } else if constexpr (std::is_same_v<T, Call>) {
          u.opaque += std::count(i.target.args.begin(), i.target.args.end(), name);
        } else if constexpr (std::is_same_v<T, IfExpr>) {
          // the condition keeps its own variable, as in the listings
          u.opaque += count_uses(i.cond, name);
          u.opaque += std::count(i.then_call.args.begin(), i.then_call.args.end(), name);
          u.opaque += std::count(i.else_call.args.begin(), i.else_call.args.end(), name);
        }
      },
      in);
  return u;
}

void substitute_in(Instr& in, std::string_view name, const Expr& value) {
  if (auto* d = std::get_if<Def>(&in)) {
    d->value = substitute(d->value, name, value);
  } else if (auto* s = std::get_if<SetElement>(&in)) {
    s->value = substitute(s->value, name, value);
  } else if (auto* f = std::get_if<IfExpr>(&in)) {
    f->cond = substitute(f->cond, name, value);
  }
}

// True when moving an expression reading `reads` from just after `from` to
// `to` cannot change its value.
bool can_move(const Function& fn, const std::vector<Instr>& body, std::size_t from, std::size_t to,
              const std::set<std::string>& reads) {
  const bool reads_nonlocal =
      std::any_of(reads.begin(), reads.end(), [&](const std::string& n) { return !fn.find_local(n); });
  for (std::size_t r = from + 1; r < to; ++r) {
    if (reads_nonlocal && has_side_effects(body[r])) return false;
    for (const auto& w : instr_writes(body[r])) {
      if (reads.count(w)) return false;
    }
  }
  return true;
}

std::size_t write_count(const std::vector<Instr>& body, std::string_view name) {
  std::size_t n = 0;
  for (const auto& in : body) n += instr_writes(in).count(std::string(name));
  return n;
}

bool fold_pass(Function& fn) {
  bool changed = false;
  for (auto& in : fn.body) {
    if (auto* d = std::get_if<Def>(&in)) {
      Expr f = fold_expr(d->value);
      changed = changed || f != d->value;
      d->value = std::move(f);
    } else if (auto* s = std::get_if<SetElement>(&in)) {
      Expr f = fold_expr(s->value);
      changed = changed || f != s->value;
      s->value = std::move(f);
    } else if (auto* c = std::get_if<IfExpr>(&in)) {
      c->cond = fold_expr(c->cond);
      if (is_literal(c->cond)) {
        in = Call{c->cond->literal != 0.0 ? c->then_call : c->else_call};
        changed = true;
      }
    }
  }
  return changed;
}

// Inlines scalar temporaries read once, and literal temporaries read any
// number of times, into their readers.
bool forward_pass(Function& fn) {
  bool changed = false;
  auto& body = fn.body;
  for (std::size_t p = 0; p < body.size(); ++p) {
    const auto* d = std::get_if<Def>(&body[p]);
    if (!d || !is_temp(fn, d->name) || write_count(body, d->name) != 1) continue;
    std::vector<std::size_t> at;
    std::size_t total = 0;
    bool opaque = false;
    for (std::size_t q = p + 1; q < body.size(); ++q) {
      const Uses u = uses_in(body[q], d->name);
      if (u.opaque) opaque = true;
      if (u.in_exprs) at.push_back(q);
      total += u.in_exprs;
    }
    if (opaque || total == 0) continue;
    // keep block boundaries readable: nothing moves across a comment
    if (std::any_of(body.begin() + static_cast<std::ptrdiff_t>(p) + 1, body.begin() + static_cast<std::ptrdiff_t>(at.back()),
                    [](const Instr& in) { return std::holds_alternative<Annotation>(in); })) {
      continue;
    }
    const bool literal = is_literal(d->value);
    if (!literal && total != 1) continue;
    if (!literal) {
      std::set<std::string> reads;
      collect_reads(d->value, reads);
      if (!can_move(fn, body, p, at.front(), reads)) continue;
    }
    const std::string name = d->name;
    const Expr value = d->value;
    for (std::size_t q : at) substitute_in(body[q], name, value);
    body.erase(body.begin() + static_cast<std::ptrdiff_t>(p));
    --p;
    changed = true;
  }
  return changed;
}

// Replaces reads of t by its source when t is defined as a plain reference.
bool copy_prop_pass(Function& fn) {
  bool changed = false;
  auto& body = fn.body;
  for (std::size_t p = 0; p < body.size(); ++p) {
    const auto* d = std::get_if<Def>(&body[p]);
    if (!d || !is_temp(fn, d->name) || write_count(body, d->name) != 1) continue;
    const auto kind = d->value->kind;
    if (kind != ExprKind::ref && kind != ExprKind::elem) continue;
    std::vector<std::size_t> at;
    bool opaque = false;
    for (std::size_t q = p + 1; q < body.size(); ++q) {
      const Uses u = uses_in(body[q], d->name);
      if (u.opaque) opaque = true;
      if (u.in_exprs) at.push_back(q);
    }
    if (opaque || at.empty()) continue;
    if (!can_move(fn, body, p, at.back(), {d->value->name})) continue;
    const std::string name = d->name;
    const Expr value = d->value;
    for (std::size_t q : at) substitute_in(body[q], name, value);
    body.erase(body.begin() + static_cast<std::ptrdiff_t>(p));
    --p;
    changed = true;
  }
  return changed;
}

bool dce_pass(Function& fn, const std::set<std::string>& roots) {
  std::set<std::string> live = roots;
  std::vector<bool> keep(fn.body.size(), true);
  for (std::size_t i = fn.body.size(); i-- > 0;) {
    const Instr& in = fn.body[i];
    if (std::holds_alternative<Annotation>(in)) continue;
    const auto reads = instr_reads(in);
    if (has_side_effects(in)) {
      live.insert(reads.begin(), reads.end());
      continue;
    }
    bool full = false;
    const auto writes = instr_writes(in, &full);
    const bool needed = std::any_of(writes.begin(), writes.end(), [&](const std::string& w) { return live.count(w) > 0; });
    if (!needed) {
      keep[i] = false;
      continue;
    }
    if (full) {
      for (const auto& w : writes) {
        if (!roots.count(w)) live.erase(w);
      }
    }
    live.insert(reads.begin(), reads.end());
  }
  if (std::all_of(keep.begin(), keep.end(), [](bool k) { return k; })) return false;
  std::vector<Instr> out;
  for (std::size_t i = 0; i < fn.body.size(); ++i) {
    if (keep[i]) out.push_back(std::move(fn.body[i]));
  }
  fn.body = std::move(out);
  return true;
}

void drop_unused_locals(Function& fn, bool temps_only) {
  std::set<std::string> used;
  for (const auto& in : fn.body) {
    const auto t = touched(in);
    used.insert(t.begin(), t.end());
  }
  std::erase_if(fn.locals, [&](const Decl& d) { return !used.count(d.var.name) && (!temps_only || d.temp); });
}

}  // namespace

Expr fold_expr(const Expr& e) {
  if (e->args.empty()) return e;
  std::vector<Expr> args;
  bool changed = false;
  for (const auto& a : e->args) {
    args.push_back(fold_expr(a));
    changed = changed || args.back() != a;
  }
  if (e->kind == ExprKind::select && is_literal(args[0])) return args[0]->literal != 0.0 ? args[1] : args[2];
  const bool all_literal = std::all_of(args.begin(), args.end(), [](const Expr& a) { return is_literal(a); });
  if (all_literal) {
    try {
      switch (e->kind) {
        case ExprKind::negate: return ex::lit(scalar_negate(e->dtype, args[0]->literal), e->dtype);
        case ExprKind::binary:
          return ex::lit(scalar_binop(e->binop, e->dtype, args[0]->literal, args[1]->literal), e->dtype);
        case ExprKind::compare:
          return ex::lit(scalar_compare(e->cmpop, args[0]->literal, args[1]->literal) ? 1.0 : 0.0, Dtype::boolean);
        case ExprKind::call:
          return ex::lit(scalar_math(e->fn, args[0]->literal, args.size() > 1 ? args[1]->literal : 0.0), Dtype::f64);
        case ExprKind::convert: return ex::lit(scalar_convert(args[0]->literal, e->dtype), e->dtype);
        default: break;
      }
    } catch (const Error&) {
      // integer division by zero: left for run time
    }
  }
  if (!changed) return e;
  ExprNode n = *e;
  n.args = std::move(args);
  return std::make_shared<const ExprNode>(std::move(n));
}

void check_function(const Function& fn, std::span<const Decl> statics, const std::vector<Function>* callees) {
  auto resolvable = [&](const std::string& n) { return resolve(fn, statics, n).has_value(); };
  for (const auto& in : fn.body) {
    for (const auto& n : touched(in)) {
      if (!resolvable(n)) throw Error(ErrorCode::MalformedIR, "in " + fn.name + ": undeclared name " + n);
    }
    if (!callees) continue;
    auto check_target = [&](const CallTarget& t) {
      if (is_helper(t.function)) return;
      const bool found = std::any_of(callees->begin(), callees->end(), [&](const Function& f) { return f.name == t.function; });
      if (!found) throw Error(ErrorCode::MalformedIR, "in " + fn.name + ": call to unknown function " + t.function);
    };
    if (const auto* c = std::get_if<Call>(&in)) check_target(c->target);
    if (const auto* c = std::get_if<IfExpr>(&in)) {
      check_target(c->then_call);
      check_target(c->else_call);
    }
  }
}

void optimize_function(Function& fn, std::span<const Decl> statics, const OptOptions& opts, bool toplevel) {
  std::set<std::string> roots;
  for (const auto& s : statics) roots.insert(s.var.name);
  for (const auto& p : fn.params) roots.insert(p.name);
  if (toplevel) {
    for (const auto& d : fn.locals) {
      if (!d.temp) roots.insert(d.var.name);
    }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    if (opts.fold) changed = fold_pass(fn) || changed;
    if (opts.forward) changed = forward_pass(fn) || changed;
    if (opts.copy_propagation) changed = copy_prop_pass(fn) || changed;
    if (opts.dce) changed = dce_pass(fn, roots) || changed;
  }
  if (opts.dce || opts.forward) drop_unused_locals(fn, toplevel || !opts.dce);
}

Program code_optimize(Program prog, const OptOptions& opts) {
  for (const auto& fn : prog.functions) check_function(fn, prog.statics, &prog.functions);
  for (auto& fn : prog.functions) optimize_function(fn, prog.statics, opts);
  if (opts.dce) {
    std::set<std::string> used;
    for (const auto& fn : prog.functions) {
      for (const auto& in : fn.body) {
        const auto t = touched(in);
        used.insert(t.begin(), t.end());
      }
    }
    std::erase_if(prog.statics, [&](const Decl& d) { return !used.count(d.var.name); });
  }
  return prog;
}

}  // namespace bcg
