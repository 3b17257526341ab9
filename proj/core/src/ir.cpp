#include "bcg/ir.hpp"

#include <sstream>

namespace bcg {

namespace ex {

namespace {
Expr make(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }
}  // namespace

Expr lit(double v, Dtype d) {
  ExprNode n;
  n.kind = ExprKind::literal;
  n.dtype = d;
  n.literal = v;
  return make(std::move(n));
}

Expr ref(std::string name, Dtype d) {
  ExprNode n;
  n.kind = ExprKind::ref;
  n.dtype = d;
  n.name = std::move(name);
  return make(std::move(n));
}

Expr elem(std::string name, std::size_t index, Dtype d) {
  ExprNode n;
  n.kind = ExprKind::elem;
  n.dtype = d;
  n.name = std::move(name);
  n.index = index;
  return make(std::move(n));
}

Expr neg(Expr a) {
  ExprNode n;
  n.kind = ExprKind::negate;
  n.dtype = a->dtype;
  n.args = {std::move(a)};
  return make(std::move(n));
}

Expr binary(BinOp op, Expr a, Expr b) {
  ExprNode n;
  n.kind = ExprKind::binary;
  n.dtype = a->dtype;
  n.binop = op;
  n.args = {std::move(a), std::move(b)};
  return make(std::move(n));
}

Expr compare(CmpOp op, Expr a, Expr b) {
  ExprNode n;
  n.kind = ExprKind::compare;
  n.dtype = Dtype::boolean;
  n.cmpop = op;
  n.args = {std::move(a), std::move(b)};
  return make(std::move(n));
}

Expr call(MathFn fn, std::vector<Expr> args) {
  ExprNode n;
  n.kind = ExprKind::call;
  n.dtype = Dtype::f64;
  n.fn = fn;
  n.args = std::move(args);
  return make(std::move(n));
}

Expr select(Expr cond, Expr a, Expr b) {
  ExprNode n;
  n.kind = ExprKind::select;
  n.dtype = a->dtype;
  n.args = {std::move(cond), std::move(a), std::move(b)};
  return make(std::move(n));
}

Expr convert(Expr a, Dtype to) {
  ExprNode n;
  n.kind = ExprKind::convert;
  n.dtype = to;
  n.args = {std::move(a)};
  return make(std::move(n));
}

}  // namespace ex

bool is_literal(const Expr& e) { return e->kind == ExprKind::literal; }

bool expr_equal(const Expr& a, const Expr& b) {
  if (a == b) return true;
  if (a->kind != b->kind || a->dtype != b->dtype || a->args.size() != b->args.size()) return false;
  switch (a->kind) {
    case ExprKind::literal:
      if (!(a->literal == b->literal || (a->literal != a->literal && b->literal != b->literal))) return false;
      break;
    case ExprKind::ref:
      if (a->name != b->name) return false;
      break;
    case ExprKind::elem:
      if (a->name != b->name || a->index != b->index) return false;
      break;
    case ExprKind::binary:
      if (a->binop != b->binop) return false;
      break;
    case ExprKind::compare:
      if (a->cmpop != b->cmpop) return false;
      break;
    case ExprKind::call:
      if (a->fn != b->fn) return false;
      break;
    default: break;
  }
  for (std::size_t i = 0; i < a->args.size(); ++i) {
    if (!expr_equal(a->args[i], b->args[i])) return false;
  }
  return true;
}

void collect_reads(const Expr& e, std::set<std::string>& out) {
  if (e->kind == ExprKind::ref || e->kind == ExprKind::elem) out.insert(e->name);
  for (const auto& a : e->args) collect_reads(a, out);
}

std::size_t count_uses(const Expr& e, std::string_view name) {
  std::size_t n = ((e->kind == ExprKind::ref || e->kind == ExprKind::elem) && e->name == name) ? 1 : 0;
  for (const auto& a : e->args) n += count_uses(a, name);
  return n;
}

Expr substitute(const Expr& e, std::string_view name, const Expr& replacement) {
  if (e->kind == ExprKind::ref && e->name == name) return replacement;
  if (e->args.empty()) return e;
  bool changed = false;
  std::vector<Expr> args;
  args.reserve(e->args.size());
  for (const auto& a : e->args) {
    args.push_back(substitute(a, name, replacement));
    changed = changed || args.back() != a;
  }
  if (!changed) return e;
  ExprNode n = *e;
  n.args = std::move(args);
  return std::make_shared<const ExprNode>(std::move(n));
}

std::string_view instr_kind(const Instr& in) {
  static constexpr std::string_view names[] = {"def", "set_element", "copy", "annotation", "call", "if_expr"};
  return names[in.index()];
}

bool is_helper(std::string_view function) {
  return function == kHelperMult || function == kHelperQuote || function == kHelperInverse;
}

std::set<std::string> instr_reads(const Instr& in) {
  std::set<std::string> out;
  std::visit(
      [&](const auto& i) {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, Def> || std::is_same_v<T, SetElement>) {
          collect_reads(i.value, out);
        } else if constexpr (std::is_same_v<T, Copy>) {
          out.insert(i.source);
        } else if constexpr (std::is_same_v<T, Call>) {
          const auto& args = i.target.args;
          const std::size_t first = is_helper(i.target.function) ? 1 : 0;
          for (std::size_t k = first; k < args.size(); ++k) out.insert(args[k]);
        } else if constexpr (std::is_same_v<T, IfExpr>) {
          collect_reads(i.cond, out);
          out.insert(i.then_call.args.begin(), i.then_call.args.end());
          out.insert(i.else_call.args.begin(), i.else_call.args.end());
        }
      },
      in);
  return out;
}

std::set<std::string> instr_writes(const Instr& in, bool* full) {
  std::set<std::string> out;
  bool is_full = false;
  std::visit(
      [&](const auto& i) {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, Def>) {
          out.insert(i.name);
          is_full = true;
        } else if constexpr (std::is_same_v<T, SetElement>) {
          out.insert(i.target);
        } else if constexpr (std::is_same_v<T, Copy>) {
          out.insert(i.target);
          is_full = true;
        } else if constexpr (std::is_same_v<T, Call>) {
          if (is_helper(i.target.function)) {
            if (!i.target.args.empty()) out.insert(i.target.args.front());
            is_full = true;
          } else {
            out.insert(i.target.args.begin(), i.target.args.end());
          }
        } else if constexpr (std::is_same_v<T, IfExpr>) {
          out.insert(i.then_call.args.begin(), i.then_call.args.end());
          out.insert(i.else_call.args.begin(), i.else_call.args.end());
        }
      },
      in);
  if (full) *full = is_full;
  return out;
}

bool has_side_effects(const Instr& in) {
  if (std::holds_alternative<IfExpr>(in)) return true;
  if (const auto* c = std::get_if<Call>(&in)) return !is_helper(c->target.function);
  return false;
}

const VarInfo* Function::find_param(std::string_view n) const {
  for (const auto& p : params) {
    if (p.name == n) return &p;
  }
  return nullptr;
}

const Decl* Function::find_local(std::string_view n) const {
  for (const auto& d : locals) {
    if (d.var.name == n) return &d;
  }
  return nullptr;
}

const Function* Program::find_function(std::string_view n) const {
  for (const auto& f : functions) {
    if (f.name == n) return &f;
  }
  return nullptr;
}

const Decl* Program::find_static(std::string_view n) const {
  for (const auto& d : statics) {
    if (d.var.name == n) return &d;
  }
  return nullptr;
}

std::size_t Program::instruction_count() const {
  std::size_t n = 0;
  for (const auto& f : functions) n += f.body.size();
  return n;
}

std::optional<Resolved> resolve(const Function& fn, std::span<const Decl> statics, std::string_view name) {
  if (const VarInfo* p = fn.find_param(name)) return Resolved{Storage::param, *p, nullptr};
  if (const Decl* d = fn.find_local(name)) return Resolved{Storage::local, d->var, d};
  for (const auto& d : statics) {
    if (d.var.name == name) return Resolved{Storage::global, d.var, &d};
  }
  return std::nullopt;
}

std::string dump_expr(const Expr& e) {
  std::ostringstream os;
  os.precision(17);
  switch (e->kind) {
    case ExprKind::literal: os << e->literal << ":" << dtype_name(e->dtype); return os.str();
    case ExprKind::ref: return e->name;
    case ExprKind::elem: os << e->name << "[" << e->index << "]"; return os.str();
    case ExprKind::negate: os << "(neg"; break;
    case ExprKind::binary: os << "(" << op_symbol(e->binop); break;
    case ExprKind::compare: os << "(" << op_symbol(e->cmpop); break;
    case ExprKind::call: os << "(" << fn_name(e->fn); break;
    case ExprKind::select: os << "(select"; break;
    case ExprKind::convert: os << "(convert:" << dtype_name(e->dtype); break;
  }
  for (const auto& a : e->args) os << " " << dump_expr(a);
  os << ")";
  return os.str();
}

namespace {

std::string var_string(const VarInfo& v) {
  return std::string(dtype_name(v.dtype)) + "[" + shape_string(v.shape) + "] " + v.name;
}

std::string call_string(const CallTarget& c) {
  std::string s = c.function + "(";
  for (std::size_t i = 0; i < c.args.size(); ++i) s += (i ? ", " : "") + c.args[i];
  return s + ")";
}

void dump_decl(std::ostream& os, const Decl& d, std::string_view indent) {
  os << indent << (d.is_static ? "static " : "") << (d.temp ? "temp " : "") << var_string(d.var);
  if (d.init) os << " = " << to_string(*d.init);
  os << "\n";
}

}  // namespace

std::string dump_function(const Function& fn) {
  std::ostringstream os;
  os << "function " << fn.name << "(";
  for (std::size_t i = 0; i < fn.params.size(); ++i) os << (i ? ", " : "") << var_string(fn.params[i]);
  os << ")\n";
  for (const auto& d : fn.locals) dump_decl(os, d, "  local ");
  for (const auto& in : fn.body) {
    os << "  ";
    std::visit(
        [&](const auto& i) {
          using T = std::decay_t<decltype(i)>;
          if constexpr (std::is_same_v<T, Def>) {
            os << "def " << i.name << " = " << dump_expr(i.value);
          } else if constexpr (std::is_same_v<T, SetElement>) {
            os << "set " << i.target << "[" << i.index << "] = " << dump_expr(i.value);
          } else if constexpr (std::is_same_v<T, Copy>) {
            os << "copy " << i.target << " <- " << i.source << " (" << i.count << ")";
          } else if constexpr (std::is_same_v<T, Annotation>) {
            os << "annotation \"" << i.text << "\"";
          } else if constexpr (std::is_same_v<T, Call>) {
            os << "call " << call_string(i.target);
          } else if constexpr (std::is_same_v<T, IfExpr>) {
            os << "if " << dump_expr(i.cond) << " then " << call_string(i.then_call) << " else "
               << call_string(i.else_call);
          }
        },
        in);
    os << "\n";
  }
  os << "end " << fn.name << "\n";
  return os.str();
}

std::string dump_ir(const Program& prog) {
  std::ostringstream os;
  for (const auto& d : prog.statics) dump_decl(os, d, "static ");
  for (const auto& f : prog.functions) os << "\n" << dump_function(f);
  if (prog.entry) {
    os << "\nentry init=" << prog.entry->init_function << " output=" << prog.entry->output_function
       << " state=" << prog.entry->state_function << "\n";
  }
  return os.str();
}

}  // namespace bcg
