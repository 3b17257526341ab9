#include "bcg/cemit.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace bcg {

std::string_view c_type(Dtype d) {
  switch (d) {
    case Dtype::f64: return "double";
    case Dtype::boolean: return "int";
    case Dtype::i8: return "int8_t";
    case Dtype::i16: return "int16_t";
    case Dtype::i32: return "int32_t";
    case Dtype::u8: return "uint8_t";
    case Dtype::u16: return "uint16_t";
    case Dtype::u32: return "uint32_t";
  }
  return "double";
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string scientific(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
  return std::string(buf, r.ptr);
}

// Literal without the parentheses a negative value needs inside expressions.
std::string bare_literal(double v, Dtype d) {
  if (d == Dtype::boolean) return v != 0.0 ? "TRUE" : "FALSE";
  if (d == Dtype::f64) {
    if (std::isnan(v)) return "(0.0/0.0)";
    if (std::isinf(v)) return v > 0 ? "(1.0/0.0)" : "(-1.0/0.0)";
    if (v == 0.0 && std::signbit(v)) return "-0.0";
    if (v == std::trunc(v) && std::fabs(v) < 1e15) return shortest(v);
    const std::string s = shortest(v);
    // an integral spelling of a huge value would not be a valid C literal
    return s.find_first_of(".e") == std::string::npos ? scientific(v) : s;
  }
  const auto i = static_cast<long long>(v);
  if (d == Dtype::i32 && i == -2147483648LL) return "(-2147483647-1)";
  std::string s = std::to_string(i);
  if (d == Dtype::u32) s += "u";
  return s;
}

struct Printer {
  const Function& fn;
  std::span<const Decl> statics;

  std::optional<Resolved> find(const std::string& name) const { return resolve(fn, statics, name); }

  bool is_param(const std::string& name) const { return fn.find_param(name) != nullptr; }

  bool is_scalar(const std::string& name) const {
    const auto r = find(name);
    return r && r->var.shape.numel() == 1;
  }

  // Value of a scalar variable.
  std::string scalar_ref(const std::string& name) const { return is_param(name) ? "*" + name : name; }

  // Expression denoting the storage of a variable passed to a function.
  std::string address(const std::string& name) const {
    if (is_param(name)) return name;
    return is_scalar(name) ? "&" + name : name;
  }

  std::string narrow(Dtype d, std::string s) const {
    if (d == Dtype::i8 || d == Dtype::i16 || d == Dtype::u8 || d == Dtype::u16) {
      return "((" + std::string(c_type(d)) + ")" + s + ")";
    }
    return s;
  }

  std::string wrapped(const Expr& e) const {
    const std::string s = expr(e);
    switch (e->kind) {
      case ExprKind::ref:
      case ExprKind::call:
        return "(" + s + ")";
      case ExprKind::literal:
        return s.front() == '(' ? s : "(" + s + ")";
      default: return s;
    }
  }

  std::string expr(const Expr& e) const {
    switch (e->kind) {
      case ExprKind::literal: {
        std::string s = bare_literal(e->literal, e->dtype);
        if (s.front() == '-') s = "(" + s + ")";
        return s;
      }
      case ExprKind::ref: return scalar_ref(e->name);
      case ExprKind::elem: return "(" + e->name + "[" + std::to_string(e->index) + "])";
      case ExprKind::negate: return narrow(e->dtype, "(-" + wrapped(e->args[0]) + ")");
      case ExprKind::binary: {
        const std::string op = e->binop == BinOp::div_elem ? "/ " : std::string(op_symbol(e->binop));
        const std::string sym = e->binop == BinOp::mul_elem ? "*" : op;
        return narrow(e->dtype, "(" + expr(e->args[0]) + sym + expr(e->args[1]) + ")");
      }
      case ExprKind::compare:
        return "(" + expr(e->args[0]) + std::string(op_symbol(e->cmpop)) + expr(e->args[1]) + ")";
      case ExprKind::call: {
        std::string s = std::string(fn_name(e->fn)) + "(";
        for (std::size_t i = 0; i < e->args.size(); ++i) s += (i ? "," : "") + expr(e->args[i]);
        return s + ")";
      }
      case ExprKind::select:
        return "(" + expr(e->args[0]) + "?" + expr(e->args[1]) + ":" + expr(e->args[2]) + ")";
      case ExprKind::convert: {
        const Dtype from = e->args[0]->dtype;
        const std::string inner = wrapped(e->args[0]);
        if (e->dtype == Dtype::boolean) return "(" + inner + "!=0)";
        if (e->dtype == Dtype::f64) return "((double)" + inner + ")";
        if (from == Dtype::boolean) return inner;  // already an int holding 0 or 1
        if (from == Dtype::f64) return "((" + std::string(c_type(e->dtype)) + ")(int64_t)" + inner + ")";
        return "((" + std::string(c_type(e->dtype)) + ")" + inner + ")";
      }
    }
    throw Error(ErrorCode::UnsupportedInstr, "expression kind");
  }

  std::string call(const CallTarget& t) const {
    std::string s = t.function + "(";
    const bool helper = is_helper(t.function);
    for (std::size_t i = 0; i < t.args.size(); ++i) {
      if (i) s += ",";
      // helpers take matrices by name and dimensions by address
      const bool dim = helper && ((t.function == kHelperMult && i >= 3) || (t.function != kHelperMult && i >= 2));
      s += dim ? "&" + t.args[i] : (helper ? t.args[i] : address(t.args[i]));
    }
    return s + ");";
  }

  std::string element_type(const std::string& name) const {
    const auto r = find(name);
    if (!r) throw Error(ErrorCode::MalformedIR, "undeclared name " + name);
    return std::string(c_type(r->var.dtype));
  }

  void instr(const Instr& in, std::vector<std::string>& out) const {
    std::visit(
        [&](const auto& i) {
          using T = std::decay_t<decltype(i)>;
          if constexpr (std::is_same_v<T, Def>) {
            out.push_back(i.name + "=" + expr(i.value) + ";");
          } else if constexpr (std::is_same_v<T, SetElement>) {
            if (is_scalar(i.target)) {
              out.push_back(scalar_ref(i.target) + "=" + expr(i.value) + ";");
            } else {
              out.push_back(i.target + "[" + std::to_string(i.index) + "]=" + expr(i.value) + ";");
            }
          } else if constexpr (std::is_same_v<T, Copy>) {
            if (i.count == 1 && is_scalar(i.target)) {
              const std::string src = is_scalar(i.source) ? scalar_ref(i.source) : i.source + "[0]";
              out.push_back(scalar_ref(i.target) + "=" + src + ";");
            } else {
              out.push_back("memcpy(" + i.target + "," + i.source + "," + std::to_string(i.count) + "*sizeof(" +
                            element_type(i.target) + "));");
            }
          } else if constexpr (std::is_same_v<T, Annotation>) {
            out.push_back("/* " + i.text + "*/");
          } else if constexpr (std::is_same_v<T, Call>) {
            out.push_back(call(i.target));
          } else if constexpr (std::is_same_v<T, IfExpr>) {
            out.push_back("if (" + expr(i.cond) + ") {");
            out.push_back("  " + call(i.then_call));
            out.push_back("}");
            out.push_back("else {");
            out.push_back("  " + call(i.else_call));
            out.push_back("}");
          }
        },
        in);
  }
};

std::string initializer(const MatValue& v) {
  if (v.numel() == 1) return bare_literal(v.at(0), v.dtype());
  std::string s = "{ ";
  for (std::size_t k = 0; k < v.numel(); ++k) s += (k ? ", " : "") + bare_literal(v.at(k), v.dtype());
  return s + " }";
}

std::string declaration(const Decl& d, bool is_static) {
  std::string s = is_static ? "static " : "";
  s += std::string(c_type(d.var.dtype)) + " " + d.var.name;
  const std::size_t n = d.var.shape.numel();
  if (n == 1) {
    if (d.init) s += "=" + initializer(*d.init);
  } else if (d.init) {
    s += "[]=" + initializer(*d.init);
  } else {
    s += "[" + std::to_string(n) + "]";
  }
  return s + ";";
}

std::string signature(const Function& fn) {
  std::string s = "void " + fn.name + "(";
  for (std::size_t i = 0; i < fn.params.size(); ++i) {
    s += (i ? "," : "") + std::string(c_type(fn.params[i].dtype)) + " *" + fn.params[i].name;
  }
  return s + ")";
}

std::string emit_function(const Function& fn, std::span<const Decl> statics) {
  std::string s = signature(fn) + "{\n";
  for (const auto& line : code_printer_c(fn, statics)) s += "  " + line + "\n";
  return s + "}\n";
}

void used_helpers(const Program& prog, bool& mult, bool& quote, bool& minv) {
  mult = quote = minv = false;
  for (const auto& fn : prog.functions) {
    for (const auto& in : fn.body) {
      if (const auto* c = std::get_if<Call>(&in)) {
        mult = mult || c->target.function == kHelperMult;
        quote = quote || c->target.function == kHelperQuote;
        minv = minv || c->target.function == kHelperInverse;
      }
    }
  }
}

std::string accessor(Dtype d, bool input) {
  std::string base;
  switch (d) {
    case Dtype::f64: base = "GetReal"; break;
    case Dtype::boolean:
    case Dtype::i32: base = "Getint32"; break;
    case Dtype::i8: base = "Getint8"; break;
    case Dtype::i16: base = "Getint16"; break;
    case Dtype::u8: base = "Getuint8"; break;
    case Dtype::u16: base = "Getuint16"; break;
    case Dtype::u32: base = "Getuint32"; break;
  }
  return base + (input ? "InPortPtrs" : "OutPortPtrs");
}

}  // namespace

std::string c_literal(double v, Dtype d) { return bare_literal(v, d); }

std::vector<std::string> code_printer_c(const Function& fn, std::span<const Decl> statics, bool with_decls) {
  std::vector<std::string> out;
  if (with_decls) {
    for (const auto& d : fn.locals) out.push_back(declaration(d, d.is_static));
  }
  const Printer p{fn, statics};
  for (const auto& in : fn.body) p.instr(in, out);
  return out;
}

std::string emit_helper(std::string_view name) {
  if (name == kHelperQuote) {
    return "void quote(double *res, double *a, double *dm,double *dn)\n"
           "{\n"
           " int i,j, m1=(int) (*dm), n1 = (int) (*dn) ;\n"
           " for (i = 0 ; i < (m1); i++) \n"
           "   for (j = 0 ; j < (n1); j++) \n"
           "     {\n"
           "       res[j+(n1)*i]= a[i+(m1)*j];\n"
           "     }\n"
           "}\n";
  }
  if (name == kHelperMult) {
    return "void mult(double *res, double *a, double *b,double *md1,double *nd1,double *md2,double *nd2)\n"
           "{\n"
           " int i,j,k,m1=(int) (*md1),n1= (int) (*nd1),m2= (int) (*md2),n2=(int) (*nd2);\n"
           " for (i = 0 ; i < m1; i++) \n"
           "   for (j = 0 ; j < n2; j++) \n"
           "     {\n"
           "       res[i+m1*j]=0;\n"
           "       for (k = 0 ; k < n1; k++) \n"
           "         res[i+(m1)*j] += a[i+(m1)*k]*b[k+(m2)*j];\n"
           "     }\n"
           "}\n";
  }
  if (name == kHelperInverse) {
    // LU with partial pivoting; same operations, same order as the
    // interpreter's inverse helper
    return "void minv(double *res, double *a, double *dn)\n"
           "{\n"
           " int i,j,k,p,c,ii,n=(int) (*dn);\n"
           " double best,t;\n"
           " double *w=(double *) malloc(n*n*sizeof(double));\n"
           " double *y=(double *) malloc(n*sizeof(double));\n"
           " int *perm=(int *) malloc(n*sizeof(int));\n"
           " for (i = 0 ; i < n*n; i++) w[i]=a[i];\n"
           " for (i = 0 ; i < n; i++) perm[i]=i;\n"
           " for (k = 0 ; k < n; k++) {\n"
           "   p=k; best=fabs(w[k+n*k]);\n"
           "   for (i = k+1 ; i < n; i++) if (fabs(w[i+n*k]) > best) { best=fabs(w[i+n*k]); p=i; }\n"
           "   if (p != k) {\n"
           "     for (j = 0 ; j < n; j++) { t=w[k+n*j]; w[k+n*j]=w[p+n*j]; w[p+n*j]=t; }\n"
           "     i=perm[k]; perm[k]=perm[p]; perm[p]=i;\n"
           "   }\n"
           "   for (i = k+1 ; i < n; i++) {\n"
           "     w[i+n*k]=w[i+n*k]/w[k+n*k];\n"
           "     for (j = k+1 ; j < n; j++) w[i+n*j]=w[i+n*j]-w[i+n*k]*w[k+n*j];\n"
           "   }\n"
           " }\n"
           " for (c = 0 ; c < n; c++) {\n"
           "   for (i = 0 ; i < n; i++) y[i]= perm[i]==c ? 1.0 : 0.0;\n"
           "   for (i = 0 ; i < n; i++) for (j = 0 ; j < i; j++) y[i]=y[i]-w[i+n*j]*y[j];\n"
           "   for (ii = n-1 ; ii >= 0; ii--) {\n"
           "     for (j = ii+1 ; j < n; j++) y[ii]=y[ii]-w[ii+n*j]*y[j];\n"
           "     y[ii]=y[ii]/w[ii+n*ii];\n"
           "   }\n"
           "   for (i = 0 ; i < n; i++) res[i+n*c]=y[i];\n"
           " }\n"
           " free(w); free(y); free(perm);\n"
           "}\n";
  }
  throw Error(ErrorCode::UnknownName, "no helper " + std::string(name));
}

std::string emit_body(const Program& prog) {
  std::string s;
  for (const auto& d : prog.statics) s += declaration(d, true) + "\n";
  for (const auto& fn : prog.functions) s += "\n" + emit_function(fn, prog.statics);
  return s;
}

std::string emit_program(const Program& prog, const EmitConfig& cfg) {
  const std::string id = cfg.block_id ? std::to_string(*cfg.block_id) : "";
  const std::string entry = cfg.entry_name.empty() ? "toto" + id : cfg.entry_name;
  std::ostringstream os;
  if (cfg.mode == EmitMode::runtime) os << "#include <scicos/scicos_block4.h>\n";
  os << "#include <string.h>\n#include <stdio.h>\n#include <stdlib.h>\n#include <stdint.h>\n#include <math.h>\n";
  os << "typedef int boolean;\n";
  os << "#ifndef TRUE\n#define TRUE 1\n#endif\n#ifndef FALSE\n#define FALSE 0\n#endif\n";
  os << "/* Start" << id << "*/\n\n";

  bool mult = false, quote = false, minv = false;
  used_helpers(prog, mult, quote, minv);
  if (quote) os << emit_helper(kHelperQuote) << "\n";
  if (mult) os << emit_helper(kHelperMult) << "\n";
  if (minv) os << emit_helper(kHelperInverse) << "\n";

  os << emit_body(prog);
  os << "\n/* End" << id << "*/\n\n";
  if (!prog.entry) return os.str();

  const EntryPoints& e = *prog.entry;
  std::vector<std::string> args;
  std::string params;
  if (cfg.mode == EmitMode::runtime) {
    for (std::size_t k = 0; k < e.inputs.size(); ++k) {
      args.push_back("(" + accessor(e.inputs[k].dtype, true) + "(block," + std::to_string(k + 1) + "))");
    }
    for (std::size_t k = 0; k < e.outputs.size(); ++k) {
      args.push_back("(" + accessor(e.outputs[k].dtype, false) + "(block," + std::to_string(k + 1) + "))");
    }
    os << "void " << entry << "(scicos_block *block,int flag)\n";
  } else {
    params = "int flag";
    for (const auto* group : {&e.inputs, &e.outputs}) {
      for (const auto& v : *group) {
        params += "," + std::string(c_type(v.dtype)) + " *" + v.name;
        args.push_back(v.name);
      }
    }
    os << "void " << entry << "(" << params << ")\n";
  }
  std::string arglist;
  for (std::size_t k = 0; k < args.size(); ++k) arglist += (k ? "," : "") + args[k];
  os << "  {\n";
  bool first = true;
  auto branch = [&](int flag, const std::string& fn, bool with_args) {
    if (fn.empty()) return;
    os << "  " << (first ? "" : "else ") << "if (flag == " << flag << ") {\n";
    os << "   " << fn << "(" << (with_args ? arglist : "") << ");\n";
    os << "  }\n";
    first = false;
  };
  branch(1, e.output_function, true);
  branch(2, e.state_function, true);
  branch(4, e.init_function, false);
  os << "}\n";
  return os.str();
}

}  // namespace bcg
