#include "bcg/blocks.hpp"

#include <array>
#include <cmath>
#include <mutex>

#include "bcg/directives.hpp"

namespace bcg {

namespace {

constexpr std::array<std::pair<BlockKind, std::string_view>, 9> kKinds{{
    {BlockKind::UnitDelay, "UnitDelay"},
    {BlockKind::Gain, "Gain"},
    {BlockKind::Summation, "Summation"},
    {BlockKind::Mux, "Mux"},
    {BlockKind::RelationalOp, "RelationalOp"},
    {BlockKind::Select, "Select"},
    {BlockKind::IfThenElse, "IfThenElse"},
    {BlockKind::Const, "Const"},
    {BlockKind::SciBlk, "SciBlk"},
}};

std::string sign_text(double s) {
  if (s == std::floor(s) && std::abs(s) < 1e15) return std::to_string(static_cast<long long>(s));
  return std::to_string(s);
}

// Converts a parameter to the block dtype; wrapped entries leave a warning.
BVar converted_param(BlockRecord& blk, const std::string& name, Dtype d) {
  const MatValue& p = blk.param(name);
  MatValue c = convert(p, d);
  if (d != Dtype::boolean) {
    for (std::size_t k = 0; k < p.numel(); ++k) {
      if (c.at(k) != std::trunc(p.at(k))) {
        blk.warnings.push_back("block " + std::to_string(blk.id) + ": parameter " + name + " wraps when converted to " +
                               std::string(dtype_name(d)));
        break;
      }
    }
  }
  return BVar(std::move(c));
}

CmpOp relation(double code) {
  // Scicos RELATIONALOP numbering
  static constexpr std::array<CmpOp, 6> ops{CmpOp::eq, CmpOp::ne, CmpOp::lt, CmpOp::le, CmpOp::gt, CmpOp::ge};
  if (code < 0 || code > 5 || code != std::floor(code)) {
    throw Error(ErrorCode::InvalidParameter, "relational operator code " + sign_text(code));
  }
  return ops[static_cast<std::size_t>(code)];
}

BVar relate(CmpOp op, const BVar& a, const BVar& b) {
  switch (op) {
    case CmpOp::eq: return a == b;
    case CmpOp::ne: return a != b;
    case CmpOp::lt: return a < b;
    case CmpOp::le: return a <= b;
    case CmpOp::gt: return a > b;
    case CmpOp::ge: return a >= b;
  }
  return a == b;
}

struct SciblkTable {
  std::mutex mu;
  std::map<std::string, Behavior> entries;
};

SciblkTable& sciblk_table() {
  static SciblkTable t;
  return t;
}

}  // namespace

std::string_view kind_name(BlockKind k) {
  for (const auto& [kind, name] : kKinds) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<BlockKind> parse_kind(std::string_view s) {
  for (const auto& [kind, name] : kKinds) {
    if (name == s) return kind;
  }
  return std::nullopt;
}

BVar& BlockRecord::out(std::size_t k) {
  if (k < 1 || n_in + k > io.size()) {
    io.resize(n_in + k);  // outputs the driver did not pre-fill
  }
  return io[n_in + k - 1];
}

const MatValue* BlockRecord::find_param(const std::string& name) const {
  auto it = params.find(name);
  return it == params.end() ? nullptr : &it->second;
}

const MatValue& BlockRecord::param(const std::string& name) const {
  if (const MatValue* p = find_param(name)) return *p;
  throw Error(ErrorCode::InvalidParameter, "block " + std::to_string(id) + " has no parameter " + name);
}

BlockTraits traits(BlockKind k) {
  if (k == BlockKind::UnitDelay) return {true, false};
  return {false, true};
}

void annotate(BlockRecord& blk, const std::string& text) {
  if (blk.ctx) put_annotation(*blk.ctx, text);
}

void unit_delay(BlockRecord& blk, Flag flag) {
  switch (flag) {
    case Flag::output: blk.out(1) = blk.state.at(0); break;
    case Flag::state: blk.state.at(0) = blk.in(1); break;
    case Flag::init: {
      const Dtype d = datatype(blk.in(1));
      const MatValue zero = MatValue::scalar(0.0);
      BVar z = blk.find_param("p1") ? converted_param(blk, "p1", d) : BVar(convert(zero, d));
      if (z.numel() == 1) {
        z = z * convert(ones(blk.in(1).shape()), datatype(z));
      } else if (z.shape() != blk.in(1).shape()) {
        throw Error(ErrorCode::ShapeMismatch, "delay " + std::to_string(blk.id) + " initial value is " +
                                                  shape_string(z.shape()) + ", input is " +
                                                  shape_string(blk.in(1).shape()));
      }
      blk.state.assign(1, z);
      break;
    }
  }
}

void gain(BlockRecord& blk, Flag flag) {
  if (flag != Flag::output) return;
  annotate(blk, "Gain block begins.");
  blk.out(1) = converted_param(blk, "p1", datatype(blk.in(1))) * blk.in(1);
  annotate(blk, "Gain block ends.");
}

void summation(BlockRecord& blk, Flag flag) {
  if (flag != Flag::output) return;
  const std::size_t nin = blk.n_in;
  MatValue sgns = blk.find_param("p2") ? blk.param("p2") : MatValue::filled(Dtype::f64, {nin, 1}, 1.0);
  if (sgns.numel() < nin) {
    throw Error(ErrorCode::InvalidParameter, "block " + std::to_string(blk.id) + ": " + std::to_string(nin) +
                                                 " inputs but " + std::to_string(sgns.numel()) + " signs");
  }
  auto wrong = [&](double s) {
    return Error(ErrorCode::InvalidParameter, "block " + std::to_string(blk.id) + ": wrong sign: " + sign_text(s));
  };
  annotate(blk, "Sum block begins with " + std::to_string(nin) + " inputs.");
  BVar out;
  if (nin == 1) {
    annotate(blk, "Using the sum function.");
    if (sgns.at(0) == -1) {
      out = -sum(blk.in(1));
    } else if (sgns.at(0) == 1) {
      out = sum(blk.in(1));
    } else {
      throw wrong(sgns.at(0));
    }
  } else {
    if (sgns.at(0) == -1) {
      out = -blk.in(1);
    } else if (sgns.at(0) == 1) {
      out = blk.in(1);
    } else {
      throw wrong(sgns.at(0));
    }
    for (std::size_t i = 2; i <= nin; ++i) {
      if (sgns.at(i - 1) == -1) {
        out = out - blk.in(i);
      } else if (sgns.at(i - 1) == 1) {
        out = out + blk.in(i);
      } else {
        throw wrong(sgns.at(i - 1));
      }
    }
  }
  blk.out(1) = out;
}

void mux(BlockRecord& blk, Flag flag) {
  if (flag != Flag::output) return;
  BVar y = blk.in(1);
  annotate(blk, "MUX block begins with " + std::to_string(blk.n_in) + " inputs.");
  for (std::size_t i = 2; i <= blk.n_in; ++i) y = vcat(y, blk.in(i));
  blk.out(1) = y;
  annotate(blk, "MUX block ends.");
}

void relational_op(BlockRecord& blk, Flag flag) {
  if (flag != Flag::output) return;
  const CmpOp op = relation(blk.find_param("op") ? blk.param("op").at(0) : 0.0);
  // the output keeps whatever dtype the link carries (bool by default)
  const Dtype od = blk.n_out() > 0 && blk.out(1).numel() > 0 ? blk.out(1).dtype() : Dtype::boolean;
  annotate(blk, "RELATIONALOP block starts");
  BVar r = relate(op, blk.in(1), blk.in(2));
  blk.out(1) = convert(r, od);
  annotate(blk, "RELATIONALOP block ends");
}

void select_block(BlockRecord& blk, Flag flag) {
  if (flag != Flag::output) return;
  if (blk.active < 1 || static_cast<std::size_t>(blk.active) > blk.n_in) {
    throw Error(ErrorCode::InvalidParameter, "select block " + std::to_string(blk.id) + " has no active input");
  }
  annotate(blk, "Selct block starts");
  annotate(blk, "Selct block ends");
  BVar chosen = blk.in(static_cast<std::size_t>(blk.active));  // out() may grow io
  blk.out(1) = std::move(chosen);
}

void ifthenelse(BlockRecord& blk, Flag flag) {
  if (flag != Flag::output) return;
  const BVar& c = blk.in(1);
  if (blk.ctx && blk.branches) {
    if_cos(*blk.ctx, c, blk.branches->first, blk.branches->second);
    if (c.is_numeric()) blk.taken = c.value().at(0) > 0 ? 1 : 2;
    return;
  }
  blk.taken = (c > BVar(MatValue::scalar(0.0, c.dtype()))) ? 1 : 2;
}

void const_block(BlockRecord& blk, Flag flag) {
  if (flag != Flag::output) return;
  blk.out(1) = BVar(blk.param("p1"));
}

void sciblk(BlockRecord& blk, Flag flag, const Behavior& behavior) {
  try {
    behavior(blk, flag);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SymbolicCondition) throw;
    throw Error(ErrorCode::SymbolicCondition, "block " + std::to_string(blk.id) + ": " + e.what());
  }
}

Behavior builtin_behavior(BlockKind k) {
  switch (k) {
    case BlockKind::UnitDelay: return unit_delay;
    case BlockKind::Gain: return gain;
    case BlockKind::Summation: return summation;
    case BlockKind::Mux: return mux;
    case BlockKind::RelationalOp: return relational_op;
    case BlockKind::Select: return select_block;
    case BlockKind::IfThenElse: return ifthenelse;
    case BlockKind::Const: return const_block;
    case BlockKind::SciBlk: break;
  }
  throw Error(ErrorCode::InvalidParameter, "SciBlk behaviors are looked up by name");
}

void register_sciblk(const std::string& name, Behavior b) {
  auto& t = sciblk_table();
  std::lock_guard lock(t.mu);
  t.entries[name] = std::move(b);
}

std::optional<Behavior> find_sciblk(const std::string& name) {
  if (name == "ekf_tracker") return Behavior(ekf_tracker);
  auto& t = sciblk_table();
  std::lock_guard lock(t.mu);
  auto it = t.entries.find(name);
  if (it == t.entries.end()) return std::nullopt;
  return it->second;
}

}  // namespace bcg
