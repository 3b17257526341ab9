#include "bcg/model.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>

#include "bcg/directives.hpp"

namespace bcg {

std::string to_string(const Signature& s) { return std::string(dtype_name(s.dtype)) + " " + shape_string(s.shape); }

std::string to_string(const Endpoint& e) {
  switch (e.kind) {
    case Endpoint::Kind::input: return "in." + std::to_string(e.port);
    case Endpoint::Kind::output: return "out." + std::to_string(e.port);
    case Endpoint::Kind::block: break;
  }
  return std::to_string(e.id) + "." + std::to_string(e.port);
}

const BlockDef& Model::block(int id) const {
  for (const auto& b : blocks) {
    if (b.id == id) return b;
  }
  throw Error(ErrorCode::UnknownName, "block " + std::to_string(id));
}

const LinkDef& Model::link(int id) const {
  for (const auto& l : links) {
    if (l.id == id) return l;
  }
  throw Error(ErrorCode::UnknownName, "link " + std::to_string(id));
}

const LinkDef& Model::input_link(int id, std::size_t port) const {
  const Endpoint want{Endpoint::Kind::block, id, port};
  for (const auto& l : links) {
    if (std::find(l.to.begin(), l.to.end(), want) != l.to.end()) return l;
  }
  throw Error(ErrorCode::UnknownName, "no link into " + to_string(want));
}

const LinkDef* Model::output_link(int id, std::size_t port) const {
  const Endpoint want{Endpoint::Kind::block, id, port};
  for (const auto& l : links) {
    if (l.from == want) return &l;
  }
  return nullptr;
}

const LinkDef& Model::port_link(Endpoint::Kind kind, std::size_t port) const {
  const Endpoint want{kind, 0, port};
  for (const auto& l : links) {
    if (kind == Endpoint::Kind::input && l.from == want) return l;
    if (kind == Endpoint::Kind::output && std::find(l.to.begin(), l.to.end(), want) != l.to.end()) return l;
  }
  throw Error(ErrorCode::UnknownName, "no link at " + to_string(want));
}

const Region* Model::region_of(int id) const {
  for (const auto& r : regions) {
    if (r.if_block == id || r.select_block == id) return &r;
    if (std::find(r.then_blocks.begin(), r.then_blocks.end(), id) != r.then_blocks.end()) return &r;
    if (std::find(r.else_blocks.begin(), r.else_blocks.end(), id) != r.else_blocks.end()) return &r;
  }
  return nullptr;
}

bool Model::inferred() const {
  return std::all_of(links.begin(), links.end(), [](const LinkDef& l) { return l.sig.has_value(); });
}

const Schedule::RegionOrder* Schedule::region(int if_block) const {
  for (const auto& r : regions) {
    if (r.if_block == if_block) return &r;
  }
  return nullptr;
}

namespace {

bool is_stateful(const BlockDef& b) { return b.kind == BlockKind::UnitDelay || (b.kind == BlockKind::SciBlk && b.stateful); }
bool reads_in_output(const BlockDef& b) { return traits(b.kind).feedthrough; }
bool reads_in_state(const BlockDef& b) { return is_stateful(b); }

bool foldable_kind(BlockKind k) {
  return k == BlockKind::Gain || k == BlockKind::Summation || k == BlockKind::Mux || k == BlockKind::RelationalOp;
}

bool all_inputs_constant(const Model& m, const BlockDef& b) {
  if (b.n_in == 0) return false;
  for (std::size_t p = 1; p <= b.n_in; ++p) {
    if (!m.input_link(b.id, p).constant) return false;
  }
  return true;
}

// Blocks that never run at step time: constants and blocks whose inputs are
// all constant.
bool folded(const Model& m, const BlockDef& b) {
  if (b.kind == BlockKind::Const) return true;
  return foldable_kind(b.kind) && !m.region_of(b.id) && all_inputs_constant(m, b);
}

[[noreturn]] void rethrow_for(const BlockDef& b, const Error& e) {
  std::string msg = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
  if (msg.rfind("block ", 0) == 0) throw e;
  throw Error(e.code(), "block " + std::to_string(b.id) + " (" + std::string(kind_name(b.kind)) + "): " + msg);
}

void run_behavior(const BlockDef& b, BlockRecord& rec, Flag flag) {
  try {
    if (b.kind == BlockKind::SciBlk) {
      auto beh = find_sciblk(b.behavior);
      if (!beh) throw Error(ErrorCode::UnknownName, "no SciBlk behavior " + b.behavior);
      sciblk(rec, flag, *beh);
    } else {
      builtin_behavior(b.kind)(rec, flag);
    }
  } catch (const Error& e) {
    rethrow_for(b, e);
  }
}

BlockRecord make_record(const BlockDef& b) {
  BlockRecord rec;
  rec.id = b.id;
  rec.n_in = b.n_in;
  rec.params = b.params;
  return rec;
}

Signature sig_of(const BVar& v) { return {v.dtype(), v.shape()}; }

void check_delivery(const BlockDef& b, const LinkDef& l, const BVar& v) {
  if (sig_of(v) != *l.sig) {
    throw Error(ErrorCode::Conflict, "block " + std::to_string(b.id) + " produced " + to_string(sig_of(v)) +
                                         " on link " + std::to_string(l.id) + " typed " + to_string(*l.sig));
  }
}

std::string io_name(std::size_t k) { return "inouts" + std::to_string(k); }

}  // namespace

// ---------------------------------------------------------------------------
// Inference and constants
// ---------------------------------------------------------------------------

Model infer(Model m) {
  std::map<int, std::optional<Signature>> sig;
  for (const auto& l : m.links) sig[l.id] = l.sig;
  bool changed = false;
  auto set = [&](int lid, const Signature& s, const std::string& why) {
    auto& cur = sig[lid];
    if (!cur) {
      cur = s;
      changed = true;
    } else if (*cur != s) {
      throw Error(ErrorCode::Conflict, "link " + std::to_string(lid) + " is " + to_string(*cur) + " but " + why +
                                           " requires " + to_string(s));
    }
  };
  for (const auto& l : m.links) {
    if (l.from.kind == Endpoint::Kind::input) set(l.id, m.inputs.at(l.from.port - 1), "Super Block input");
    for (const auto& t : l.to) {
      if (t.kind == Endpoint::Kind::output) set(l.id, m.outputs.at(t.port - 1), "Super Block output");
    }
  }
  for (const auto& b : m.blocks) {
    for (std::size_t j = 0; j < b.out_sigs.size(); ++j) {
      const LinkDef* l = m.output_link(b.id, j + 1);
      if (l && b.out_sigs[j]) set(l->id, *b.out_sigs[j], "block " + std::to_string(b.id) + " declaration");
    }
  }

  std::set<int> evaluated;
  do {
    changed = false;
    for (const auto& b : m.blocks) {
      std::vector<int> ins;
      for (std::size_t p = 1; p <= b.n_in; ++p) ins.push_back(m.input_link(b.id, p).id);
      std::vector<const LinkDef*> outs;
      for (std::size_t j = 1; j <= b.n_out; ++j) outs.push_back(m.output_link(b.id, j));
      const std::string who = "block " + std::to_string(b.id);
      switch (b.kind) {
        case BlockKind::IfThenElse:
          if (sig[ins[0]] && !sig[ins[0]]->shape.is_scalar()) {
            throw Error(ErrorCode::Conflict, who + ": IfThenElse condition must be 1x1");
          }
          break;
        case BlockKind::UnitDelay:
          if (!outs[0]) break;
          if (sig[ins[0]]) set(outs[0]->id, *sig[ins[0]], who + " (delay output)");
          if (sig[outs[0]->id]) set(ins[0], *sig[outs[0]->id], who + " (delay input)");
          break;
        case BlockKind::Select: {
          std::vector<int> all = ins;
          if (outs[0]) all.push_back(outs[0]->id);
          std::optional<Signature> known;
          for (int id : all) {
            if (sig[id]) known = sig[id];
          }
          if (known) {
            for (int id : all) set(id, *known, who + " (select)");
          }
          break;
        }
        default: {
          if (evaluated.count(b.id)) break;
          if (!std::all_of(ins.begin(), ins.end(), [&](int id) { return sig[id].has_value(); })) break;
          BlockRecord rec = make_record(b);
          for (int id : ins) rec.io.emplace_back(MatValue::filled(sig[id]->dtype, sig[id]->shape, 1.0));
          for (std::size_t j = 0; j < b.n_out; ++j) {
            const Signature* s = outs[j] && sig[outs[j]->id] ? &*sig[outs[j]->id] : nullptr;
            if (!s && j < b.out_sigs.size() && b.out_sigs[j]) s = &*b.out_sigs[j];
            rec.io.push_back(s ? BVar(MatValue::zeros(s->dtype, s->shape)) : BVar());
          }
          if (is_stateful(b)) run_behavior(b, rec, Flag::init);
          run_behavior(b, rec, Flag::output);
          evaluated.insert(b.id);
          changed = true;
          for (std::size_t j = 0; j < b.n_out; ++j) {
            if (!outs[j] || j + b.n_in >= rec.io.size()) continue;
            const BVar& v = rec.io[b.n_in + j];
            if (v.numel() == 0 && !(j < b.out_sigs.size() && b.out_sigs[j])) continue;
            set(outs[j]->id, sig_of(v), who + " output " + std::to_string(j + 1));
          }
          break;
        }
      }
    }
  } while (changed);

  for (auto& l : m.links) {
    if (!sig[l.id]) throw Error(ErrorCode::Undetermined, "cannot determine the type of link " + std::to_string(l.id));
    l.sig = sig[l.id];
  }
  return m;
}

Model propagate_constants(Model m) {
  for (auto& l : m.links) l.constant.reset();
  auto link_of = [&](int id) -> LinkDef& {
    for (auto& l : m.links) {
      if (l.id == id) return l;
    }
    throw Error(ErrorCode::UnknownName, "link " + std::to_string(id));
  };
  bool changed = true;
  std::set<int> done;
  while (changed) {
    changed = false;
    for (const auto& b : m.blocks) {
      if (done.count(b.id) || !folded(m, b)) continue;
      BlockRecord rec = make_record(b);
      for (std::size_t p = 1; p <= b.n_in; ++p) rec.io.emplace_back(*m.input_link(b.id, p).constant);
      for (std::size_t j = 1; j <= b.n_out; ++j) {
        const LinkDef* l = m.output_link(b.id, j);
        rec.io.push_back(l && l->sig ? BVar(MatValue::zeros(l->sig->dtype, l->sig->shape)) : BVar());
      }
      run_behavior(b, rec, Flag::output);
      for (std::size_t j = 1; j <= b.n_out; ++j) {
        const LinkDef* l = m.output_link(b.id, j);
        if (!l) continue;
        const BVar& v = rec.io.at(b.n_in + j - 1);
        if (l->sig) check_delivery(b, *l, v);
        link_of(l->id).constant = v.value();
      }
      done.insert(b.id);
      changed = true;
    }
  }
  return m;
}

Model prepare(Model m) { return propagate_constants(infer(std::move(m))); }

// ---------------------------------------------------------------------------
// Scheduling
// ---------------------------------------------------------------------------

namespace {

// Kahn's algorithm, smallest ready id first.
std::vector<int> topo(const std::set<int>& nodes, const std::map<int, std::set<int>>& succ, const std::string& what) {
  std::map<int, int> indeg;
  for (int n : nodes) indeg[n] = 0;
  for (const auto& [n, ss] : succ) {
    for (int s : ss) ++indeg[s];
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (const auto& [n, d] : indeg) {
    if (d == 0) ready.push(n);
  }
  std::vector<int> order;
  while (!ready.empty()) {
    const int n = ready.top();
    ready.pop();
    order.push_back(n);
    auto it = succ.find(n);
    if (it == succ.end()) continue;
    for (int s : it->second) {
      if (--indeg[s] == 0) ready.push(s);
    }
  }
  if (order.size() != nodes.size()) {
    std::string stuck;
    for (const auto& [n, d] : indeg) {
      if (d > 0) stuck += (stuck.empty() ? "" : ", ") + std::to_string(n);
    }
    throw Error(ErrorCode::AlgebraicLoop, what + ": feedthrough cycle through blocks " + stuck);
  }
  return order;
}

}  // namespace

Schedule schedule(const Model& m) {
  auto node_of = [&](int id) {
    const Region* r = m.region_of(id);
    return r ? r->if_block : id;
  };
  std::set<int> nodes;
  for (const auto& b : m.blocks) {
    if (!folded(m, b)) nodes.insert(node_of(b.id));
  }
  std::map<int, std::set<int>> succ;
  for (const auto& l : m.links) {
    if (l.from.kind != Endpoint::Kind::block) continue;
    const BlockDef& src = m.block(l.from.id);
    if (folded(m, src)) continue;
    for (const auto& t : l.to) {
      if (t.kind != Endpoint::Kind::block) continue;
      const BlockDef& dst = m.block(t.id);
      if (folded(m, dst) || !reads_in_output(dst)) continue;
      const int a = node_of(src.id), b = node_of(dst.id);
      if (a != b) succ[a].insert(b);
    }
  }
  Schedule s;
  s.output = topo(nodes, succ, "output phase");

  for (const auto& r : m.regions) {
    Schedule::RegionOrder ro;
    ro.if_block = r.if_block;
    ro.select_block = r.select_block;
    auto branch = [&](const std::vector<int>& members, const std::string& what) {
      std::set<int> ns;
      for (int id : members) {
        if (!folded(m, m.block(id))) ns.insert(id);
      }
      std::map<int, std::set<int>> bs;
      for (const auto& l : m.links) {
        if (l.from.kind != Endpoint::Kind::block || !ns.count(l.from.id)) continue;
        for (const auto& t : l.to) {
          if (t.kind == Endpoint::Kind::block && ns.count(t.id) && t.id != l.from.id) bs[l.from.id].insert(t.id);
        }
      }
      return topo(ns, bs, what);
    };
    ro.then_order = branch(r.then_blocks, "then branch of block " + std::to_string(r.if_block));
    ro.else_order = branch(r.else_blocks, "else branch of block " + std::to_string(r.if_block));
    s.regions.push_back(std::move(ro));
  }

  for (const auto& b : m.blocks) {
    if (is_stateful(b)) s.init.push_back(b.id);
  }
  s.state = s.init;
  std::sort(s.state.begin(), s.state.end());
  return s;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

GeneratedNames generated_names(const Model& m, std::optional<int> block_id) {
  const std::string bid = std::to_string(block_id.value_or(m.block_id));
  const std::string k = std::to_string(2 * m.regions.size() + 1);
  return {"toto" + bid, "initialize" + bid, "updateOutput" + bid + k, "updateState" + bid + k};
}

namespace {

enum class Home { constant, input_param, output_param, temp, delay_state, persistent };

struct LinkPlan {
  Home home = Home::temp;
  VarInfo var;                        // storage for the param/static homes
  std::vector<std::size_t> out_ports;  // Super Block outputs it drives
};

constexpr int kMainFn = 0;
constexpr int kStateFn = -1;

class Generator {
 public:
  Generator(const Model& m, const Schedule& s, int bid) : m_(m), s_(s), bid_(std::to_string(bid)) {}

  GenerateResult run(const EmitConfig& cfg, const OptOptions& opts) {
    init_states();
    plan_links();
    register_persistents();
    for (std::size_t k = 0; k < m_.inputs.size(); ++k) {
      io_ = inouts_insert(ctx_, io_, io_name(k + 1), BVar(MatValue::zeros(m_.inputs[k].dtype, m_.inputs[k].shape)));
    }
    for (std::size_t k = 0; k < m_.outputs.size(); ++k) {
      io_ = inouts_insert(ctx_, io_, io_name(m_.inputs.size() + k + 1),
                          BVar(MatValue::zeros(m_.outputs[k].dtype, m_.outputs[k].shape)));
    }
    for (const auto& e : io_.entries()) args_.push_back(e.name);

    const GeneratedNames names = generated_names(m_, std::stoi(bid_));
    for (std::size_t r = 0; r < m_.regions.size(); ++r) {
      const auto& ro = *s_.region(m_.regions[r].if_block);
      trace_branch(branch_name(r, 1), ro.then_order, ro.select_block, 1);
      trace_branch(branch_name(r, 2), ro.else_order, ro.select_block, 2);
    }
    trace_output(names.output);
    trace_state(names.state);

    GenerateResult out;
    out.program = finalize_program(ctx_, opts, names.init);
    EntryPoints e;
    e.init_function = names.init;
    e.output_function = names.output;
    e.state_function = names.state;
    for (std::size_t k = 0; k < io_.entries().size(); ++k) {
      (k < m_.inputs.size() ? e.inputs : e.outputs).push_back(io_.entries()[k]);
    }
    out.program.entry = e;
    EmitConfig c = cfg;
    if (!c.block_id) c.block_id = std::stoi(bid_);
    out.text = emit_program(out.program, c);
    out.warnings = ctx_.warnings();
    out.warnings.insert(out.warnings.end(), warnings_.begin(), warnings_.end());
    return out;
  }

 private:
  std::string branch_name(std::size_t region, int which) const {
    return "updateOutput" + bid_ + std::to_string(2 * region + static_cast<std::size_t>(which));
  }

  // Function a block runs in during the output phase.
  std::vector<int> fns_of(const BlockDef& b, std::optional<std::size_t> input_port) const {
    for (std::size_t r = 0; r < m_.regions.size(); ++r) {
      const Region& g = m_.regions[r];
      const int then_fn = static_cast<int>(2 * r + 1), else_fn = static_cast<int>(2 * r + 2);
      if (std::find(g.then_blocks.begin(), g.then_blocks.end(), b.id) != g.then_blocks.end()) return {then_fn};
      if (std::find(g.else_blocks.begin(), g.else_blocks.end(), b.id) != g.else_blocks.end()) return {else_fn};
      if (g.select_block == b.id) {
        if (input_port) return {*input_port == 1 ? then_fn : else_fn};
        return {then_fn, else_fn};
      }
    }
    return {kMainFn};
  }

  void init_states() {
    for (int id : s_.init) {
      const BlockDef& b = m_.block(id);
      BlockRecord rec = make_record(b);
      for (std::size_t p = 1; p <= b.n_in; ++p) {
        const LinkDef& l = m_.input_link(id, p);
        rec.io.emplace_back(l.constant ? *l.constant : MatValue::zeros(l.sig->dtype, l.sig->shape));
      }
      run_behavior(b, rec, Flag::init);
      for (const auto& z : rec.state) {
        if (z.is_symbolic()) throw Error(ErrorCode::InvalidValue, "block " + std::to_string(id) + ": initial state is not numeric");
      }
      init_[id] = rec.state;
      warnings_.insert(warnings_.end(), rec.warnings.begin(), rec.warnings.end());
    }
    int k = 0;
    for (int id : s_.state) {
      for (const auto& z : init_[id]) {
        states_[id].push_back({"z_" + bid_ + std::to_string(++k), z.dtype(), z.shape()});
      }
    }
  }

  void plan_links() {
    for (const auto& l : m_.links) {
      LinkPlan p;
      for (const auto& t : l.to) {
        if (t.kind == Endpoint::Kind::output) p.out_ports.push_back(t.port);
      }
      std::set<int> consumers;
      for (const auto& t : l.to) {
        if (t.kind != Endpoint::Kind::block) continue;
        const BlockDef& c = m_.block(t.id);
        if (folded(m_, c)) continue;
        if (reads_in_output(c)) {
          for (int f : fns_of(c, t.port)) consumers.insert(f);
        }
        if (reads_in_state(c)) consumers.insert(kStateFn);
      }
      if (l.constant) {
        p.home = Home::constant;
      } else if (l.from.kind == Endpoint::Kind::input) {
        p.home = Home::input_param;
        p.var = {io_name(l.from.port), l.sig->dtype, l.sig->shape};
      } else if (!p.out_ports.empty()) {
        p.home = Home::output_param;
        p.var = {io_name(m_.inputs.size() + p.out_ports.front()), l.sig->dtype, l.sig->shape};
      } else {
        const BlockDef& src = m_.block(l.from.id);
        const std::vector<int> producers = fns_of(src, std::nullopt);
        const bool in_state = consumers.count(kStateFn) > 0;
        if (src.kind == BlockKind::UnitDelay && !in_state) {
          // the delay output is its state, which the output phase never writes
          p.home = Home::delay_state;
          p.var = states_.at(src.id).at(0);
        } else if (producers.size() == 1 && !in_state &&
                   std::all_of(consumers.begin(), consumers.end(), [&](int f) { return f == producers[0]; })) {
          p.home = Home::temp;
        } else {
          p.home = Home::persistent;
          p.var = {"link" + bid_ + std::to_string(l.id), l.sig->dtype, l.sig->shape};
        }
      }
      plans_[l.id] = p;
    }
  }

  void register_persistents() {
    for (int id : s_.state) {
      for (std::size_t j = 0; j < states_[id].size(); ++j) {
        pool_ = persistent_insert(ctx_, pool_, states_[id][j].name, init_[id][j]);
      }
    }
    std::vector<int> ids;
    for (const auto& [id, p] : plans_) {
      if (p.home == Home::persistent) ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    for (int id : ids) {
      const LinkDef& l = m_.link(id);
      MatValue def = MatValue::zeros(l.sig->dtype, l.sig->shape);
      if (l.init) {
        MatValue v = convert(*l.init, l.sig->dtype);
        if (v.numel() == 1) {
          v = MatValue::filled(l.sig->dtype, l.sig->shape, v.at(0));
        } else if (v.shape() != l.sig->shape) {
          throw Error(ErrorCode::ShapeMismatch, "link " + std::to_string(id) + " init is " + shape_string(v.shape()));
        }
        def = v;
      }
      pool_ = persistent_insert(ctx_, pool_, plans_[id].var.name, BVar(def));
    }
  }

  BVar value(const LinkDef& l) {
    const LinkPlan& p = plans_.at(l.id);
    switch (p.home) {
      case Home::constant: return BVar(*l.constant);
      case Home::temp: {
        auto it = temps_.find(l.id);
        if (it == temps_.end()) {
          throw Error(ErrorCode::MalformedIR, "link " + std::to_string(l.id) + " read before it is computed");
        }
        return it->second;
      }
      default: return ctx_.handle(p.var);
    }
  }

  void deliver(const BlockDef& b, const LinkDef& l, const BVar& v) {
    check_delivery(b, l, v);
    const LinkPlan& p = plans_.at(l.id);
    switch (p.home) {
      case Home::constant:
      case Home::input_param:
      case Home::delay_state: break;
      case Home::temp: {
        BVar t = v;
        // a scalar aliasing a persistent or an argument gets its own copy,
        // so later writes to that variable cannot reach this link
        if (t.is_symbolic() && t.numel() == 1 && !ctx_.current().find_local(t.name())) t = bvarcopy(ctx_, t);
        temps_[l.id] = t;
        break;
      }
      case Home::output_param:
      case Home::persistent: store_into(ctx_, p.var, v); break;
    }
    copy_to_extra_ports(l);
  }

  void copy_to_extra_ports(const LinkDef& l) {
    const LinkPlan& p = plans_.at(l.id);
    const std::size_t skip = p.home == Home::output_param ? 1 : 0;
    for (std::size_t k = skip; k < p.out_ports.size(); ++k) {
      store_into(ctx_, {io_name(m_.inputs.size() + p.out_ports[k]), l.sig->dtype, l.sig->shape}, value(l));
    }
  }

  BlockRecord record(const BlockDef& b) {
    BlockRecord rec = make_record(b);
    rec.ctx = &ctx_;
    for (std::size_t p = 1; p <= b.n_in; ++p) rec.io.push_back(value(m_.input_link(b.id, p)));
    for (std::size_t j = 1; j <= b.n_out; ++j) {
      const LinkDef* l = m_.output_link(b.id, j);
      rec.io.push_back(l ? BVar(MatValue::zeros(l->sig->dtype, l->sig->shape)) : BVar());
    }
    if (auto it = states_.find(b.id); it != states_.end()) {
      for (const auto& z : it->second) rec.state.push_back(ctx_.handle(z));
    }
    return rec;
  }

  void run_output(const BlockDef& b, int active = 0) {
    BlockRecord rec = record(b);
    rec.active = active;
    run_behavior(b, rec, Flag::output);
    warnings_.insert(warnings_.end(), rec.warnings.begin(), rec.warnings.end());
    for (std::size_t j = 1; j <= b.n_out; ++j) {
      if (const LinkDef* l = m_.output_link(b.id, j)) deliver(b, *l, rec.io.at(b.n_in + j - 1));
    }
  }

  void trace_branch(const std::string& name, const std::vector<int>& order, int select, int active) {
    start_function(ctx_, name, io_);
    temps_.clear();
    for (int id : order) run_output(m_.block(id));
    run_output(m_.block(select), active);
    end_function(ctx_, name);
  }

  void trace_output(const std::string& name) {
    start_function(ctx_, name, io_);
    temps_.clear();
    // Super Block outputs driven straight from an input or a constant
    for (const auto& l : m_.links) {
      const Home h = plans_.at(l.id).home;
      if (h == Home::constant || h == Home::input_param) copy_to_extra_ports(l);
    }
    for (int id : s_.output) {
      const BlockDef& b = m_.block(id);
      if (b.kind != BlockKind::IfThenElse) {
        run_output(b);
        continue;
      }
      const std::size_t r = static_cast<std::size_t>(
          std::find_if(m_.regions.begin(), m_.regions.end(), [&](const Region& g) { return g.if_block == id; }) -
          m_.regions.begin());
      BlockRecord rec = record(b);
      rec.branches = std::pair{CallTarget{branch_name(r, 1), args_}, CallTarget{branch_name(r, 2), args_}};
      run_behavior(b, rec, Flag::output);
    }
    end_function(ctx_, name);
  }

  void trace_state(const std::string& name) {
    start_function(ctx_, name, io_);
    temps_.clear();
    for (int id : s_.state) {
      const BlockDef& b = m_.block(id);
      BlockRecord rec = record(b);
      run_behavior(b, rec, Flag::state);
      for (std::size_t j = 0; j < states_[id].size(); ++j) {
        try {
          store_into(ctx_, states_[id][j], rec.state.at(j));
        } catch (const Error& e) {
          rethrow_for(b, e);
        }
      }
    }
    end_function(ctx_, name);
  }

  const Model& m_;
  const Schedule& s_;
  const std::string bid_;
  TraceContext ctx_;
  PersistentPool pool_;
  IoSeq io_;
  std::vector<std::string> args_;
  std::map<int, std::vector<BVar>> init_;
  std::map<int, std::vector<VarInfo>> states_;
  std::map<int, LinkPlan> plans_;
  std::map<int, BVar> temps_;
  std::vector<std::string> warnings_;
};

}  // namespace

GenerateResult generate(const Model& model, const EmitConfig& cfg, const OptOptions& opts) {
  const Model m = prepare(model);
  const Schedule s = schedule(m);
  Generator g(m, s, cfg.block_id.value_or(m.block_id));
  return g.run(cfg, opts);
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

std::vector<StepValues> simulate(const Model& model, const std::vector<StepValues>& inputs) {
  const Model m = prepare(model);
  const Schedule s = schedule(m);

  std::map<int, std::vector<BVar>> states;
  for (int id : s.init) {
    const BlockDef& b = m.block(id);
    BlockRecord rec = make_record(b);
    for (std::size_t p = 1; p <= b.n_in; ++p) {
      const LinkDef& l = m.input_link(id, p);
      rec.io.emplace_back(l.constant ? *l.constant : MatValue::zeros(l.sig->dtype, l.sig->shape));
    }
    run_behavior(b, rec, Flag::init);
    states[id] = rec.state;
  }

  // link values persist across steps, like the generated statics
  std::map<int, MatValue> vals;
  for (const auto& l : m.links) {
    if (l.constant) {
      vals[l.id] = *l.constant;
    } else if (l.init) {
      MatValue v = convert(*l.init, l.sig->dtype);
      vals[l.id] = v.numel() == 1 ? MatValue::filled(l.sig->dtype, l.sig->shape, v.at(0)) : v;
    } else {
      vals[l.id] = MatValue::zeros(l.sig->dtype, l.sig->shape);
    }
  }

  auto record = [&](const BlockDef& b) {
    BlockRecord rec = make_record(b);
    for (std::size_t p = 1; p <= b.n_in; ++p) rec.io.emplace_back(vals.at(m.input_link(b.id, p).id));
    for (std::size_t j = 1; j <= b.n_out; ++j) {
      const LinkDef* l = m.output_link(b.id, j);
      rec.io.push_back(l ? BVar(MatValue::zeros(l->sig->dtype, l->sig->shape)) : BVar());
    }
    if (auto it = states.find(b.id); it != states.end()) rec.state = it->second;
    return rec;
  };
  auto run_output = [&](const BlockDef& b, int active) {
    BlockRecord rec = record(b);
    rec.active = active;
    run_behavior(b, rec, Flag::output);
    for (std::size_t j = 1; j <= b.n_out; ++j) {
      const LinkDef* l = m.output_link(b.id, j);
      if (!l) continue;
      const BVar& v = rec.io.at(b.n_in + j - 1);
      check_delivery(b, *l, v);
      vals[l->id] = v.value();
    }
    return rec.taken;
  };

  std::vector<StepValues> out;
  out.reserve(inputs.size());
  for (std::size_t step = 0; step < inputs.size(); ++step) {
    const StepValues& in = inputs[step];
    if (in.size() != m.inputs.size()) {
      throw Error(ErrorCode::ArityViolation, "step " + std::to_string(step) + ": " + std::to_string(in.size()) +
                                                 " inputs for " + std::to_string(m.inputs.size()) + " ports");
    }
    for (std::size_t k = 0; k < in.size(); ++k) {
      if (in[k].dtype() != m.inputs[k].dtype || in[k].shape() != m.inputs[k].shape) {
        throw Error(ErrorCode::ShapeMismatch, "step " + std::to_string(step) + " input " + std::to_string(k + 1) +
                                                  " must be " + to_string(m.inputs[k]));
      }
      vals[m.port_link(Endpoint::Kind::input, k + 1).id] = in[k];
    }
    for (int id : s.output) {
      const BlockDef& b = m.block(id);
      const int taken = run_output(b, 0);
      if (b.kind != BlockKind::IfThenElse) continue;
      const auto& ro = *s.region(id);
      for (int bid : taken == 1 ? ro.then_order : ro.else_order) run_output(m.block(bid), 0);
      run_output(m.block(ro.select_block), taken);
    }
    StepValues y;
    for (std::size_t k = 1; k <= m.outputs.size(); ++k) y.push_back(vals.at(m.port_link(Endpoint::Kind::output, k).id));
    out.push_back(std::move(y));
    for (int id : s.state) {
      const BlockDef& b = m.block(id);
      BlockRecord rec = record(b);
      run_behavior(b, rec, Flag::state);
      states[id] = rec.state;
    }
  }
  return out;
}

}  // namespace bcg
