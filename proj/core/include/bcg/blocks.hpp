#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bcg/trace.hpp"

namespace bcg {

enum class Flag { init = -1, output = 1, state = 2 };

enum class BlockKind { UnitDelay, Gain, Summation, Mux, RelationalOp, Select, IfThenElse, Const, SciBlk };

std::string_view kind_name(BlockKind k);
std::optional<BlockKind> parse_kind(std::string_view s);

/// What a behavior sees: io holds the inputs followed by the outputs,
/// params are always numeric. The same record type serves numeric
/// simulation (ctx == nullptr) and tracing.
struct BlockRecord {
  int id = 0;
  std::size_t n_in = 0;
  std::vector<BVar> io;
  std::vector<BVar> state;
  std::map<std::string, MatValue> params;
  TraceContext* ctx = nullptr;

  // IfThenElse: the branch calls while tracing, the decision when numeric
  std::optional<std::pair<CallTarget, CallTarget>> branches;
  int taken = 0;
  // Select: which input (1-based) the enclosing branch forwards
  int active = 0;

  std::vector<std::string> warnings;

  BVar& in(std::size_t k) { return io.at(k - 1); }
  BVar& out(std::size_t k);
  std::size_t n_out() const { return io.size() - n_in; }
  const MatValue& param(const std::string& name) const;
  const MatValue* find_param(const std::string& name) const;
};

using Behavior = std::function<void(BlockRecord&, Flag)>;

struct BlockTraits {
  bool stateful = false;
  // reads its inputs during the output phase (everything but the delay)
  bool feedthrough = true;
};

BlockTraits traits(BlockKind k);

void annotate(BlockRecord& blk, const std::string& text);

void unit_delay(BlockRecord& blk, Flag flag);
void gain(BlockRecord& blk, Flag flag);
void summation(BlockRecord& blk, Flag flag);
void mux(BlockRecord& blk, Flag flag);
void relational_op(BlockRecord& blk, Flag flag);
void select_block(BlockRecord& blk, Flag flag);
void ifthenelse(BlockRecord& blk, Flag flag);
void const_block(BlockRecord& blk, Flag flag);
/// Runs a user behavior; a branch on a symbolic value surfaces as
/// SymbolicCondition with the block id attached.
void sciblk(BlockRecord& blk, Flag flag, const Behavior& behavior);

/// Behavior of a built-in kind. SciBlk has none (see find_sciblk).
Behavior builtin_behavior(BlockKind k);

void register_sciblk(const std::string& name, Behavior b);
/// Looks a SciBlk behavior up by name; the library ones ("ekf_tracker") are
/// always present.
std::optional<Behavior> find_sciblk(const std::string& name);

// Library SciBlk behaviors.
void ekf_tracker(BlockRecord& blk, Flag flag);

}  // namespace bcg
