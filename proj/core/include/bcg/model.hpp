#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bcg/blocks.hpp"
#include "bcg/cemit.hpp"
#include "bcg/optimizer.hpp"

namespace bcg {

struct Signature {
  Dtype dtype = Dtype::f64;
  Shape shape{1, 1};
  friend bool operator==(const Signature&, const Signature&) = default;
};

std::string to_string(const Signature& s);

/// One end of a link: a block port, or a Super Block port ("in.k"/"out.k").
struct Endpoint {
  enum class Kind { block, input, output };
  Kind kind = Kind::block;
  int id = 0;        // block id; unused for Super Block ports
  std::size_t port = 1;  // 1-based
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

std::string to_string(const Endpoint& e);

struct BlockDef {
  int id = 0;
  BlockKind kind = BlockKind::Const;
  std::string behavior;  // SciBlk only
  std::map<std::string, MatValue> params;
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  std::vector<std::optional<Signature>> out_sigs;  // declared, may be partial
  bool stateful = false;                           // SciBlk only
};

struct LinkDef {
  int id = 0;
  Endpoint from;
  std::vector<Endpoint> to;
  std::optional<Signature> sig;
  std::optional<MatValue> constant;  // set by propagate_constants
  std::optional<MatValue> init;      // default of the link's persistent
};

/// IfThenElse grouping: then/else blocks run only in their branch; the
/// Select block forwards input 1 in the then branch and input 2 in the else.
struct Region {
  int if_block = 0;
  std::vector<int> then_blocks;
  std::vector<int> else_blocks;
  int select_block = 0;
};

struct Model {
  int block_id = 1000;
  std::vector<Signature> inputs;
  std::vector<Signature> outputs;
  std::vector<BlockDef> blocks;
  std::vector<LinkDef> links;
  std::vector<Region> regions;

  const BlockDef& block(int id) const;
  const LinkDef& link(int id) const;
  /// Link feeding input `port` of block `id`.
  const LinkDef& input_link(int id, std::size_t port) const;
  const LinkDef* output_link(int id, std::size_t port) const;
  const LinkDef& port_link(Endpoint::Kind kind, std::size_t port) const;
  const Region* region_of(int block) const;
  bool inferred() const;
};

struct Schedule {
  struct RegionOrder {
    int if_block = 0;
    std::vector<int> then_order;
    std::vector<int> else_order;
    int select_block = 0;
  };
  std::vector<int> init;
  /// Block ids; a region appears once, under its IfThenElse id.
  std::vector<int> output;
  std::vector<int> state;
  std::vector<RegionOrder> regions;

  const RegionOrder* region(int if_block) const;
};

Model parse_model(std::string_view text);
Model load_model(const std::filesystem::path& path);

/// Gives every link a dtype and shape. Throws Conflict or Undetermined.
Model infer(Model m);
/// Marks links whose values are known at generation time.
Model propagate_constants(Model m);
/// infer followed by propagate_constants.
Model prepare(Model m);

Schedule schedule(const Model& m);

struct GenerateResult {
  Program program;
  std::string text;
  std::vector<std::string> warnings;
};

GenerateResult generate(const Model& m, const EmitConfig& cfg = {}, const OptOptions& opts = {});

using StepValues = std::vector<MatValue>;

/// Direct numeric execution: each step runs the output phase, records the
/// output ports, then runs the state phase.
std::vector<StepValues> simulate(const Model& m, const std::vector<StepValues>& inputs);

/// Names generated for a model: the dispatcher, initialize, and the main
/// output and state functions.
struct GeneratedNames {
  std::string entry;
  std::string init;
  std::string output;
  std::string state;
};
GeneratedNames generated_names(const Model& m, std::optional<int> block_id = std::nullopt);

}  // namespace bcg
