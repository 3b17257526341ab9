#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bcg/model.hpp"

namespace bcg {

/// Uniform random inputs per dtype: f64 in [-10, 10], integers in [-5, 5],
/// bools a fair coin. Deterministic for a given seed.
std::vector<StepValues> random_stimuli(const Model& m, std::size_t steps, std::uint64_t seed);

struct Comparison {
  bool ok = true;
  double max_abs = 0.0;
  double max_rel = 0.0;
  std::size_t compared = 0;  // elements
  std::string first_diff;    // "step s, output k, element i: a vs b"
};

/// Integers and bools must match exactly; f64 within `rel_tol` relative.
Comparison compare_runs(const std::vector<StepValues>& expected, const std::vector<StepValues>& actual,
                        double rel_tol = 1e-12);

/// Runs a generated program under irinterp: initialize, then per step the
/// output and state functions.
std::vector<StepValues> run_generated(const Program& prog, const std::vector<StepValues>& inputs);

struct ValidationReport {
  Comparison cmp;
  GenerateResult gen;
};

/// simulate against generate + irinterp on the same inputs.
ValidationReport validate_model(const Model& m, const std::vector<StepValues>& inputs, const OptOptions& opts = {},
                                double rel_tol = 1e-12);

}  // namespace bcg
