#include "bcg/validate.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "bcg/irinterp.hpp"

namespace bcg {

std::vector<StepValues> random_stimuli(const Model& m, std::size_t steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> real(-10.0, 10.0);
  std::uniform_int_distribution<int> small(-5, 5);
  std::bernoulli_distribution coin(0.5);
  std::vector<StepValues> out(steps);
  for (auto& step : out) {
    for (const auto& s : m.inputs) {
      std::vector<double> data(s.shape.rows * s.shape.cols);
      for (double& x : data) {
        if (s.dtype == Dtype::f64) {
          x = real(rng);
        } else if (s.dtype == Dtype::boolean) {
          x = coin(rng) ? 1.0 : 0.0;
        } else {
          x = wrap_to(s.dtype, small(rng));
        }
      }
      MatValue v(s.dtype, s.shape.rows, s.shape.cols, std::move(data));
      step.push_back(std::move(v));
    }
  }
  return out;
}

Comparison compare_runs(const std::vector<StepValues>& expected, const std::vector<StepValues>& actual, double rel_tol) {
  Comparison c;
  auto differ = [&](const std::string& what) {
    if (c.ok) c.first_diff = what;
    c.ok = false;
  };
  if (expected.size() != actual.size()) {
    differ(std::to_string(expected.size()) + " steps vs " + std::to_string(actual.size()));
    return c;
  }
  for (std::size_t s = 0; s < expected.size(); ++s) {
    if (expected[s].size() != actual[s].size()) {
      differ("step " + std::to_string(s) + ": output count differs");
      continue;
    }
    for (std::size_t k = 0; k < expected[s].size(); ++k) {
      const MatValue& a = expected[s][k];
      const MatValue& b = actual[s][k];
      const std::string at = "step " + std::to_string(s) + ", output " + std::to_string(k + 1);
      if (a.dtype() != b.dtype() || a.shape() != b.shape()) {
        differ(at + ": " + std::string(dtype_name(a.dtype())) + " " + shape_string(a.shape()) + " vs " +
               std::string(dtype_name(b.dtype())) + " " + shape_string(b.shape()));
        continue;
      }
      for (std::size_t i = 0; i < a.numel(); ++i) {
        ++c.compared;
        const double x = a.at(i), y = b.at(i);
        if (std::isnan(x) && std::isnan(y)) continue;
        const double abs = std::abs(x - y);
        const double scale = std::max(std::abs(x), std::abs(y));
        const double rel = abs == 0.0 ? 0.0 : (scale > 0.0 ? abs / scale : INFINITY);
        if (!std::isnan(abs)) {
          c.max_abs = std::max(c.max_abs, abs);
          c.max_rel = std::max(c.max_rel, rel);
        }
        const bool bad = a.dtype() == Dtype::f64 ? (std::isnan(abs) || rel > rel_tol) : x != y;
        if (bad) {
          std::ostringstream os;
          os.precision(17);
          os << at << ", element " << i + 1 << ": " << x << " vs " << y;
          differ(os.str());
        }
      }
    }
  }
  return c;
}

std::vector<StepValues> run_generated(const Program& prog, const std::vector<StepValues>& inputs) {
  Machine mach(prog);
  mach.run_init();
  return mach.run_steps(inputs);
}

ValidationReport validate_model(const Model& m, const std::vector<StepValues>& inputs, const OptOptions& opts,
                                double rel_tol) {
  ValidationReport r;
  const auto expected = simulate(m, inputs);
  r.gen = generate(m, {}, opts);
  r.cmp = compare_runs(expected, run_generated(r.gen.program, inputs), rel_tol);
  return r;
}

}  // namespace bcg
