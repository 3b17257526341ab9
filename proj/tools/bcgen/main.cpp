// bcgen: generate C from a block-diagram model, or check the generated code
// against direct simulation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bcg/model.hpp"
#include "bcg/validate.hpp"

namespace {

struct Options {
  std::string model;
  std::string out;
  std::size_t steps = 10;
  std::uint64_t seed = 1;
  std::string emit = "runtime";
  bool no_dce = false;
  bool no_fold = false;
};

bcg::OptOptions opt_options(const Options& o) {
  bcg::OptOptions opts;
  opts.dce = !o.no_dce;
  opts.fold = !o.no_fold;
  return opts;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("error writing " + path);
}

void print_warnings(const std::vector<std::string>& ws) {
  for (const auto& w : ws) std::cerr << "warning: " << w << "\n";
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_generate(const Options& o) {
  const bcg::Model m = bcg::load_model(o.model);
  bcg::EmitConfig cfg;
  cfg.mode = o.emit == "freestanding" ? bcg::EmitMode::freestanding : bcg::EmitMode::runtime;
  const auto r = bcg::generate(m, cfg, opt_options(o));
  print_warnings(r.warnings);
  write_text(o.out, r.text);
  std::ostream& summary = o.out.empty() || o.out == "-" ? std::cerr : std::cout;
  summary << "statics: " << r.program.statics.size() << ", functions: " << r.program.functions.size()
          << ", instructions: " << r.program.instruction_count() << "\n";
  return 0;
}

int cmd_dump_ir(const Options& o) {
  const auto r = bcg::generate(bcg::load_model(o.model), {}, opt_options(o));
  print_warnings(r.warnings);
  write_text(o.out, bcg::dump_ir(r.program));
  return 0;
}

int cmd_simulate(const Options& o) {
  const bcg::Model m = bcg::prepare(bcg::load_model(o.model));
  const auto ys = bcg::simulate(m, bcg::random_stimuli(m, o.steps, o.seed));
  std::ostringstream os;
  os << "step";
  for (std::size_t k = 0; k < m.outputs.size(); ++k) {
    const std::size_t n = m.outputs[k].shape.rows * m.outputs[k].shape.cols;
    for (std::size_t i = 0; i < n; ++i) os << "\tout" << k + 1 << "[" << i + 1 << "]";
  }
  os << "\n";
  for (std::size_t s = 0; s < ys.size(); ++s) {
    os << s;
    for (const auto& v : ys[s]) {
      for (double x : v.data()) os << "\t" << fmt17(x);
    }
    os << "\n";
  }
  write_text(o.out, os.str());
  return 0;
}

int cmd_validate(const Options& o) {
  const bcg::Model m = bcg::prepare(bcg::load_model(o.model));
  const auto r = bcg::validate_model(m, bcg::random_stimuli(m, o.steps, o.seed), opt_options(o));
  print_warnings(r.gen.warnings);
  std::cout << "steps: " << o.steps << ", elements compared: " << r.cmp.compared << "\n"
            << "max abs deviation: " << fmt17(r.cmp.max_abs) << "\n"
            << "max rel deviation: " << fmt17(r.cmp.max_rel) << "\n";
  if (!r.cmp.ok) {
    std::cout << "FAIL: " << r.cmp.first_diff << "\n";
    return 1;
  }
  std::cout << "OK\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-diagram C code generator"};
  app.require_subcommand(1);
  Options o;

  auto model_arg = [&](CLI::App* c) { c->add_option("model", o.model, "Model JSON file")->required()->check(CLI::ExistingFile); };
  auto opt_flags = [&](CLI::App* c) {
    c->add_flag("--no-dce", o.no_dce, "Keep dead code and unused statics");
    c->add_flag("--no-fold", o.no_fold, "Skip constant folding");
  };
  auto run_flags = [&](CLI::App* c, std::size_t default_steps) {
    c->add_option("--steps", o.steps, "Number of steps (default " + std::to_string(default_steps) + ")")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--seed", o.seed, "Seed for the random input stimuli (default 1)");
    c->preparse_callback([&o, default_steps](std::size_t) { o.steps = default_steps; });
  };

  auto* gen = app.add_subcommand("generate", "Write the C translation unit");
  model_arg(gen);
  gen->add_option("--out", o.out, "Output file (default stdout)");
  gen->add_option("--emit", o.emit, "runtime or freestanding")->check(CLI::IsMember({"runtime", "freestanding"}));
  opt_flags(gen);

  auto* sim = app.add_subcommand("simulate", "Simulate on random inputs and print the outputs");
  model_arg(sim);
  sim->add_option("--out", o.out, "Output file (default stdout)");
  run_flags(sim, 10);
  auto* val = app.add_subcommand("validate", "Compare simulation with the generated code under the IR interpreter");
  model_arg(val);
  run_flags(val, 100);
  opt_flags(val);
  auto* dump = app.add_subcommand("dump-ir", "Print the optimized IR");
  model_arg(dump);
  dump->add_option("--out", o.out, "Output file (default stdout)");
  opt_flags(dump);

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return cmd_generate(o);
    if (sim->parsed()) return cmd_simulate(o);
    if (val->parsed()) return cmd_validate(o);
    if (dump->parsed()) return cmd_dump_ir(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
