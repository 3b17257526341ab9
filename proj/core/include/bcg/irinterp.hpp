#pragma once

#include <deque>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "bcg/ir.hpp"

namespace bcg {

/// Executes optimized IR with the same scalar kernels the tracer folds with,
/// so interpreted results equal compiled C (integer ops wrap, f64 is IEEE).
class Machine {
 public:
  explicit Machine(Program prog);

  const Program& program() const { return prog_; }

  /// Runs the program's initialize function (entry init, or "initialize").
  void run_init();
  /// Runs `name` with the given arguments; returns them after the call.
  std::vector<MatValue> run_function(const std::string& name, std::vector<MatValue> args);
  /// Per step: output function, record outputs, state function. Port buffers
  /// persist across steps. Does not call run_init.
  std::vector<std::vector<MatValue>> run_steps(const std::vector<std::vector<MatValue>>& inputs);

  /// Executes a function body with some locals preset (others start at their
  /// initializer or zero) and returns every local's final value.
  std::map<std::string, MatValue> run_body(const Function& fn, const std::map<std::string, MatValue>& preset,
                                           std::vector<MatValue>* args = nullptr);

  MatValue static_value(const std::string& name) const;
  std::map<std::string, MatValue> statics() const;

 private:
  struct Slot {
    Dtype dtype = Dtype::f64;
    Shape shape;
    std::vector<double> data;
  };
  struct Frame {
    const Function* fn = nullptr;
    std::unordered_map<std::string, Slot*> names;
  };

  void exec(const Function& fn, std::vector<Slot*> params, std::map<std::string, MatValue>* locals_out,
            const std::map<std::string, MatValue>* preset);
  void exec_instr(const Instr& in, Frame& fr);
  void call(const CallTarget& t, Frame& fr);
  double eval(const Expr& e, const Frame& fr) const;
  Slot& lookup(const std::string& name, const Frame& fr) const;
  static Slot slot_of(const MatValue& v);
  static MatValue value_of(const Slot& s);

  Program prog_;
  std::unordered_map<std::string, Slot> statics_;
  int depth_ = 0;
};

}  // namespace bcg
