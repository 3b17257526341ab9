#include <functional>

#include "bcg/blocks.hpp"
#include "bcg/directives.hpp"
#include "doctest.h"

using namespace bcg;

namespace {

BlockRecord record(int id, std::vector<BVar> inputs, std::map<std::string, MatValue> params = {}) {
  BlockRecord b;
  b.id = id;
  b.n_in = inputs.size();
  b.io = std::move(inputs);
  b.params = std::move(params);
  return b;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no throw");
  return ErrorCode::InvalidValue;
}

}  // namespace

TEST_CASE("summation signs") {
  auto b = record(4, {BVar(5.0), BVar(2.0)}, {{"p2", MatValue::from_rows(2, 1, {1, -1})}});
  summation(b, Flag::output);
  CHECK(b.out(1).value().at(0) == 3);

  auto one = record(4, {BVar(MatValue::from_rows(3, 1, {1, 2, 3}))}, {{"p2", MatValue::scalar(-1)}});
  summation(one, Flag::output);
  CHECK(one.out(1).value().at(0) == -6);

  auto bad = record(9, {BVar(5.0), BVar(2.0)}, {{"p2", MatValue::from_rows(2, 1, {1, 0})}});
  try {
    summation(bad, Flag::output);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidParameter);
    CHECK(std::string(e.what()).find("wrong sign: 0") != std::string::npos);
  }
}

TEST_CASE("gain is a matrix product with the converted parameter") {
  auto b = record(3, {BVar(MatValue::from_rows(2, 1, {1, 2}))}, {{"p1", MatValue::from_rows(2, 2, {0, 1, 1, 0})}});
  gain(b, Flag::output);
  CHECK(b.out(1).value() == MatValue::from_rows(2, 1, {2, 1}));

  auto w = record(3, {BVar(MatValue::scalar(1, Dtype::i8))}, {{"p1", MatValue::scalar(300)}});
  gain(w, Flag::output);
  CHECK(w.out(1).value() == MatValue::scalar(44, Dtype::i8));
  CHECK(w.warnings.size() == 1);
}

TEST_CASE("relational operator codes") {
  const double want[6] = {0, 1, 1, 1, 0, 0};  // 1 vs 2: ==, ~=, <, <=, >, >=
  for (int code = 0; code < 6; ++code) {
    auto b = record(2, {BVar(1.0), BVar(2.0)}, {{"op", MatValue::scalar(code)}});
    relational_op(b, Flag::output);
    CHECK(b.out(1).value().at(0) == want[code]);
    CHECK(b.out(1).dtype() == Dtype::boolean);
  }
  auto bad = record(2, {BVar(1.0), BVar(2.0)}, {{"op", MatValue::scalar(6)}});
  CHECK(code_of([&] { relational_op(bad, Flag::output); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("unit delay: each flag touches only its own slots") {
  auto b = record(1, {BVar(MatValue::from_rows(2, 1, {7, 8}))}, {{"p1", MatValue::scalar(3)}});
  unit_delay(b, Flag::init);
  REQUIRE(b.state.size() == 1);
  CHECK(b.state[0].value() == MatValue::from_rows(2, 1, {3, 3}));
  CHECK(b.n_out() == 0);

  unit_delay(b, Flag::output);
  CHECK(b.out(1).value() == MatValue::from_rows(2, 1, {3, 3}));
  CHECK(b.state[0].value() == MatValue::from_rows(2, 1, {3, 3}));
  CHECK(b.in(1).value() == MatValue::from_rows(2, 1, {7, 8}));

  b.out(1) = BVar(MatValue::from_rows(2, 1, {-1, -1}));
  unit_delay(b, Flag::state);
  CHECK(b.state[0].value() == MatValue::from_rows(2, 1, {7, 8}));
  CHECK(b.out(1).value() == MatValue::from_rows(2, 1, {-1, -1}));

  auto mis = record(1, {BVar(MatValue::from_rows(2, 1, {7, 8}))}, {{"p1", MatValue::from_rows(3, 1, {1, 2, 3})}});
  CHECK(code_of([&] { unit_delay(mis, Flag::init); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("stateless blocks ignore the state and init flags") {
  auto b = record(4, {BVar(5.0), BVar(2.0)});
  summation(b, Flag::state);
  summation(b, Flag::init);
  mux(b, Flag::state);
  CHECK(b.n_out() == 0);
  CHECK(b.state.empty());
}

TEST_CASE("mux stacks its inputs") {
  auto b = record(5, {BVar(1.0), BVar(MatValue::from_rows(2, 1, {2, 3}))});
  mux(b, Flag::output);
  CHECK(b.out(1).value() == MatValue::from_rows(3, 1, {1, 2, 3}));
}

TEST_CASE("if-then-else: numeric decides, symbolic records an if") {
  auto pos = record(4, {BVar(2.0)});
  ifthenelse(pos, Flag::output);
  CHECK(pos.taken == 1);
  auto zero = record(4, {BVar(0.0)});
  ifthenelse(zero, Flag::output);
  CHECK(zero.taken == 2);

  TraceContext ctx = codegen_init();
  auto sym = record(4, {symbolics(ctx, MatValue::scalar(0), "c")});
  sym.ctx = &ctx;
  sym.branches = std::make_pair(CallTarget{"t", {}}, CallTarget{"e", {}});
  ifthenelse(sym, Flag::output);
  REQUIRE_FALSE(ctx.toplevel().body.empty());
  CHECK(std::holds_alternative<IfExpr>(ctx.toplevel().body.back()));
}

TEST_CASE("select forwards the active input") {
  auto b = record(6, {BVar(10.0), BVar(20.0)});
  b.active = 2;
  select_block(b, Flag::output);
  CHECK(b.out(1).value().at(0) == 20);
  auto none = record(6, {BVar(10.0), BVar(20.0)});
  CHECK(code_of([&] { select_block(none, Flag::output); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("SciBlk behaviors") {
  CHECK(find_sciblk("ekf_tracker"));
  CHECK_FALSE(find_sciblk("nope"));
  register_sciblk("twice", [](BlockRecord& b, Flag f) {
    if (f == Flag::output) b.out(1) = b.in(1) * 2.0;
  });
  auto b = record(7, {BVar(4.0)});
  sciblk(b, Flag::output, *find_sciblk("twice"));
  CHECK(b.out(1).value().at(0) == 8);

  // a behavior that branches on its input cannot be traced
  const Behavior branchy = [](BlockRecord& r, Flag f) {
    if (f == Flag::output) r.out(1) = (r.in(1) > 0.0) ? r.in(1) : -r.in(1);
  };
  TraceContext ctx = codegen_init();
  auto s = record(12, {symbolics(ctx, MatValue::scalar(0), "x")});
  s.ctx = &ctx;
  try {
    sciblk(s, Flag::output, branchy);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SymbolicCondition);
    CHECK(std::string(e.what()).find("block 12") != std::string::npos);
  }
}

TEST_CASE("kind names") {
  CHECK(parse_kind("UnitDelay") == BlockKind::UnitDelay);
  CHECK(kind_name(BlockKind::RelationalOp) == "RelationalOp");
  CHECK_FALSE(parse_kind("Integrator"));
  CHECK(traits(BlockKind::UnitDelay).stateful);
  CHECK_FALSE(traits(BlockKind::UnitDelay).feedthrough);
  CHECK(traits(BlockKind::Gain).feedthrough);
}
