#include "bcg/directives.hpp"
#include "bcg/irinterp.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace bcg;
using testing_support::count_of;

TEST_CASE("persistents: first insert is the default, later ones store") {
  TraceContext ctx = codegen_init();
  auto st = persistent_create();
  st = persistent_insert(ctx, st, "p", BVar(MatValue::from_rows(1, 2, {1, 2})));
  start_function(ctx, "f", inouts());
  const BVar p = persistent_extract(ctx, st, "p");
  CHECK(p.is_symbolic());
  st = persistent_insert(ctx, st, "p", p * 2.0);
  end_function(ctx, "f");
  const Program prog = finalize_program(ctx);
  REQUIRE(prog.find_static("p"));
  CHECK(*prog.find_static("p")->init == MatValue::from_rows(1, 2, {1, 2}));

  Machine m(prog);
  m.run_function("f", {});
  m.run_function("f", {});
  CHECK(m.static_value("p") == MatValue::from_rows(1, 2, {4, 8}));
  m.run_init();
  CHECK(m.static_value("p") == MatValue::from_rows(1, 2, {1, 2}));
}

TEST_CASE("persistent store checks dtype and shape") {
  TraceContext ctx = codegen_init();
  auto st = persistent_create();
  st = persistent_insert(ctx, st, "p", BVar(MatValue::from_rows(1, 2, {1, 2})));
  CHECK_THROWS_AS(persistent_insert(ctx, st, "p", BVar(3.0)), Error);
  CHECK_THROWS_AS(persistent_insert(ctx, st, "p", BVar(MatValue::from_rows(1, 2, {1, 2}, Dtype::i32))), Error);
  CHECK_THROWS_AS(persistent_extract(ctx, st, "q"), Error);
}

TEST_CASE("finalize refuses an open function") {
  TraceContext ctx = codegen_init();
  start_function(ctx, "f", inouts());
  CHECK_THROWS_AS(finalize_program(ctx), Error);
}

TEST_CASE("if_exp on numeric condition picks a branch; on symbolic records a select") {
  TraceContext ctx = codegen_init();
  CHECK(if_exp(ctx, BVar(1.0), BVar(5.0), BVar(6.0)).value().at(0) == 5);
  CHECK(if_exp(ctx, BVar(0.0), BVar(5.0), BVar(6.0)).value().at(0) == 6);
  const BVar c = symbolics(ctx, MatValue::scalar(0), "c");
  const BVar r = if_exp(ctx, c, BVar(5.0), BVar(6.0));
  CHECK(r.is_symbolic());
}

TEST_CASE("select_exp with a numeric selector") {
  TraceContext ctx = codegen_init();
  const BVar r = select_exp(ctx, BVar(2.0), {BVar(10.0), BVar(20.0), BVar(30.0)});
  CHECK(r.value().at(0) == 20);
  CHECK_THROWS_AS(select_exp(ctx, BVar(4.0), {BVar(10.0)}), Error);
}

TEST_CASE("expand broadcasts a scalar") {
  TraceContext ctx = codegen_init();
  CHECK(expand(ctx, BVar(3.0), 2, 2).value() == MatValue::filled(Dtype::f64, {2, 2}, 3));
  CHECK_THROWS_AS(expand(ctx, BVar(MatValue::from_rows(1, 2, {1, 2})), 2, 2), Error);
}

TEST_CASE("if_cos: numeric condition calls one function, symbolic emits an if") {
  const CallTarget f1{"f1", {}}, f2{"f2", {}};
  {
    TraceContext ctx = codegen_init();
    if_cos(ctx, BVar(1.0), f1, f2);
    REQUIRE(ctx.toplevel().body.size() == 1);
    const auto* c = std::get_if<Call>(&ctx.toplevel().body[0]);
    REQUIRE(c);
    CHECK(c->target.function == "f1");
  }
  {
    TraceContext ctx = codegen_init();
    const BVar x = symbolics(ctx, MatValue::scalar(0), "x");
    if_cos(ctx, x, f1, f2);
    const auto* i = std::get_if<IfExpr>(&ctx.toplevel().body.back());
    REQUIRE(i);
    CHECK(i->then_call.function == "f1");
    CHECK(i->else_call.function == "f2");
  }
}

TEST_CASE("bvarcopy snapshots a symbolic value") {
  TraceContext ctx = codegen_init();
  const BVar x = symbolics(ctx, MatValue::scalar(0), "x");
  const BVar y = bvarcopy(ctx, x);
  CHECK(y.is_symbolic());
  CHECK(y.name() != x.name());
}

TEST_CASE("annotations print as comments") {
  TraceContext ctx = codegen_init();
  auto st = persistent_create();
  st = persistent_insert(ctx, st, "v", BVar(1.0));
  start_function(ctx, "f", inouts());
  put_annotation(ctx, "hello");
  st = persistent_insert(ctx, st, "v", BVar(2.0));
  end_function(ctx, "f");
  const std::string text = codegen_finalize(ctx);
  CHECK(count_of(text, "/* hello*/") == 1);
  CHECK(count_of(text, "v=2;") == 1);
}
