#include <cstdlib>

#include "bcg/cemit.hpp"
#include "bcg/model.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace bcg;
using namespace testing_support;

namespace {

Function one_of_each() {
  Function f;
  f.name = "f";
  f.params = {{"y", Dtype::f64, {3, 1}}, {"s", Dtype::f64, {1, 1}}};
  Decl t;
  t.var = {"t", Dtype::f64, {3, 1}};
  t.init = MatValue::from_rows(3, 1, {1, 2, 3});
  f.locals = {t};
  f.body = {Annotation{"note"},
            Copy{"y", "t", 3},
            SetElement{"y", 1, ex::binary(BinOp::mul_elem, ex::elem("t", 0, Dtype::f64), ex::lit(-2, Dtype::f64))},
            SetElement{"s", 0, ex::elem("y", 2, Dtype::f64)}};
  return f;
}

}  // namespace

TEST_CASE("C types and literals") {
  CHECK(c_type(Dtype::f64) == "double");
  CHECK(c_type(Dtype::i32) == "int32_t");
  CHECK(c_type(Dtype::u8) == "uint8_t");
  CHECK(c_literal(3, Dtype::f64) == "3");
  CHECK(c_literal(0.1, Dtype::f64) == "0.1");
  CHECK(std::strtod(c_literal(1e300, Dtype::f64).c_str(), nullptr) == 1e300);
  CHECK(c_literal(-2147483648.0, Dtype::i32) == "(-2147483647-1)");
  CHECK(c_literal(7, Dtype::u32) == "7u");
  CHECK(c_literal(1, Dtype::boolean) == "TRUE");
  // round trip through the shortest spelling
  for (double v : {0.1, 1.0 / 3.0, -2.5e-12, 6.02214076e23}) {
    CHECK(std::strtod(c_literal(v, Dtype::f64).c_str(), nullptr) == v);
  }
}

TEST_CASE("instruction printing") {
  const auto lines = code_printer_c(one_of_each(), {});
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  CHECK(count_of(text, "double  t[]={   1,   2,   3 };") + count_of(text, "double t[]={ 1, 2, 3 };") == 1);
  CHECK(count_of(text, "/* note*/") == 1);
  CHECK(count_of(text, "memcpy(y,t,3*sizeof(double));") == 1);
  CHECK(count_of(text, "y[1]=") == 1);
  // a 1x1 target prints as a scalar store through the pointer
  CHECK(count_of(text, "*s=(y[2]);") == 1);
}

TEST_CASE("helpers are emitted only when called") {
  const auto k = generate(fixture("kalman"));
  CHECK(count_of(k.text, "void mult(") == 1);
  CHECK(count_of(k.text, "void quote(") == 1);
  const auto f = generate(fixture("fig2"));
  CHECK(count_of(f.text, "void mult(") == 0);
  CHECK(count_of(f.text, "void quote(") == 0);
  CHECK(emit_helper("minv").find("void minv(") != std::string::npos);
}

TEST_CASE("runtime and freestanding entry points") {
  const Model m = fixture("fig2");
  const auto rt = generate(m);
  CHECK(rt.text.find("#include <scicos/scicos_block4.h>") != std::string::npos);
  CHECK(rt.text.find("void toto1000(scicos_block *block,int flag)") != std::string::npos);
  CHECK(rt.text.find("GetRealInPortPtrs(block,1)") != std::string::npos);

  EmitConfig cfg;
  cfg.mode = EmitMode::freestanding;
  const auto fs = generate(m, cfg);
  CHECK(fs.text.find("scicos") == std::string::npos);
  CHECK(fs.text.find("void toto1000(int flag,double *inouts1,double *inouts2)") != std::string::npos);
  // same body either way
  CHECK(canon(function_text(rt.text, "updateOutput10001")) == canon(function_text(fs.text, "updateOutput10001")));
}

TEST_CASE("integer ports use the integer accessors") {
  const auto c = generate(fixture("coding"));
  CHECK(c.text.find("Getint32InPortPtrs(block,1)") != std::string::npos);
  CHECK(c.text.find("int32_t *inouts1") != std::string::npos);
}

TEST_CASE("emission is deterministic") {
  for (const auto& name : fixture_names()) {
    CHECK(generate(fixture(name)).text == generate(fixture(name)).text);
  }
}
