#include <Eigen/Dense>

#include <functional>

#include "bcg/model.hpp"
#include "bcg/validate.hpp"
#include "doctest.h"
#include "ekf_oracle.hpp"
#include "helpers.hpp"

using namespace bcg;
using namespace testing_support;

namespace {

ErrorCode code_of(const std::function<void()>& f, std::string* msg = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (msg) *msg = e.what();
    return e.code();
  }
  FAIL("no throw");
  return ErrorCode::InvalidValue;
}

// one input, one output, blocks and links spliced in
std::string tiny(const std::string& blocks, const std::string& links, const std::string& in = "f64",
                 const std::string& out = "f64") {
  return R"({"block_id": 1200,
    "ports": {"inputs": [{"dtype": ")" + in + R"(", "shape": [1, 1]}],
              "outputs": [{"dtype": ")" + out + R"(", "shape": [1, 1]}]},
    "blocks": [)" + blocks + R"(], "links": [)" + links + "]}";
}

}  // namespace

TEST_CASE("parse rejects malformed models") {
  CHECK(code_of([] { parse_model("{"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_model(tiny(R"({"id": 1, "kind": "Integrator"})", "")); }) == ErrorCode::ParseError);
  CHECK(code_of([] {
          parse_model(tiny(R"({"id": 1, "kind": "Gain", "params": {"p1": 1}}, {"id": 1, "kind": "Gain", "params": {"p1": 1}})",
                           R"({"id": 1, "from": "in.1", "to": ["1.1"]}, {"id": 2, "from": "1.1", "to": ["out.1"]})"));
        }) == ErrorCode::ParseError);
  CHECK(code_of([] {
          parse_model(tiny(R"({"id": 1, "kind": "Gain", "params": {"p1": 1}})",
                           R"({"id": 1, "from": "in.1", "to": ["1.x"]}, {"id": 2, "from": "1.1", "to": ["out.1"]})"));
        }) == ErrorCode::ParseError);
  CHECK(code_of([] { load_model("/nonexistent/model.json"); }) == ErrorCode::ParseError);
}

TEST_CASE("fixtures parse") {
  const Model m = fixture("fig2");
  CHECK(m.block_id == 1000);
  CHECK(m.blocks.size() == 5);
  CHECK(m.links.size() == 6);
  CHECK(m.link(4).from == Endpoint{Endpoint::Kind::block, 4, 1});
  CHECK(m.input_link(4, 2).id == 5);
  const Model c = fixture("coding");
  REQUIRE(c.regions.size() == 1);
  CHECK(c.region_of(5) == &c.regions[0]);
  CHECK(c.region_of(8) == nullptr);
}

TEST_CASE("inference fills every link") {
  const Model m = infer(fixture("fig2"));
  CHECK(m.inferred());
  CHECK(*m.link(6).sig == Signature{Dtype::f64, {2, 1}});
  CHECK(*m.link(4).sig == Signature{Dtype::f64, {1, 1}});
  const Model k = infer(fixture("kalman"));
  for (const auto& l : k.links) CHECK(l.sig.has_value());
}

TEST_CASE("inference conflicts and gaps") {
  std::string msg;
  // an i32 constant on a link declared f64
  const auto conflict = tiny(R"({"id": 1, "kind": "Const", "params": {"p1": {"dtype": "i32", "data": [3]}}},
                                {"id": 2, "kind": "Summation"})",
                             R"({"id": 1, "from": "1.1", "to": ["2.1"], "dtype": "f64", "shape": [1, 1]},
                                {"id": 2, "from": "2.1", "to": ["out.1"]},
                                {"id": 3, "from": "in.1", "to": ["2.2"]})");
  CHECK(code_of([&] { infer(parse_model(conflict)); }, &msg) == ErrorCode::Conflict);
  CHECK(msg.find("link 1") != std::string::npos);

  // two delays feeding each other with nothing declared
  const std::string ports = R"({"block_id": 1300, "ports": {"inputs": [], "outputs": []},)";
  const auto gap = ports + R"("blocks": [{"id": 1, "kind": "UnitDelay"}, {"id": 2, "kind": "UnitDelay"}],
    "links": [{"id": 1, "from": "1.1", "to": ["2.1"]}, {"id": 2, "from": "2.1", "to": ["1.1"]}]})";
  CHECK(code_of([&] { infer(parse_model(gap)); }) == ErrorCode::Undetermined);
}

TEST_CASE("feedthrough cycles are algebraic loops") {
  std::string msg;
  const Model m = load_model(fixture_path("bad/loop.json"));
  CHECK(code_of([&] { schedule(prepare(m)); }, &msg) == ErrorCode::AlgebraicLoop);
  CHECK(msg.find("1") != std::string::npos);
  CHECK(code_of([&] { generate(m); }) == ErrorCode::AlgebraicLoop);
}

TEST_CASE("schedule of the two-delay model") {
  const Schedule s = schedule(prepare(fixture("fig2")));
  CHECK(s.state == std::vector<int>{1, 2});
  // delays first (no feedthrough), then gain before sum and mux
  auto pos = [&](int id) { return std::find(s.output.begin(), s.output.end(), id) - s.output.begin(); };
  CHECK(s.output.size() == 5);
  CHECK(pos(1) < pos(3));
  CHECK(pos(3) < pos(4));
  CHECK(pos(3) < pos(5));
  CHECK(pos(2) < pos(4));
}

TEST_CASE("regions collapse under their if block") {
  const Schedule s = schedule(prepare(fixture("coding")));
  CHECK(std::count(s.output.begin(), s.output.end(), 5) == 0);
  CHECK(std::count(s.output.begin(), s.output.end(), 6) == 0);
  REQUIRE(s.region(4));
  // the only then block is a constant, folded away before scheduling
  CHECK(s.region(4)->then_order.empty());
  CHECK(s.region(4)->select_block == 6);
  CHECK(s.region(4)->else_order.empty());
}

TEST_CASE("constant folding") {
  const auto text = tiny(R"({"id": 1, "kind": "Const", "params": {"p1": 4}},
                             {"id": 2, "kind": "Gain", "params": {"p1": 2.5}},
                             {"id": 3, "kind": "Summation"})",
                         R"({"id": 1, "from": "1.1", "to": ["2.1"]},
                            {"id": 2, "from": "2.1", "to": ["3.1"]},
                            {"id": 3, "from": "in.1", "to": ["3.2"]},
                            {"id": 4, "from": "3.1", "to": ["out.1"]})");
  const Model m = prepare(parse_model(text));
  REQUIRE(m.link(2).constant);
  CHECK(*m.link(2).constant == MatValue::scalar(10));
  CHECK_FALSE(m.link(4).constant);
  const auto r = generate(parse_model(text));
  CHECK(r.text.find("Gain block") == std::string::npos);
  CHECK(r.text.find("(10+*inouts1)") != std::string::npos);
}

TEST_CASE("errors from block behaviors carry the block") {
  std::string msg;
  const auto text = tiny(R"({"id": 7, "kind": "Summation", "params": {"p2": {"rows": 2, "cols": 1, "data": [1, 0]}}})",
                         R"({"id": 1, "from": "in.1", "to": ["7.1", "7.2"]}, {"id": 2, "from": "7.1", "to": ["out.1"]})");
  CHECK(code_of([&] { generate(parse_model(text)); }, &msg) == ErrorCode::InvalidParameter);
  CHECK(msg.find("block 7: wrong sign: 0") != std::string::npos);
}

TEST_CASE("library errors get the block attached") {
  std::string msg;
  const std::string text = R"({"block_id": 1200,
    "ports": {"inputs": [{"dtype": "f64", "shape": [2, 1]}], "outputs": [{"dtype": "f64", "shape": [3, 1]}]},
    "blocks": [{"id": 3, "kind": "Gain", "params": {"p1": {"rows": 3, "cols": 3, "data": [1, 0, 0, 0, 1, 0, 0, 0, 1]}}}],
    "links": [{"id": 1, "from": "in.1", "to": ["3.1"]}, {"id": 2, "from": "3.1", "to": ["out.1"]}]})";
  CHECK(code_of([&] { generate(parse_model(text)); }, &msg) == ErrorCode::ShapeMismatch);
  CHECK(msg.find("block 3 (Gain)") != std::string::npos);
}

TEST_CASE("generated names") {
  const auto n = generated_names(fixture("fig2"));
  CHECK(n.entry == "toto1000");
  CHECK(n.init == "initialize1000");
  CHECK(n.output == "updateOutput10001");
  CHECK(n.state == "updateState10001");
  CHECK(generated_names(fixture("coding")).output == "updateOutput10043");
  CHECK(generated_names(fixture("fig2"), 77).entry == "toto77");
}

TEST_CASE("two-delay model by hand") {
  // y = [z1; u], z1' = z1 - z2, z2' = u, starting from zero
  const Model m = fixture("fig2");
  const std::vector<double> u{1, 2, -3, 0.5, 4};
  std::vector<StepValues> in;
  for (double x : u) in.push_back({MatValue::scalar(x)});
  const auto y = simulate(m, in);
  double z1 = 0, z2 = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    CHECK(y[k][0] == MatValue::from_rows(2, 1, {z1, u[k]}));
    const double n1 = z1 - z2;
    z2 = u[k];
    z1 = n1;
  }
  CHECK(compare_runs(y, run_generated(generate(m).program, in), 0.0).ok);
}

TEST_CASE("counter model by hand") {
  const Model m = fixture("coding");
  const std::vector<int> u{0, 0, 0, 1, 1, 0, 1, 1, 1, 0};
  std::vector<StepValues> in;
  for (int x : u) in.push_back({MatValue::scalar(x, Dtype::i32)});
  const auto y = simulate(m, in);
  // out1 is a counter that resets when the input changes; out2 flags the change
  int prev = 0, counter = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const int changed = u[k] != prev;
    CHECK(y[k][0] == MatValue::scalar(counter, Dtype::i32));
    CHECK(y[k][1] == MatValue::scalar(changed, Dtype::i32));
    counter = changed ? 1 : counter + 1;
    prev = u[k];
  }
  CHECK(compare_runs(y, run_generated(generate(m).program, in), 0.0).ok);
}

TEST_CASE("tracker model against an Eigen filter") {
  const Model m = fixture("kalman");
  const auto in = random_stimuli(prepare(m), 30, 4);
  const auto y = simulate(m, in);
  CHECK(y[0][0] == MatValue::from_rows(4, 1, {-892, 80, 952, 20}));
  EkfState s;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const Eigen::Vector4d x = ekf_step(s, Eigen::Vector2d(in[k][0].at(0), in[k][0].at(1)));
    for (int i = 0; i < 4; ++i) CHECK(y[k][0].at(i) == doctest::Approx(x(i)).epsilon(1e-9));
  }
}

TEST_CASE("simulate checks its inputs") {
  const Model m = fixture("fig2");
  CHECK(code_of([&] { simulate(m, {{}}); }) == ErrorCode::ArityViolation);
  CHECK(code_of([&] { simulate(m, {{MatValue::scalar(1, Dtype::i32)}}); }) == ErrorCode::ShapeMismatch);
}
