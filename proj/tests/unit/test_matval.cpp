#include <cmath>

#include "bcg/matval.hpp"
#include "doctest.h"

using namespace bcg;

TEST_CASE("row-major literals are stored column-major") {
  const auto m = MatValue::from_rows(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(m(0, 2) == 3);
  CHECK(m(1, 0) == 4);
  CHECK(m.at(1) == 4);
  CHECK(m.at(2) == 2);
  CHECK_THROWS_AS(MatValue::from_rows(2, 2, {1, 2, 3}), Error);
}

TEST_CASE("conversion to integers truncates toward zero") {
  const auto v = convert(MatValue::from_rows(1, 2, {1.9, -1.9}), Dtype::i32);
  CHECK(v.dtype() == Dtype::i32);
  CHECK(v == MatValue::from_rows(1, 2, {1, -1}, Dtype::i32));
}

TEST_CASE("integer arithmetic wraps") {
  const auto a = MatValue::scalar(127, Dtype::i8);
  const auto one = MatValue::scalar(1, Dtype::i8);
  CHECK(elem_binop(BinOp::add, a, one).at(0) == -128);
  CHECK(elem_binop(BinOp::sub, MatValue::scalar(0, Dtype::u8), MatValue::scalar(1, Dtype::u8)).at(0) == 255);
  CHECK(negate(MatValue::scalar(-2147483648.0, Dtype::i32)).at(0) == -2147483648.0);
  CHECK_THROWS_AS(elem_binop(BinOp::div_elem, MatValue::scalar(1, Dtype::i32), MatValue::scalar(0, Dtype::i32)),
                  Error);
}

TEST_CASE("mixed dtypes need an explicit conversion") {
  try {
    elem_binop(BinOp::add, MatValue::scalar(1, Dtype::i32), MatValue::scalar(1));
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DtypeMismatch);
  }
}

TEST_CASE("scalars broadcast, other shape mismatches throw") {
  const auto m = MatValue::from_rows(2, 2, {1, 2, 3, 4});
  CHECK(elem_binop(BinOp::mul_elem, m, MatValue::scalar(2)) == MatValue::from_rows(2, 2, {2, 4, 6, 8}));
  CHECK(broadcast_shape({1, 1}, {3, 2}) == Shape{3, 2});
  CHECK_THROWS_AS(broadcast_shape({2, 1}, {1, 2}), Error);
  CHECK_THROWS_AS(matmul_shape({2, 3}, {2, 3}), Error);
}

TEST_CASE("constant-velocity prediction") {
  const auto F = MatValue::from_rows(4, 4, {1, 0.1, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0.1, 0, 0, 0, 1});
  const auto x = MatValue::from_rows(4, 1, {-900, 80, 950, 20});
  CHECK(matmul(F, x) == MatValue::from_rows(4, 1, {-892, 80, 952, 20}));
}

TEST_CASE("transpose and concatenation") {
  const auto a = MatValue::from_rows(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(transpose(a) == MatValue::from_rows(3, 2, {1, 4, 2, 5, 3, 6}));
  const auto r = concat_rows(a, MatValue::from_rows(1, 3, {7, 8, 9}));
  CHECK(r.shape() == Shape{3, 3});
  CHECK(r(2, 1) == 8);
  const auto c = concat_cols(a, MatValue::from_rows(2, 1, {0, -1}));
  CHECK(c(1, 3) == -1);
  CHECK_THROWS_AS(concat_rows(a, MatValue::scalar(1)), Error);
}

TEST_CASE("inverse") {
  // [4 7; 2 6]^-1 = [6 -7; -2 4] / 10
  const auto i2 = invert(MatValue::from_rows(2, 2, {4, 7, 2, 6}));
  CHECK(i2(0, 0) == doctest::Approx(0.6));
  CHECK(i2(0, 1) == doctest::Approx(-0.7));
  CHECK(i2(1, 0) == doctest::Approx(-0.2));
  CHECK(i2(1, 1) == doctest::Approx(0.4));

  const auto a = MatValue::from_rows(3, 3, {2, -1, 0, -1, 2, -1, 0, -1, 2});
  // tridiagonal [2 -1 0; -1 2 -1; 0 -1 2]: inverse is [3 2 1; 2 4 2; 1 2 3] / 4
  const auto ia = invert(a);
  const double want[3][3] = {{0.75, 0.5, 0.25}, {0.5, 1.0, 0.5}, {0.25, 0.5, 0.75}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(ia(i, j) == doctest::Approx(want[i][j]).epsilon(1e-14));

  CHECK_THROWS_AS(invert(MatValue::from_rows(2, 3, {1, 2, 3, 4, 5, 6})), Error);
  CHECK_THROWS_AS(invert(MatValue::from_rows(2, 2, {1, 2, 2, 4})), Error);
  CHECK_THROWS_AS(invert(MatValue::from_rows(3, 3, {1, 2, 3, 2, 4, 6, 0, 0, 1})), Error);
}

TEST_CASE("comparisons produce bools") {
  const auto c = compare(CmpOp::gt, MatValue::from_rows(1, 3, {1, 5, 3}), MatValue::scalar(2));
  CHECK(c.dtype() == Dtype::boolean);
  CHECK(c == MatValue::from_rows(1, 3, {0, 1, 1}, Dtype::boolean));
}

TEST_CASE("sum and elementwise math") {
  CHECK(sum_all(MatValue::from_rows(2, 2, {1, 2, 3, 4})) == MatValue::scalar(10));
  CHECK(elem_math(MathFn::sqrt, MatValue::scalar(9)).at(0) == 3);
  CHECK(elem_math(MathFn::atan2, MatValue::scalar(1), MatValue::scalar(1)).at(0) == std::atan2(1.0, 1.0));
  CHECK_THROWS_AS(elem_math(MathFn::sqrt, MatValue::scalar(4, Dtype::i32)), Error);
}

TEST_CASE("dtype names round trip") {
  for (Dtype d : {Dtype::f64, Dtype::boolean, Dtype::i8, Dtype::i16, Dtype::i32, Dtype::u8, Dtype::u16, Dtype::u32}) {
    CHECK(parse_dtype(dtype_name(d)) == d);
  }
  CHECK_FALSE(parse_dtype("f32"));
  CHECK(bit_width(Dtype::u16) == 16);
  CHECK(is_signed_integer(Dtype::i8));
  CHECK_FALSE(is_signed_integer(Dtype::u8));
}
