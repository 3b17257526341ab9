#include "bcg/matval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <utility>

namespace bcg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DtypeMismatch: return "DtypeMismatch";
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::UnknownName: return "UnknownName";
    case ErrorCode::UnbalancedFunction: return "UnbalancedFunction";
    case ErrorCode::NestedFunction: return "NestedFunction";
    case ErrorCode::NoOpenFunction: return "NoOpenFunction";
    case ErrorCode::MalformedIR: return "MalformedIR";
    case ErrorCode::UnsupportedInstr: return "UnsupportedInstr";
    case ErrorCode::SymbolicCondition: return "SymbolicConditionError";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ArityViolation: return "ArityViolation";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::Undetermined: return "Undetermined";
    case ErrorCode::AlgebraicLoop: return "AlgebraicLoop";
    case ErrorCode::UnboundName: return "UnboundName";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
  }
  return "Error";
}

std::string_view dtype_name(Dtype d) {
  switch (d) {
    case Dtype::f64: return "f64";
    case Dtype::boolean: return "bool";
    case Dtype::i8: return "i8";
    case Dtype::i16: return "i16";
    case Dtype::i32: return "i32";
    case Dtype::u8: return "u8";
    case Dtype::u16: return "u16";
    case Dtype::u32: return "u32";
  }
  return "?";
}

std::optional<Dtype> parse_dtype(std::string_view s) {
  for (Dtype d : {Dtype::f64, Dtype::boolean, Dtype::i8, Dtype::i16, Dtype::i32, Dtype::u8, Dtype::u16,
                  Dtype::u32}) {
    if (dtype_name(d) == s) return d;
  }
  if (s == "double") return Dtype::f64;
  if (s == "int32") return Dtype::i32;
  return std::nullopt;
}

bool is_integer(Dtype d) { return bit_width(d) != 0; }

bool is_signed_integer(Dtype d) { return d == Dtype::i8 || d == Dtype::i16 || d == Dtype::i32; }

int bit_width(Dtype d) {
  switch (d) {
    case Dtype::i8:
    case Dtype::u8: return 8;
    case Dtype::i16:
    case Dtype::u16: return 16;
    case Dtype::i32:
    case Dtype::u32: return 32;
    default: return 0;
  }
}

std::string shape_string(Shape s) { return std::to_string(s.rows) + "x" + std::to_string(s.cols); }

namespace {

bool representable(Dtype d, double v) {
  if (d == Dtype::f64) return true;
  if (d == Dtype::boolean) return v == 0.0 || v == 1.0;
  if (v != std::trunc(v)) return false;
  const int w = bit_width(d);
  if (is_signed_integer(d)) {
    const double lo = -std::ldexp(1.0, w - 1);
    return v >= lo && v < -lo;
  }
  return v >= 0 && v < std::ldexp(1.0, w);
}

double wrap_bits(Dtype d, std::uint64_t u) {
  const int w = bit_width(d);
  const std::uint64_t mask = (std::uint64_t{1} << w) - 1;
  u &= mask;
  if (is_signed_integer(d) && (u >> (w - 1)) != 0) {
    return static_cast<double>(static_cast<std::int64_t>(u) - static_cast<std::int64_t>(mask) - 1);
  }
  return static_cast<double>(u);
}

std::int64_t to_i64(double v) { return static_cast<std::int64_t>(v); }

void require_same_dtype(const MatValue& a, const MatValue& b, std::string_view what) {
  if (a.dtype() != b.dtype()) {
    throw Error(ErrorCode::DtypeMismatch, std::string(what) + ": " + std::string(dtype_name(a.dtype())) +
                                              " vs " + std::string(dtype_name(b.dtype())));
  }
}

void require_arith(Dtype d, std::string_view what) {
  if (d == Dtype::boolean) {
    throw Error(ErrorCode::DtypeMismatch, std::string(what) + " on bool requires an explicit conversion");
  }
}

void require_f64(Dtype d, std::string_view what) {
  if (d != Dtype::f64) {
    throw Error(ErrorCode::DtypeMismatch, std::string(what) + " requires f64, got " + std::string(dtype_name(d)));
  }
}

template <class F>
MatValue broadcast_apply(const MatValue& a, const MatValue& b, Dtype out, F&& f) {
  const Shape s = broadcast_shape(a.shape(), b.shape());
  std::vector<double> data(s.numel());
  const bool sa = a.is_scalar() && !(a.shape() == s);
  const bool sb = b.is_scalar() && !(b.shape() == s);
  for (std::size_t k = 0; k < data.size(); ++k) {
    data[k] = f(a.at(sa ? 0 : k), b.at(sb ? 0 : k));
  }
  return MatValue(out, s.rows, s.cols, std::move(data));
}

}  // namespace

MatValue::MatValue(Dtype dtype, std::size_t rows, std::size_t cols)
    : dtype_(dtype), rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

MatValue::MatValue(Dtype dtype, std::size_t rows, std::size_t cols, std::vector<double> col_major)
    : dtype_(dtype), rows_(rows), cols_(cols), data_(std::move(col_major)) {
  if (data_.size() != rows * cols) {
    throw Error(ErrorCode::ShapeMismatch, "data length " + std::to_string(data_.size()) + " does not match " +
                                              shape_string({rows, cols}));
  }
  for (double v : data_) {
    if (!representable(dtype, v)) {
      std::ostringstream os;
      os.precision(17);
      os << v << " is not representable as " << dtype_name(dtype);
      throw Error(ErrorCode::InvalidValue, os.str());
    }
  }
}

MatValue MatValue::scalar(double v, Dtype dtype) { return MatValue(dtype, 1, 1, {v}); }

MatValue MatValue::from_rows(std::size_t rows, std::size_t cols, std::initializer_list<double> row_major,
                             Dtype dtype) {
  return from_rows(rows, cols, std::span<const double>(row_major.begin(), row_major.size()), dtype);
}

MatValue MatValue::from_rows(std::size_t rows, std::size_t cols, std::span<const double> row_major, Dtype dtype) {
  if (row_major.size() != rows * cols) {
    throw Error(ErrorCode::ShapeMismatch, "row-major literal has " + std::to_string(row_major.size()) +
                                              " entries, expected " + shape_string({rows, cols}));
  }
  std::vector<double> data(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) data[i + rows * j] = row_major[i * cols + j];
  }
  return MatValue(dtype, rows, cols, std::move(data));
}

MatValue MatValue::filled(Dtype dtype, Shape shape, double v) {
  return MatValue(dtype, shape.rows, shape.cols, std::vector<double>(shape.numel(), v));
}

MatValue MatValue::identity(std::size_t n, Dtype dtype) {
  std::vector<double> data(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) data[i + n * i] = 1.0;
  return MatValue(dtype, n, n, std::move(data));
}

MatValue MatValue::diag(std::initializer_list<double> entries) {
  const std::size_t n = entries.size();
  std::vector<double> data(n * n, 0.0);
  std::size_t i = 0;
  for (double e : entries) {
    data[i + n * i] = e;
    ++i;
  }
  return MatValue(Dtype::f64, n, n, std::move(data));
}

MatValue MatValue::reshaped(std::size_t rows, std::size_t cols) const {
  return MatValue(dtype_, rows, cols, data_);
}

std::string to_string(const MatValue& v) {
  std::ostringstream os;
  os.precision(17);
  os << dtype_name(v.dtype()) << "[";
  for (std::size_t i = 0; i < v.rows(); ++i) {
    if (i) os << ";";
    for (std::size_t j = 0; j < v.cols(); ++j) {
      if (j) os << " ";
      os << v(i, j);
    }
  }
  os << "]";
  return os.str();
}

std::string_view op_symbol(BinOp op) {
  switch (op) {
    case BinOp::add: return "+";
    case BinOp::sub: return "-";
    case BinOp::mul_elem: return "*";
    case BinOp::div_elem: return "/";
  }
  return "?";
}

std::string_view op_symbol(CmpOp op) {
  switch (op) {
    case CmpOp::eq: return "==";
    case CmpOp::ne: return "!=";
    case CmpOp::lt: return "<";
    case CmpOp::le: return "<=";
    case CmpOp::gt: return ">";
    case CmpOp::ge: return ">=";
  }
  return "?";
}

std::string_view fn_name(MathFn fn) {
  switch (fn) {
    case MathFn::sqrt: return "sqrt";
    case MathFn::sin: return "sin";
    case MathFn::cos: return "cos";
    case MathFn::atan2: return "atan2";
  }
  return "?";
}

double wrap_to(Dtype d, double v) {
  if (d == Dtype::f64) return v;
  if (d == Dtype::boolean) return v != 0.0 ? 1.0 : 0.0;
  return wrap_bits(d, static_cast<std::uint64_t>(to_i64(v)));
}

double scalar_binop(BinOp op, Dtype d, double a, double b) {
  if (d == Dtype::f64) {
    switch (op) {
      case BinOp::add: return a + b;
      case BinOp::sub: return a - b;
      case BinOp::mul_elem: return a * b;
      case BinOp::div_elem: return a / b;
    }
  }
  require_arith(d, op_symbol(op));
  const auto ua = static_cast<std::uint64_t>(to_i64(a));
  const auto ub = static_cast<std::uint64_t>(to_i64(b));
  switch (op) {
    case BinOp::add: return wrap_bits(d, ua + ub);
    case BinOp::sub: return wrap_bits(d, ua - ub);
    case BinOp::mul_elem: return wrap_bits(d, ua * ub);
    case BinOp::div_elem:
      if (b == 0.0) throw Error(ErrorCode::DivisionByZero, "integer division by zero");
      return wrap_bits(d, static_cast<std::uint64_t>(to_i64(a) / to_i64(b)));
  }
  return 0.0;
}

double scalar_negate(Dtype d, double a) {
  if (d == Dtype::f64) return -a;
  require_arith(d, "unary -");
  return wrap_bits(d, std::uint64_t{0} - static_cast<std::uint64_t>(to_i64(a)));
}

bool scalar_compare(CmpOp op, double a, double b) {
  switch (op) {
    case CmpOp::eq: return a == b;
    case CmpOp::ne: return a != b;
    case CmpOp::lt: return a < b;
    case CmpOp::le: return a <= b;
    case CmpOp::gt: return a > b;
    case CmpOp::ge: return a >= b;
  }
  return false;
}

double scalar_convert(double v, Dtype to) {
  if (to == Dtype::f64) return v;
  if (to == Dtype::boolean) return v != 0.0 ? 1.0 : 0.0;
  if (std::isnan(v)) return 0.0;
  double t = std::trunc(v);
  constexpr double lim = 9.2233720368547748e18;
  t = std::clamp(t, -lim, lim - 2048.0);
  return wrap_bits(to, static_cast<std::uint64_t>(static_cast<std::int64_t>(t)));
}

double scalar_math(MathFn fn, double a, double b) {
  switch (fn) {
    case MathFn::sqrt: return std::sqrt(a);
    case MathFn::sin: return std::sin(a);
    case MathFn::cos: return std::cos(a);
    case MathFn::atan2: return std::atan2(a, b);
  }
  return 0.0;
}

Shape broadcast_shape(Shape a, Shape b) {
  if (a == b) return a;
  if (a.is_scalar()) return b;
  if (b.is_scalar()) return a;
  throw Error(ErrorCode::ShapeMismatch, "cannot broadcast " + shape_string(a) + " with " + shape_string(b));
}

Shape matmul_shape(Shape a, Shape b) {
  if (a.is_scalar()) return b;
  if (b.is_scalar()) return a;
  if (a.cols != b.rows) {
    throw Error(ErrorCode::ShapeMismatch, "matrix product " + shape_string(a) + " * " + shape_string(b));
  }
  return {a.rows, b.cols};
}

MatValue elem_binop(BinOp op, const MatValue& a, const MatValue& b) {
  require_same_dtype(a, b, op_symbol(op));
  require_arith(a.dtype(), op_symbol(op));
  const Dtype d = a.dtype();
  return broadcast_apply(a, b, d, [&](double x, double y) { return scalar_binop(op, d, x, y); });
}

MatValue negate(const MatValue& a) {
  require_arith(a.dtype(), "unary -");
  std::vector<double> data(a.numel());
  for (std::size_t k = 0; k < data.size(); ++k) data[k] = scalar_negate(a.dtype(), a.at(k));
  return MatValue(a.dtype(), a.rows(), a.cols(), std::move(data));
}

MatValue matmul(const MatValue& a, const MatValue& b) {
  require_same_dtype(a, b, "*");
  require_arith(a.dtype(), "*");
  if (a.is_scalar() || b.is_scalar()) return elem_binop(BinOp::mul_elem, a, b);
  const Shape s = matmul_shape(a.shape(), b.shape());
  const Dtype d = a.dtype();
  std::vector<double> data(s.numel());
  for (std::size_t j = 0; j < s.cols; ++j) {
    for (std::size_t i = 0; i < s.rows; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) {
        acc = scalar_binop(BinOp::add, d, acc, scalar_binop(BinOp::mul_elem, d, a(i, k), b(k, j)));
      }
      data[i + s.rows * j] = acc;
    }
  }
  return MatValue(d, s.rows, s.cols, std::move(data));
}

MatValue transpose(const MatValue& a) {
  std::vector<double> data(a.numel());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) data[j + a.cols() * i] = a(i, j);
  }
  return MatValue(a.dtype(), a.cols(), a.rows(), std::move(data));
}

MatValue concat_rows(const MatValue& a, const MatValue& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  require_same_dtype(a, b, "[;]");
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch,
                "row concatenation of " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
  const std::size_t rows = a.rows() + b.rows();
  std::vector<double> data(rows * a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t i = 0; i < a.rows(); ++i) data[i + rows * j] = a(i, j);
    for (std::size_t i = 0; i < b.rows(); ++i) data[a.rows() + i + rows * j] = b(i, j);
  }
  return MatValue(a.dtype(), rows, a.cols(), std::move(data));
}

MatValue concat_cols(const MatValue& a, const MatValue& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  require_same_dtype(a, b, "[,]");
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::ShapeMismatch,
                "column concatenation of " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
  std::vector<double> data(a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  return MatValue(a.dtype(), a.rows(), a.cols() + b.cols(), std::move(data));
}

MatValue convert(const MatValue& a, Dtype d) {
  if (a.dtype() == d) return a;
  std::vector<double> data(a.numel());
  for (std::size_t k = 0; k < data.size(); ++k) data[k] = scalar_convert(a.at(k), d);
  return MatValue(d, a.rows(), a.cols(), std::move(data));
}

MatValue sum_all(const MatValue& a) {
  require_arith(a.dtype(), "sum");
  double acc = 0.0;
  for (double v : a.data()) acc = scalar_binop(BinOp::add, a.dtype(), acc, v);
  return MatValue::scalar(acc, a.dtype());
}

MatValue compare(CmpOp op, const MatValue& a, const MatValue& b) {
  require_same_dtype(a, b, op_symbol(op));
  return broadcast_apply(a, b, Dtype::boolean,
                         [&](double x, double y) { return scalar_compare(op, x, y) ? 1.0 : 0.0; });
}

double lu_inverse_raw(std::span<double> res, std::span<const double> a, std::size_t n) {
  std::vector<double> w(a.begin(), a.end());
  std::vector<std::size_t> perm(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  double min_pivot = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::fabs(w[k + n * k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::fabs(w[i + n * k]) > best) {
        best = std::fabs(w[i + n * k]);
        p = i;
      }
    }
    min_pivot = std::min(min_pivot, best);
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(w[k + n * j], w[p + n * j]);
      std::swap(perm[k], perm[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      w[i + n * k] = w[i + n * k] / w[k + n * k];
      for (std::size_t j = k + 1; j < n; ++j) w[i + n * j] = w[i + n * j] - w[i + n * k] * w[k + n * j];
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < n; ++i) y[i] = perm[i] == c ? 1.0 : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) y[i] = y[i] - w[i + n * j] * y[j];
    }
    for (std::size_t ii = n; ii-- > 0;) {
      for (std::size_t j = ii + 1; j < n; ++j) y[ii] = y[ii] - w[ii + n * j] * y[j];
      y[ii] = y[ii] / w[ii + n * ii];
    }
    for (std::size_t i = 0; i < n; ++i) res[i + n * c] = y[i];
  }
  return min_pivot;
}

MatValue invert(const MatValue& a) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::NonSquare, "Division by non square matrix not supported.");
  require_f64(a.dtype(), "inv");
  const std::size_t n = a.rows();
  if (n == 0) return a;
  if (n == 1) {
    if (std::fabs(a.at(0)) < 1e-300) throw Error(ErrorCode::Singular, "inverse of zero scalar");
    return MatValue::scalar(1.0 / a.at(0));
  }
  if (n == 2) {
    const double det = a.at(0) * a.at(3) - a.at(2) * a.at(1);
    if (std::fabs(det) < 1e-300) throw Error(ErrorCode::Singular, "2x2 determinant below 1e-300");
    std::vector<double> adj = {a.at(3), -a.at(1), -a.at(2), a.at(0)};
    for (double& v : adj) v = v / det;
    return MatValue(Dtype::f64, 2, 2, std::move(adj));
  }
  double maxabs = 0.0;
  for (double v : a.data()) maxabs = std::max(maxabs, std::fabs(v));
  std::vector<double> res(n * n);
  const double min_pivot = lu_inverse_raw(res, a.data(), n);
  if (!(min_pivot >= 1e-12 * maxabs) || maxabs == 0.0) {
    throw Error(ErrorCode::Singular, "LU pivot below 1e-12 * max|A|");
  }
  return MatValue(Dtype::f64, n, n, std::move(res));
}

MatValue elem_math(MathFn fn, const MatValue& a) {
  require_f64(a.dtype(), fn_name(fn));
  if (fn == MathFn::atan2) throw Error(ErrorCode::InvalidParameter, "atan2 takes two arguments");
  std::vector<double> data(a.numel());
  for (std::size_t k = 0; k < data.size(); ++k) data[k] = scalar_math(fn, a.at(k));
  return MatValue(Dtype::f64, a.rows(), a.cols(), std::move(data));
}

MatValue elem_math(MathFn fn, const MatValue& a, const MatValue& b) {
  if (fn != MathFn::atan2) throw Error(ErrorCode::InvalidParameter, std::string(fn_name(fn)) + " takes one argument");
  require_f64(a.dtype(), "atan2");
  require_f64(b.dtype(), "atan2");
  return broadcast_apply(a, b, Dtype::f64, [](double y, double x) { return std::atan2(y, x); });
}

}  // namespace bcg
