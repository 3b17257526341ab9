#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bcg/error.hpp"

namespace bcg {

enum class Dtype { f64, boolean, i8, i16, i32, u8, u16, u32 };

std::string_view dtype_name(Dtype d);
std::optional<Dtype> parse_dtype(std::string_view s);
bool is_integer(Dtype d);
bool is_signed_integer(Dtype d);
int bit_width(Dtype d);  // 0 for f64/bool

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t numel() const { return rows * cols; }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string shape_string(Shape s);

/// A rectangular matrix of one dtype, stored column-major. Elements are held
/// as doubles; every element is exactly representable in the dtype (all of
/// the supported integer widths fit a double mantissa).
class MatValue {
 public:
  MatValue() = default;
  MatValue(Dtype dtype, std::size_t rows, std::size_t cols);
  MatValue(Dtype dtype, std::size_t rows, std::size_t cols, std::vector<double> col_major);

  static MatValue scalar(double v, Dtype dtype = Dtype::f64);
  static MatValue from_rows(std::size_t rows, std::size_t cols, std::initializer_list<double> row_major,
                            Dtype dtype = Dtype::f64);
  static MatValue from_rows(std::size_t rows, std::size_t cols, std::span<const double> row_major,
                            Dtype dtype = Dtype::f64);
  static MatValue zeros(Dtype dtype, Shape shape) { return MatValue(dtype, shape.rows, shape.cols); }
  static MatValue filled(Dtype dtype, Shape shape, double v);
  static MatValue identity(std::size_t n, Dtype dtype = Dtype::f64);
  static MatValue diag(std::initializer_list<double> entries);

  Dtype dtype() const { return dtype_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Shape shape() const { return {rows_, cols_}; }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_scalar() const { return rows_ == 1 && cols_ == 1; }

  // 0-based element access.
  double operator()(std::size_t i, std::size_t j) const { return data_[i + rows_ * j]; }
  double at(std::size_t k) const { return data_[k]; }
  std::span<const double> data() const { return data_; }

  MatValue reshaped(std::size_t rows, std::size_t cols) const;

  friend bool operator==(const MatValue&, const MatValue&) = default;

 private:
  Dtype dtype_ = Dtype::f64;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::string to_string(const MatValue& v);

enum class BinOp { add, sub, mul_elem, div_elem };
enum class CmpOp { eq, ne, lt, le, gt, ge };
enum class MathFn { sqrt, sin, cos, atan2 };

std::string_view op_symbol(BinOp op);
std::string_view op_symbol(CmpOp op);
std::string_view fn_name(MathFn fn);

// Scalar kernels. The matrix operations below and the IR interpreter both
// route element arithmetic through these so that folded, simulated and
// interpreted results agree bit for bit.
double wrap_to(Dtype d, double v);
double scalar_binop(BinOp op, Dtype d, double a, double b);
bool scalar_compare(CmpOp op, double a, double b);
double scalar_convert(double v, Dtype to);
double scalar_math(MathFn fn, double a, double b = 0.0);
double scalar_negate(Dtype d, double a);

MatValue elem_binop(BinOp op, const MatValue& a, const MatValue& b);
MatValue negate(const MatValue& a);
MatValue matmul(const MatValue& a, const MatValue& b);
MatValue transpose(const MatValue& a);
MatValue concat_rows(const MatValue& a, const MatValue& b);
MatValue concat_cols(const MatValue& a, const MatValue& b);
MatValue convert(const MatValue& a, Dtype d);
MatValue sum_all(const MatValue& a);
MatValue compare(CmpOp op, const MatValue& a, const MatValue& b);
MatValue invert(const MatValue& a);
MatValue elem_math(MathFn fn, const MatValue& a);
MatValue elem_math(MathFn fn, const MatValue& a, const MatValue& b);

/// Shape an elementwise operation between a and b produces; throws
/// ShapeMismatch when neither equal nor scalar-broadcastable.
Shape broadcast_shape(Shape a, Shape b);
Shape matmul_shape(Shape a, Shape b);

/// In-place LU inverse with partial pivoting and no singularity check. Both
/// `invert` (for n > 2) and the interpreter's inverse helper call this, and
/// the emitted C helper performs the same steps in the same order.
/// Returns the smallest absolute pivot met during elimination.
double lu_inverse_raw(std::span<double> res, std::span<const double> a, std::size_t n);

}  // namespace bcg
