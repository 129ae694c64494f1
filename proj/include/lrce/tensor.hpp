#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lrce {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Dense row-major tensor of doubles. Almost everything in this library is
/// rank 2 (rows x cols); scalars are 1x1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : Tensor(Shape{rows, cols}, fill) {}

  /// Builds a tensor from caller-supplied values. Rejects size mismatches and
  /// non-finite entries.
  static Tensor from_data(Shape shape, std::vector<double> data);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor scalar(double v) { return Tensor(1, 1, v); }
  static Tensor column(std::span<const double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  /// Value of a 1-element tensor.
  double item() const;

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }

  Tensor select_rows(std::span<const std::size_t> indices) const;
  Tensor col_slice(std::size_t begin, std::size_t end) const;

  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Tensor(Shape shape, std::vector<double> data, bool /*unchecked*/)
      : shape_(std::move(shape)), data_(std::move(data)) {}

  Shape shape_;
  std::vector<double> data_;
};

namespace kernels {

// Shared by the graph ops and the graph-free inference path so both produce
// bit-identical results.
void matmul(const Tensor& a, const Tensor& b, Tensor& out);
void matmul_at_b(const Tensor& a, const Tensor& b, Tensor& out);  // a^T b
void matmul_a_bt(const Tensor& a, const Tensor& b, Tensor& out);  // a b^T
void add_bias_row(Tensor& out, const Tensor& bias);
void relu_inplace(Tensor& t);
void sigmoid_inplace(Tensor& t);
double sigmoid(double x);

}  // namespace kernels

}  // namespace lrce
