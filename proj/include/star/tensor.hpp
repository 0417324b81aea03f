#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "star/random.hpp"

namespace star {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Dense row-major tensor of 64-bit reals. Rank 1 tensors act as vectors,
// rank 2 as matrices.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_.front(); }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> row(std::size_t r) { return std::span<double>(data_).subspan(r * cols(), cols()); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }

  void fill(double value);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// -- Span kernels used by the model's hand-written passes. -------------------
//    Vectors multiply matrices from the left (row-vector convention).

// out = x · W            (x: rows(W), out: cols(W))
void vec_mat(std::span<const double> x, const Tensor& w, std::span<double> out);
// out += x · W
void vec_mat_acc(std::span<const double> x, const Tensor& w, std::span<double> out);
// dx += g · Wᵀ
void vec_mat_backward_input(std::span<const double> g, const Tensor& w, std::span<double> dx);
// dW += xᵀ g
void outer_acc(std::span<const double> x, std::span<const double> g, Tensor& dw);

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// -- Tensor primitives with their backward rules. ----------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
struct MatmulGrads {
  Tensor da;
  Tensor db;
};
MatmulGrads matmul_backward(const Tensor& a, const Tensor& b, const Tensor& grad_out);

// Adds a bias vector to every row.
Tensor add_bias(const Tensor& x, const Tensor& bias);
// Bias gradient: column sums of grad_out.
Tensor add_bias_backward(const Tensor& grad_out);

Tensor elementwise_mul(const Tensor& a, const Tensor& b);

double sigmoid(double x);
Tensor sigmoid(const Tensor& x);
Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out);
Tensor tanh(const Tensor& x);
Tensor tanh_backward(const Tensor& y, const Tensor& grad_out);

// Softmax along the last axis, max-subtracted.
void softmax_inplace(std::span<double> values);
Tensor softmax(const Tensor& x);
Tensor softmax_backward(const Tensor& y, const Tensor& grad_out);

// Concatenates rank-1 tensors; the backward splits by the input sizes.
Tensor concat(std::span<const Tensor> parts);
std::vector<Tensor> concat_backward(std::span<const Tensor> parts, const Tensor& grad_out);

// Elementwise mean of equally shaped tensors.
Tensor mean(std::span<const Tensor> parts);
Tensor mean_backward(std::size_t count, const Tensor& grad_out);

// Inverted dropout. `mask` receives the per-element multiplier (0 or
// 1/(1-rate)); evaluation mode and rate 0 return x unchanged.
Tensor dropout(const Tensor& x, double rate, bool train, Rng& rng, Tensor* mask = nullptr);
Tensor dropout_backward(const Tensor& mask, const Tensor& grad_out);

}  // namespace star
