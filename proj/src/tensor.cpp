#include "star/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace star {
namespace {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                   shape_string(b));
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch(op, a.shape(), b.shape());
}

void require_matrix(const char* op, const Tensor& t) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

template <typename Fn>
Tensor map(const Tensor& x, Fn&& fn) {
  Tensor y = x;
  for (auto& v : y.data()) v = fn(v);
  return y;
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != element_count(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string(shape_));
  }
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

// -- kernels -----------------------------------------------------------------

void vec_mat(std::span<const double> x, const Tensor& w, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  vec_mat_acc(x, w, out);
}

void vec_mat_acc(std::span<const double> x, const Tensor& w, std::span<double> out) {
  const std::size_t cols = w.cols();
  const double* wp = w.data().data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* wr = wp + i * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += xi * wr[j];
  }
}

void vec_mat_backward_input(std::span<const double> g, const Tensor& w, std::span<double> dx) {
  const std::size_t cols = w.cols();
  const double* wp = w.data().data();
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const double* wr = wp + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += g[j] * wr[j];
    dx[i] += acc;
  }
}

void outer_acc(std::span<const double> x, std::span<const double> g, Tensor& dw) {
  const std::size_t cols = dw.cols();
  double* dp = dw.data().data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    double* dr = dp + i * cols;
    for (std::size_t j = 0; j < cols; ++j) dr[j] += xi * g[j];
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// -- primitives --------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  if (a.cols() != b.rows()) mismatch("matmul", a.shape(), b.shape());
  Tensor out({a.rows(), b.cols()});
  for (std::size_t r = 0; r < a.rows(); ++r) vec_mat(a.row(r), b, out.row(r));
  return out;
}

MatmulGrads matmul_backward(const Tensor& a, const Tensor& b, const Tensor& grad_out) {
  if (grad_out.shape() != Shape{a.rows(), b.cols()}) {
    mismatch("matmul_backward", grad_out.shape(), Shape{a.rows(), b.cols()});
  }
  MatmulGrads g{Tensor(a.shape()), Tensor(b.shape())};
  for (std::size_t r = 0; r < a.rows(); ++r) {
    vec_mat_backward_input(grad_out.row(r), b, g.da.row(r));
    outer_acc(a.row(r), grad_out.row(r), g.db);
  }
  return g;
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (bias.rank() != 1 || x.cols() != bias.size()) mismatch("add_bias", x.shape(), bias.shape());
  Tensor out = x;
  const std::size_t rows = x.rank() == 1 ? 1 : x.rows();
  const std::size_t cols = bias.size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bias[c];
  }
  return out;
}

Tensor add_bias_backward(const Tensor& grad_out) {
  const std::size_t cols = grad_out.rank() == 1 ? grad_out.size() : grad_out.cols();
  const std::size_t rows = grad_out.size() / std::max<std::size_t>(cols, 1);
  Tensor db({cols});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) db[c] += grad_out[r * cols + c];
  }
  return db;
}

Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
  require_same("elementwise_mul", a, b);
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) { return map(x, [](double v) { return sigmoid(v); }); }

Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out) {
  require_same("sigmoid_backward", y, grad_out);
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= y[i] * (1.0 - y[i]);
  return g;
}

Tensor tanh(const Tensor& x) { return map(x, [](double v) { return std::tanh(v); }); }

Tensor tanh_backward(const Tensor& y, const Tensor& grad_out) {
  require_same("tanh_backward", y, grad_out);
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - y[i] * y[i];
  return g;
}

void softmax_inplace(std::span<double> values) {
  if (values.empty()) return;
  const double peak = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (auto& v : values) {
    v = std::exp(v - peak);
    total += v;
  }
  for (auto& v : values) v /= total;
}

Tensor softmax(const Tensor& x) {
  Tensor y = x;
  const std::size_t cols = x.rank() == 1 ? x.size() : x.shape().back();
  if (cols == 0) return y;
  for (std::size_t off = 0; off < y.size(); off += cols) softmax_inplace(y.data().subspan(off, cols));
  return y;
}

Tensor softmax_backward(const Tensor& y, const Tensor& grad_out) {
  require_same("softmax_backward", y, grad_out);
  Tensor g(y.shape());
  const std::size_t cols = y.rank() == 1 ? y.size() : y.shape().back();
  if (cols == 0) return g;
  for (std::size_t off = 0; off < y.size(); off += cols) {
    double inner = 0.0;
    for (std::size_t j = 0; j < cols; ++j) inner += y[off + j] * grad_out[off + j];
    for (std::size_t j = 0; j < cols; ++j) g[off + j] = y[off + j] * (grad_out[off + j] - inner);
  }
  return g;
}

Tensor concat(std::span<const Tensor> parts) {
  std::vector<double> data;
  for (const auto& p : parts) {
    if (p.rank() != 1) throw ShapeError("concat: expected vectors, got " + shape_string(p.shape()));
    data.insert(data.end(), p.data().begin(), p.data().end());
  }
  const auto n = data.size();
  return Tensor({n}, std::move(data));
}

std::vector<Tensor> concat_backward(std::span<const Tensor> parts, const Tensor& grad_out) {
  std::vector<Tensor> grads;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    if (offset + p.size() > grad_out.size()) mismatch("concat_backward", p.shape(), grad_out.shape());
    auto slice = grad_out.data().subspan(offset, p.size());
    grads.emplace_back(p.shape(), std::vector<double>(slice.begin(), slice.end()));
    offset += p.size();
  }
  if (offset != grad_out.size()) mismatch("concat_backward", Shape{offset}, grad_out.shape());
  return grads;
}

Tensor mean(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("mean: no inputs");
  Tensor out(parts.front().shape());
  for (const auto& p : parts) {
    require_same("mean", out, p);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  for (auto& v : out.data()) v *= inv;
  return out;
}

Tensor mean_backward(std::size_t count, const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto& v : g.data()) v /= static_cast<double>(count);
  return g;
}

Tensor dropout(const Tensor& x, double rate, bool train, Rng& rng, Tensor* mask) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must lie in [0, 1)");
  if (!train || rate == 0.0) {
    if (mask) *mask = Tensor(x.shape(), 1.0);
    return x;
  }
  Tensor m(x.shape());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (auto& v : m.data()) v = rng.uniform() < rate ? 0.0 : keep_scale;
  Tensor y = elementwise_mul(x, m);
  if (mask) *mask = std::move(m);
  return y;
}

Tensor dropout_backward(const Tensor& mask, const Tensor& grad_out) {
  return elementwise_mul(mask, grad_out);
}

}  // namespace star
