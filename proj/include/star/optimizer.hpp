#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "star/random.hpp"
#include "star/tensor.hpp"

namespace star {

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Storage precision of trainable state. Arithmetic always runs in 64-bit;
// in kF32 mode values and optimizer moments are rounded to the nearest
// 32-bit float after every update so they survive a 32-bit checkpoint
// unchanged.
enum class Precision { kF64, kF32 };

void round_to_precision(Tensor& t, Precision precision);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;
  std::uint64_t step = 0;
};

// Named parameters iterated in name order.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Tensor value);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.contains(name); }
  std::size_t size() const { return params_.size(); }
  std::size_t parameter_count() const;

  void zero_grads();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Parameter> params_;
};

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double l2 = 1e-6;
  Precision precision = Precision::kF64;
};

// Bias-corrected Adam; the L2 penalty is added to the gradient before the
// moment update. Throws NumericError on a non-finite gradient, leaving the
// parameter untouched.
void adam_step(Parameter& param, const AdamOptions& options);
void adam_step(ParameterStore& store, const AdamOptions& options);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates_checked = 0;
};

struct GradCheckOptions {
  double epsilon = 1e-4;
  std::size_t coordinates_per_parameter = 200;
  // Denominator floor for the relative error |a - n| / max(|a| + |n|, floor).
  double denominator_floor = 1e-7;
  std::uint64_t seed = 7;
};

// Compares the grads already stored in `store` against central differences
// of `loss`. Parameters with at most `coordinates_per_parameter` entries
// are checked exhaustively, the rest on a random sample.
GradCheckResult finite_difference_check(ParameterStore& store, const std::function<double()>& loss,
                                        const GradCheckOptions& options = {});

// Throws NumericError naming the worst parameter and coordinate when the
// check exceeds `tolerance`.
void require_gradients_match(const GradCheckResult& result, double tolerance);

}  // namespace star
