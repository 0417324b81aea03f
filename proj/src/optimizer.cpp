#include "star/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace star {

void round_to_precision(Tensor& t, Precision precision) {
  if (precision == Precision::kF64) return;
  for (auto& v : t.data()) v = static_cast<double>(static_cast<float>(v));
}

Parameter& ParameterStore::add(const std::string& name, Tensor value) {
  if (params_.contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  Parameter p;
  p.name = name;
  p.grad = Tensor(value.shape());
  p.adam_m = Tensor(value.shape());
  p.adam_v = Tensor(value.shape());
  p.value = std::move(value);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

void ParameterStore::zero_grads() {
  for (auto& [name, p] : params_) p.grad.fill(0.0);
}

void adam_step(Parameter& param, const AdamOptions& o) {
  auto grad = param.grad.data();
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw NumericError("non-finite gradient in '" + param.name + "' at index " + std::to_string(i));
    }
  }
  ++param.step;
  const double t = static_cast<double>(param.step);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  auto value = param.value.data();
  auto m = param.adam_m.data();
  auto v = param.adam_v.data();
  for (std::size_t i = 0; i < value.size(); ++i) {
    const double g = grad[i] + o.l2 * value[i];
    m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g;
    v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g * g;
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    value[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
  }
  round_to_precision(param.value, o.precision);
  round_to_precision(param.adam_m, o.precision);
  round_to_precision(param.adam_v, o.precision);
}

void adam_step(ParameterStore& store, const AdamOptions& options) {
  for (auto& [name, p] : store) {
    for (double g : p.grad.data()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in '" + name + "'");
    }
  }
  for (auto& [name, p] : store) adam_step(p, options);
}

GradCheckResult finite_difference_check(ParameterStore& store, const std::function<double()>& loss,
                                        const GradCheckOptions& options) {
  GradCheckResult result;
  Rng rng(options.seed);
  for (auto& [name, p] : store) {
    const std::size_t n = p.value.size();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (n > options.coordinates_per_parameter) {
      rng.shuffle(std::span<std::size_t>(coords));
      coords.resize(options.coordinates_per_parameter);
      std::sort(coords.begin(), coords.end());
    }
    for (const std::size_t i : coords) {
      // five-point stencil, O(eps^4) truncation
      const double saved = p.value[i], h = options.epsilon;
      auto at = [&](double offset) {
        p.value[i] = saved + offset;
        return loss();
      };
      const double numeric = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
      p.value[i] = saved;
      const double analytic = p.grad[i];
      const double denom = std::max(std::abs(analytic) + std::abs(numeric), options.denominator_floor);
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.coordinates_checked;
      if (result.worst_parameter.empty() || rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = name;
        result.worst_index = i;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

void require_gradients_match(const GradCheckResult& result, double tolerance) {
  if (result.max_relative_error <= tolerance) return;
  char buf[160];
  std::snprintf(buf, sizeof buf, ": analytic %.6e vs numeric %.6e (relative error %.3e)", result.analytic,
                result.numeric, result.max_relative_error);
  throw NumericError("gradient check failed for '" + result.worst_parameter + "' at index " +
                     std::to_string(result.worst_index) + buf);
}

}  // namespace star
