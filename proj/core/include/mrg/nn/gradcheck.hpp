#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mrg/nn/params.hpp"

namespace mrg::nn {

/// Loss evaluated in 64-bit mode. When `grads` is non-null the function
/// must also accumulate its analytic gradient into it.
using LossFunction = std::function<double(const ParameterStore<double>& params, ParameterStore<double>* grads)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_coordinate;
};

/// Compares the analytic gradient against central differences on
/// `sample_count` coordinates (tensor chosen uniformly, then an entry).
/// Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps
/// coordinates whose true gradient is near zero from reporting noise.
inline GradCheckResult finite_difference_check(const LossFunction& loss, ParameterStore<double> params,
                                               std::size_t sample_count, std::uint64_t seed = 1,
                                               double step = 1e-5, double floor = 1e-6) {
  auto grads = params.zeros_like();
  loss(params, &grads);
  std::vector<std::string> names;
  for (const auto& [name, t] : params.tensors()) names.push_back(name);
  GradCheckResult result;
  if (names.empty()) return result;
  Rng rng(seed);
  for (std::size_t s = 0; s < sample_count; ++s) {
    const auto& name = names[uniform_index(rng, names.size())];
    auto& tensor = params.at(name);
    const auto idx = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(tensor.size())));
    const double original = tensor.data()[idx];
    tensor.data()[idx] = original + step;
    const double up = loss(params, nullptr);
    tensor.data()[idx] = original - step;
    const double down = loss(params, nullptr);
    tensor.data()[idx] = original;
    const double numeric = (up - down) / (2.0 * step);
    const double analytic = grads.at(name).data()[idx];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    const double rel = std::abs(analytic - numeric) / denom;
    ++result.coordinates;
    if (rel > result.max_relative_error || result.worst_coordinate.empty()) {
      result.max_relative_error = std::max(result.max_relative_error, rel);
      result.worst_coordinate = name + "[" + std::to_string(idx) + "]";
    }
  }
  return result;
}

}  // namespace mrg::nn
