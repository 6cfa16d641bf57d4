#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "mrg/nn/params.hpp"

namespace mrg::nn {

template <class T>
struct AdamState {
  std::map<std::string, Matrix<T>> first_moment;
  std::map<std::string, Matrix<T>> second_moment;
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(double lr = 1e-3) : learning_rate(lr) {}
};

/// Bias-corrected Adam. Throws before touching anything if a gradient is
/// non-finite or shaped differently from its parameter.
template <class T>
void adam_step(ParameterStore<T>& params, const ParameterStore<T>& grads, AdamState<T>& state) {
  for (const auto& [name, g] : grads.tensors()) {
    const auto& p = params.at(name);
    if (p.rows() != g.rows() || p.cols() != g.cols()) throw std::invalid_argument("adam: shape mismatch for " + name);
    if (!g.allFinite()) throw std::domain_error("adam: non-finite gradient in " + name);
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  const T correction1 = static_cast<T>(1.0 - std::pow(state.beta1, t));
  const T correction2 = static_cast<T>(1.0 - std::pow(state.beta2, t));
  const T lr = static_cast<T>(state.learning_rate);
  const T eps = static_cast<T>(state.epsilon);
  for (const auto& [name, g] : grads.tensors()) {
    auto& p = params.at(name);
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.size() == 0) {
      m = Matrix<T>::Zero(p.rows(), p.cols());
      v = Matrix<T>::Zero(p.rows(), p.cols());
    }
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
  }
}

}  // namespace mrg::nn
