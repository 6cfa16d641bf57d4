#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "mrg/nn/tensor.hpp"

namespace mrg::nn {

/// Shapes of a transformer model. A store holds an encoder always, plus a
/// 3-way classifier head and/or a decoder with an output projection.
struct ModelDims {
  int vocab_size = 0;
  int d_model = 128;
  int heads = 8;
  int ff_dim = 512;
  int encoder_layers = 2;
  int decoder_layers = 2;
  bool classifier = true;
  bool decoder = false;
  float dropout = 0.1f;

  void validate() const;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

ModelDims labeller_dims(int vocab_size);
ModelDims realizer_dims(int vocab_size);

/// Named tensors in name order. Also used to hold gradients.
template <class T>
class ParameterStore {
 public:
  using Tensor = Matrix<T>;

  ParameterStore() = default;
  explicit ParameterStore(ModelDims dims) : dims_(dims) {}

  const ModelDims& dims() const { return dims_; }

  Tensor& at(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw std::out_of_range("no parameter named " + name);
    return it->second;
  }
  const Tensor& at(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw std::out_of_range("no parameter named " + name);
    return it->second;
  }
  bool contains(const std::string& name) const { return tensors_.count(name) > 0; }

  void set(const std::string& name, Tensor value) { tensors_[name] = std::move(value); }

  std::map<std::string, Tensor>& tensors() { return tensors_; }
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  ParameterStore zeros_like() const {
    ParameterStore out(dims_);
    for (const auto& [name, t] : tensors_) out.tensors_[name] = Tensor::Zero(t.rows(), t.cols());
    return out;
  }

  void set_zero() {
    for (auto& [name, t] : tensors_) t.setZero();
  }

  template <class U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out(dims_);
    for (const auto& [name, t] : tensors_) out.set(name, t.template cast<U>());
    return out;
  }

  bool all_finite() const {
    for (const auto& [name, t] : tensors_) {
      if (!t.allFinite()) return false;
    }
    return true;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : tensors_) n += static_cast<std::size_t>(t.size());
    return n;
  }

 private:
  ModelDims dims_;
  std::map<std::string, Tensor> tensors_;
};

/// Fresh parameters: every weight uniform in +-1/sqrt(fan_in), biases and
/// layer-norm offsets zero, layer-norm scales one.
template <class T>
ParameterStore<T> init_parameters(const ModelDims& dims, std::uint64_t seed);

extern template ParameterStore<float> init_parameters<float>(const ModelDims&, std::uint64_t);
extern template ParameterStore<double> init_parameters<double>(const ModelDims&, std::uint64_t);

}  // namespace mrg::nn
