#pragma once

// Reverse-mode differentiation over row-major matrices. Each op appends a
// node holding its value and a closure that pushes the node's gradient to
// its inputs. Parameter nodes alias the store's tensors and accumulate
// straight into a gradient store.

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrg/nn/loss.hpp"
#include "mrg/nn/params.hpp"
#include "mrg/nn/tensor.hpp"

namespace mrg::nn {

template <class T>
class Tape {
 public:
  using M = Matrix<T>;

  struct Var {
    int id = -1;
  };

  /// `grads` may be null for inference; backward() is then unavailable.
  Tape(const ParameterStore<T>& params, ParameterStore<T>* grads, bool training = false, Rng* rng = nullptr)
      : params_(params), grads_(grads), training_(training), rng_(rng) {
    if (training_ && rng_ == nullptr) throw std::invalid_argument("training tape needs an rng for dropout");
  }

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool training() const { return training_; }
  const ParameterStore<T>& params() const { return params_; }

  const M& value(Var v) const {
    const auto& n = nodes_.at(static_cast<std::size_t>(v.id));
    return n.ref ? *n.ref : n.value;
  }

  Var constant(M value) { return push(std::move(value)); }

  Var param(const std::string& name) {
    auto it = param_nodes_.find(name);
    if (it != param_nodes_.end()) return it->second;
    Node n;
    n.ref = &params_.at(name);
    if (grads_) n.sink = &grads_->at(name);
    nodes_.push_back(std::move(n));
    Var v{static_cast<int>(nodes_.size() - 1)};
    param_nodes_.emplace(name, v);
    return v;
  }

  Var matmul(Var a, Var b) {
    M out;
    out.noalias() = value(a) * value(b);
    auto c = push(std::move(out));
    record(c, [this, a, b, c] {
      const M& g = grad(c);
      grad(a).noalias() += g * value(b).transpose();
      grad(b).noalias() += value(a).transpose() * g;
    });
    return c;
  }

  Var add(Var a, Var b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
      throw std::invalid_argument("add: shape mismatch");
    }
    auto c = push(value(a) + value(b));
    record(c, [this, a, b, c] {
      grad(a) += grad(c);
      grad(b) += grad(c);
    });
    return c;
  }

  /// Adds a 1 x cols row to every row of `a`.
  Var add_row(Var a, Var row) {
    M out = value(a);
    out.rowwise() += value(row).row(0);
    auto c = push(std::move(out));
    record(c, [this, a, row, c] {
      grad(a) += grad(c);
      grad(row) += grad(c).colwise().sum();
    });
    return c;
  }

  Var add_constant(Var a, const M& constant_term) {
    auto c = push(value(a) + constant_term);
    record(c, [this, a, c] { grad(a) += grad(c); });
    return c;
  }

  Var scale(Var a, T factor) {
    auto c = push(value(a) * factor);
    record(c, [this, a, c, factor] { grad(a) += grad(c) * factor; });
    return c;
  }

  /// tanh-approximated GELU.
  Var gelu(Var a) {
    const M& x = value(a);
    M out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const T v = x.data()[i];
      out.data()[i] = T(0.5) * v * (T(1) + std::tanh(kGeluC * (v + T(0.044715) * v * v * v)));
    }
    auto c = push(std::move(out));
    record(c, [this, a, c] {
      const M& xin = value(a);
      const M& g = grad(c);
      M& ga = grad(a);
      for (Eigen::Index i = 0; i < xin.size(); ++i) {
        const T v = xin.data()[i];
        const T t = std::tanh(kGeluC * (v + T(0.044715) * v * v * v));
        const T dt = (T(1) - t * t) * kGeluC * (T(1) + T(3) * T(0.044715) * v * v);
        ga.data()[i] += g.data()[i] * (T(0.5) * (T(1) + t) + T(0.5) * v * dt);
      }
    });
    return c;
  }

  /// Row-wise layer normalization with learned scale and offset.
  Var layer_norm(Var x, Var gamma, Var beta, T eps = T(1e-5)) {
    const M& in = value(x);
    const Eigen::Index rows = in.rows();
    const Eigen::Index cols = in.cols();
    M xhat(rows, cols);
    std::vector<T> inv_sigma(static_cast<std::size_t>(rows));
    for (Eigen::Index r = 0; r < rows; ++r) {
      const T mean = in.row(r).mean();
      const T var = (in.row(r).array() - mean).square().mean();
      const T inv = T(1) / std::sqrt(var + eps);
      inv_sigma[static_cast<std::size_t>(r)] = inv;
      xhat.row(r) = (in.row(r).array() - mean) * inv;
    }
    M out = (xhat.array().rowwise() * value(gamma).row(0).array()).matrix();
    out.rowwise() += value(beta).row(0);
    auto c = push(std::move(out));
    record(c, [this, x, gamma, beta, c, xhat = std::move(xhat), inv_sigma = std::move(inv_sigma)] {
      const M& g = grad(c);
      grad(beta) += g.colwise().sum();
      grad(gamma) += (g.array() * xhat.array()).matrix().colwise().sum();
      const M dxhat = (g.array().rowwise() * value(gamma).row(0).array()).matrix();
      M& gx = grad(x);
      const T n = static_cast<T>(xhat.cols());
      for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
        const T mean_d = dxhat.row(r).sum() / n;
        const T mean_dx = dxhat.row(r).dot(xhat.row(r)) / n;
        gx.row(r).array() +=
            inv_sigma[static_cast<std::size_t>(r)] * (dxhat.row(r).array() - mean_d - xhat.row(r).array() * mean_dx);
      }
    });
    return c;
  }

  /// Inverted dropout; the identity outside training mode.
  Var dropout(Var a, T p) {
    if (!training_ || p <= T(0)) return a;
    const M& x = value(a);
    M mask(x.rows(), x.cols());
    const T keep_scale = T(1) / (T(1) - p);
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
      mask.data()[i] = uniform01(*rng_) < static_cast<double>(p) ? T(0) : keep_scale;
    }
    auto c = push((x.array() * mask.array()).matrix());
    record(c, [this, a, c, mask = std::move(mask)] { grad(a).array() += grad(c).array() * mask.array(); });
    return c;
  }

  /// Row i = factor * table[ids[i]].
  Var embedding(const std::string& table, std::span<const std::int32_t> ids, T factor = T(1)) {
    std::vector<std::vector<std::int32_t>> bags;
    bags.reserve(ids.size());
    for (auto id : ids) bags.push_back({id});
    return embedding_bags(table, bags, factor);
  }

  /// Row i = factor * sum of table rows listed in bags[i].
  Var embedding_bags(const std::string& table, const std::vector<std::vector<std::int32_t>>& bags, T factor = T(1)) {
    const M& tab = params_.at(table);
    M out = M::Zero(static_cast<Eigen::Index>(bags.size()), tab.cols());
    for (std::size_t i = 0; i < bags.size(); ++i) {
      for (auto id : bags[i]) {
        if (id < 0 || id >= tab.rows()) throw std::out_of_range("embedding id out of range: " + std::to_string(id));
        out.row(static_cast<Eigen::Index>(i)) += tab.row(id);
      }
    }
    out *= factor;
    auto c = push(std::move(out));
    if (grads_) {
      M* sink = &grads_->at(table);
      record(c, [this, c, sink, bags, factor] {
        const M& g = grad(c);
        for (std::size_t i = 0; i < bags.size(); ++i) {
          for (auto id : bags[i]) sink->row(id) += factor * g.row(static_cast<Eigen::Index>(i));
        }
      });
    }
    return c;
  }

  /// Scaled dot-product attention over `heads` column blocks. With `causal`,
  /// query i only sees keys j <= i.
  Var attention(Var q, Var k, Var v, int heads, bool causal) {
    const M& Q = value(q);
    const M& K = value(k);
    const M& V = value(v);
    const Eigen::Index d = Q.cols();
    if (K.cols() != d || V.cols() != d || K.rows() != V.rows() || d % heads != 0) {
      throw std::invalid_argument("attention: shape mismatch");
    }
    if (K.rows() == 0) throw std::invalid_argument("attention: empty key set");
    const Eigen::Index dh = d / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    M out(Q.rows(), d);
    std::vector<M> probs(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
      M s;
      s.noalias() = Q.middleCols(h * dh, dh) * K.middleCols(h * dh, dh).transpose();
      s *= scale;
      if (causal) {
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
          for (Eigen::Index j = i + 1; j < s.cols(); ++j) s(i, j) = -std::numeric_limits<T>::infinity();
        }
      }
      softmax_rows_inplace(s);
      out.middleCols(h * dh, dh).noalias() = s * V.middleCols(h * dh, dh);
      probs[static_cast<std::size_t>(h)] = std::move(s);
    }
    auto c = push(std::move(out));
    record(c, [this, q, k, v, c, heads, dh, scale, probs = std::move(probs)] {
      const M& g = grad(c);
      const M& Qv = value(q);
      const M& Kv = value(k);
      const M& Vv = value(v);
      M& gq = grad(q);
      M& gk = grad(k);
      M& gv = grad(v);
      for (int h = 0; h < heads; ++h) {
        const M& P = probs[static_cast<std::size_t>(h)];
        const auto gh = g.middleCols(h * dh, dh);
        M dP;
        dP.noalias() = gh * Vv.middleCols(h * dh, dh).transpose();
        gv.middleCols(h * dh, dh).noalias() += P.transpose() * gh;
        M dS = P;
        for (Eigen::Index i = 0; i < P.rows(); ++i) {
          const T dot = P.row(i).dot(dP.row(i));
          dS.row(i).array() = P.row(i).array() * (dP.row(i).array() - dot);
        }
        dS *= scale;
        gq.middleCols(h * dh, dh).noalias() += dS * Kv.middleCols(h * dh, dh);
        gk.middleCols(h * dh, dh).noalias() += dS.transpose() * Qv.middleCols(h * dh, dh);
      }
    });
    return c;
  }

  /// weight * sum over unmasked rows of -log softmax(logits)[gold]. Rows with
  /// mask 0 receive an exactly zero gradient.
  Var masked_cross_entropy(Var logits, std::span<const std::int32_t> gold, std::span<const std::uint8_t> mask,
                           T weight) {
    auto terms = masked_nll_terms(value(logits), gold, mask);
    M out(1, 1);
    out(0, 0) = weight * terms.nll_sum;
    auto c = push(std::move(out));
    record(c, [this, logits, c, weight, terms = std::move(terms)] {
      grad(logits) += (grad(c)(0, 0) * weight) * terms.dlogits;
    });
    return c;
  }

  /// Accumulated gradient of `v` (zeros if nothing flowed into it).
  const M& gradient(Var v) { return grad(v); }

  /// Runs the recorded closures in reverse, seeding d(loss) = seed.
  void backward(Var loss, T seed = T(1)) {
    if (!grads_) throw std::logic_error("backward() on an inference tape");
    if (value(loss).size() != 1) throw std::invalid_argument("backward() needs a scalar loss");
    grad(loss)(0, 0) += seed;
    for (int i = loss.id; i >= 0; --i) {
      auto& n = nodes_[static_cast<std::size_t>(i)];
      if (n.back && n.has_grad) n.back();
    }
  }

 private:
  static constexpr T kGeluC = T(0.7978845608028654);  // sqrt(2 / pi)

  struct Node {
    M value;
    const M* ref = nullptr;
    M* sink = nullptr;
    M grad;
    bool has_grad = false;
    std::function<void()> back;
  };

  Var push(M value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
  }

  template <class F>
  void record(Var v, F&& f) {
    if (grads_) nodes_[static_cast<std::size_t>(v.id)].back = std::forward<F>(f);
  }

  M& grad(Var v) {
    auto& n = nodes_[static_cast<std::size_t>(v.id)];
    if (n.sink) return *n.sink;
    if (!n.has_grad) {
      const M& val = n.ref ? *n.ref : n.value;
      n.grad = M::Zero(val.rows(), val.cols());
      n.has_grad = true;
    }
    return n.grad;
  }

  const ParameterStore<T>& params_;
  ParameterStore<T>* grads_;
  bool training_;
  Rng* rng_;
  std::deque<Node> nodes_;
  std::map<std::string, Var> param_nodes_;
};

}  // namespace mrg::nn
