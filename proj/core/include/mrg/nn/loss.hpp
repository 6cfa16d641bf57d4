#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>

#include "mrg/nn/tensor.hpp"

namespace mrg::nn {

/// Numerically stable row softmax. Rows may contain -inf but not only -inf.
template <class T>
void softmax_rows_inplace(Matrix<T>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const T mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp();
    m.row(r) /= m.row(r).sum();
  }
}

template <class T>
Matrix<T> softmax_rows(Matrix<T> m) {
  softmax_rows_inplace(m);
  return m;
}

template <class T>
struct MaskedNllTerms {
  T nll_sum = T(0);
  std::size_t count = 0;
  Matrix<T> dlogits;  // d(nll_sum)/d(logits); masked rows are exactly zero
};

template <class T>
MaskedNllTerms<T> masked_nll_terms(const Matrix<T>& logits, std::span<const std::int32_t> gold,
                                   std::span<const std::uint8_t> mask) {
  const auto rows = static_cast<std::size_t>(logits.rows());
  if (gold.size() != rows || mask.size() != rows) {
    throw std::invalid_argument("cross entropy: logits, labels and mask must be parallel");
  }
  MaskedNllTerms<T> t;
  t.dlogits = Matrix<T>::Zero(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    const auto ri = static_cast<Eigen::Index>(r);
    const auto g = gold[r];
    if (g < 0 || g >= logits.cols()) throw std::out_of_range("cross entropy: gold label out of range");
    const T mx = logits.row(ri).maxCoeff();
    const auto shifted = (logits.row(ri).array() - mx).eval();
    const T log_z = std::log(shifted.exp().sum());
    t.nll_sum += log_z - shifted(g);
    t.dlogits.row(ri) = (shifted - log_z).exp().matrix();
    t.dlogits(ri, g) -= T(1);
    ++t.count;
  }
  return t;
}

template <class T>
struct MaskedLoss {
  T loss = T(0);
  Matrix<T> grad_logits;
};

/// Mean negative log-likelihood over unmasked rows of probability rows,
/// with its gradient with respect to the logits that produced them. Masked
/// rows contribute exactly zero. Throws if every row is masked.
template <class T>
MaskedLoss<T> cross_entropy_masked(const Matrix<T>& prob_rows, std::span<const std::int32_t> gold,
                                   std::span<const std::uint8_t> mask) {
  const auto rows = static_cast<std::size_t>(prob_rows.rows());
  if (gold.size() != rows || mask.size() != rows) {
    throw std::invalid_argument("cross entropy: rows, labels and mask must be parallel");
  }
  std::size_t count = 0;
  for (auto m : mask) count += m ? 1 : 0;
  if (count == 0) throw std::invalid_argument("cross entropy: every position is masked");
  MaskedLoss<T> out;
  out.grad_logits = Matrix<T>::Zero(prob_rows.rows(), prob_rows.cols());
  const T inv = T(1) / static_cast<T>(count);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    const auto ri = static_cast<Eigen::Index>(r);
    const auto g = gold[r];
    if (g < 0 || g >= prob_rows.cols()) throw std::out_of_range("cross entropy: gold label out of range");
    out.loss -= std::log(prob_rows(ri, g)) * inv;
    out.grad_logits.row(ri) = prob_rows.row(ri) * inv;
    out.grad_logits(ri, g) -= inv;
  }
  return out;
}

}  // namespace mrg::nn
