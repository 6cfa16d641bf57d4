#pragma once

// Post-norm transformer encoder/decoder stacks, the 3-way labelling head and
// the vocabulary output head, written against Tape.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mrg/nn/loss.hpp"
#include "mrg/nn/params.hpp"
#include "mrg/nn/tape.hpp"

namespace mrg::nn {

/// Fixed sinusoidal position table: sin on even columns, cos on odd.
template <class T>
Matrix<T> sinusoidal_positions(Eigen::Index length, Eigen::Index d) {
  Matrix<T> pe(length, d);
  for (Eigen::Index pos = 0; pos < length; ++pos) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double expo = static_cast<double>(2 * (i / 2)) / static_cast<double>(d);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, expo);
      pe(pos, i) = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

namespace detail {

template <class T>
typename Tape<T>::Var linear(Tape<T>& tape, typename Tape<T>::Var x, const std::string& prefix) {
  auto y = tape.matmul(x, tape.param(prefix + ".weight"));
  return tape.add_row(y, tape.param(prefix + ".bias"));
}

template <class T>
typename Tape<T>::Var norm(Tape<T>& tape, typename Tape<T>::Var x, const std::string& prefix) {
  return tape.layer_norm(x, tape.param(prefix + ".gamma"), tape.param(prefix + ".beta"));
}

template <class T>
typename Tape<T>::Var multi_head(Tape<T>& tape, typename Tape<T>::Var queries, typename Tape<T>::Var keys_values,
                                 const std::string& prefix, int heads, bool causal) {
  auto q = linear(tape, queries, prefix + ".q");
  auto k = linear(tape, keys_values, prefix + ".k");
  auto v = linear(tape, keys_values, prefix + ".v");
  auto attended = tape.attention(q, k, v, heads, causal);
  return linear(tape, attended, prefix + ".o");
}

template <class T>
typename Tape<T>::Var feed_forward(Tape<T>& tape, typename Tape<T>::Var x, const std::string& prefix) {
  auto h = tape.gelu(linear(tape, x, prefix + ".ff1"));
  return linear(tape, h, prefix + ".ff2");
}

}  // namespace detail

/// Encoder stack over already-embedded rows.
template <class T>
typename Tape<T>::Var encoder_forward(Tape<T>& tape, typename Tape<T>::Var x) {
  const auto& dims = tape.params().dims();
  const T p = static_cast<T>(dims.dropout);
  for (int l = 0; l < dims.encoder_layers; ++l) {
    const auto pre = "encoder." + std::to_string(l);
    auto attn = detail::multi_head(tape, x, x, pre + ".attn", dims.heads, false);
    x = detail::norm(tape, tape.add(x, tape.dropout(attn, p)), pre + ".ln1");
    auto ff = detail::feed_forward(tape, x, pre);
    x = detail::norm(tape, tape.add(x, tape.dropout(ff, p)), pre + ".ln2");
  }
  return x;
}

/// Decoder stack: causal self-attention, cross-attention to `memory`, FFN.
template <class T>
typename Tape<T>::Var decoder_forward(Tape<T>& tape, typename Tape<T>::Var y, typename Tape<T>::Var memory) {
  const auto& dims = tape.params().dims();
  const T p = static_cast<T>(dims.dropout);
  for (int l = 0; l < dims.decoder_layers; ++l) {
    const auto pre = "decoder." + std::to_string(l);
    auto self = detail::multi_head(tape, y, y, pre + ".self", dims.heads, true);
    y = detail::norm(tape, tape.add(y, tape.dropout(self, p)), pre + ".ln1");
    auto cross = detail::multi_head(tape, y, memory, pre + ".cross", dims.heads, false);
    y = detail::norm(tape, tape.add(y, tape.dropout(cross, p)), pre + ".ln2");
    auto ff = detail::feed_forward(tape, y, pre);
    y = detail::norm(tape, tape.add(y, tape.dropout(ff, p)), pre + ".ln3");
  }
  return y;
}

/// Token embeddings scaled by sqrt(d), plus sinusoidal positions when
/// `use_positional` is set, then input dropout.
template <class T>
typename Tape<T>::Var embed_tokens(Tape<T>& tape, std::span<const std::int32_t> ids, bool use_positional) {
  const auto& dims = tape.params().dims();
  const T factor = std::sqrt(static_cast<T>(dims.d_model));
  auto x = tape.embedding("embed.tokens", ids, factor);
  if (use_positional) {
    x = tape.add_constant(x, sinusoidal_positions<T>(static_cast<Eigen::Index>(ids.size()), dims.d_model));
  }
  return tape.dropout(x, static_cast<T>(dims.dropout));
}

/// Hidden states for a token sequence (one d-vector per position).
template <class T>
typename Tape<T>::Var encode_sequence(Tape<T>& tape, std::span<const std::int32_t> ids, bool use_positional) {
  if (ids.empty()) throw std::invalid_argument("encode_sequence: empty input");
  return encoder_forward(tape, embed_tokens(tape, ids, use_positional));
}

/// Per-position 3-way logits W_c h + b_c.
template <class T>
typename Tape<T>::Var classifier_logits(Tape<T>& tape, typename Tape<T>::Var hidden) {
  return detail::linear(tape, hidden, "classifier");
}

/// Encoder memory over summed node representations (no positions).
template <class T>
typename Tape<T>::Var encode_bags(Tape<T>& tape, const std::vector<std::vector<std::int32_t>>& bags) {
  if (bags.empty()) throw std::invalid_argument("encode_bags: no representations");
  const auto& dims = tape.params().dims();
  const T factor = std::sqrt(static_cast<T>(dims.d_model));
  auto x = tape.embedding_bags("embed.tokens", bags, factor);
  return encoder_forward(tape, tape.dropout(x, static_cast<T>(dims.dropout)));
}

/// Encoder memory over explicit representation rows (no positions).
template <class T>
typename Tape<T>::Var encode_rows(Tape<T>& tape, const Matrix<T>& rows) {
  if (rows.rows() == 0) throw std::invalid_argument("encode_rows: no representations");
  const auto& dims = tape.params().dims();
  auto x = tape.scale(tape.constant(rows), std::sqrt(static_cast<T>(dims.d_model)));
  return encoder_forward(tape, tape.dropout(x, static_cast<T>(dims.dropout)));
}

/// Vocabulary logits for every prefix position, given encoder memory.
template <class T>
typename Tape<T>::Var decoder_logits(Tape<T>& tape, std::span<const std::int32_t> prefix_ids,
                                     typename Tape<T>::Var memory) {
  if (prefix_ids.empty()) throw std::invalid_argument("decoder: empty prefix");
  if (tape.value(memory).rows() == 0) throw std::invalid_argument("decoder: empty memory");
  auto y = decoder_forward(tape, embed_tokens(tape, prefix_ids, true), memory);
  return detail::linear(tape, y, "output");
}

// Inference conveniences (evaluation mode, no gradients).

template <class T>
Matrix<T> encode_sequence(std::span<const std::int32_t> ids, const ParameterStore<T>& params, bool use_positional) {
  Tape<T> tape(params, nullptr);
  return tape.value(encode_sequence(tape, ids, use_positional));
}

/// softmax(W_c h + b_c) per row of `hidden`.
template <class T>
Matrix<T> classify_positions(const Matrix<T>& hidden, const ParameterStore<T>& params) {
  if (hidden.rows() == 0) throw std::invalid_argument("classify_positions: empty input");
  Matrix<T> logits = hidden * params.at("classifier.weight");
  logits.rowwise() += params.at("classifier.bias").row(0);
  return softmax_rows(std::move(logits));
}

/// Next-token distribution after `prefix_ids` (which starts with BOS).
template <class T>
RowVector<T> decode_step(std::span<const std::int32_t> prefix_ids, const Matrix<T>& memory,
                         const ParameterStore<T>& params) {
  if (memory.rows() == 0) throw std::invalid_argument("decode_step: empty memory");
  Tape<T> tape(params, nullptr);
  auto mem = tape.constant(memory);
  Matrix<T> logits = tape.value(decoder_logits(tape, prefix_ids, mem));
  Matrix<T> last = logits.bottomRows(1);
  return softmax_rows(std::move(last)).row(0);
}

/// Raw logits of the last decoder position; used for invariance checks.
template <class T>
RowVector<T> decode_step_logits(std::span<const std::int32_t> prefix_ids, const Matrix<T>& memory,
                                const ParameterStore<T>& params) {
  Tape<T> tape(params, nullptr);
  auto mem = tape.constant(memory);
  Matrix<T> logits = tape.value(decoder_logits(tape, prefix_ids, mem));
  return logits.bottomRows(1).row(0);
}

}  // namespace mrg::nn
