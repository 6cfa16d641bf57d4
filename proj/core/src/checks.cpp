#include "mrg/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "mrg/nn/loss.hpp"
#include "mrg/nn/tape.hpp"
#include "mrg/nn/transformer.hpp"

namespace mrg::checks {

namespace {

std::string format_error(const char* label, double value) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s %.3e", label, value);
  return buf;
}

std::vector<std::int32_t> random_ids(nn::Rng& rng, std::size_t len, int vocab) {
  std::vector<std::int32_t> ids(len);
  for (auto& id : ids) id = static_cast<std::int32_t>(nn::uniform_index(rng, static_cast<std::size_t>(vocab)));
  return ids;
}

double relative_gap(const nn::Matrix<double>& a, const nn::Matrix<double>& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

nn::ModelDims tiny_dims(int vocab_size) {
  nn::ModelDims d;
  d.vocab_size = vocab_size;
  d.d_model = 8;
  d.heads = 2;
  d.ff_dim = 16;
  d.encoder_layers = 2;
  d.decoder_layers = 2;
  d.classifier = true;
  d.decoder = true;
  d.dropout = 0.0f;
  return d;
}

nn::LossFunction tiny_model_loss(const nn::ModelDims& dims, std::uint64_t seed) {
  nn::Rng rng(seed);
  auto seq = random_ids(rng, 6, dims.vocab_size);
  std::vector<std::int32_t> labels(seq.size());
  std::vector<std::uint8_t> mask(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    labels[i] = static_cast<std::int32_t>(nn::uniform_index(rng, 3));
    mask[i] = i >= 2 ? 1 : 0;
  }
  std::vector<std::vector<std::int32_t>> bags{random_ids(rng, 3, dims.vocab_size), random_ids(rng, 2, dims.vocab_size)};
  auto target = random_ids(rng, 5, dims.vocab_size);
  std::vector<std::int32_t> prefix(target.begin(), target.end() - 1);
  std::vector<std::int32_t> gold(target.begin() + 1, target.end());
  std::vector<std::uint8_t> all(gold.size(), 1);

  return [=](const nn::ParameterStore<double>& params, nn::ParameterStore<double>* grads) {
    nn::Tape<double> tape(params, grads);
    auto cls = nn::classifier_logits(tape, nn::encode_sequence(tape, std::span<const std::int32_t>(seq), true));
    auto l1 = tape.masked_cross_entropy(cls, labels, mask, 0.25);
    auto memory = nn::encode_bags(tape, bags);
    auto logits = nn::decoder_logits(tape, std::span<const std::int32_t>(prefix), memory);
    auto l2 = tape.masked_cross_entropy(logits, gold, all, 0.25);
    auto loss = tape.add(l1, l2);
    if (grads) tape.backward(loss);
    return tape.value(loss)(0, 0);
  };
}

CheckResult gradient_check(std::size_t coordinates, std::uint64_t seed) {
  const auto dims = tiny_dims();
  const auto params = nn::init_parameters<double>(dims, seed);
  const auto r = nn::finite_difference_check(tiny_model_loss(dims, seed + 1), params, coordinates, seed + 2);
  CheckResult out{"gradient", r.max_relative_error < 1e-4,
                  format_error("max relative error", r.max_relative_error) + " at " + r.worst_coordinate};
  return out;
}

CheckResult masking_check(std::size_t cases, std::uint64_t seed) {
  nn::Rng rng(seed);
  for (std::size_t c = 0; c < cases; ++c) {
    const auto rows = 2 + nn::uniform_index(rng, 8);
    const auto cols = 2 + nn::uniform_index(rng, 6);
    nn::Matrix<double> logits(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = 6.0 * nn::uniform01(rng) - 3.0;
    std::vector<std::int32_t> gold(rows);
    std::vector<std::uint8_t> mask(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      gold[r] = static_cast<std::int32_t>(nn::uniform_index(rng, cols));
      mask[r] = nn::uniform01(rng) < 0.5 ? 1 : 0;
    }
    mask[nn::uniform_index(rng, rows)] = 1;
    const auto direct = nn::cross_entropy_masked(nn::softmax_rows(logits), gold, mask);
    nn::ParameterStore<double> empty;
    auto grads = empty.zeros_like();
    nn::Tape<double> tape(empty, &grads);
    auto l = tape.constant(logits);
    tape.backward(tape.masked_cross_entropy(l, gold, mask, 1.0));
    const auto& taped = tape.gradient(l);
    for (std::size_t r = 0; r < rows; ++r) {
      if (mask[r]) continue;
      for (Eigen::Index k = 0; k < logits.cols(); ++k) {
        const auto ri = static_cast<Eigen::Index>(r);
        if (direct.grad_logits(ri, k) != 0.0 || std::signbit(direct.grad_logits(ri, k)) ||
            taped(ri, k) != 0.0 || std::signbit(taped(ri, k))) {
          return {"masking", false, "nonzero gradient at masked row in case " + std::to_string(c)};
        }
      }
    }
  }
  return {"masking", true, std::to_string(cases) + " cases"};
}

CheckResult permutation_check(std::size_t permutations, std::uint64_t seed) {
  const auto dims = tiny_dims();
  const auto params = nn::init_parameters<double>(dims, seed);
  nn::Rng rng(seed + 1);
  const auto ids = random_ids(rng, 7, dims.vocab_size);
  const auto base = nn::encode_sequence<double>(ids, params, false);
  nn::Matrix<double> memory(4, dims.d_model);
  for (Eigen::Index i = 0; i < memory.size(); ++i) memory.data()[i] = 2.0 * nn::uniform01(rng) - 1.0;
  const std::vector<std::int32_t> prefix{3, 5, 7};
  const nn::Matrix<double> base_logits = nn::decode_step_logits<double>(prefix, memory, params);

  double worst = 0.0;
  std::vector<std::size_t> perm(ids.size());
  std::vector<std::size_t> mperm(static_cast<std::size_t>(memory.rows()));
  for (std::size_t p = 0; p < permutations; ++p) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[nn::uniform_index(rng, i)]);
    std::vector<std::int32_t> shuffled(ids.size());
    nn::Matrix<double> expected(base.rows(), base.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      shuffled[i] = ids[perm[i]];
      expected.row(static_cast<Eigen::Index>(i)) = base.row(static_cast<Eigen::Index>(perm[i]));
    }
    worst = std::max(worst, relative_gap(nn::encode_sequence<double>(shuffled, params, false), expected));

    std::iota(mperm.begin(), mperm.end(), std::size_t{0});
    for (std::size_t i = mperm.size(); i > 1; --i) std::swap(mperm[i - 1], mperm[nn::uniform_index(rng, i)]);
    nn::Matrix<double> permuted(memory.rows(), memory.cols());
    for (std::size_t i = 0; i < mperm.size(); ++i) {
      permuted.row(static_cast<Eigen::Index>(i)) = memory.row(static_cast<Eigen::Index>(mperm[i]));
    }
    const nn::Matrix<double> logits = nn::decode_step_logits<double>(prefix, permuted, params);
    worst = std::max(worst, relative_gap(logits, base_logits));
  }
  return {"permutation", worst <= 1e-5, format_error("max relative deviation", worst)};
}

std::vector<CheckResult> run_all(std::uint64_t seed) {
  return {gradient_check(128, seed + 6), masking_check(50, seed + 10), permutation_check(20, seed + 12)};
}

}  // namespace mrg::checks
