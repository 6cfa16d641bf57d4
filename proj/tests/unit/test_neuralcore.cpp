#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mrg/checks.hpp"
#include "mrg/nn/adam.hpp"
#include "mrg/nn/checkpoint.hpp"
#include "mrg/nn/gradcheck.hpp"
#include "mrg/nn/loss.hpp"
#include "mrg/nn/params.hpp"
#include "mrg/nn/tape.hpp"
#include "mrg/nn/transformer.hpp"
#include "mrg/realizer.hpp"
#include "reference_model.hpp"
#include "temp_dir.hpp"

using namespace mrg;
using namespace mrg::nn;

namespace {

ModelDims small_dims(bool decoder) {
  ModelDims d;
  d.vocab_size = 15;
  d.d_model = 8;
  d.heads = 2;
  d.ff_dim = 12;
  d.encoder_layers = 2;
  d.decoder_layers = 2;
  d.classifier = true;
  d.decoder = decoder;
  d.dropout = 0.0f;
  return d;
}

// Perturb every tensor so biases, offsets and scales are all exercised.
ParameterStore<double> randomized(const ModelDims& dims, std::uint64_t seed) {
  auto p = init_parameters<double>(dims, seed);
  std::mt19937_64 rng(seed * 7 + 1);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto& [name, t] : p.tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += u(rng);
  return p;
}

Matrix<double> to_matrix(const ref::Mat& m) {
  Matrix<double> out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m[0].size()));
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m[r].size(); ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m[r][c];
  return out;
}

ref::Mat to_ref(const Matrix<double>& m) {
  ref::Mat out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = m(r, c);
  return out;
}

}  // namespace

TEST(Init, ShapesAndRanges) {
  const auto dims = labeller_dims(100);
  EXPECT_EQ(dims.d_model, 128);
  const auto p = init_parameters<float>(dims, 1);
  EXPECT_EQ(p.at("embed.tokens").rows(), 100);
  EXPECT_EQ(p.at("embed.tokens").cols(), 128);
  EXPECT_EQ(p.at("classifier.weight").cols(), 3);
  EXPECT_TRUE(p.at("classifier.bias").isZero());
  EXPECT_TRUE((p.at("encoder.0.ln1.gamma").array() == 1.0f).all());
  const float bound = 1.0f / std::sqrt(128.0f);
  EXPECT_LE(p.at("encoder.0.attn.q.weight").cwiseAbs().maxCoeff(), bound);
  EXPECT_TRUE(init_parameters<float>(dims, 1).at("embed.tokens") == p.at("embed.tokens"));
  EXPECT_FALSE(init_parameters<float>(dims, 2).at("embed.tokens") == p.at("embed.tokens"));
}

TEST(Dims, Validation) {
  auto d = small_dims(false);
  d.heads = 3;
  EXPECT_THROW(d.validate(), std::invalid_argument);
}

TEST(EncodeSequence, WidthMatchesModel) {
  const auto dims = labeller_dims(40);
  const auto p = init_parameters<float>(dims, 3);
  const std::vector<std::int32_t> ids{5, 6, 7, 8, 9};
  const auto h = encode_sequence<float>(ids, p, true);
  EXPECT_EQ(h.rows(), 5);
  EXPECT_EQ(h.cols(), 128);
}

TEST(EncodeSequence, MatchesReferenceImplementation) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto dims = small_dims(false);
    const auto p = randomized(dims, seed);
    const std::vector<std::int32_t> ids{5, 9, 2, 14, 7, 7};
    for (bool positions : {true, false}) {
      const auto got = encode_sequence<double>(ids, p, positions);
      const auto want = to_matrix(ref::encode_sequence(p, ids, positions));
      EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-5) << "seed " << seed;
    }
  }
}

TEST(EncodeSequence, OutOfRangeIdThrows) {
  const auto p = init_parameters<double>(small_dims(false), 1);
  const std::vector<std::int32_t> ids{5, 15};
  EXPECT_THROW(encode_sequence<double>(ids, p, true), std::out_of_range);
}

TEST(DecodeStep, MatchesReferenceImplementation) {
  const auto dims = small_dims(true);
  const auto p = randomized(dims, 9);
  Matrix<double> memory(3, dims.d_model);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  for (Eigen::Index i = 0; i < memory.size(); ++i) memory.data()[i] = n(rng);
  const std::vector<std::int32_t> prefix{3, 8, 11};
  const auto got = decode_step_logits<double>(prefix, memory, p);
  const auto want = ref::decode_logits(p, prefix, to_ref(memory));
  ASSERT_EQ(static_cast<std::size_t>(got.size()), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got(static_cast<Eigen::Index>(i)), want[i], 1e-5);
  const auto probs = decode_step<double>(prefix, memory, p);
  EXPECT_NEAR(probs.sum(), 1.0, 1e-9);
  EXPECT_THROW(decode_step<double>(prefix, Matrix<double>(0, dims.d_model), p), std::invalid_argument);
}

TEST(EncodePaths, MatchesReferenceImplementation) {
  const auto dims = small_dims(true);
  const auto p = randomized(dims, 21);
  Matrix<double> reps(4, dims.d_model);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  for (Eigen::Index i = 0; i < reps.size(); ++i) reps.data()[i] = n(rng);
  const auto got = encode_paths<double>(reps, p);
  const auto want = to_matrix(ref::encode_representations(p, to_ref(reps)));
  EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(ClassifyPositions, RowsSumToOne) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 3);
  const auto p = randomized(small_dims(false), 5);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix<double> h(1 + trial % 5, 8);
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = n(rng);
    const auto probs = classify_positions(h, p);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) EXPECT_NEAR(probs.row(r).sum(), 1.0, 1e-6);
  }
}

TEST(ClassifyPositions, ZeroHeadGivesUniform) {
  auto p = init_parameters<double>(small_dims(false), 1);
  p.at("classifier.weight").setZero();
  p.at("classifier.bias").setZero();
  Matrix<double> h = Matrix<double>::Random(4, 8);
  const auto probs = classify_positions(h, p);
  EXPECT_TRUE(probs.isApproxToConstant(1.0 / 3.0, 1e-12));
}

TEST(ClassifyPositions, HandComputedSoftmax) {
  ModelDims d = small_dims(false);
  d.d_model = 2;
  d.heads = 1;
  auto p = init_parameters<double>(d, 1);
  p.at("classifier.weight") = Matrix<double>::Zero(2, 3);
  p.at("classifier.weight")(0, 0) = 1.0;
  p.at("classifier.weight")(0, 2) = 2.0;
  p.at("classifier.bias").setZero();
  Matrix<double> h(1, 2);
  h << 1.0, 0.0;
  // logits (1, 0, 2)
  const double z = std::exp(1.0) + 1.0 + std::exp(2.0);
  const auto probs = classify_positions(h, p);
  EXPECT_NEAR(probs(0, 0), std::exp(1.0) / z, 1e-12);
  EXPECT_NEAR(probs(0, 1), 1.0 / z, 1e-12);
  EXPECT_NEAR(probs(0, 2), std::exp(2.0) / z, 1e-12);
}

TEST(CrossEntropy, UniformAndOneHot) {
  Matrix<double> uniform = Matrix<double>::Constant(4, 3, 1.0 / 3.0);
  const std::vector<std::int32_t> gold{0, 1, 2, 1};
  const std::vector<std::uint8_t> mask{1, 1, 1, 1};
  EXPECT_NEAR(cross_entropy_masked(uniform, gold, mask).loss, std::log(3.0), 1e-12);
  Matrix<double> onehot = Matrix<double>::Zero(4, 3);
  for (int r = 0; r < 4; ++r) onehot(r, gold[static_cast<std::size_t>(r)]) = 1.0;
  EXPECT_EQ(cross_entropy_masked(onehot, gold, mask).loss, 0.0);
}

TEST(CrossEntropy, MaskedRowsIgnoredAndAllMaskedThrows) {
  Matrix<double> probs(2, 3);
  probs << 0.2, 0.3, 0.5, 1e-30, 1e-30, 1.0;
  const std::vector<std::int32_t> gold{2, 0};
  const std::vector<std::uint8_t> mask{1, 0};
  const auto r = cross_entropy_masked(probs, gold, mask);
  EXPECT_NEAR(r.loss, -std::log(0.5), 1e-12);
  EXPECT_TRUE(r.grad_logits.row(1).isZero(0));
  const std::vector<std::uint8_t> none{0, 0};
  EXPECT_THROW(cross_entropy_masked(probs, gold, none), std::invalid_argument);
}

TEST(Adam, FirstStepHandComputed) {
  ParameterStore<double> p;
  p.set("w", Matrix<double>::Zero(1, 1));
  ParameterStore<double> g;
  g.set("w", Matrix<double>::Ones(1, 1));
  AdamState<double> s(0.001);
  adam_step(p, g, s);
  EXPECT_NEAR(p.at("w")(0, 0), -0.001 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p.at("w")(0, 0), -0.000999999, 1e-9);
}

TEST(Adam, ZeroGradientIsFixpoint) {
  auto p = init_parameters<double>(small_dims(false), 3);
  const auto before = p.tensors();
  auto g = p.zeros_like();
  AdamState<double> s(0.01);
  for (int i = 0; i < 3; ++i) adam_step(p, g, s);
  EXPECT_EQ(p.tensors(), before);
}

TEST(Adam, NonFiniteGradientRejected) {
  ParameterStore<double> p;
  p.set("w", Matrix<double>::Zero(1, 2));
  ParameterStore<double> g;
  g.set("w", Matrix<double>::Constant(1, 2, std::nan("")));
  AdamState<double> s;
  EXPECT_THROW(adam_step(p, g, s), std::domain_error);
  EXPECT_EQ(s.step, 0u);
  EXPECT_TRUE(p.at("w").isZero());
}

TEST(Adam, IdenticalRunsAreBitIdentical) {
  auto run = [] {
    auto p = init_parameters<float>(small_dims(false), 4);
    AdamState<float> s(0.01);
    for (int step = 0; step < 5; ++step) {
      ParameterStore<float> grads = p.zeros_like();
      Tape<float> tape(p, &grads);
      const std::vector<std::int32_t> ids{5, 6, 7};
      auto logits = classifier_logits(tape, encode_sequence(tape, std::span<const std::int32_t>(ids), true));
      const std::vector<std::int32_t> gold{0, 1, 2};
      const std::vector<std::uint8_t> mask{1, 1, 1};
      tape.backward(tape.masked_cross_entropy(logits, gold, mask, 1.0f));
      adam_step(p, grads, s);
    }
    return p;
  };
  EXPECT_EQ(run().tensors(), run().tensors());
}

TEST(GradCheck, LinearLossIsExact) {
  ParameterStore<double> p;
  Matrix<double> w(1, 5);
  w << 0.5, -1.0, 2.0, 0.25, 3.0;
  p.set("w", w);
  const Matrix<double> x = (Matrix<double>(1, 5) << 1.0, 2.0, -3.0, 0.5, 0.1).finished();
  LossFunction loss = [&](const ParameterStore<double>& params, ParameterStore<double>* grads) {
    if (grads) grads->at("w") += x;
    return params.at("w").cwiseProduct(x).sum();
  };
  EXPECT_LT(finite_difference_check(loss, p, 50).max_relative_error, 1e-9);
}

TEST(GradCheck, ConstantLossHasZeroGradient) {
  ParameterStore<double> p;
  p.set("w", Matrix<double>::Ones(2, 2));
  LossFunction loss = [](const ParameterStore<double>&, ParameterStore<double>*) { return 4.2; };
  const auto r = finite_difference_check(loss, p, 20);
  EXPECT_EQ(r.max_relative_error, 0.0);
}

TEST(GradCheck, TinyFullModel) {
  const auto r = checks::gradient_check(100, 7);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(SelfChecks, MaskingAndPermutation) {
  const auto m = checks::masking_check(30, 2);
  EXPECT_TRUE(m.passed) << m.detail;
  const auto q = checks::permutation_check(10, 3);
  EXPECT_TRUE(q.passed) << q.detail;
}

TEST(EncodePaths, RowPermutationEquivariant) {
  std::mt19937_64 rng(31);
  const auto dims = small_dims(true);
  const auto p = randomized(dims, 31);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    Matrix<double> reps = Matrix<double>::Random(n, dims.d_model);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix<double> shuffled(n, dims.d_model);
    for (Eigen::Index i = 0; i < n; ++i) shuffled.row(i) = reps.row(perm[static_cast<std::size_t>(i)]);
    const auto a = encode_paths<double>(reps, p);
    const auto b = encode_paths<double>(shuffled, p);
    for (Eigen::Index i = 0; i < n; ++i)
      EXPECT_LT((b.row(i) - a.row(perm[static_cast<std::size_t>(i)])).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Checkpoint, RoundTripIsExact) {
  TempDir dir;
  Checkpoint c;
  c.params = init_parameters<float>(small_dims(true), 12);
  c.vocab_hash = 0x1234abcdULL;
  c.metadata_json = R"({"kind":"realizer"})";
  save_checkpoint(c, dir / "m.ckpt");
  const auto back = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(back.params.dims(), c.params.dims());
  EXPECT_EQ(back.params.tensors(), c.params.tensors());
  EXPECT_EQ(back.vocab_hash, c.vocab_hash);
  EXPECT_EQ(back.metadata_json, c.metadata_json);
  EXPECT_EQ(serialize_checkpoint(back), serialize_checkpoint(c));
}

TEST(Checkpoint, CorruptBytesRejected) {
  EXPECT_ANY_THROW(parse_checkpoint("not a checkpoint"));
  Checkpoint c;
  c.params = init_parameters<float>(small_dims(false), 1);
  auto bytes = serialize_checkpoint(c);
  bytes.resize(bytes.size() / 2);
  EXPECT_ANY_THROW(parse_checkpoint(bytes));
}
