#pragma once

// Small built-in consistency checks used by `mrg selfcheck` and the tests:
// a finite-difference gradient check on a tiny encoder-decoder, the masked
// loss contract and unpositioned permutation equivariance.

#include <cstdint>
#include <string>
#include <vector>

#include "mrg/nn/gradcheck.hpp"
#include "mrg/nn/params.hpp"

namespace mrg::checks {

/// d=8, 2 heads, ff 16, 2+2 layers, classifier and decoder, no dropout.
nn::ModelDims tiny_dims(int vocab_size = 12);

/// Classifier loss on a random labelled sequence plus a teacher-forced
/// decoder loss over a random bag memory, evaluated in 64-bit mode.
nn::LossFunction tiny_model_loss(const nn::ModelDims& dims, std::uint64_t seed);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

CheckResult gradient_check(std::size_t coordinates = 128, std::uint64_t seed = 7);
CheckResult masking_check(std::size_t cases = 50, std::uint64_t seed = 11);
CheckResult permutation_check(std::size_t permutations = 20, std::uint64_t seed = 13);

std::vector<CheckResult> run_all(std::uint64_t seed = 1);

}  // namespace mrg::checks
