#pragma once

#include <cstdint>
#include <vector>

namespace mrg {

struct TrainOptions {
  std::size_t epochs = 1;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;
};

struct TrainLog {
  std::vector<double> epoch_loss;  // mean per-position loss of each epoch
  std::uint64_t steps = 0;
};

}  // namespace mrg
