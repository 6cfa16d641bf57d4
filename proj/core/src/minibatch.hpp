#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mrg/nn/adam.hpp"
#include "mrg/nn/tape.hpp"
#include "mrg/training.hpp"

namespace mrg::detail {

/// Shared mini-batch loop. `positions(i)` is the number of supervised
/// positions of example i; `loss(tape, i, weight)` builds example i's loss
/// scaled by `weight`. Gradients of a batch are summed in example order, so
/// a run is reproducible from the seed alone.
template <class PositionsFn, class LossFn>
TrainLog minibatch_train(std::size_t count, const TrainOptions& options, nn::ParameterStore<float>& params,
                         nn::AdamState<float>& adam, PositionsFn positions, LossFn loss) {
  if (count == 0) throw std::invalid_argument("training dataset is empty");
  if (options.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  adam.learning_rate = options.learning_rate;
  TrainLog log;
  nn::Rng rng(options.seed);
  auto grads = params.zeros_like();
  std::vector<std::size_t> order(count);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[nn::uniform_index(rng, i)]);
    double epoch_sum = 0.0;
    std::size_t epoch_positions = 0;
    for (std::size_t begin = 0; begin < count; begin += options.batch_size) {
      const std::size_t end = std::min(count, begin + options.batch_size);
      std::size_t batch_positions = 0;
      for (std::size_t b = begin; b < end; ++b) batch_positions += positions(order[b]);
      if (batch_positions == 0) continue;
      grads.set_zero();
      const float weight = 1.0f / static_cast<float>(batch_positions);
      double batch_loss = 0.0;
      for (std::size_t b = begin; b < end; ++b) {
        nn::Tape<float> tape(params, &grads, true, &rng);
        auto l = loss(tape, order[b], weight);
        batch_loss += tape.value(l)(0, 0);
        tape.backward(l);
      }
      nn::adam_step(params, grads, adam);
      ++log.steps;
      epoch_sum += batch_loss * static_cast<double>(batch_positions);
      epoch_positions += batch_positions;
    }
    log.epoch_loss.push_back(epoch_positions ? epoch_sum / static_cast<double>(epoch_positions) : 0.0);
  }
  return log;
}

}  // namespace mrg::detail
