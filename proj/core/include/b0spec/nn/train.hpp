#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "b0spec/nn/adam.hpp"
#include "b0spec/nn/network.hpp"

namespace b0spec::nn {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 4;
    AdamConfig adam;
    std::uint64_t seed = 0;
};

/// Mean training loss per epoch (sample-weighted over the mini-batches).
struct LossHistory {
    std::vector<double> epoch_loss;
};

/// Performs one optimizer step on the given sample indices and returns the
/// batch's mean loss.
using BatchStep = std::function<double(std::span<const std::size_t> indices)>;

/// Deterministic permutation of [0, n) for an epoch.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

/// Shared epoch loop: reshuffles every epoch, feeds batches (the last one may
/// be short) and raises DivergenceError on a non-finite epoch loss.
LossHistory run_epochs(std::size_t n_samples, std::size_t epochs, std::size_t batch_size, std::uint64_t seed,
                       const BatchStep& step);

/// Supervised MSE training of a single network. Initializes the network from
/// cfg.seed if it has no parameters yet.
LossHistory train(Network& net, const Tensor& inputs, const Tensor& targets, const TrainConfig& cfg,
                  const Tensor* side = nullptr);

/// Rows `indices` of a batched tensor.
Tensor gather(const Tensor& t, std::span<const std::size_t> indices);

}  // namespace b0spec::nn
