#include "b0spec/nn/train.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "b0spec/errors.hpp"
#include "b0spec/parallel.hpp"

namespace b0spec::nn {

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(seed, epoch));
    // Explicit Fisher–Yates so the permutation does not depend on the library's shuffle.
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

LossHistory run_epochs(std::size_t n_samples, std::size_t epochs, std::size_t batch_size, std::uint64_t seed,
                       const BatchStep& step) {
    if (n_samples == 0) throw DatasetError("training set is empty");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    LossHistory hist;
    for (std::size_t e = 0; e < epochs; ++e) {
        const auto order = epoch_order(n_samples, seed, e);
        double total = 0.0;
        for (std::size_t b = 0; b < n_samples; b += batch_size) {
            const std::size_t len = std::min(batch_size, n_samples - b);
            const double loss = step(std::span<const std::size_t>(order.data() + b, len));
            total += loss * static_cast<double>(len);
        }
        const double mean = total / static_cast<double>(n_samples);
        if (!std::isfinite(mean)) throw DivergenceError("training loss became non-finite at epoch " + std::to_string(e + 1));
        hist.epoch_loss.push_back(mean);
    }
    return hist;
}

Tensor gather(const Tensor& t, std::span<const std::size_t> indices) {
    Shape s = t.shape;
    s[0] = indices.size();
    Tensor out(s);
    const std::size_t k = t.sample_size();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= t.batch()) throw ShapeError("gather index out of range");
        std::memcpy(out.ptr() + i * k, t.ptr() + indices[i] * k, k * sizeof(double));
    }
    return out;
}

LossHistory train(Network& net, const Tensor& inputs, const Tensor& targets, const TrainConfig& cfg,
                  const Tensor* side) {
    if (inputs.batch() != targets.batch() || (side && side->batch() != inputs.batch()))
        throw ShapeError("inputs, targets and side inputs disagree on sample count");
    if (!net.initialized()) net.init(cfg.seed);
    AdamState adam(cfg.adam);
    std::vector<double> grads(net.param_count());
    ForwardCache cache;
    return run_epochs(inputs.batch(), cfg.epochs, cfg.batch_size, cfg.seed, [&](std::span<const std::size_t> idx) {
        const Tensor x = gather(inputs, idx);
        const Tensor t = gather(targets, idx);
        Tensor s;
        if (side) s = gather(*side, idx);
        const Tensor y = net.forward(x, side ? &s : nullptr, &cache);
        Tensor g;
        const double loss = mse_loss(y, t, &g);
        std::fill(grads.begin(), grads.end(), 0.0);
        net.backward(cache, g, grads);
        adam.step(net.mutable_params(), grads);
        return loss;
    });
}

}  // namespace b0spec::nn
