#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "b0spec/nn/network.hpp"

namespace b0spec::testing {

inline nn::Tensor random_tensor(nn::Shape s, std::uint64_t seed) {
    nn::Tensor t(std::move(s));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : t.data) v = u(rng);
    return t;
}

/// Worst relative error between backprop and central differences over every
/// parameter and every input element, for an MSE loss on a random target.
inline double gradient_error(nn::Network& net, const nn::Tensor& x, const nn::Tensor* side, std::uint64_t seed) {
    using nn::Tensor;
    net.init(seed);
    // Nonzero biases so every parameter has a nontrivial gradient path.
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (double& v : net.mutable_params()) v += u(rng);

    nn::ForwardCache cache;
    const Tensor y = net.forward(x, side, &cache);
    const Tensor target = random_tensor(y.shape, seed + 2);
    Tensor gy;
    nn::mse_loss(y, target, &gy);
    std::vector<double> grads(net.param_count(), 0.0);
    Tensor gx;
    net.backward(cache, gy, grads, &gx);

    auto loss = [&](const Tensor& in) { return nn::mse_loss(net.forward(in, side), target); };
    const double eps = 1e-5;
    double worst = 0.0;
    auto rel = [](double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); };
    for (std::size_t i = 0; i < net.param_count(); ++i) {
        const double keep = net.params()[i];
        net.mutable_params()[i] = keep + eps;
        const double up = loss(x);
        net.mutable_params()[i] = keep - eps;
        const double dn = loss(x);
        net.mutable_params()[i] = keep;
        worst = std::max(worst, rel(grads[i], (up - dn) / (2 * eps)));
    }
    Tensor xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = xp.data[i];
        xp.data[i] = keep + eps;
        const double up = loss(xp);
        xp.data[i] = keep - eps;
        const double dn = loss(xp);
        xp.data[i] = keep;
        worst = std::max(worst, rel(gx.data[i], (up - dn) / (2 * eps)));
    }
    return worst;
}

}  // namespace b0spec::testing
