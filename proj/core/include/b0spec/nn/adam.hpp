#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace b0spec::nn {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    nlohmann::json to_json() const;
    static AdamConfig from_json(const nlohmann::json& j);
};

struct AdamState {
    AdamConfig cfg;
    std::uint64_t step_count = 0;
    std::vector<double> m;
    std::vector<double> v;

    explicit AdamState(AdamConfig c = {}) : cfg(c) {}
    /// Bias-corrected update. Moments are sized on the first call; later
    /// length mismatches throw ShapeError.
    void step(std::span<double> params, std::span<const double> grads);
};

}  // namespace b0spec::nn
