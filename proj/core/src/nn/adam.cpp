#include "b0spec/nn/adam.hpp"

#include <cmath>
#include <string>

#include "b0spec/errors.hpp"

namespace b0spec::nn {

nlohmann::json AdamConfig::to_json() const {
    return {{"lr", lr}, {"beta1", beta1}, {"beta2", beta2}, {"eps", eps}};
}

AdamConfig AdamConfig::from_json(const nlohmann::json& j) {
    AdamConfig c;
    c.lr = j.value("lr", c.lr);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.eps = j.value("eps", c.eps);
    if (!(c.lr > 0.0) || !(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0) || !(c.eps > 0.0))
        throw ConfigError("invalid Adam settings");
    return c;
}

void AdamState::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != grads.size()) {
        throw ShapeError("adam: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
    }
    if (m.empty() && step_count == 0) {
        m.assign(params.size(), 0.0);
        v.assign(params.size(), 0.0);
    } else if (m.size() != params.size()) {
        throw ShapeError("adam: moment buffers sized for a different parameter vector");
    }
    ++step_count;
    const double t = static_cast<double>(step_count);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

}  // namespace b0spec::nn
