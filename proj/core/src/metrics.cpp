#include "b0spec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "b0spec/errors.hpp"

namespace b0spec {

std::vector<double> ScaleRecord::invert(std::span<const double> y) const {
    std::vector<double> x(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) x[i] = lo + y[i] * (hi - lo);
    return x;
}

Normalized normalize_01(std::span<const double> x) {
    if (x.empty()) throw ShapeError("normalize_01 of an empty vector");
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    if (!std::isfinite(*mn) || !std::isfinite(*mx)) throw InputError("non-finite input to normalize_01");
    if (!(*mx > *mn)) throw ConstantVector("max equals min");
    Normalized out{std::vector<double>(x.size()), ScaleRecord{*mn, *mx}};
    const double range = *mx - *mn;
    for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = (x[i] - *mn) / range;
    // Exact extrema regardless of rounding.
    out.values[static_cast<std::size_t>(mn - x.begin())] = 0.0;
    out.values[static_cast<std::size_t>(mx - x.begin())] = 1.0;
    return out;
}

std::vector<double> normalize_b0(const B0Map& map) {
    const auto v = map.values();
    std::vector<double> out(v.size());
    const double range = kB0WindowHiHz - kB0WindowLoHz;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::clamp((v[i] - kB0WindowLoHz) / range, 0.0, 1.0);
    }
    return out;
}

double mse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ShapeError("mse length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    if (a.empty()) throw ShapeError("mse of empty vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double mse(const Spectrum& a, const Spectrum& b) { return mse(a.values(), b.values()); }

double mape(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) throw ShapeError("mape length mismatch");
    if (truth.empty()) throw ShapeError("mape of empty vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 0.0) throw DivisionByZeroTruth("truth entry " + std::to_string(i) + " is zero");
        acc += std::abs(pred[i] - truth[i]) / std::abs(truth[i]);
    }
    return 100.0 * acc / static_cast<double>(truth.size());
}

MeanSd mean_sd(std::span<const double> x) {
    MeanSd out;
    if (x.empty()) return out;
    out.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    if (x.size() < 2) return out;
    double acc = 0.0;
    for (double v : x) acc += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(acc / static_cast<double>(x.size() - 1));
    return out;
}

}  // namespace b0spec
