#pragma once

#include <span>
#include <vector>

#include "b0spec/spectrum.hpp"

namespace b0spec {

/// Affine map recorded by normalize_01: x = lo + y·(hi − lo).
struct ScaleRecord {
    double lo = 0.0;
    double hi = 1.0;

    std::vector<double> invert(std::span<const double> y) const;
};

struct Normalized {
    std::vector<double> values;
    ScaleRecord scale;
};

/// Min–max map onto [0, 1]. Throws ConstantVector when max == min.
Normalized normalize_01(std::span<const double> x);

/// Window used to feed B0 maps to the generators.
inline constexpr double kB0WindowLoHz = -50.0;
inline constexpr double kB0WindowHiHz = 50.0;

/// Fixed-window map of a B0 map onto [0, 1], clipping outside [−50, 50] Hz.
std::vector<double> normalize_b0(const B0Map& map);

double mse(std::span<const double> a, std::span<const double> b);
double mse(const Spectrum& a, const Spectrum& b);

/// Mean absolute percentage error; every truth entry must be nonzero.
double mape(std::span<const double> pred, std::span<const double> truth);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;  ///< sample standard deviation (n − 1); 0 for n < 2
};
MeanSd mean_sd(std::span<const double> x);

}  // namespace b0spec
