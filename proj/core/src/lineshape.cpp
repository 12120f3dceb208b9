#include "b0spec/lineshape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "b0spec/errors.hpp"

namespace b0spec {

void accumulate_lorentzian(const PeakList& peaks, double shift_hz, const SpectralAxis& axis,
                           std::span<double> out, double weight) {
    if (out.size() != axis.n_points) throw ShapeError("output span does not match axis");
    std::vector<double> f(axis.n_points);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = axis.hz(i);
    for (const Peak& p : peaks.peaks) {
        const double center = axis.ppm_to_hz(p.center_ppm) + shift_hz;
        const double a = weight * p.amplitude * p.gamma_hz / std::numbers::pi;
        const double g2 = p.gamma_hz * p.gamma_hz;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double d = f[i] - center;
            out[i] += a / (d * d + g2);
        }
    }
}

Spectrum synth_lorentzian(const PeakList& peaks, double shift_hz, const SpectralAxis& axis) {
    Spectrum s(axis);
    accumulate_lorentzian(peaks, shift_hz, axis, s.values());
    return s;
}

double fwhm(const Spectrum& s) {
    const auto v = s.values();
    if (v.size() < 3) throw LineshapeError("spectrum too short");
    const auto max_it = std::max_element(v.begin(), v.end());
    std::vector<double> sorted(v.begin(), v.end());
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    double median = sorted[sorted.size() / 2];
    if (sorted.size() % 2 == 0) {
        const double lower = *std::max_element(sorted.begin(), sorted.begin() + sorted.size() / 2);
        median = 0.5 * (median + lower);
    }
    const double top = *max_it;
    if (!(top > median)) throw LineshapeError("no maximum above the baseline median");
    const double half = median + 0.5 * (top - median);

    // Outermost half-height crossings, so a split line counts its full extent.
    std::size_t l = 0;
    while (v[l] < half) ++l;
    if (l == 0) throw LineshapeError("no half-height crossing on the low side");
    std::size_t r = v.size() - 1;
    while (v[r] < half) --r;
    if (r + 1 == v.size()) throw LineshapeError("no half-height crossing on the high side");

    const SpectralAxis& ax = s.axis();
    const double xl = ax.ppm(l - 1) + (half - v[l - 1]) / (v[l] - v[l - 1]) * ax.step_ppm();
    const double xr = ax.ppm(r) + (v[r] - half) / (v[r] - v[r + 1]) * ax.step_ppm();
    return ax.ppm_to_hz(xr - xl);
}

}  // namespace b0spec
