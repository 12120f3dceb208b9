#pragma once

#include <span>

#include "b0spec/spectrum.hpp"

namespace b0spec {

/// Sum of Lorentzian absorption lines A·(γ/π)/((f − f₀ − shift)² + γ²),
/// evaluated at the axis points in Hz.
Spectrum synth_lorentzian(const PeakList& peaks, double shift_hz, const SpectralAxis& axis);

/// Adds the same lineshape into `out` without allocating.
void accumulate_lorentzian(const PeakList& peaks, double shift_hz, const SpectralAxis& axis,
                           std::span<double> out, double weight = 1.0);

/// Full width at half of (max − median) between the outermost crossings,
/// linearly interpolated, in Hz.
double fwhm(const Spectrum& s);

}  // namespace b0spec
