#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "b0spec/errors.hpp"
#include "b0spec/lineshape.hpp"
#include "b0spec/parallel.hpp"
#include "b0spec/synth.hpp"

namespace b0spec::synth {

void OracleConfig::validate() const {
    if (subgrid == 0 || kB0MapSize % subgrid != 0) throw ConfigError("oracle subgrid must divide 128");
    if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
    if (!(baseline_scale >= 0.0)) throw ConfigError("baseline_scale must be non-negative");
}

Spectrum make_baseline(const SpectralAxis& axis, double scale, std::uint64_t seed) {
    Spectrum out(axis);
    if (scale == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int count = 4 + static_cast<int>(unit(rng) * 5.0);  // 4..8
    for (int k = 0; k < count; ++k) {
        const double center = axis.ppm_min + unit(rng) * (axis.ppm_max - axis.ppm_min);
        const double sigma = 0.3 + 0.9 * unit(rng);
        const double amp = scale * unit(rng);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = (axis.ppm(i) - center) / sigma;
            out[i] += amp * std::exp(-0.5 * d * d);
        }
    }
    return out;
}

Spectrum average_over_map(const PeakList& peaks, const B0Map& b0, const SpectralAxis& axis,
                          std::size_t subgrid) {
    if (subgrid == 0 || kB0MapSize % subgrid != 0) throw ConfigError("subgrid must divide 128");
    const std::size_t stride = kB0MapSize / subgrid;
    const std::size_t n = axis.n_points;

    // Each subgrid cell contributes the mean offset of its stride×stride block.
    std::vector<double> offsets(subgrid * subgrid, 0.0);
    if (stride == 1) {
        std::copy(b0.values().begin(), b0.values().end(), offsets.begin());
    } else {
        const double inv_block = 1.0 / static_cast<double>(stride * stride);
        for (std::size_t r = 0; r < kB0MapSize; ++r)
            for (std::size_t c = 0; c < kB0MapSize; ++c) offsets[(r / stride) * subgrid + c / stride] += b0.at(r, c);
        for (double& v : offsets) v *= inv_block;
    }

    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = axis.hz(i);
    std::vector<double> centers, areas, g2s;
    for (const Peak& p : peaks.peaks) {
        centers.push_back(axis.ppm_to_hz(p.center_ppm));
        areas.push_back(p.amplitude * p.gamma_hz / std::numbers::pi);
        g2s.push_back(p.gamma_hz * p.gamma_hz);
    }

    // Two-level accumulation (per row, then across rows) keeps the mean of
    // identical terms exact to a few ulps.
    std::vector<double> total(n, 0.0), row(n);
    for (std::size_t r = 0; r < subgrid; ++r) {
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t c = 0; c < subgrid; ++c) {
            const double shift = offsets[r * subgrid + c];
            for (std::size_t k = 0; k < centers.size(); ++k) {
                const double center = centers[k] + shift;
                const double a = areas[k];
                const double g2 = g2s[k];
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = f[i] - center;
                    row[i] += a / (d * d + g2);
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) total[i] += row[i];
    }
    const double inv = 1.0 / static_cast<double>(subgrid * subgrid);
    Spectrum out(axis);
    for (std::size_t i = 0; i < n; ++i) out[i] = total[i] * inv;
    return out;
}

OracleOutput oracle_measured(const B0Map& b0, const MetaboliteRatios& ratios, const BasisSet& basis,
                             const OracleConfig& cfg) {
    cfg.validate();
    for (double v : ratios.values) {
        if (!(v >= 0.0)) throw InputError("ratios must be non-negative");
    }
    const SpectralAxis& axis = basis.axis();
    OracleOutput out{Spectrum(axis), Spectrum(axis), Spectrum(axis)};
    out.metabolites = average_over_map(basis.weighted_peaks(ratios.values), b0, axis, cfg.subgrid);
    out.baseline = make_baseline(axis, cfg.baseline_scale, derive_seed(cfg.seed, 0));
    out.measured = out.metabolites + out.baseline;
    if (cfg.noise_sigma > 0.0) {
        std::mt19937_64 rng(derive_seed(cfg.seed, 1));
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
        for (std::size_t i = 0; i < out.measured.size(); ++i) out.measured[i] += noise(rng);
    }
    return out;
}

double water_linewidth(const B0Map& b0, std::size_t subgrid) {
    const SpectralAxis main = make_axis();
    const double h = 0.5 * main.step_ppm();
    const double half_span = h * static_cast<double>((main.n_points - 1) / 2);
    SpectralAxis water{main.n_points, kWaterPpm - half_span, kWaterPpm + half_span, main.larmor_mhz};
    PeakList ref{{Peak{kWaterPpm, 1.0, kWaterGammaHz}}};
    return fwhm(average_over_map(ref, b0, water, subgrid));
}

Spectrum simulate_conventional(const MetaboliteRatios& ratios, const BasisSet& basis, double gamma_extra,
                               double noise_sigma, std::uint64_t seed) {
    if (!(gamma_extra >= 0.0)) throw InputError("gamma_extra must be non-negative");
    if (!(noise_sigma >= 0.0)) throw InputError("noise_sigma must be non-negative");
    PeakList peaks = basis.weighted_peaks(ratios.values);
    for (Peak& p : peaks.peaks) p.gamma_hz += gamma_extra;
    Spectrum s = synth_lorentzian(peaks, 0.0, basis.axis());
    if (noise_sigma > 0.0) {
        std::mt19937_64 rng(derive_seed(seed, 1));
        std::normal_distribution<double> noise(0.0, noise_sigma);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += noise(rng);
    }
    return s;
}

const std::array<RatioRange, kNumMetabolites>& ratio_ranges() {
    // Ala Asp Cr PCr GABA Gln Glu GPC PCh GSH Ins NAA NAAG Lac Tau
    static const std::array<RatioRange, kNumMetabolites> ranges = {{
        {0.00, 0.15},  // Ala
        {0.00, 0.50},  // Asp
        {0.30, 0.70},  // Cr (PCr = 1 − Cr)
        {0.30, 0.70},  // PCr
        {0.10, 0.35},  // GABA
        {0.00, 0.60},  // Gln
        {0.80, 1.40},  // Glu
        {0.00, 0.20},  // GPC
        {0.02, 0.35},  // PCh
        {0.00, 0.35},  // GSH
        {0.50, 1.00},  // Ins
        {0.80, 2.00},  // NAA
        {0.00, 0.25},  // NAAG
        {0.00, 0.60},  // Lac
        {0.00, 0.40},  // Tau
    }};
    return ranges;
}

MetaboliteRatios sample_ratios(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& ranges = ratio_ranges();
    MetaboliteRatios r;
    for (std::size_t m = 0; m < kNumMetabolites; ++m) {
        const double u = unit(rng);
        r.values[m] = ranges[m].lo + u * (ranges[m].hi - ranges[m].lo);
    }
    r[Metabolite::PCr] = 1.0 - r[Metabolite::Cr];
    return r;
}

}  // namespace b0spec::synth
