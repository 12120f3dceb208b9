#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "b0spec/spectrum.hpp"

namespace b0spec::synth {

/// Intrinsic Lorentzian HWHM of every metabolite line.
inline constexpr double kMetaboliteGammaHz = 2.0;
/// Integrated line area per proton per unit concentration ratio.
inline constexpr double kProtonArea = 3.0;
/// Reference water line used for the linewidth analog.
inline constexpr double kWaterPpm = 4.7;
inline constexpr double kWaterGammaHz = 2.0;

/// The 15-metabolite basis from the frozen peak table (first-order multiplets,
/// lines outside 0.2–4.1 ppm dropped).
BasisSet default_basis();

// ---------------------------------------------------------------- B0 maps

struct B0FieldParams {
    std::array<double, 2> gradient{0.0, 0.0};  ///< Hz/pixel along (column, row)
    int blob_count = 0;
    double blob_amp = 0.0;     ///< Hz; each blob draws amplitude in [−blob_amp, blob_amp]
    double blob_width = 16.0;  ///< Gaussian sigma, pixels
    std::uint64_t seed = 0;
};

/// Planar gradient through the map center plus Gaussian blobs.
B0Map gen_b0_map(const B0FieldParams& params);

/// Random map rescaled to zero mean and standard deviation `spread_hz`.
B0Map sample_b0_map(double spread_hz, std::uint64_t seed);

// ---------------------------------------------------------------- oracle

struct OracleConfig {
    std::size_t subgrid = kB0MapSize;  ///< cells per side integrated; each uses its block-mean offset
    double noise_sigma = 0.01;
    double baseline_scale = 0.15;
    std::uint64_t seed = 0;

    void validate() const;
};

struct OracleOutput {
    Spectrum measured;
    Spectrum metabolites;
    Spectrum baseline;
};

/// Sum of 4–8 broad Gaussians (σ 0.3–1.2 ppm), amplitudes in [0, scale].
Spectrum make_baseline(const SpectralAxis& axis, double scale, std::uint64_t seed);

/// Physics oracle: pixel-averaged Lorentzian synthesis under the map, plus
/// baseline and white noise.
OracleOutput oracle_measured(const B0Map& b0, const MetaboliteRatios& ratios, const BasisSet& basis,
                             const OracleConfig& cfg);

/// Mean over sampled pixels of `peaks` shifted by each pixel's offset.
Spectrum average_over_map(const PeakList& peaks, const B0Map& b0, const SpectralAxis& axis,
                          std::size_t subgrid);

/// FWHM (Hz) of a unit water line averaged over the map, evaluated on a
/// dedicated axis centred on 4.7 ppm.
double water_linewidth(const B0Map& b0, std::size_t subgrid = kB0MapSize);

/// Adds N(0, sigma²) white noise drawn from `seed`.
void add_white_noise(Spectrum& s, double sigma, std::uint64_t seed);

/// B0-free control: uniform extra Lorentzian broadening plus noise.
Spectrum simulate_conventional(const MetaboliteRatios& ratios, const BasisSet& basis, double gamma_extra,
                               double noise_sigma, std::uint64_t seed);

// ---------------------------------------------------------------- ratios

struct RatioRange {
    double lo = 0.0;
    double hi = 0.0;
};

/// Sampling ranges relative to tCr. Cr is drawn from its range and PCr = 1 − Cr.
const std::array<RatioRange, kNumMetabolites>& ratio_ranges();
MetaboliteRatios sample_ratios(std::mt19937_64& rng);

// ---------------------------------------------------------------- datasets

struct Sample {
    std::string id;
    std::uint64_t seed = 0;
    double spread_hz = 0.0;
    /// Empty for records whose map is reproducible from (spread_hz, map_seed).
    std::optional<B0Map> b0;
    MetaboliteRatios ratios;
    Spectrum measured;
    Spectrum metabolites;
    Spectrum baseline;
    double water_lw_hz = 0.0;
    /// When true the map is identified by (spread_hz, map_seed) and is not
    /// stored or written as a file.
    bool b0_from_seed = false;
    std::uint64_t map_seed = 0;

    /// The stored map, or the one regenerated from its seed.
    B0Map map() const;
};

/// Split name → samples, plus the configuration that produced them.
struct Dataset {
    std::map<std::string, std::vector<Sample>> splits;
    nlohmann::json config;

    const std::vector<Sample>& split(const std::string& name) const;
    std::size_t total() const;
};

struct SplitSizes {
    std::size_t train = 0, val = 0, test = 0;
};
/// Proportional 109:32:33 rounding; every split nonempty. Requires n ≥ 12.
SplitSizes split_sizes(std::size_t n_total);

struct SpreadRange {
    double lo = 2.0;
    double hi = 3.2;
};

/// Volunteer-analog dataset: random ratios and maps through the oracle.
Dataset build_dataset(std::size_t n_total, SpreadRange spread, const OracleConfig& cfg, std::uint64_t seed);

enum class PhantomRegion { NearCenter, Periphery };
std::string to_string(PhantomRegion r);
PhantomRegion phantom_region_from_string(const std::string& s);

/// Phantom composition divided by 10 mM Cr (free choline is carried by PCh).
MetaboliteRatios phantom_ratios();
/// Water linewidth targets, Hz.
double phantom_target_linewidth(PhantomRegion r);
/// Unscaled field shape used for a phantom region.
B0Map phantom_template(PhantomRegion r);
/// Bisection on the template scale so water_linewidth hits `target_hz`.
/// Throws TuningError if [0, max_scale] does not bracket the target.
double tune_map_scale(const B0Map& shape, double target_hz, std::size_t subgrid, double max_scale = 50.0);

/// n_repeats phantom acquisitions sharing map and baseline, differing only in noise.
Dataset phantom_dataset(PhantomRegion region, std::size_t n_repeats, std::uint64_t seed,
                        const OracleConfig& cfg = OracleConfig{});

/// Writes manifest.json plus per-sample B0 maps (binary) and spectra (CSV).
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& manifest_path);

}  // namespace b0spec::synth
