#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace b0spec {

/// Proton Larmor frequency at 3 T, numerically equal to Hz per ppm.
inline constexpr double kLarmorMHz3T = 127.74;
inline constexpr std::size_t kSpectrumPoints = 379;
inline constexpr double kPpmMin = 0.2;
inline constexpr double kPpmMax = 4.1;

/// Uniform chemical-shift grid, ascending in ppm, endpoints inclusive.
struct SpectralAxis {
    std::size_t n_points = kSpectrumPoints;
    double ppm_min = kPpmMin;
    double ppm_max = kPpmMax;
    double larmor_mhz = kLarmorMHz3T;

    double hz_per_ppm() const { return larmor_mhz; }
    double step_ppm() const { return (ppm_max - ppm_min) / static_cast<double>(n_points - 1); }
    double step_hz() const { return step_ppm() * hz_per_ppm(); }
    double ppm(std::size_t i) const { return ppm_min + step_ppm() * static_cast<double>(i); }
    double hz(std::size_t i) const { return ppm(i) * hz_per_ppm(); }
    double ppm_to_hz(double ppm_value) const { return ppm_value * hz_per_ppm(); }
    double hz_to_ppm(double hz_value) const { return hz_value / hz_per_ppm(); }
    /// Index of the grid point nearest to `ppm_value` (clamped).
    std::size_t nearest_index(double ppm_value) const;

    bool operator==(const SpectralAxis&) const = default;
};

/// The fixed 379-point, 0.2–4.1 ppm axis used throughout.
SpectralAxis make_axis();

/// Real absorption spectrum sampled on an axis.
class Spectrum {
public:
    Spectrum() : Spectrum(make_axis()) {}
    explicit Spectrum(SpectralAxis axis);
    Spectrum(SpectralAxis axis, std::vector<double> intensities);

    const SpectralAxis& axis() const { return axis_; }
    std::size_t size() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    const std::vector<double>& vec() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    Spectrum& operator+=(const Spectrum& other);
    Spectrum& operator-=(const Spectrum& other);
    Spectrum& operator*=(double s);
    friend Spectrum operator+(Spectrum a, const Spectrum& b) { return a += b; }
    friend Spectrum operator-(Spectrum a, const Spectrum& b) { return a -= b; }
    friend Spectrum operator*(Spectrum a, double s) { return a *= s; }

    bool all_finite() const;

private:
    SpectralAxis axis_;
    std::vector<double> values_;
};

struct Peak {
    double center_ppm = 0.0;
    double amplitude = 0.0;  ///< integrated area, a.u.·Hz per unit concentration
    double gamma_hz = 0.0;   ///< Lorentzian half width at half maximum
};

struct PeakList {
    std::vector<Peak> peaks;
    /// Throws InputError if any peak breaks amplitude/gamma/center constraints.
    void validate(const SpectralAxis& axis) const;
};

inline constexpr std::size_t kNumMetabolites = 15;

enum class Metabolite : std::size_t {
    Ala, Asp, Cr, PCr, GABA, Gln, Glu, GPC, PCh, GSH, Ins, NAA, NAAG, Lac, Tau
};

std::string_view metabolite_name(std::size_t index);
std::string_view metabolite_name(Metabolite m);
/// Throws InputError on an unknown name.
Metabolite metabolite_from_name(std::string_view name);
constexpr std::size_t idx(Metabolite m) { return static_cast<std::size_t>(m); }

using Amplitudes = std::array<double, kNumMetabolites>;

/// Concentrations relative to tCr (Cr + PCr == 1).
struct MetaboliteRatios {
    Amplitudes values{};

    double operator[](Metabolite m) const { return values[idx(m)]; }
    double& operator[](Metabolite m) { return values[idx(m)]; }
    double tcr() const { return values[idx(Metabolite::Cr)] + values[idx(Metabolite::PCr)]; }

    /// Divides by the tCr aggregate; throws ZeroReferenceError if it is not positive.
    static MetaboliteRatios from_amplitudes(const Amplitudes& amplitudes);
    bool operator==(const MetaboliteRatios&) const = default;
};

/// Reporting aggregates used for MAPE.
struct GroupRatios {
    double ins = 0.0;
    double tcho = 0.0;
    double tnaa = 0.0;
    double glx = 0.0;

    std::array<double, 4> as_array() const { return {ins, tcho, tnaa, glx}; }
};
inline constexpr std::array<std::string_view, 4> kGroupNames = {"Ins", "tCho", "tNAA", "Glx"};

GroupRatios group_ratios(const MetaboliteRatios& r);

struct BasisEntry {
    std::string name;
    PeakList peaks;
    Spectrum spectrum;
};

/// Reference spectra of the 15 metabolites on a shared axis.
class BasisSet {
public:
    BasisSet() = default;
    /// Synthesizes each spectrum from its peak list. Throws InputError unless
    /// there are exactly 15 uniquely named entries in canonical order.
    BasisSet(SpectralAxis axis, std::vector<std::pair<std::string, PeakList>> entries);

    const SpectralAxis& axis() const { return axis_; }
    std::size_t size() const { return entries_.size(); }
    const BasisEntry& operator[](std::size_t i) const { return entries_[i]; }
    const BasisEntry& operator[](Metabolite m) const { return entries_[idx(m)]; }
    const std::vector<BasisEntry>& entries() const { return entries_; }

    /// Peak list of all metabolites scaled by concentration.
    PeakList weighted_peaks(const Amplitudes& weights) const;
    /// Sum of basis spectra weighted by concentration.
    Spectrum weighted_sum(const Amplitudes& weights) const;

private:
    SpectralAxis axis_;
    std::vector<BasisEntry> entries_;
};

inline constexpr std::size_t kB0MapSize = 128;

/// Frequency offsets (Hz) over the VOI, row-major 128×128.
class B0Map {
public:
    B0Map() : offsets_(kB0MapSize * kB0MapSize, 0.0) {}
    explicit B0Map(std::vector<double> offsets);
    static B0Map uniform(double value);

    static constexpr std::size_t side() { return kB0MapSize; }
    double at(std::size_t row, std::size_t col) const { return offsets_[row * kB0MapSize + col]; }
    double& at(std::size_t row, std::size_t col) { return offsets_[row * kB0MapSize + col]; }
    std::span<const double> values() const { return offsets_; }
    std::span<double> values() { return offsets_; }

    double mean() const;
    double stddev() const;
    bool operator==(const B0Map&) const = default;

private:
    std::vector<double> offsets_;
};

}  // namespace b0spec
