#include "b0spec/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "b0spec/errors.hpp"
#include "b0spec/lineshape.hpp"

namespace b0spec {

namespace {
constexpr std::array<std::string_view, kNumMetabolites> kNames = {
    "Ala", "Asp", "Cr", "PCr", "GABA", "Gln", "Glu", "GPC",
    "PCh", "GSH", "Ins", "NAA", "NAAG", "Lac", "Tau"};
}

std::size_t SpectralAxis::nearest_index(double ppm_value) const {
    const double t = (ppm_value - ppm_min) / step_ppm();
    const double r = std::clamp(std::round(t), 0.0, static_cast<double>(n_points - 1));
    return static_cast<std::size_t>(r);
}

SpectralAxis make_axis() { return SpectralAxis{}; }

Spectrum::Spectrum(SpectralAxis axis) : axis_(axis), values_(axis.n_points, 0.0) {}

Spectrum::Spectrum(SpectralAxis axis, std::vector<double> intensities)
    : axis_(axis), values_(std::move(intensities)) {
    if (values_.size() != axis_.n_points) {
        throw ShapeError("spectrum has " + std::to_string(values_.size()) + " points, axis has " +
                         std::to_string(axis_.n_points));
    }
}

Spectrum& Spectrum::operator+=(const Spectrum& other) {
    if (other.size() != size()) throw ShapeError("spectrum length mismatch in +=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

Spectrum& Spectrum::operator-=(const Spectrum& other) {
    if (other.size() != size()) throw ShapeError("spectrum length mismatch in -=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

Spectrum& Spectrum::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

bool Spectrum::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void PeakList::validate(const SpectralAxis& axis) const {
    for (const Peak& p : peaks) {
        if (!(p.amplitude > 0.0)) throw InputError("peak amplitude must be positive");
        if (!(p.gamma_hz > 0.0)) throw InputError("peak gamma must be positive");
        if (p.center_ppm < axis.ppm_min || p.center_ppm > axis.ppm_max) {
            throw InputError("peak center " + std::to_string(p.center_ppm) + " ppm outside axis");
        }
    }
}

std::string_view metabolite_name(std::size_t index) { return kNames.at(index); }
std::string_view metabolite_name(Metabolite m) { return kNames[idx(m)]; }

Metabolite metabolite_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == name) return static_cast<Metabolite>(i);
    }
    throw InputError("unknown metabolite '" + std::string(name) + "'");
}

MetaboliteRatios MetaboliteRatios::from_amplitudes(const Amplitudes& amplitudes) {
    const double ref = amplitudes[idx(Metabolite::Cr)] + amplitudes[idx(Metabolite::PCr)];
    if (!(ref > 0.0)) throw ZeroReferenceError("tCr amplitude is not positive");
    MetaboliteRatios r;
    for (std::size_t i = 0; i < kNumMetabolites; ++i) r.values[i] = amplitudes[i] / ref;
    return r;
}

GroupRatios group_ratios(const MetaboliteRatios& r) {
    using M = Metabolite;
    return GroupRatios{r[M::Ins], r[M::GPC] + r[M::PCh], r[M::NAA] + r[M::NAAG], r[M::Glu] + r[M::Gln]};
}

BasisSet::BasisSet(SpectralAxis axis, std::vector<std::pair<std::string, PeakList>> entries)
    : axis_(axis) {
    if (entries.size() != kNumMetabolites) {
        throw InputError("basis needs exactly 15 entries, got " + std::to_string(entries.size()));
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto& [name, peaks] = entries[i];
        if (!seen.insert(name).second) throw InputError("duplicate basis entry '" + name + "'");
        if (name != metabolite_name(i)) {
            throw InputError("basis entry " + std::to_string(i) + " is '" + name + "', expected '" +
                             std::string(metabolite_name(i)) + "'");
        }
        peaks.validate(axis);
        Spectrum s = synth_lorentzian(peaks, 0.0, axis);
        entries_.push_back(BasisEntry{name, std::move(peaks), std::move(s)});
    }
}

PeakList BasisSet::weighted_peaks(const Amplitudes& weights) const {
    PeakList out;
    for (std::size_t m = 0; m < entries_.size(); ++m) {
        if (weights[m] == 0.0) continue;
        for (Peak p : entries_[m].peaks.peaks) {
            p.amplitude *= weights[m];
            out.peaks.push_back(p);
        }
    }
    return out;
}

Spectrum BasisSet::weighted_sum(const Amplitudes& weights) const {
    Spectrum out(axis_);
    for (std::size_t m = 0; m < entries_.size(); ++m) {
        const auto src = entries_[m].spectrum.values();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += weights[m] * src[i];
    }
    return out;
}

B0Map::B0Map(std::vector<double> offsets) : offsets_(std::move(offsets)) {
    if (offsets_.size() != kB0MapSize * kB0MapSize) {
        throw ShapeError("B0 map must be 128x128, got " + std::to_string(offsets_.size()) + " values");
    }
    for (double v : offsets_) {
        if (!std::isfinite(v)) throw InputError("B0 map contains non-finite values");
    }
}

B0Map B0Map::uniform(double value) {
    return B0Map(std::vector<double>(kB0MapSize * kB0MapSize, value));
}

double B0Map::mean() const {
    return std::accumulate(offsets_.begin(), offsets_.end(), 0.0) / static_cast<double>(offsets_.size());
}

double B0Map::stddev() const {
    const double m = mean();
    double acc = 0.0;
    for (double v : offsets_) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(offsets_.size()));
}

}  // namespace b0spec
