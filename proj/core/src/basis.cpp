#include <cmath>
#include <initializer_list>
#include <vector>

#include "b0spec/synth.hpp"

namespace b0spec::synth {

namespace {

// One chemically distinct group: shift, proton count, first-order multiplet
// pattern (binomial weights) and coupling constant.
struct Group {
    double ppm;
    double protons;
    std::vector<double> pattern;
    double j_hz;
};

const std::vector<double> kS{1};
const std::vector<double> kD{1, 1};
const std::vector<double> kT{1, 2, 1};
const std::vector<double> kQ{1, 3, 3, 1};
const std::vector<double> kQuint{1, 4, 6, 4, 1};

PeakList expand(std::initializer_list<Group> groups, const SpectralAxis& axis) {
    PeakList out;
    for (const Group& g : groups) {
        double wsum = 0.0;
        for (double w : g.pattern) wsum += w;
        const double mid = 0.5 * static_cast<double>(g.pattern.size() - 1);
        for (std::size_t k = 0; k < g.pattern.size(); ++k) {
            const double offset_hz = (static_cast<double>(k) - mid) * g.j_hz;
            const double center = g.ppm + axis.hz_to_ppm(offset_hz);
            if (center < axis.ppm_min || center > axis.ppm_max) continue;
            out.peaks.push_back(Peak{center, kProtonArea * g.protons * g.pattern[k] / wsum, kMetaboliteGammaHz});
        }
    }
    return out;
}

}  // namespace

BasisSet default_basis() {
    const SpectralAxis ax = make_axis();
    std::vector<std::pair<std::string, PeakList>> e;
    e.emplace_back("Ala", expand({{1.467, 3, kD, 7.2}, {3.775, 1, kQ, 7.2}}, ax));
    e.emplace_back("Asp", expand({{3.891, 1, kT, 4.5}, {2.801, 1, kD, 8.0}, {2.653, 1, kD, 8.0}}, ax));
    e.emplace_back("Cr", expand({{3.027, 3, kS, 0}, {3.913, 2, kS, 0}}, ax));
    e.emplace_back("PCr", expand({{3.029, 3, kS, 0}, {3.930, 2, kS, 0}}, ax));
    e.emplace_back("GABA", expand({{3.013, 2, kT, 7.3}, {2.284, 2, kT, 7.3}, {1.889, 2, kQuint, 7.3}}, ax));
    e.emplace_back("Gln", expand({{3.753, 1, kT, 6.0}, {2.446, 2, kT, 7.5}, {2.125, 2, kT, 7.0}}, ax));
    e.emplace_back("Glu", expand({{3.744, 1, kT, 6.0}, {2.338, 2, kT, 7.5}, {2.075, 2, kT, 7.0}}, ax));
    e.emplace_back("GPC", expand({{3.212, 9, kS, 0}, {3.605, 2, kT, 5.0}, {3.672, 2, kT, 5.0}}, ax));
    e.emplace_back("PCh", expand({{3.208, 9, kS, 0}, {3.641, 2, kT, 5.0}}, ax));
    e.emplace_back("GSH", expand({{3.769, 1, kT, 6.0}, {2.546, 2, kT, 7.0}, {2.159, 2, kT, 7.0},
                                  {2.926, 1, kD, 7.0}, {2.975, 1, kD, 7.0}}, ax));
    e.emplace_back("Ins", expand({{3.522, 2, kD, 10.0}, {3.614, 2, kT, 9.8}, {4.054, 1, kT, 2.9},
                                  {3.269, 1, kT, 9.5}}, ax));
    e.emplace_back("NAA", expand({{2.008, 3, kS, 0}, {2.486, 1, kD, 9.5}, {2.673, 1, kD, 9.5}}, ax));
    e.emplace_back("NAAG", expand({{2.042, 3, kS, 0}, {2.190, 2, kT, 7.0}, {1.881, 1, kT, 7.0},
                                   {2.719, 1, kD, 9.0}, {2.519, 1, kD, 9.0}}, ax));
    e.emplace_back("Lac", expand({{1.313, 3, kD, 6.9}, {4.097, 1, kQ, 6.9}}, ax));
    e.emplace_back("Tau", expand({{3.420, 2, kT, 6.7}, {3.246, 2, kT, 6.7}}, ax));
    return BasisSet(ax, std::move(e));
}

}  // namespace b0spec::synth
