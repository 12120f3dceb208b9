#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "b0spec/errors.hpp"
#include "b0spec/lineshape.hpp"
#include "b0spec/metrics.hpp"
#include "b0spec/synth.hpp"

using namespace b0spec;
using namespace b0spec::synth;
namespace fs = std::filesystem;

namespace {

OracleConfig clean_cfg(std::size_t subgrid = 32) {
    OracleConfig c;
    c.subgrid = subgrid;
    c.noise_sigma = 0.0;
    c.baseline_scale = 0.0;
    return c;
}

MetaboliteRatios some_ratios(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_ratios(rng);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("default basis") {
    const BasisSet b = default_basis();
    REQUIRE(b.size() == 15);
    const char* names[] = {"Ala", "Asp", "Cr", "PCr", "GABA", "Gln", "Glu", "GPC",
                           "PCh", "GSH", "Ins", "NAA", "NAAG", "Lac", "Tau"};
    std::set<std::string> seen;
    for (std::size_t i = 0; i < 15; ++i) {
        CHECK(b[i].name == names[i]);
        seen.insert(b[i].name);
        for (double v : b[i].spectrum.values()) CHECK(v >= 0.0);
        const Spectrum re = synth_lorentzian(b[i].peaks, 0.0, b.axis());
        CHECK(mse(re, b[i].spectrum) == 0.0);
    }
    CHECK(seen.size() == 15);
    const auto& naa = b[Metabolite::NAA].spectrum;
    std::size_t best = 0;
    for (std::size_t i = 1; i < naa.size(); ++i)
        if (naa[i] > naa[best]) best = i;
    CHECK(best == b.axis().nearest_index(2.01));
}

TEST_CASE("gen_b0_map") {
    B0FieldParams p;
    CHECK(gen_b0_map(p) == B0Map::uniform(0.0));
    p.gradient = {0.1, 0.0};
    const B0Map g = gen_b0_map(p);
    double lo = 1e9, hi = -1e9;
    for (double v : g.values()) lo = std::min(lo, v), hi = std::max(hi, v);
    CHECK(hi - lo == doctest::Approx(12.7));  // 0.1 Hz/pixel over 127 pixel steps
    for (std::size_t r = 0; r < 128; ++r) CHECK(g.at(r, 5) == g.at(0, 5));
    CHECK(g.at(0, 6) - g.at(0, 5) == doctest::Approx(0.1));
    p.blob_count = 3;
    p.blob_amp = 5.0;
    p.seed = 42;
    CHECK(gen_b0_map(p) == gen_b0_map(p));
}

TEST_CASE("sampled map has requested spread") {
    const B0Map m = sample_b0_map(3.0, 9);
    CHECK(std::abs(m.mean()) < 1e-9);
    CHECK(m.stddev() == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(sample_b0_map(3.0, 9) == m);
}

TEST_CASE("oracle: uniform zero map equals the weighted sum") {
    const BasisSet b = default_basis();
    const MetaboliteRatios r = some_ratios(3);
    const auto out = oracle_measured(B0Map::uniform(0.0), r, b, clean_cfg(kB0MapSize));
    const Spectrum direct = b.weighted_sum(r.values);
    for (std::size_t i = 0; i < direct.size(); ++i) CHECK(std::abs(out.measured[i] - direct[i]) <= 1e-12);
}

TEST_CASE("oracle: uniform map collapses to one shifted spectrum") {
    const BasisSet b = default_basis();
    const MetaboliteRatios r = some_ratios(4);
    const auto out = oracle_measured(B0Map::uniform(6.5), r, b, clean_cfg());
    const Spectrum shifted = synth_lorentzian(b.weighted_peaks(r.values), 6.5, b.axis());
    for (std::size_t i = 0; i < shifted.size(); ++i) CHECK(std::abs(out.metabolites[i] - shifted[i]) <= 1e-12);
}

TEST_CASE("oracle: linear in ratios") {
    const BasisSet b = default_basis();
    const MetaboliteRatios r = some_ratios(5);
    MetaboliteRatios r3 = r;
    for (double& v : r3.values) v *= 3.0;
    const B0Map m = sample_b0_map(2.5, 11);
    const auto a = oracle_measured(m, r, b, clean_cfg());
    const auto c = oracle_measured(m, r3, b, clean_cfg());
    for (std::size_t i = 0; i < a.metabolites.size(); ++i)
        CHECK(std::abs(c.metabolites[i] - 3.0 * a.metabolites[i]) <= 1e-12);
    const auto z = oracle_measured(m, MetaboliteRatios{}, b, clean_cfg());
    for (double v : z.metabolites.values()) CHECK(v == 0.0);
}

TEST_CASE("oracle: split map broadens a single line") {
    const SpectralAxis ax = make_axis();
    const PeakList line{{{2.0, 1.0, 2.0}}};
    B0Map m;
    for (std::size_t rr = 0; rr < 128; ++rr)
        for (std::size_t cc = 0; cc < 128; ++cc) m.at(rr, cc) = cc < 64 ? -10.0 : 10.0;
    // Brute-force two-term average.
    Spectrum brute = synth_lorentzian(line, -10.0, ax) * 0.5;
    brute += synth_lorentzian(line, 10.0, ax) * 0.5;
    const Spectrum avg = average_over_map(line, m, ax, kB0MapSize);
    CHECK(mse(avg, brute) < 1e-24);
    CHECK(fwhm(avg) > fwhm(synth_lorentzian(line, 0.0, ax)));
}

TEST_CASE("oracle: linewidth monotone in field spread") {
    const SpectralAxis ax = make_axis();
    const PeakList line{{{2.0, 1.0, 2.0}}};
    double prev = 0.0;
    for (double sd : {0.0, 2.0, 4.0, 8.0}) {
        const B0Map m = sd == 0.0 ? B0Map::uniform(0.0) : sample_b0_map(sd, 17);
        const double w = fwhm(average_over_map(line, m, ax, 32));
        CHECK(w >= prev);
        prev = w;
    }
}

TEST_CASE("oracle: subgrid approximates the full map on smooth fields") {
    const BasisSet b = default_basis();
    B0FieldParams p;
    p.gradient = {0.03, 0.01};
    p.blob_count = 1;
    p.blob_amp = 3.0;
    p.blob_width = 30.0;
    p.seed = 2;
    const B0Map m = gen_b0_map(p);
    const MetaboliteRatios r = some_ratios(6);
    const auto full = oracle_measured(m, r, b, clean_cfg(kB0MapSize));
    const auto sub = oracle_measured(m, r, b, clean_cfg(32));
    CHECK(mse(full.metabolites, sub.metabolites) < 1e-6);
}

TEST_CASE("oracle config validation") {
    OracleConfig c;
    c.subgrid = 48;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.subgrid = 32;
    c.noise_sigma = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("oracle noise and baseline") {
    const BasisSet b = default_basis();
    OracleConfig c = clean_cfg();
    c.noise_sigma = 0.01;
    c.baseline_scale = 0.15;
    c.seed = 8;
    const auto a = oracle_measured(sample_b0_map(2.0, 1), some_ratios(1), b, c);
    const auto a2 = oracle_measured(sample_b0_map(2.0, 1), some_ratios(1), b, c);
    CHECK(mse(a.measured, a2.measured) == 0.0);
    const Spectrum resid = a.measured - a.metabolites - a.baseline;
    double ss = 0.0;
    for (double v : resid.values()) ss += v * v;
    CHECK(std::sqrt(ss / 379.0) == doctest::Approx(0.01).epsilon(0.2));
    for (double v : a.baseline.values()) CHECK(v >= 0.0);
}

TEST_CASE("simulate_conventional") {
    const BasisSet b = default_basis();
    const MetaboliteRatios r = some_ratios(12);
    const Spectrum s0 = simulate_conventional(r, b, 0.0, 0.0, 1);
    const auto o = oracle_measured(B0Map::uniform(0.0), r, b, clean_cfg());
    CHECK(mse(s0, o.measured) < 1e-24);
    const PeakList line{{{2.0, 1.0, 2.0}}};
    double prev = 0.0;
    MetaboliteRatios only_naa;
    only_naa[Metabolite::NAA] = 1.0;
    for (double g : {0.0, 2.0, 4.0}) {
        const double w = fwhm(simulate_conventional(only_naa, b, g, 0.0, 1));
        CHECK(w >= prev);
        prev = w;
    }
    CHECK(mse(simulate_conventional(r, b, 1.5, 0.01, 4), simulate_conventional(r, b, 1.5, 0.01, 4)) == 0.0);
}

TEST_CASE("ratio sampling stays in range with tCr = 1") {
    std::mt19937_64 rng(1);
    for (int k = 0; k < 200; ++k) {
        const MetaboliteRatios r = sample_ratios(rng);
        CHECK(r.tcr() == doctest::Approx(1.0).epsilon(1e-15));
        for (std::size_t i = 0; i < kNumMetabolites; ++i) {
            CHECK(r.values[i] >= 0.0);
            if (i != idx(Metabolite::PCr)) {
                CHECK(r.values[i] >= ratio_ranges()[i].lo);
                CHECK(r.values[i] <= ratio_ranges()[i].hi);
            }
        }
    }
}

TEST_CASE("split sizes") {
    const SplitSizes a = split_sizes(174);
    CHECK(a.train == 109);
    CHECK(a.val == 32);
    CHECK(a.test == 33);
    const SplitSizes b = split_sizes(12);
    CHECK(b.train == 8);
    CHECK(b.val == 2);
    CHECK(b.test == 2);
    CHECK_THROWS_AS(split_sizes(11), ConfigError);
    for (std::size_t n = 12; n < 400; ++n) {
        const SplitSizes s = split_sizes(n);
        CHECK(s.train + s.val + s.test == n);
        CHECK(s.val > 0);
        CHECK(s.test > 0);
    }
}

TEST_CASE("dataset build, write and load") {
    OracleConfig c;
    c.subgrid = 16;
    const Dataset ds = build_dataset(12, {2.0, 3.2}, c, 7);
    CHECK(ds.split("train").size() == 8);
    CHECK(ds.split("val").size() == 2);
    CHECK(ds.split("test").size() == 2);
    CHECK_THROWS_AS(ds.split("nope"), DatasetError);
    for (const auto& s : ds.split("train")) {
        CHECK(s.spread_hz >= 2.0);
        CHECK(s.spread_hz <= 3.2);
        CHECK(s.water_lw_hz > 0.0);
        CHECK(s.ratios.tcr() == doctest::Approx(1.0));
    }

    const fs::path d1 = fs::temp_directory_path() / "b0spec_ds1", d2 = fs::temp_directory_path() / "b0spec_ds2";
    fs::remove_all(d1);
    fs::remove_all(d2);
    write_dataset(ds, d1);
    write_dataset(build_dataset(12, {2.0, 3.2}, c, 7), d2);
    CHECK(slurp(d1 / "manifest.json") == slurp(d2 / "manifest.json"));
    CHECK(slurp(d1 / "spectra" / "train_000_measured.csv") == slurp(d2 / "spectra" / "train_000_measured.csv"));

    const Dataset back = load_dataset(d1 / "manifest.json");
    REQUIRE(back.split("train").size() == 8);
    const Sample& a = ds.split("train")[3];
    const Sample& b = back.split("train")[3];
    CHECK(a.id == b.id);
    CHECK(a.ratios == b.ratios);
    CHECK(a.map() == b.map());
    CHECK(mse(a.measured, b.measured) == 0.0);
    CHECK(a.water_lw_hz == b.water_lw_hz);

    std::ofstream(d1 / "bad.json") << "{\"format\": \"something-else\"}";
    CHECK_THROWS_AS(load_dataset(d1 / "bad.json"), ManifestError);
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("volunteer spreads give 8-11 Hz water linewidths") {
    OracleConfig c;
    c.subgrid = 16;
    const Dataset ds = build_dataset(40, SpreadRange{}, c, 3);
    double lo = 1e9, hi = 0.0;
    for (const auto& [name, samples] : ds.splits)
        for (const auto& s : samples) lo = std::min(lo, s.water_lw_hz), hi = std::max(hi, s.water_lw_hz);
    CHECK(lo > 6.5);
    CHECK(hi < 12.5);
    CHECK(hi - lo > 2.0);
}

TEST_CASE("phantom datasets") {
    CHECK(phantom_ratios()[Metabolite::NAA] == doctest::Approx(1.25));
    CHECK(phantom_ratios()[Metabolite::Ins] == doctest::Approx(0.75));
    CHECK(phantom_ratios().tcr() == doctest::Approx(1.0));
    OracleConfig c;
    c.subgrid = 32;
    for (auto region : {PhantomRegion::NearCenter, PhantomRegion::Periphery}) {
        const Dataset ds = phantom_dataset(region, 7, 5, c);
        const auto& reps = ds.split("phantom");
        REQUIRE(reps.size() == 7);
        const double target = phantom_target_linewidth(region);
        CHECK(std::abs(reps[0].water_lw_hz - target) <= 1.0);
        for (std::size_t i = 1; i < reps.size(); ++i) {
            CHECK(mse(reps[i].metabolites, reps[0].metabolites) == 0.0);
            CHECK(mse(reps[i].baseline, reps[0].baseline) == 0.0);
            CHECK(mse(reps[i].measured, reps[0].measured) > 0.0);
        }
    }
    CHECK(phantom_region_from_string("periphery") == PhantomRegion::Periphery);
    CHECK_THROWS_AS(phantom_region_from_string("edge"), ConfigError);
    CHECK_THROWS_AS(tune_map_scale(B0Map::uniform(0.0), 8.0, 16), TuningError);
    CHECK_THROWS_AS(phantom_dataset(PhantomRegion::Periphery, 0, 1, c), ConfigError);
}
