#include <cmath>
#include <limits>
#include <cstdio>
#include <random>

#include "b0spec/errors.hpp"
#include "b0spec/io.hpp"
#include "b0spec/parallel.hpp"
#include "b0spec/synth.hpp"

namespace b0spec::synth {

namespace fs = std::filesystem;
using nlohmann::json;

B0Map Sample::map() const {
    if (b0) return *b0;
    if (!b0_from_seed) throw DatasetError("sample '" + id + "' has no field map");
    return sample_b0_map(spread_hz, map_seed);
}

const std::vector<Sample>& Dataset::split(const std::string& name) const {
    auto it = splits.find(name);
    if (it == splits.end()) throw DatasetError("dataset has no split '" + name + "'");
    return it->second;
}

std::size_t Dataset::total() const {
    std::size_t n = 0;
    for (const auto& [name, v] : splits) n += v.size();
    return n;
}

SplitSizes split_sizes(std::size_t n_total) {
    if (n_total < 12) throw ConfigError("n_total must be at least 12");
    const double n = static_cast<double>(n_total);
    SplitSizes s;
    s.train = static_cast<std::size_t>(std::lround(n * 109.0 / 174.0));
    s.val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(n * 32.0 / 174.0)));
    s.test = n_total - s.train - s.val;
    return s;
}

void add_white_noise(Spectrum& s, double sigma, std::uint64_t seed) {
    if (sigma <= 0.0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += noise(rng);
}

Dataset build_dataset(std::size_t n_total, SpreadRange spread, const OracleConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (!(spread.lo >= 0.0 && spread.hi >= spread.lo)) throw ConfigError("invalid field spread range");
    const SplitSizes sizes = split_sizes(n_total);
    const BasisSet basis = default_basis();

    std::vector<Sample> samples(n_total);
    parallel_for(n_total, [&](std::size_t i) {
        Sample& s = samples[i];
        s.seed = derive_seed(seed, i);
        std::mt19937_64 rng(s.seed);
        s.ratios = sample_ratios(rng);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        s.spread_hz = spread.lo + unit(rng) * (spread.hi - spread.lo);
        s.map_seed = derive_seed(s.seed, 7);
        s.b0 = sample_b0_map(s.spread_hz, s.map_seed);
        OracleConfig c = cfg;
        c.seed = derive_seed(s.seed, 9);
        OracleOutput o = oracle_measured(*s.b0, s.ratios, basis, c);
        s.measured = std::move(o.measured);
        s.metabolites = std::move(o.metabolites);
        s.baseline = std::move(o.baseline);
        s.water_lw_hz = water_linewidth(*s.b0, cfg.subgrid);
    });

    Dataset ds;
    auto place = [&](const std::string& name, std::size_t begin, std::size_t count) {
        auto& dst = ds.splits[name];
        for (std::size_t k = 0; k < count; ++k) {
            Sample s = std::move(samples[begin + k]);
            char id[32];
            std::snprintf(id, sizeof id, "%s_%03zu", name.c_str(), k);
            s.id = id;
            dst.push_back(std::move(s));
        }
    };
    place("train", 0, sizes.train);
    place("val", sizes.train, sizes.val);
    place("test", sizes.train + sizes.val, sizes.test);
    ds.config = {{"kind", "volunteer"},
                 {"n_total", n_total},
                 {"spread_hz", {spread.lo, spread.hi}},
                 {"oracle",
                  {{"subgrid", cfg.subgrid},
                   {"noise_sigma", cfg.noise_sigma},
                   {"baseline_scale", cfg.baseline_scale}}},
                 {"seed", seed}};
    return ds;
}

std::string to_string(PhantomRegion r) { return r == PhantomRegion::NearCenter ? "near_center" : "periphery"; }

PhantomRegion phantom_region_from_string(const std::string& s) {
    if (s == "near_center") return PhantomRegion::NearCenter;
    if (s == "periphery") return PhantomRegion::Periphery;
    throw ConfigError("unknown phantom region '" + s + "'");
}

MetaboliteRatios phantom_ratios() {
    // mM, divided by 10.0 mM Cr.
    MetaboliteRatios r;
    r[Metabolite::NAA] = 12.5 / 10.0;
    r[Metabolite::Cr] = 10.0 / 10.0;
    r[Metabolite::PCh] = 3.0 / 10.0;
    r[Metabolite::Glu] = 12.5 / 10.0;
    r[Metabolite::Ins] = 7.5 / 10.0;
    r[Metabolite::Lac] = 5.0 / 10.0;
    r[Metabolite::GABA] = 2.0 / 10.0;
    return r;
}

double phantom_target_linewidth(PhantomRegion r) { return r == PhantomRegion::NearCenter ? 8.0 : 10.9; }

B0Map phantom_template(PhantomRegion r) {
    B0FieldParams p;
    if (r == PhantomRegion::NearCenter) {
        p.gradient = {0.02, 0.01};
        p.blob_count = 1;
        p.blob_amp = 2.0;
        p.blob_width = 40.0;
        p.seed = 11;
    } else {
        // Strong one-sided susceptibility blob: skewed, shouldered lineshape.
        p.gradient = {0.06, 0.02};
        p.blob_count = 2;
        p.blob_amp = 8.0;
        p.blob_width = 20.0;
        p.seed = 23;
    }
    B0Map m = gen_b0_map(p);
    const double mean = m.mean();
    for (double& v : m.values()) v -= mean;
    return m;
}

double tune_map_scale(const B0Map& shape, double target_hz, std::size_t subgrid, double max_scale) {
    auto lw_at = [&](double scale) {
        B0Map m = shape;
        for (double& v : m.values()) v *= scale;
        return water_linewidth(m, subgrid);
    };
    // Past the point where the line outgrows the measurement window the
    // width stops being meaningful, so bracket from below by doubling.
    auto excess = [&](double scale) {
        try {
            return lw_at(scale) - target_hz;
        } catch (const LineshapeError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    if (excess(0.0) > 0.0)
        throw TuningError("linewidth target " + std::to_string(target_hz) + " Hz is below the unbroadened width");
    double lo = 0.0, hi = std::min(1.0, max_scale);
    while (excess(hi) < 0.0) {
        if (hi >= max_scale)
            throw TuningError("linewidth target " + std::to_string(target_hz) + " Hz not bracketed by scales [0, " +
                              std::to_string(max_scale) + "]");
        lo = hi;
        hi = std::min(2.0 * hi, max_scale);
    }
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = excess(mid);
        if (std::abs(f) < 1e-4) return mid;
        (f < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Dataset phantom_dataset(PhantomRegion region, std::size_t n_repeats, std::uint64_t seed, const OracleConfig& cfg) {
    if (n_repeats < 1) throw ConfigError("phantom needs at least one repeat");
    cfg.validate();
    const BasisSet basis = default_basis();
    const B0Map shape = phantom_template(region);
    const double scale = tune_map_scale(shape, phantom_target_linewidth(region), cfg.subgrid);
    B0Map map = shape;
    for (double& v : map.values()) v *= scale;
    const MetaboliteRatios ratios = phantom_ratios();
    const Spectrum metab = average_over_map(basis.weighted_peaks(ratios.values), map, basis.axis(), cfg.subgrid);
    const Spectrum baseline = make_baseline(basis.axis(), cfg.baseline_scale, derive_seed(seed, 1000));
    const double lw = water_linewidth(map, cfg.subgrid);

    Dataset ds;
    auto& out = ds.splits["phantom"];
    for (std::size_t r = 0; r < n_repeats; ++r) {
        Sample s;
        s.id = to_string(region) + "_r" + std::to_string(r);
        s.seed = derive_seed(seed, r);
        s.spread_hz = map.stddev();
        s.b0 = map;
        s.ratios = ratios;
        s.metabolites = metab;
        s.baseline = baseline;
        s.measured = metab + baseline;
        add_white_noise(s.measured, cfg.noise_sigma, s.seed);
        s.water_lw_hz = lw;
        out.push_back(std::move(s));
    }
    ds.config = {{"kind", "phantom"},
                 {"region", to_string(region)},
                 {"n_repeats", n_repeats},
                 {"map_scale", scale},
                 {"target_linewidth_hz", phantom_target_linewidth(region)},
                 {"oracle",
                  {{"subgrid", cfg.subgrid},
                   {"noise_sigma", cfg.noise_sigma},
                   {"baseline_scale", cfg.baseline_scale}}},
                 {"seed", seed}};
    return ds;
}

void write_dataset(const Dataset& ds, const fs::path& dir) {
    json manifest;
    manifest["format"] = "b0spec-dataset";
    manifest["version"] = 1;
    manifest["config"] = ds.config;
    json splits = json::object();
    for (const auto& [name, samples] : ds.splits) {
        json arr = json::array();
        for (const Sample& s : samples) {
            json e;
            e["id"] = s.id;
            e["seed"] = s.seed;
            e["spread_hz"] = s.spread_hz;
            if (s.b0_from_seed || !s.b0) {
                e["b0map_seed"] = s.map_seed;
            } else {
                const std::string b0 = "b0/" + s.id + ".bin";
                io::write_b0map_bin(dir / b0, *s.b0);
                e["b0map"] = b0;
            }
            e["ratios"] = io::ratios_to_json(s.ratios);
            const std::string stem = "spectra/" + s.id;
            io::write_spectrum_csv(dir / (stem + "_measured.csv"), s.measured);
            io::write_spectrum_csv(dir / (stem + "_metabolites.csv"), s.metabolites);
            io::write_spectrum_csv(dir / (stem + "_baseline.csv"), s.baseline);
            e["measured"] = stem + "_measured.csv";
            e["metabolites"] = stem + "_metabolites.csv";
            e["baseline"] = stem + "_baseline.csv";
            e["water_lw_hz"] = s.water_lw_hz;
            arr.push_back(std::move(e));
        }
        splits[name] = std::move(arr);
    }
    manifest["splits"] = std::move(splits);
    io::write_json(dir / "manifest.json", manifest);
}

Dataset load_dataset(const fs::path& manifest_path) {
    const json m = io::read_json(manifest_path);
    const fs::path dir = manifest_path.parent_path();
    try {
        if (m.at("format") != "b0spec-dataset") throw ManifestError("not a dataset manifest");
        Dataset ds;
        ds.config = m.at("config");
        for (const auto& [name, arr] : m.at("splits").items()) {
            auto& dst = ds.splits[name];
            for (const auto& e : arr) {
                Sample s;
                s.id = e.at("id").get<std::string>();
                s.seed = e.at("seed").get<std::uint64_t>();
                s.spread_hz = e.at("spread_hz").get<double>();
                if (e.contains("b0map")) {
                    s.b0 = io::read_b0map_bin(dir / e.at("b0map").get<std::string>());
                } else {
                    s.b0_from_seed = true;
                    s.map_seed = e.at("b0map_seed").get<std::uint64_t>();
                }
                s.ratios = io::ratios_from_json(e.at("ratios"));
                s.measured = io::read_spectrum_csv(dir / e.at("measured").get<std::string>());
                s.metabolites = io::read_spectrum_csv(dir / e.at("metabolites").get<std::string>());
                s.baseline = io::read_spectrum_csv(dir / e.at("baseline").get<std::string>());
                s.water_lw_hz = e.at("water_lw_hz").get<double>();
                dst.push_back(std::move(s));
            }
        }
        return ds;
    } catch (const json::exception& e) {
        throw ManifestError(std::string("malformed manifest: ") + e.what());
    }
}

}  // namespace b0spec::synth
