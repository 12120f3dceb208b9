#include "b0spec/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "b0spec/configs.hpp"
#include "b0spec/errors.hpp"
#include "b0spec/io.hpp"
#include "b0spec/metrics.hpp"
#include "b0spec/parallel.hpp"
#include "b0spec/svg.hpp"

namespace b0spec::eval {

using nlohmann::json;
using analysis::Condition;
using analysis::TrainingCondition;
using genmodel::SchemeVariant;
using genmodel::TrainScheme;

// ------------------------------------------------------------------ config

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
    for (const auto& item : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return item.key() == k; });
        if (!known) throw ConfigError("unknown key '" + (where.empty() ? "" : where + ".") + item.key() + "'");
    }
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("'" + where + "." + key + "' has the wrong type");
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("'" + where + "." + key + "' has the wrong type");
    }
}

json section(const json& j, const char* key) { return j.contains(key) ? j.at(key) : json::object(); }

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    check_keys(j, {"seeds", "dataset", "generator", "table1", "augment", "analyzer", "simulated", "table2", "fig5", "fig6"},
               "");
    ExperimentConfig c;
    read(j, "seeds", c.seeds, "config");

    const json d = section(j, "dataset");
    check_keys(d, {"n_total", "spread_hz", "subgrid", "noise_sigma", "baseline_scale"}, "dataset");
    read(d, "n_total", c.dataset.n_total, "dataset");
    if (d.contains("spread_hz")) {
        std::vector<double> s;
        read(d, "spread_hz", s, "dataset");
        if (s.size() != 2) throw ConfigError("'dataset.spread_hz' must be [lo, hi]");
        c.dataset.spread = {s[0], s[1]};
    }
    read(d, "subgrid", c.dataset.subgrid, "dataset");
    read(d, "noise_sigma", c.dataset.noise_sigma, "dataset");
    read(d, "baseline_scale", c.dataset.baseline_scale, "dataset");

    const json g = section(j, "generator");
    check_keys(g, {"epochs", "pretrain_epochs", "batch_size", "lr", "tile_chunk"}, "generator");
    read(g, "epochs", c.generator.epochs, "generator");
    read(g, "pretrain_epochs", c.generator.pretrain_epochs, "generator");
    read(g, "batch_size", c.generator.batch_size, "generator");
    read(g, "lr", c.generator.lr, "generator");
    read(g, "tile_chunk", c.generator.tile_chunk, "generator");

    const json t1 = section(j, "table1");
    check_keys(t1, {"patches"}, "table1");
    read(t1, "patches", c.table1_patches, "table1");

    const json au = section(j, "augment");
    check_keys(au, {"patch", "linewidth_subgrid", "epochs", "pretrain_epochs", "lr"}, "augment");
    read(au, "patch", c.augment_patch, "augment");
    read(au, "linewidth_subgrid", c.augment_linewidth_subgrid, "augment");
    read(au, "epochs", c.augment_epochs, "augment");
    read(au, "pretrain_epochs", c.augment_pretrain_epochs, "augment");
    read(au, "lr", c.augment_lr, "augment");

    const json an = section(j, "analyzer");
    check_keys(an, {"epochs", "batch_size", "lr"}, "analyzer");
    read(an, "epochs", c.analyzer.epochs, "analyzer");
    read(an, "batch_size", c.analyzer.batch_size, "analyzer");
    read(an, "lr", c.analyzer.lr, "analyzer");

    const json si = section(j, "simulated");
    check_keys(si, {"gamma_extra_hz", "noise_sigma"}, "simulated");
    if (si.contains("gamma_extra_hz")) {
        std::vector<double> r;
        read(si, "gamma_extra_hz", r, "simulated");
        if (r.size() != 2) throw ConfigError("'simulated.gamma_extra_hz' must be [lo, hi]");
        c.simulated.gamma_extra_lo = r[0];
        c.simulated.gamma_extra_hi = r[1];
    }
    read(si, "noise_sigma", c.simulated.noise_sigma, "simulated");

    const json t2 = section(j, "table2");
    check_keys(t2, {"n_augment"}, "table2");
    read(t2, "n_augment", c.table2_n_augment, "table2");

    const json f5 = section(j, "fig5");
    check_keys(f5, {"n_augment"}, "fig5");
    read(f5, "n_augment", c.fig5_n_augment, "fig5");

    const json f6 = section(j, "fig6");
    check_keys(f6, {"repeats", "subgrid", "lcm"}, "fig6");
    read(f6, "repeats", c.fig6_repeats, "fig6");
    read(f6, "subgrid", c.fig6_subgrid, "fig6");
    const json l = section(f6, "lcm");
    check_keys(l, {"shift_hz", "sigma_hz", "grid_step", "baseline_degree", "refine"}, "fig6.lcm");
    if (l.contains("shift_hz")) {
        std::vector<double> r;
        read(l, "shift_hz", r, "fig6.lcm");
        if (r.size() != 2) throw ConfigError("'fig6.lcm.shift_hz' must be [lo, hi]");
        c.lcm.shift_lo = r[0];
        c.lcm.shift_hi = r[1];
    }
    if (l.contains("sigma_hz")) {
        std::vector<double> r;
        read(l, "sigma_hz", r, "fig6.lcm");
        if (r.size() != 2) throw ConfigError("'fig6.lcm.sigma_hz' must be [lo, hi]");
        c.lcm.sigma_lo = r[0];
        c.lcm.sigma_hi = r[1];
    }
    read(l, "grid_step", c.lcm.grid_step, "fig6.lcm");
    read(l, "baseline_degree", c.lcm.baseline_degree, "fig6.lcm");
    read(l, "refine", c.lcm.refine, "fig6.lcm");

    c.validate();
    return c;
}

namespace {

template <class T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

json ExperimentConfig::to_json() const {
    const json g = {{"epochs", generator.epochs},
                    {"pretrain_epochs", opt(generator.pretrain_epochs)},
                    {"batch_size", generator.batch_size},
                    {"lr", generator.lr},
                    {"tile_chunk", generator.tile_chunk}};
    return {{"seeds", seeds},
            {"dataset",
             {{"n_total", dataset.n_total},
              {"spread_hz", {dataset.spread.lo, dataset.spread.hi}},
              {"subgrid", dataset.subgrid},
              {"noise_sigma", dataset.noise_sigma},
              {"baseline_scale", dataset.baseline_scale}}},
            {"generator", g},
            {"table1", {{"patches", table1_patches}}},
            {"augment",
             {{"patch", augment_patch},
              {"linewidth_subgrid", augment_linewidth_subgrid},
              {"epochs", opt(augment_epochs)},
              {"pretrain_epochs", opt(augment_pretrain_epochs)},
              {"lr", opt(augment_lr)}}},
            {"analyzer", {{"epochs", analyzer.epochs}, {"batch_size", analyzer.batch_size}, {"lr", analyzer.lr}}},
            {"simulated",
             {{"gamma_extra_hz", {simulated.gamma_extra_lo, simulated.gamma_extra_hi}},
              {"noise_sigma", simulated.noise_sigma}}},
            {"table2", {{"n_augment", table2_n_augment}}},
            {"fig5", {{"n_augment", fig5_n_augment}}},
            {"fig6",
             {{"repeats", fig6_repeats},
              {"subgrid", fig6_subgrid},
              {"lcm",
               {{"shift_hz", {lcm.shift_lo, lcm.shift_hi}},
                {"sigma_hz", {lcm.sigma_lo, lcm.sigma_hi}},
                {"grid_step", lcm.grid_step},
                {"baseline_degree", lcm.baseline_degree},
                {"refine", lcm.refine}}}}}};
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (dataset.n_total < 12) throw ConfigError("dataset.n_total must be at least 12");
    if (!(dataset.spread.lo >= 0.0 && dataset.spread.hi >= dataset.spread.lo))
        throw ConfigError("dataset.spread_hz must satisfy 0 <= lo <= hi");
    if (dataset.subgrid < 1 || dataset.subgrid > kB0MapSize || fig6_subgrid < 1 || fig6_subgrid > kB0MapSize ||
        augment_linewidth_subgrid < 1 || augment_linewidth_subgrid > kB0MapSize)
        throw ConfigError("subgrid sizes must lie in [1, 128]");
    if (!(dataset.noise_sigma >= 0.0) || !(dataset.baseline_scale >= 0.0))
        throw ConfigError("dataset noise and baseline scales must be non-negative");
    if (generator.batch_size < 1 || analyzer.batch_size < 1) throw ConfigError("batch sizes must be positive");
    if (!(generator.lr > 0.0) || !(analyzer.lr > 0.0) || (augment_lr && !(*augment_lr > 0.0)))
        throw ConfigError("learning rates must be positive");
    if (generator.tile_chunk < 1) throw ConfigError("generator.tile_chunk must be positive");
    if (table1_patches.empty()) throw ConfigError("table1.patches is empty");
    auto patch_ok = [](int p) { return p == 1 || p == 2 || p == 4 || p == 8; };
    for (int p : table1_patches)
        if (!patch_ok(p)) throw ConfigError("table1.patches: " + std::to_string(p) + " is not 1, 2, 4 or 8");
    if (!patch_ok(augment_patch)) throw ConfigError("augment.patch must be 1, 2, 4 or 8");
    if (!(simulated.gamma_extra_lo >= 0.0 && simulated.gamma_extra_hi >= simulated.gamma_extra_lo))
        throw ConfigError("simulated.gamma_extra_hz must satisfy 0 <= lo <= hi");
    if (!(simulated.noise_sigma >= 0.0)) throw ConfigError("simulated.noise_sigma must be non-negative");
    if (fig5_n_augment.empty()) throw ConfigError("fig5.n_augment is empty");
    if (fig6_repeats < 1) throw ConfigError("fig6.repeats must be positive");
    lcm.validate();
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return ExperimentConfig::from_json(io::read_json(path));
}

ExperimentConfig experiment_preset(const std::string& name) {
    return ExperimentConfig::from_json(json::parse(experiment_preset_text(name)));
}

// --------------------------------------------------------------- workbench

namespace {

// Stream indices under each experiment seed.
constexpr std::uint64_t kDatasetStream = 100;
constexpr std::uint64_t kGeneratorStream = 200;
constexpr std::uint64_t kAugmentStream = 400;
constexpr std::uint64_t kSimulatedStream = 500;
constexpr std::uint64_t kAnalyzerStream = 600;
constexpr std::uint64_t kPhantomStream = 700;

std::string condition_key(const TrainingCondition& c) {
    return analysis::to_string(c.variant) + "/" + std::to_string(c.n_augment);
}

}  // namespace

struct Workbench::PerSeed {
    std::optional<synth::Dataset> dataset;
    std::map<std::string, GeneratorPair> generators;
    std::vector<synth::Sample> modeled;
    std::vector<synth::Sample> simulated;
    std::map<std::string, TrainedAnalyzer> analyzers;
    std::map<std::string, synth::Dataset> phantoms;
};

Workbench::Workbench(ExperimentConfig cfg) : cfg_(std::move(cfg)), basis_(synth::default_basis()) { cfg_.validate(); }

Workbench::~Workbench() = default;

Workbench::PerSeed& Workbench::slot(std::uint64_t seed) {
    auto& p = seeds_[seed];
    if (!p) p = std::make_unique<PerSeed>();
    return *p;
}

const synth::Dataset& Workbench::dataset(std::uint64_t seed) {
    PerSeed& s = slot(seed);
    if (!s.dataset) {
        synth::OracleConfig oc;
        oc.subgrid = cfg_.dataset.subgrid;
        oc.noise_sigma = cfg_.dataset.noise_sigma;
        oc.baseline_scale = cfg_.dataset.baseline_scale;
        s.dataset = synth::build_dataset(cfg_.dataset.n_total, cfg_.dataset.spread, oc,
                                         derive_seed(seed, kDatasetStream));
    }
    return *s.dataset;
}

genmodel::GenHyper Workbench::generator_hyper(std::uint64_t seed) const {
    genmodel::GenHyper h;
    h.epochs = cfg_.generator.epochs;
    h.pretrain_epochs = cfg_.generator.pretrain_epochs;
    h.batch_size = cfg_.generator.batch_size;
    h.adam.lr = cfg_.generator.lr;
    h.seed = derive_seed(seed, kGeneratorStream);
    h.tile_chunk = cfg_.generator.tile_chunk;
    return h;
}

const Workbench::GeneratorPair& Workbench::train_pair(std::uint64_t seed, const std::string& key,
                                                     const TrainScheme& scheme, const genmodel::GenHyper& hyper) {
    PerSeed& s = slot(seed);
    if (auto it = s.generators.find(key); it != s.generators.end()) return it->second;
    const auto& train = dataset(seed).split("train");
    GeneratorPair pair{genmodel::make_generator1(), genmodel::make_generator2(), {}};
    pair.history = genmodel::train_scheme(pair.g1, pair.g2, train, scheme, hyper);
    return s.generators.emplace(key, std::move(pair)).first->second;
}

const Workbench::GeneratorPair& Workbench::generators(std::uint64_t seed, const TrainScheme& scheme) {
    scheme.validate();
    return train_pair(seed, scheme.label(), scheme, generator_hyper(seed));
}

const Workbench::GeneratorPair& Workbench::augmenter(std::uint64_t seed) {
    const TrainScheme scheme{SchemeVariant::TwoStep, cfg_.augment_patch};
    genmodel::GenHyper h = generator_hyper(seed);
    if (cfg_.augment_epochs) h.epochs = *cfg_.augment_epochs;
    if (cfg_.augment_pretrain_epochs) h.pretrain_epochs = *cfg_.augment_pretrain_epochs;
    if (cfg_.augment_lr) h.adam.lr = *cfg_.augment_lr;
    // Identical settings share the Table 1 arm instead of retraining it.
    const genmodel::GenHyper base = generator_hyper(seed);
    if (h.epochs == base.epochs && h.pretrain_epochs == base.pretrain_epochs && h.adam.lr == base.adam.lr)
        return generators(seed, scheme);
    return train_pair(seed, "augment/" + scheme.label(), scheme, h);
}

const std::vector<synth::Sample>& Workbench::modeled_pool(std::uint64_t seed, std::size_t n) {
    PerSeed& s = slot(seed);
    if (s.modeled.size() < n) {
        const GeneratorPair& gp = augmenter(seed);
        genmodel::AugmentConfig ac;
        ac.n = n;
        ac.patch = cfg_.augment_patch;
        ac.spread = cfg_.dataset.spread;
        ac.seed = derive_seed(seed, kAugmentStream);
        ac.linewidth_subgrid = cfg_.augment_linewidth_subgrid;
        s.modeled = std::move(genmodel::augment(gp.g1, gp.g2, ac).splits.at("modeled"));
    }
    return s.modeled;
}

const std::vector<synth::Sample>& Workbench::simulated_pool(std::uint64_t seed, std::size_t n) {
    PerSeed& s = slot(seed);
    if (s.simulated.size() < n)
        s.simulated = analysis::simulated_records(n, derive_seed(seed, kSimulatedStream), basis_, cfg_.simulated);
    return s.simulated;
}

const Workbench::TrainedAnalyzer& Workbench::analyzer(std::uint64_t seed, const TrainingCondition& cond) {
    cond.validate();
    PerSeed& s = slot(seed);
    const std::string key = condition_key(cond);
    if (auto it = s.analyzers.find(key); it != s.analyzers.end()) return it->second;

    const auto& train = dataset(seed).split("train");
    analysis::AnalyzerData data;
    data.measured = &train;
    switch (cond.variant) {
        case Condition::MeasuredOnly: break;
        case Condition::SimulatedOnly: data.simulated = &simulated_pool(seed, train.size()); break;
        case Condition::ModeledOnly: data.modeled = &modeled_pool(seed, train.size()); break;
        case Condition::MeasuredPlusSimulated: data.simulated = &simulated_pool(seed, cond.n_augment); break;
        case Condition::MeasuredPlusModeled: data.modeled = &modeled_pool(seed, cond.n_augment); break;
    }
    analysis::AnalyzerHyper h;
    h.epochs = cfg_.analyzer.epochs;
    h.batch_size = cfg_.analyzer.batch_size;
    h.adam.lr = cfg_.analyzer.lr;
    h.seed = derive_seed(seed, kAnalyzerStream);
    TrainedAnalyzer ta{analysis::make_analyzer(), {}};
    ta.history = analysis::train_analyzer(ta.net, cond, data, basis_, h);
    return s.analyzers.emplace(key, std::move(ta)).first->second;
}

const synth::Dataset& Workbench::phantom(std::uint64_t seed, synth::PhantomRegion region) {
    PerSeed& s = slot(seed);
    const std::string key = synth::to_string(region);
    if (auto it = s.phantoms.find(key); it != s.phantoms.end()) return it->second;
    synth::OracleConfig oc;
    oc.subgrid = cfg_.fig6_subgrid;
    oc.noise_sigma = cfg_.dataset.noise_sigma;
    oc.baseline_scale = cfg_.dataset.baseline_scale;
    const std::uint64_t stream = kPhantomStream + static_cast<std::uint64_t>(region);
    return s.phantoms.emplace(key, synth::phantom_dataset(region, cfg_.fig6_repeats, derive_seed(seed, stream), oc))
        .first->second;
}

// ------------------------------------------------------------- experiments

namespace {

ExperimentReport start_report(const Workbench& wb, const std::string& id, const std::string& metric) {
    ExperimentReport r;
    r.id = id;
    r.metric = metric;
    r.config = wb.config().to_json();
    r.seeds = wb.config().seeds;
    return r;
}

std::vector<Bar> bars_of(const ExperimentReport& r) {
    std::vector<Bar> bars;
    for (const auto& a : r.arms) bars.push_back({a.name, a.mean, a.sd, ""});
    return bars;
}

Series spectrum_series(const std::string& label, const Spectrum& s) {
    Series out{label, {}, s.vec()};
    for (std::size_t i = 0; i < s.size(); ++i) out.x.push_back(s.axis().ppm(i));
    return out;
}

std::vector<TrainScheme> table1_schemes(const ExperimentConfig& cfg) {
    std::vector<TrainScheme> out{{SchemeVariant::OneStep, 1}};
    for (int p : cfg.table1_patches) out.push_back({SchemeVariant::TwoStep, p});
    return out;
}

double last_or_nan(const nn::LossHistory& h) { return h.epoch_loss.empty() ? NAN : h.epoch_loss.back(); }

}  // namespace

ExperimentOutput exp_table1(Workbench& wb) {
    const auto& cfg = wb.config();
    ExperimentOutput out{start_report(wb, "table1", "modeled_mse"), {}};
    const auto schemes = table1_schemes(cfg);
    std::vector<std::vector<double>> values(schemes.size());
    json final_loss = json::object();
    for (std::uint64_t seed : cfg.seeds) {
        const auto& val = wb.dataset(seed).split("val");
        for (std::size_t k = 0; k < schemes.size(); ++k) {
            const auto& gp = wb.generators(seed, schemes[k]);
            values[k].push_back(genmodel::modeled_mse(gp.g1, gp.g2, val, schemes[k].patch));
            final_loss[schemes[k].label()].push_back(last_or_nan(gp.history.joint));
        }
    }
    for (std::size_t k = 0; k < schemes.size(); ++k) out.report.add_arm(schemes[k].label(), values[k]);
    out.report.details = {{"split", "val"}, {"final_joint_train_loss", final_loss}};

    out.figures["table1_bars.svg"] = bar_chart_svg("Modeled-spectrum MSE (validation)", "MSE", bars_of(out.report));

    const std::uint64_t s0 = cfg.seeds.front();
    const synth::Sample& ref = wb.dataset(s0).split("val").front();
    std::vector<Series> overlay{spectrum_series("oracle measured", ref.measured)};
    for (const auto& scheme : schemes) {
        if (scheme.variant == SchemeVariant::TwoStep && scheme.patch != cfg.table1_patches.front()) continue;
        const auto& gp = wb.generators(s0, scheme);
        overlay.push_back(
            spectrum_series(scheme.label(), genmodel::generate_modeled(gp.g1, gp.g2, ref.map(), ref.ratios,
                                                                       scheme.patch).full));
    }
    out.figures["table1_overlay.svg"] =
        line_plot_svg("Modeled vs oracle spectrum (" + ref.id + ", seed " + std::to_string(s0) + ")",
                      "chemical shift (ppm)", "intensity", overlay, true);
    return out;
}

namespace {

std::vector<TrainingCondition> table2_conditions(const ExperimentConfig& cfg) {
    return {{Condition::MeasuredOnly, 0},
            {Condition::SimulatedOnly, 0},
            {Condition::ModeledOnly, 0},
            {Condition::MeasuredPlusSimulated, cfg.table2_n_augment},
            {Condition::MeasuredPlusModeled, cfg.table2_n_augment}};
}

}  // namespace

ExperimentOutput exp_table2(Workbench& wb) {
    const auto& cfg = wb.config();
    ExperimentOutput out{start_report(wb, "table2", "spectrum_mse"), {}};
    const auto conds = table2_conditions(cfg);
    std::vector<std::vector<double>> values(conds.size());
    for (std::uint64_t seed : cfg.seeds) {
        const auto& val = wb.dataset(seed).split("val");
        for (std::size_t k = 0; k < conds.size(); ++k)
            values[k].push_back(analysis::evaluate(wb.analyzer(seed, conds[k]).net, val, wb.basis()).spectrum_mse);
    }
    for (std::size_t k = 0; k < conds.size(); ++k) out.report.add_arm(analysis::to_string(conds[k].variant), values[k]);
    out.report.details = {{"split", "val"}, {"n_augment", cfg.table2_n_augment}};

    out.figures["table2_bars.svg"] = bar_chart_svg("Analyzer output MSE (validation)", "MSE", bars_of(out.report));

    const std::uint64_t s0 = cfg.seeds.front();
    const synth::Sample& ref = wb.dataset(s0).split("val").front();
    std::vector<Series> overlay{spectrum_series("measured input", ref.measured),
                                spectrum_series("clean reference", analysis::clean_reference(ref.ratios, wb.basis()))};
    for (std::size_t k : {std::size_t{0}, conds.size() - 1})
        overlay.push_back(spectrum_series(analysis::to_string(conds[k].variant),
                                          analysis::predict(wb.analyzer(s0, conds[k]).net, ref.measured)));
    out.figures["table2_overlay.svg"] =
        line_plot_svg("Analyzer output (" + ref.id + ", seed " + std::to_string(s0) + ")", "chemical shift (ppm)",
                      "intensity", overlay, true);
    return out;
}

ExperimentOutput exp_fig5(Workbench& wb) {
    const auto& cfg = wb.config();
    ExperimentOutput out{start_report(wb, "fig5", "ratio_mse"), {}};
    std::vector<std::vector<double>> values(cfg.fig5_n_augment.size());
    json unnormalizable = json::object();
    for (std::uint64_t seed : cfg.seeds) {
        const auto& test = wb.dataset(seed).split("test");
        for (std::size_t k = 0; k < cfg.fig5_n_augment.size(); ++k) {
            const std::size_t n = cfg.fig5_n_augment[k];
            const TrainingCondition cond = n == 0 ? TrainingCondition{Condition::MeasuredOnly, 0}
                                                  : TrainingCondition{Condition::MeasuredPlusModeled, n};
            const auto ev = analysis::evaluate(wb.analyzer(seed, cond).net, test, wb.basis());
            values[k].push_back(ev.ratio_mse);
            unnormalizable["n=" + std::to_string(n)].push_back(ev.unnormalizable);
        }
    }
    for (std::size_t k = 0; k < values.size(); ++k)
        out.report.add_arm("n=" + std::to_string(cfg.fig5_n_augment[k]), values[k]);
    out.report.details = {{"split", "test"}, {"unnormalizable", unnormalizable}};
    out.figures["fig5_bars.svg"] =
        bar_chart_svg("Ratio MSE vs number of modeled spectra (test)", "ratio MSE", bars_of(out.report));
    return out;
}

ExperimentOutput exp_fig6(Workbench& wb) {
    const auto& cfg = wb.config();
    ExperimentOutput out{start_report(wb, "fig6", "mape_percent"), {}};
    const synth::PhantomRegion regions[] = {synth::PhantomRegion::NearCenter, synth::PhantomRegion::Periphery};
    const char* methods[] = {"proposed", "LCM stand-in"};
    const TrainingCondition proposed{Condition::MeasuredPlusModeled, cfg.table2_n_augment};
    const auto truth = group_ratios(synth::phantom_ratios()).as_array();

    // cells[region][method][group] → per-seed MAPE
    std::vector<double> cells[2][2][4];
    json per_repeat = json::object(), linewidths = json::object(), lcm_fits = json::object();
    for (std::uint64_t seed : cfg.seeds) {
        const auto& net = wb.analyzer(seed, proposed).net;
        for (int r = 0; r < 2; ++r) {
            const auto& ds = wb.phantom(seed, regions[r]);
            const auto& reps = ds.split("phantom");
            const std::string rname = synth::to_string(regions[r]);
            linewidths[rname].push_back(reps.front().water_lw_hz);

            std::vector<std::array<double, 4>> est[2];
            est[0].resize(reps.size());
            est[1].resize(reps.size());
            std::vector<lcm::LcmFitResult> fits(reps.size());
            for (std::size_t i = 0; i < reps.size(); ++i) {
                const auto ex = analysis::extract_ratios(analysis::predict(net, reps[i].measured), wb.basis());
                est[0][i] = ex.ratios ? group_ratios(*ex.ratios).as_array() : std::array<double, 4>{};
            }
            parallel_for(reps.size(), [&](std::size_t i) { fits[i] = lcm::lcm_fit(reps[i].measured, wb.basis(), cfg.lcm); });
            json fit_summary = json::array();
            for (std::size_t i = 0; i < reps.size(); ++i) {
                const double tcr = fits[i].amplitudes[idx(Metabolite::Cr)] + fits[i].amplitudes[idx(Metabolite::PCr)];
                est[1][i] = tcr > 0.0 ? group_ratios(lcm::lcm_ratios(fits[i])).as_array() : std::array<double, 4>{};
                fit_summary.push_back({{"shift_hz", fits[i].shift_hz}, {"sigma_hz", fits[i].sigma_hz}});
            }
            lcm_fits[rname].push_back(fit_summary);

            for (int m = 0; m < 2; ++m) {
                for (int g = 0; g < 4; ++g) {
                    std::vector<double> ape;
                    for (const auto& e : est[m]) ape.push_back(100.0 * std::abs(e[g] - truth[g]) / truth[g]);
                    double sum = 0.0;
                    for (double v : ape) sum += v;
                    cells[r][m][g].push_back(sum / static_cast<double>(ape.size()));
                    per_repeat[rname + "/" + methods[m] + "/" + std::string(kGroupNames[g])].push_back(ape);
                }
            }
        }
    }

    std::vector<Bar> bars;
    for (int r = 0; r < 2; ++r)
        for (int m = 0; m < 2; ++m)
            for (int g = 0; g < 4; ++g) {
                const std::string name =
                    synth::to_string(regions[r]) + "/" + methods[m] + "/" + std::string(kGroupNames[g]);
                const auto& a = out.report.add_arm(name, cells[r][m][g]);
                bars.push_back({name, a.mean, a.sd, methods[m]});
            }
    json targets = json::object();
    for (auto region : regions) targets[synth::to_string(region)] = synth::phantom_target_linewidth(region);
    out.report.details = {{"true_group_ratios", truth},
                          {"water_linewidth_hz", linewidths},
                          {"target_linewidth_hz", targets},
                          {"per_repeat_ape_percent", per_repeat},
                          {"lcm_fits", lcm_fits},
                          {"proposed_condition", condition_key(proposed)}};
    out.figures["fig6_bars.svg"] = bar_chart_svg("Phantom MAPE by region, method and group", "MAPE (%)", bars);
    return out;
}

ExperimentOutput run_experiment(Workbench& wb, const std::string& id) {
    if (id == "table1") return exp_table1(wb);
    if (id == "table2") return exp_table2(wb);
    if (id == "fig5") return exp_fig5(wb);
    if (id == "fig6") return exp_fig6(wb);
    throw ConfigError("unknown experiment '" + id + "' (expected table1, table2, fig5 or fig6)");
}

void write_output(const ExperimentOutput& out, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    io::write_json(dir / (out.report.id + ".json"), out.report.to_json());
    io::write_text(dir / (out.report.id + ".csv"), out.report.to_csv());
    for (const auto& [name, text] : out.figures) io::write_text(dir / name, text);
}

}  // namespace b0spec::eval
