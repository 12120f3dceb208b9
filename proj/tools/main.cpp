#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "b0spec/analysis.hpp"
#include "b0spec/errors.hpp"
#include "b0spec/experiments.hpp"
#include "b0spec/genmodel.hpp"
#include "b0spec/io.hpp"
#include "b0spec/lcmfit.hpp"
#include "b0spec/nn/checkpoint.hpp"
#include "b0spec/report.hpp"
#include "b0spec/synth.hpp"
#include "json_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace b0spec;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::string history_csv(const std::vector<std::pair<std::string, const nn::LossHistory*>>& phases) {
    std::string out = "phase,epoch,loss\n";
    for (const auto& [name, h] : phases)
        for (std::size_t e = 0; e < h->epoch_loss.size(); ++e)
            out += name + "," + std::to_string(e + 1) + "," + eval::format_number(h->epoch_loss[e]) + "\n";
    return out;
}

json groups_json(const MetaboliteRatios& r) {
    const auto g = group_ratios(r).as_array();
    json j = json::object();
    for (std::size_t k = 0; k < g.size(); ++k) j[std::string(kGroupNames[k])] = g[k];
    return j;
}

// ------------------------------------------------------------------ synth

struct SynthOpts {
    fs::path out;
    std::size_t total = 174;
    std::uint64_t seed = 0;
    std::vector<double> spread{2.0, 3.2};
    std::size_t subgrid = kB0MapSize;
    double noise = 0.01;
    double baseline = 0.15;
    std::string phantom;
    std::size_t repeats = 7;
};

void add_synth(CLI::App& app, SynthOpts& o) {
    app.add_option("--out", o.out, "Output directory for manifest.json, maps and spectra")->required();
    app.add_option("--total", o.total, "Number of volunteer-analog samples (split 109:32:33)")->capture_default_str();
    app.add_option("--seed", o.seed, "Base seed")->capture_default_str();
    app.add_option("--spread", o.spread, "Field-spread range LO HI (Hz, map SD)")->expected(2)->capture_default_str();
    app.add_option("--subgrid", o.subgrid, "Pixels per map side integrated by the oracle")->capture_default_str();
    app.add_option("--noise", o.noise, "White-noise SD")->capture_default_str();
    app.add_option("--baseline", o.baseline, "Baseline amplitude scale")->capture_default_str();
    app.add_option("--phantom", o.phantom, "Build a phantom set for this region instead")
        ->check(CLI::IsMember({"near_center", "periphery"}));
    app.add_option("--repeats", o.repeats, "Phantom acquisitions")->capture_default_str();
}

int run_synth(const SynthOpts& o) {
    synth::OracleConfig oc;
    oc.subgrid = o.subgrid;
    oc.noise_sigma = o.noise;
    oc.baseline_scale = o.baseline;
    synth::Dataset ds;
    if (o.phantom.empty()) {
        ds = synth::build_dataset(o.total, {o.spread[0], o.spread[1]}, oc, o.seed);
    } else {
        ds = synth::phantom_dataset(synth::phantom_region_from_string(o.phantom), o.repeats, o.seed, oc);
    }
    synth::write_dataset(ds, o.out);
    for (const auto& [name, samples] : ds.splits) std::printf("%s: %zu\n", name.c_str(), samples.size());
    std::printf("wrote %s\n", (o.out / "manifest.json").c_str());
    return 0;
}

// --------------------------------------------------------------- train-gen

struct TrainGenOpts {
    fs::path manifest;
    std::string split = "train";
    fs::path out;
    std::string scheme = "two-step";
    int patch = 1;
    std::size_t epochs = 500;
    std::optional<std::size_t> pretrain_epochs;
    std::size_t batch = 16;
    double lr = 1e-4;
    std::uint64_t seed = 0;
    std::size_t tile_chunk = 64;
};

void add_train_gen(CLI::App& app, TrainGenOpts& o) {
    app.add_option("--manifest", o.manifest, "Dataset manifest.json")->required()->check(CLI::ExistingFile);
    app.add_option("--split", o.split, "Split to train on")->capture_default_str();
    app.add_option("--out", o.out, "Output directory")->required();
    app.add_option("--scheme", o.scheme, "Training scheme")
        ->check(CLI::IsMember({"one-step", "two-step"}))
        ->capture_default_str();
    app.add_option("--patch", o.patch, "Patch division p (1, 2, 4 or 8)")->capture_default_str();
    app.add_option("--epochs", o.epochs, "Joint-phase epochs")->capture_default_str();
    app.add_option("--pretrain-epochs", o.pretrain_epochs, "Two-step pretraining epochs (default: --epochs)");
    app.add_option("--batch", o.batch, "Mini-batch size")->capture_default_str();
    app.add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
    app.add_option("--seed", o.seed, "Initialization and shuffling seed")->capture_default_str();
    app.add_option("--tile-chunk", o.tile_chunk, "Tiles per training pass")->capture_default_str();
}

int run_train_gen(const TrainGenOpts& o) {
    const synth::Dataset ds = synth::load_dataset(o.manifest);
    genmodel::TrainScheme scheme{o.scheme == "one-step" ? genmodel::SchemeVariant::OneStep
                                                        : genmodel::SchemeVariant::TwoStep,
                                 o.patch};
    scheme.validate();
    genmodel::GenHyper h;
    h.epochs = o.epochs;
    h.pretrain_epochs = o.pretrain_epochs;
    h.batch_size = o.batch;
    h.adam.lr = o.lr;
    h.seed = o.seed;
    h.tile_chunk = o.tile_chunk;
    nn::Network g1 = genmodel::make_generator1(), g2 = genmodel::make_generator2();
    const auto hist = genmodel::train_scheme(g1, g2, ds.split(o.split), scheme, h);

    fs::create_directories(o.out);
    nn::save_checkpoint(o.out / "generators.ckpt", {&g1, &g2});
    io::write_text(o.out / "history.csv", history_csv({{"pretrain_g1", &hist.pretrain_g1},
                                                        {"pretrain_g2", &hist.pretrain_g2},
                                                        {"joint", &hist.joint}}));
    io::write_json(o.out / "train_config.json",
                   {{"scheme", scheme.label()}, {"hyper", h.to_json()}, {"split", o.split}, {"dataset", ds.config}});
    std::printf("%s: final joint loss %s\n", scheme.label().c_str(),
                hist.joint.epoch_loss.empty() ? "n/a" : eval::format_number(hist.joint.epoch_loss.back()).c_str());
    return 0;
}

// ------------------------------------------------------------- gen-spectra

struct GenSpectraOpts {
    fs::path generators;
    fs::path out;
    std::size_t n = 1000;
    int patch = 1;
    std::vector<double> spread{2.0, 3.2};
    std::uint64_t seed = 0;
    std::size_t linewidth_subgrid = 32;
};

void add_gen_spectra(CLI::App& app, GenSpectraOpts& o) {
    app.add_option("--generators", o.generators, "Checkpoint written by train-gen")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--out", o.out, "Output dataset directory")->required();
    app.add_option("--n", o.n, "Number of modeled spectra")->capture_default_str();
    app.add_option("--patch", o.patch, "Patch division used at generation")->capture_default_str();
    app.add_option("--spread", o.spread, "Field-spread range LO HI (Hz)")->expected(2)->capture_default_str();
    app.add_option("--seed", o.seed, "Sampling seed")->capture_default_str();
    app.add_option("--linewidth-subgrid", o.linewidth_subgrid, "Subgrid for the water linewidth")
        ->capture_default_str();
}

int run_gen_spectra(const GenSpectraOpts& o) {
    auto nets = nn::load_checkpoint(o.generators);
    if (nets.size() != 2) throw CheckpointError("expected a generator pair, found " + std::to_string(nets.size()));
    genmodel::AugmentConfig ac;
    ac.n = o.n;
    ac.patch = o.patch;
    ac.spread = {o.spread[0], o.spread[1]};
    ac.seed = o.seed;
    ac.linewidth_subgrid = o.linewidth_subgrid;
    const synth::Dataset ds = genmodel::augment(nets[0], nets[1], ac);
    synth::write_dataset(ds, o.out);
    std::printf("modeled: %zu\nwrote %s\n", ds.total(), (o.out / "manifest.json").c_str());
    return 0;
}

// ---------------------------------------------------------- train-analyzer

struct TrainAnalyzerOpts {
    fs::path manifest;
    fs::path out;
    std::string condition = "measured_only";
    std::size_t n_augment = 0;
    fs::path modeled;
    std::uint64_t simulated_seed = 1;
    std::vector<double> gamma_extra{0.5, 3.5};
    double sim_noise = 0.01;
    std::size_t epochs = 100;
    std::size_t batch = 4;
    double lr = 1e-4;
    std::uint64_t seed = 0;
};

void add_train_analyzer(CLI::App& app, TrainAnalyzerOpts& o) {
    app.add_option("--manifest", o.manifest, "Dataset with train (and optionally val/test) splits")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--out", o.out, "Output directory")->required();
    app.add_option("--condition", o.condition, "Training-data condition")
        ->check(CLI::IsMember({"measured_only", "simulated_only", "modeled_only", "measured_plus_simulated",
                               "measured_plus_modeled"}))
        ->capture_default_str();
    app.add_option("--n-augment", o.n_augment, "Extra records for the mixture conditions")->capture_default_str();
    app.add_option("--modeled", o.modeled, "Manifest written by gen-spectra")->check(CLI::ExistingFile);
    app.add_option("--simulated-seed", o.simulated_seed, "Seed of the B0-free control records")
        ->capture_default_str();
    app.add_option("--gamma-extra", o.gamma_extra, "Extra Lorentzian broadening range LO HI (Hz)")
        ->expected(2)
        ->capture_default_str();
    app.add_option("--sim-noise", o.sim_noise, "Noise SD of the control records")->capture_default_str();
    app.add_option("--epochs", o.epochs, "Epochs")->capture_default_str();
    app.add_option("--batch", o.batch, "Mini-batch size")->capture_default_str();
    app.add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
    app.add_option("--seed", o.seed, "Initialization and shuffling seed")->capture_default_str();
}

int run_train_analyzer(const TrainAnalyzerOpts& o) {
    const analysis::TrainingCondition cond{analysis::condition_from_string(o.condition), o.n_augment};
    cond.validate();
    const BasisSet basis = synth::default_basis();
    const synth::Dataset ds = synth::load_dataset(o.manifest);
    const auto& train = ds.split("train");

    analysis::AnalyzerData data;
    data.measured = &train;
    std::vector<synth::Sample> simulated, modeled;
    const bool mixture = cond.variant == analysis::Condition::MeasuredPlusSimulated ||
                         cond.variant == analysis::Condition::MeasuredPlusModeled;
    const std::size_t n_extra = mixture ? o.n_augment : train.size();
    if (cond.variant == analysis::Condition::SimulatedOnly ||
        cond.variant == analysis::Condition::MeasuredPlusSimulated) {
        analysis::SimulatedConfig sc{o.gamma_extra[0], o.gamma_extra[1], o.sim_noise};
        simulated = analysis::simulated_records(n_extra, o.simulated_seed, basis, sc);
        data.simulated = &simulated;
    }
    if (cond.variant == analysis::Condition::ModeledOnly || cond.variant == analysis::Condition::MeasuredPlusModeled) {
        if (o.modeled.empty()) throw ConfigError("--modeled is required for condition " + o.condition);
        modeled = synth::load_dataset(o.modeled).split("modeled");
        data.modeled = &modeled;
    }

    analysis::AnalyzerHyper h;
    h.epochs = o.epochs;
    h.batch_size = o.batch;
    h.adam.lr = o.lr;
    h.seed = o.seed;
    nn::Network net = analysis::make_analyzer();
    const auto hist = analysis::train_analyzer(net, cond, data, basis, h);

    fs::create_directories(o.out);
    nn::save_checkpoint(o.out / "analyzer.ckpt", {&net});
    io::write_text(o.out / "history.csv", history_csv({{"analyzer", &hist}}));
    json ev = json::object();
    for (const char* split : {"val", "test"}) {
        if (!ds.splits.count(split)) continue;
        const auto e = analysis::evaluate(net, ds.split(split), basis);
        ev[split] = {{"spectrum_mse", e.spectrum_mse}, {"ratio_mse", e.ratio_mse}, {"unnormalizable", e.unnormalizable}};
    }
    io::write_json(o.out / "evaluation.json",
                   {{"condition", o.condition}, {"n_augment", o.n_augment}, {"hyper", h.to_json()}, {"metrics", ev}});
    std::printf("%s: final loss %s\n", o.condition.c_str(),
                hist.epoch_loss.empty() ? "n/a" : eval::format_number(hist.epoch_loss.back()).c_str());
    return 0;
}

// ----------------------------------------------------------------- fit-lcm

struct FitLcmOpts {
    std::vector<fs::path> spectra;
    fs::path manifest;
    std::string split;
    fs::path out;
    std::vector<double> shift{-10.0, 10.0};
    std::vector<double> sigma{0.0, 12.0};
    double step = 1.0;
    int degree = 4;
    bool no_refine = false;
};

void add_fit_lcm(CLI::App& app, FitLcmOpts& o) {
    auto* sp = app.add_option("--spectrum", o.spectra, "Spectrum CSV (ppm,intensity); repeatable")
                   ->check(CLI::ExistingFile);
    auto* mf = app.add_option("--manifest", o.manifest, "Fit every measured spectrum of a dataset")
                   ->check(CLI::ExistingFile);
    sp->excludes(mf);
    app.add_option("--split", o.split, "Restrict --manifest to one split");
    app.add_option("--out", o.out, "Output directory")->required();
    app.add_option("--shift-range", o.shift, "Frequency-shift search range LO HI (Hz)")
        ->expected(2)
        ->capture_default_str();
    app.add_option("--sigma-range", o.sigma, "Gaussian broadening search range LO HI (Hz)")
        ->expected(2)
        ->capture_default_str();
    app.add_option("--step", o.step, "Coarse grid step (Hz)")->capture_default_str();
    app.add_option("--degree", o.degree, "Legendre baseline degree")->capture_default_str();
    app.add_flag("--no-refine", o.no_refine, "Skip golden-section refinement");
}

int run_fit_lcm(const FitLcmOpts& o) {
    lcm::LcmParams p;
    p.shift_lo = o.shift[0];
    p.shift_hi = o.shift[1];
    p.sigma_lo = o.sigma[0];
    p.sigma_hi = o.sigma[1];
    p.grid_step = o.step;
    p.baseline_degree = o.degree;
    p.refine = !o.no_refine;
    p.validate();

    std::vector<std::pair<std::string, Spectrum>> inputs;
    if (!o.manifest.empty()) {
        const synth::Dataset ds = synth::load_dataset(o.manifest);
        for (const auto& [name, samples] : ds.splits) {
            if (!o.split.empty() && name != o.split) continue;
            for (const auto& s : samples) inputs.emplace_back(s.id, s.measured);
        }
        if (inputs.empty()) throw DatasetError("no spectra selected from " + o.manifest.string());
    } else {
        if (o.spectra.empty()) throw ConfigError("give --spectrum or --manifest");
        for (const auto& path : o.spectra) inputs.emplace_back(path.stem().string(), io::read_spectrum_csv(path));
    }

    const BasisSet basis = synth::default_basis();
    fs::create_directories(o.out);
    std::string table = "id,shift_hz,sigma_hz,residual_mse";
    for (auto g : kGroupNames) table += "," + std::string(g);
    table += "\n";
    for (const auto& [id, spectrum] : inputs) {
        const lcm::LcmFitResult fit = lcm::lcm_fit(spectrum, basis, p);
        json j = {{"id", id}, {"params", p.to_json()}, {"fit", fit.to_json()}};
        table += id + "," + eval::format_number(fit.shift_hz) + "," + eval::format_number(fit.sigma_hz) + "," +
                 eval::format_number(fit.residual_mse);
        const double tcr = fit.amplitudes[idx(Metabolite::Cr)] + fit.amplitudes[idx(Metabolite::PCr)];
        if (tcr > 0.0) {
            const MetaboliteRatios r = lcm::lcm_ratios(fit);
            j["ratios"] = io::ratios_to_json(r);
            j["groups"] = groups_json(r);
            for (double g : group_ratios(r).as_array()) table += "," + eval::format_number(g);
        } else {
            j["ratios"] = nullptr;
            table += ",,,,";
        }
        table += "\n";
        io::write_json(o.out / (id + ".json"), j);
    }
    io::write_text(o.out / "fits.csv", table);
    std::printf("fitted %zu spectra into %s\n", inputs.size(), o.out.c_str());
    return 0;
}

// ------------------------------------------------------------------ report

struct ReportOpts {
    std::string experiment = "all";
    std::string preset = "full";
    fs::path experiment_config;
    fs::path from_report;
    std::vector<std::uint64_t> seeds;
    fs::path out;
};

void add_report(CLI::App& app, ReportOpts& o) {
    app.add_option("--experiment", o.experiment, "Experiment to run")
        ->check(CLI::IsMember({"table1", "table2", "fig5", "fig6", "all"}))
        ->capture_default_str();
    auto* pr = app.add_option("--preset", o.preset, "Built-in experiment config")
                   ->check(CLI::IsMember({"desk", "full"}))
                   ->capture_default_str();
    auto* ec = app.add_option("--experiment-config", o.experiment_config, "Experiment config JSON")
                   ->check(CLI::ExistingFile);
    auto* fr = app.add_option("--from-report", o.from_report, "Rerun with the config embedded in a report")
                   ->check(CLI::ExistingFile);
    ec->excludes(fr);
    pr->excludes(ec)->excludes(fr);
    app.add_option("--seeds", o.seeds, "Override the config's seed list");
    app.add_option("--out", o.out, "Output directory")->required();
}

int run_report(const ReportOpts& o) {
    eval::ExperimentConfig cfg;
    if (!o.experiment_config.empty()) {
        cfg = eval::load_experiment_config(o.experiment_config);
    } else if (!o.from_report.empty()) {
        cfg = eval::ExperimentConfig::from_json(eval::ExperimentReport::from_json(io::read_json(o.from_report)).config);
    } else {
        cfg = eval::experiment_preset(o.preset);
    }
    if (!o.seeds.empty()) {
        cfg.seeds = o.seeds;
        cfg.validate();
    }
    const std::vector<std::string> ids =
        o.experiment == "all" ? eval::kExperimentIds : std::vector<std::string>{o.experiment};

    eval::Workbench wb(cfg);
    // Wall-clock times vary between runs, so they go to stdout only.
    for (const auto& id : ids) {
        const auto t0 = std::chrono::steady_clock::now();
        const eval::ExperimentOutput out = eval::run_experiment(wb, id);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        eval::write_output(out, o.out);
        std::printf("%s (%.1f s)\n", id.c_str(), secs);
        for (const auto& a : out.report.arms)
            std::printf("  %-40s %s ± %s\n", a.name.c_str(), eval::format_number(a.mean).c_str(),
                        eval::format_number(a.sd).c_str());
        std::fflush(stdout);
    }
    return 0;
}

int exit_code(ErrorClass c) {
    switch (c) {
        case ErrorClass::Config: return kExitConfig;
        case ErrorClass::Data: return kExitData;
        case ErrorClass::Numerical: return kExitNumerical;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"b0spec: B0-aware spectral modeling, metabolite quantification and LCM fitting"};
    app.config_formatter(std::make_shared<cli::JsonConfig>());
    app.set_config("--config", "", "JSON config; nested objects address subcommands, flags override its keys");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    app.footer("Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.\n"
               "B0SPEC_THREADS caps the number of worker threads.");

    SynthOpts synth_o;
    TrainGenOpts gen_o;
    GenSpectraOpts spectra_o;
    TrainAnalyzerOpts analyzer_o;
    FitLcmOpts lcm_o;
    ReportOpts report_o;
    auto* synth_cmd = app.add_subcommand("synth", "Build a volunteer-analog or phantom dataset");
    auto* gen_cmd = app.add_subcommand("train-gen", "Train the generator pair");
    auto* spectra_cmd = app.add_subcommand("gen-spectra", "Generate modeled spectra with trained generators");
    auto* analyzer_cmd = app.add_subcommand("train-analyzer", "Train the quantification network");
    auto* lcm_cmd = app.add_subcommand("fit-lcm", "Linear-combination fit of spectra");
    auto* report_cmd = app.add_subcommand("report", "Run comparison experiments and write reports and plots");
    add_synth(*synth_cmd, synth_o);
    add_train_gen(*gen_cmd, gen_o);
    add_gen_spectra(*spectra_cmd, spectra_o);
    add_train_analyzer(*analyzer_cmd, analyzer_o);
    add_fit_lcm(*lcm_cmd, lcm_o);
    add_report(*report_cmd, report_o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (synth_cmd->parsed()) return run_synth(synth_o);
        if (gen_cmd->parsed()) return run_train_gen(gen_o);
        if (spectra_cmd->parsed()) return run_gen_spectra(spectra_o);
        if (analyzer_cmd->parsed()) return run_train_analyzer(analyzer_o);
        if (lcm_cmd->parsed()) return run_fit_lcm(lcm_o);
        if (report_cmd->parsed()) return run_report(report_o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.error_class());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed JSON input: " << e.what() << "\n";
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitConfig;
}
