#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "b0spec/analysis.hpp"
#include "b0spec/genmodel.hpp"
#include "b0spec/lcmfit.hpp"
#include "b0spec/report.hpp"
#include "b0spec/synth.hpp"

namespace b0spec::eval {

struct DatasetSection {
    std::size_t n_total = 174;
    synth::SpreadRange spread;
    std::size_t subgrid = kB0MapSize;
    double noise_sigma = 0.01;
    double baseline_scale = 0.15;
};

struct GeneratorSection {
    std::size_t epochs = 500;
    std::optional<std::size_t> pretrain_epochs;
    std::size_t batch_size = 16;
    double lr = 1e-4;
    std::size_t tile_chunk = 64;
};

struct AnalyzerSection {
    std::size_t epochs = 100;
    std::size_t batch_size = 4;
    double lr = 1e-4;
};

/// Everything an experiment run depends on besides code. Missing keys take
/// the full-scale defaults below; unknown keys are rejected.
struct ExperimentConfig {
    std::vector<std::uint64_t> seeds{1, 2, 3};
    DatasetSection dataset;
    GeneratorSection generator;
    std::vector<int> table1_patches{1, 2, 4, 8};
    int augment_patch = 1;
    std::size_t augment_linewidth_subgrid = 32;
    /// Training overrides for the augmentation generator; unset fields fall
    /// back to `generator`.
    std::optional<std::size_t> augment_epochs;
    std::optional<std::size_t> augment_pretrain_epochs;
    std::optional<double> augment_lr;
    AnalyzerSection analyzer;
    analysis::SimulatedConfig simulated;
    std::size_t table2_n_augment = 1000;
    std::vector<std::size_t> fig5_n_augment{0, 100, 1000, 10000};
    std::size_t fig6_repeats = 7;
    std::size_t fig6_subgrid = kB0MapSize;
    lcm::LcmParams lcm;

    /// Throws ConfigError on unknown keys, wrong types or invalid values.
    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    void validate() const;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// "desk" or "full"; throws ConfigError otherwise.
ExperimentConfig experiment_preset(const std::string& name);

/// Per-seed artifacts shared between experiments: the dataset, trained
/// generator pairs, augmentation pools, analyzers and phantom sets. Each is
/// built on first use from the config and the seed. Not thread-safe.
class Workbench {
public:
    explicit Workbench(ExperimentConfig cfg);
    ~Workbench();
    Workbench(const Workbench&) = delete;
    Workbench& operator=(const Workbench&) = delete;

    const ExperimentConfig& config() const { return cfg_; }
    const BasisSet& basis() const { return basis_; }

    const synth::Dataset& dataset(std::uint64_t seed);

    struct GeneratorPair {
        nn::Network g1;
        nn::Network g2;
        genmodel::GenTrainResult history;
    };
    /// Trained on the dataset's train split. All schemes of one seed start
    /// from the same initial weights.
    const GeneratorPair& generators(std::uint64_t seed, const genmodel::TrainScheme& scheme);

    /// Two-step generators used for augmentation (patch and training
    /// overrides from the augment section).
    const GeneratorPair& augmenter(std::uint64_t seed);
    /// At least n modeled records from the augmentation generator.
    const std::vector<synth::Sample>& modeled_pool(std::uint64_t seed, std::size_t n);
    /// At least n B0-free control records.
    const std::vector<synth::Sample>& simulated_pool(std::uint64_t seed, std::size_t n);

    struct TrainedAnalyzer {
        nn::Network net;
        nn::LossHistory history;
    };
    const TrainedAnalyzer& analyzer(std::uint64_t seed, const analysis::TrainingCondition& cond);

    const synth::Dataset& phantom(std::uint64_t seed, synth::PhantomRegion region);

private:
    struct PerSeed;
    PerSeed& slot(std::uint64_t seed);
    const GeneratorPair& train_pair(std::uint64_t seed, const std::string& key, const genmodel::TrainScheme& scheme,
                                    const genmodel::GenHyper& hyper);
    genmodel::GenHyper generator_hyper(std::uint64_t seed) const;

    ExperimentConfig cfg_;
    BasisSet basis_;
    std::map<std::uint64_t, std::unique_ptr<PerSeed>> seeds_;
};

/// A report plus the SVG figures derived from it (file name → contents).
struct ExperimentOutput {
    ExperimentReport report;
    std::map<std::string, std::string> figures;
};

inline const std::vector<std::string> kExperimentIds = {"table1", "table2", "fig5", "fig6"};

ExperimentOutput exp_table1(Workbench& wb);
ExperimentOutput exp_table2(Workbench& wb);
ExperimentOutput exp_fig5(Workbench& wb);
ExperimentOutput exp_fig6(Workbench& wb);
/// Dispatch by id; throws ConfigError for an unknown id.
ExperimentOutput run_experiment(Workbench& wb, const std::string& id);

/// Writes <id>.json, <id>.csv and the figures into `dir`.
void write_output(const ExperimentOutput& out, const std::filesystem::path& dir);

}  // namespace b0spec::eval
