#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "b0spec/nn/adam.hpp"
#include "b0spec/nn/network.hpp"
#include "b0spec/nn/train.hpp"
#include "b0spec/spectrum.hpp"
#include "b0spec/synth.hpp"

namespace b0spec::analysis {

enum class Condition { MeasuredOnly, SimulatedOnly, ModeledOnly, MeasuredPlusSimulated, MeasuredPlusModeled };

std::string to_string(Condition c);
Condition condition_from_string(const std::string& s);

struct TrainingCondition {
    Condition variant = Condition::MeasuredOnly;
    std::size_t n_augment = 0;

    /// Throws ConfigError when a single-source condition carries n_augment > 0.
    void validate() const;
};

nn::Network make_analyzer();

struct AnalyzerHyper {
    std::size_t epochs = 100;
    std::size_t batch_size = 4;
    nn::AdamConfig adam;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

/// Training target: ratio-weighted sum of the unbroadened basis spectra.
Spectrum clean_reference(const MetaboliteRatios& ratios, const BasisSet& basis);

struct SimulatedConfig {
    double gamma_extra_lo = 0.5;  ///< Hz
    double gamma_extra_hi = 3.5;
    double noise_sigma = 0.01;
};

/// B0-free control spectra: sampled ratios, uniform extra broadening, noise,
/// no baseline. Record i depends only on (seed, i).
std::vector<synth::Sample> simulated_records(std::size_t n, std::uint64_t seed, const BasisSet& basis,
                                             const SimulatedConfig& cfg = {});

/// Spectrum sources for the five conditions. Pools must hold at least as
/// many records as the condition draws; records are taken as prefixes.
struct AnalyzerData {
    const std::vector<synth::Sample>* measured = nullptr;
    const std::vector<synth::Sample>* simulated = nullptr;
    const std::vector<synth::Sample>* modeled = nullptr;
};

/// Training inputs {N,1,379} and clean-reference targets {N,379}.
struct TrainingSet {
    nn::Tensor inputs;
    nn::Tensor targets;
};

/// Single-source conditions draw |measured| records; mixtures add n_augment
/// records of the second source. Throws DatasetError for a missing arm.
TrainingSet assemble(const TrainingCondition& cond, const AnalyzerData& data, const BasisSet& basis);

nn::LossHistory train_analyzer(nn::Network& net, const TrainingCondition& cond, const AnalyzerData& data,
                               const BasisSet& basis, const AnalyzerHyper& hyper);

/// Throws UntrainedError without weights.
Spectrum predict(const nn::Network& net, const Spectrum& s);
std::vector<Spectrum> predict_many(const nn::Network& net, const std::vector<Spectrum>& inputs);

struct RatioExtraction {
    Amplitudes amplitudes{};
    /// Empty when the tCr aggregate is zero and no normalization is possible.
    std::optional<MetaboliteRatios> ratios;
    double residual_norm = 0.0;
};

/// NNLS of `metab` against the 15 basis spectra, then tCr normalization.
/// Throws SingularBasisError for a rank-deficient basis.
RatioExtraction extract_ratios(const Spectrum& metab, const BasisSet& basis);

struct Evaluation {
    double spectrum_mse = 0.0;  ///< predicted vs clean reference, averaged over samples
    double ratio_mse = 0.0;     ///< extracted vs true ratios over the 15 metabolites
    std::size_t unnormalizable = 0;
};

/// Runs the analyzer on each sample's measured spectrum.
Evaluation evaluate(const nn::Network& net, const std::vector<synth::Sample>& samples, const BasisSet& basis);

}  // namespace b0spec::analysis
