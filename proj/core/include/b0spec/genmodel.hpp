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

namespace b0spec::genmodel {

enum class SchemeVariant { OneStep, TwoStep };

struct TrainScheme {
    SchemeVariant variant = SchemeVariant::TwoStep;
    int patch = 1;

    /// Throws PatchError unless patch ∈ {1, 2, 4, 8}.
    void validate() const;
    /// "one-step" or "two-step-p<patch>".
    std::string label() const;
};

/// Throws PatchError for p ∉ {1, 2, 4, 8}.
void check_patch(int p);

/// p×p row-major tiles, each nearest-neighbour upsampled back to 128×128.
std::vector<B0Map> patch_divide(const B0Map& b0, int p);

/// Fresh (uninitialized) generators from the shipped architectures.
nn::Network make_generator1();
nn::Network make_generator2();

struct Modeled {
    Spectrum full;
    Spectrum metab;
    Spectrum base;
};

struct GenInput {
    const B0Map* b0 = nullptr;
    MetaboliteRatios ratios;
};

/// Averages the per-tile generator outputs; full = metab + base.
/// Throws UntrainedError when either network has no weights.
Modeled generate_modeled(const nn::Network& g1, const nn::Network& g2, const B0Map& b0, const MetaboliteRatios& ratios,
                         int patch = 1);
/// Batched form of generate_modeled; matches per-sample calls to rounding.
std::vector<Modeled> generate_many(const nn::Network& g1, const nn::Network& g2, const std::vector<GenInput>& inputs,
                                   int patch = 1, std::size_t tile_chunk = 32);

struct GenHyper {
    std::size_t epochs = 500;
    /// Step-1 epochs of the two-step scheme; defaults to `epochs`.
    std::optional<std::size_t> pretrain_epochs;
    std::size_t batch_size = 16;
    nn::AdamConfig adam;
    std::uint64_t seed = 0;
    std::size_t tile_chunk = 64;  ///< tiles per training pass (at least one sample's tiles); bounds memory

    nlohmann::json to_json() const;
};

struct GenTrainResult {
    nn::LossHistory pretrain_g1;
    nn::LossHistory pretrain_g2;
    nn::LossHistory joint;
};

/// Joint training of metab + base against the measured spectra.
GenTrainResult train_one_step(nn::Network& g1, nn::Network& g2, const std::vector<synth::Sample>& data,
                              const GenHyper& hyper, int patch = 1);
/// Step 1: g1 against metabolite-only targets and g2 against baselines.
/// Step 2: joint fine-tuning against measured spectra with fresh Adam state.
/// Throws DatasetError when component targets are missing.
GenTrainResult train_two_step(nn::Network& g1, nn::Network& g2, const std::vector<synth::Sample>& data,
                              const GenHyper& hyper, int patch = 1);
GenTrainResult train_scheme(nn::Network& g1, nn::Network& g2, const std::vector<synth::Sample>& data,
                            const TrainScheme& scheme, const GenHyper& hyper);

/// Mean over samples of MSE(full modeled, measured).
double modeled_mse(const nn::Network& g1, const nn::Network& g2, const std::vector<synth::Sample>& data, int patch = 1);

struct AugmentConfig {
    std::size_t n = 1000;
    int patch = 1;
    synth::SpreadRange spread;
    std::uint64_t seed = 0;
    std::size_t linewidth_subgrid = 32;
};

/// n modeled records with sampled maps and ratios. Record i depends only on
/// (seed, i), so smaller runs are prefixes of larger ones. The maps are kept
/// as (spread, seed) pairs. Records land in split "modeled".
synth::Dataset augment(const nn::Network& g1, const nn::Network& g2, const AugmentConfig& cfg);

}  // namespace b0spec::genmodel
