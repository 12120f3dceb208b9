#include "b0spec/analysis.hpp"

#include <algorithm>
#include <cstring>
#include <random>

#include "b0spec/configs.hpp"
#include "b0spec/errors.hpp"
#include "b0spec/lineshape.hpp"
#include "b0spec/metrics.hpp"
#include "b0spec/nnls.hpp"
#include "b0spec/parallel.hpp"

namespace b0spec::analysis {

namespace {

constexpr std::pair<Condition, const char*> kConditionNames[] = {
    {Condition::MeasuredOnly, "measured_only"},
    {Condition::SimulatedOnly, "simulated_only"},
    {Condition::ModeledOnly, "modeled_only"},
    {Condition::MeasuredPlusSimulated, "measured_plus_simulated"},
    {Condition::MeasuredPlusModeled, "measured_plus_modeled"},
};

Eigen::MatrixXd basis_matrix(const BasisSet& basis) {
    Eigen::MatrixXd A(static_cast<Eigen::Index>(basis.axis().n_points), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t j = 0; j < basis.size(); ++j) {
        const auto v = basis[j].spectrum.values();
        for (std::size_t i = 0; i < v.size(); ++i) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i];
    }
    return A;
}

void append(std::vector<const synth::Sample*>& out, const std::vector<synth::Sample>* pool, std::size_t n,
            const char* what) {
    if (n == 0) return;
    if (!pool) throw DatasetError(std::string("condition needs ") + what + " spectra but none were supplied");
    if (pool->size() < n) {
        throw DatasetError(std::string("condition needs ") + std::to_string(n) + " " + what + " spectra, only " +
                           std::to_string(pool->size()) + " available");
    }
    for (std::size_t i = 0; i < n; ++i) out.push_back(&(*pool)[i]);
}

}  // namespace

std::string to_string(Condition c) {
    for (const auto& [k, name] : kConditionNames)
        if (k == c) return name;
    return "unknown";
}

Condition condition_from_string(const std::string& s) {
    for (const auto& [k, name] : kConditionNames)
        if (s == name) return k;
    throw ConfigError("unknown training condition '" + s + "'");
}

void TrainingCondition::validate() const {
    const bool mixture = variant == Condition::MeasuredPlusSimulated || variant == Condition::MeasuredPlusModeled;
    if (!mixture && n_augment != 0)
        throw ConfigError("condition " + to_string(variant) + " takes no augmentation records");
}

nn::Network make_analyzer() { return frozen_network("analyzer"); }

nlohmann::json AnalyzerHyper::to_json() const {
    return {{"epochs", epochs}, {"batch_size", batch_size}, {"adam", adam.to_json()}, {"seed", seed}};
}

Spectrum clean_reference(const MetaboliteRatios& ratios, const BasisSet& basis) {
    return basis.weighted_sum(ratios.values);
}

std::vector<synth::Sample> simulated_records(std::size_t n, std::uint64_t seed, const BasisSet& basis,
                                             const SimulatedConfig& cfg) {
    if (!(cfg.gamma_extra_lo >= 0.0 && cfg.gamma_extra_hi >= cfg.gamma_extra_lo))
        throw ConfigError("invalid extra-broadening range");
    std::vector<synth::Sample> out(n);
    parallel_for(n, [&](std::size_t i) {
        synth::Sample& s = out[i];
        s.seed = derive_seed(seed, i);
        std::mt19937_64 rng(s.seed);
        s.ratios = synth::sample_ratios(rng);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double gamma = cfg.gamma_extra_lo + unit(rng) * (cfg.gamma_extra_hi - cfg.gamma_extra_lo);
        char id[32];
        std::snprintf(id, sizeof id, "simulated_%05zu", i);
        s.id = id;
        s.measured = synth::simulate_conventional(s.ratios, basis, gamma, cfg.noise_sigma, s.seed);
        s.metabolites = synth::simulate_conventional(s.ratios, basis, gamma, 0.0, s.seed);
        s.baseline = Spectrum(basis.axis());
        s.water_lw_hz = 2.0 * (synth::kWaterGammaHz + gamma);
    });
    return out;
}

TrainingSet assemble(const TrainingCondition& cond, const AnalyzerData& data, const BasisSet& basis) {
    cond.validate();
    if (!data.measured || data.measured->empty()) throw DatasetError("no measured spectra supplied");
    const std::size_t n_meas = data.measured->size();
    std::vector<const synth::Sample*> rows;
    switch (cond.variant) {
        case Condition::MeasuredOnly: append(rows, data.measured, n_meas, "measured"); break;
        case Condition::SimulatedOnly: append(rows, data.simulated, n_meas, "simulated"); break;
        case Condition::ModeledOnly: append(rows, data.modeled, n_meas, "modeled"); break;
        case Condition::MeasuredPlusSimulated:
            append(rows, data.measured, n_meas, "measured");
            append(rows, data.simulated, cond.n_augment, "simulated");
            break;
        case Condition::MeasuredPlusModeled:
            append(rows, data.measured, n_meas, "measured");
            append(rows, data.modeled, cond.n_augment, "modeled");
            break;
    }
    const std::size_t N = rows.size(), L = basis.axis().n_points;
    TrainingSet ts{nn::Tensor({N, 1, L}), nn::Tensor({N, L})};
    for (std::size_t i = 0; i < N; ++i) {
        const auto in = rows[i]->measured.values();
        if (in.size() != L) throw ShapeError("spectrum " + rows[i]->id + " has the wrong length");
        std::copy(in.begin(), in.end(), ts.inputs.sample(i).begin());
        const Spectrum ref = clean_reference(rows[i]->ratios, basis);
        std::copy(ref.values().begin(), ref.values().end(), ts.targets.sample(i).begin());
    }
    return ts;
}

nn::LossHistory train_analyzer(nn::Network& net, const TrainingCondition& cond, const AnalyzerData& data,
                               const BasisSet& basis, const AnalyzerHyper& hyper) {
    const TrainingSet ts = assemble(cond, data, basis);
    nn::TrainConfig tc;
    tc.epochs = hyper.epochs;
    tc.batch_size = hyper.batch_size;
    tc.adam = hyper.adam;
    tc.seed = hyper.seed;
    return nn::train(net, ts.inputs, ts.targets, tc);
}

std::vector<Spectrum> predict_many(const nn::Network& net, const std::vector<Spectrum>& inputs) {
    if (!net.initialized()) throw UntrainedError("analyzer has no weights");
    constexpr std::size_t kChunk = 64;
    std::vector<Spectrum> out;
    out.reserve(inputs.size());
    for (std::size_t i0 = 0; i0 < inputs.size(); i0 += kChunk) {
        const std::size_t n = std::min(kChunk, inputs.size() - i0);
        std::vector<std::span<const double>> rows;
        for (std::size_t k = 0; k < n; ++k) rows.push_back(inputs[i0 + k].values());
        const nn::Tensor y = net.forward(nn::stack(rows, net.input_shape()));
        for (std::size_t k = 0; k < n; ++k) {
            const auto v = y.sample(k);
            out.emplace_back(inputs[i0 + k].axis(), std::vector<double>(v.begin(), v.end()));
        }
    }
    return out;
}

Spectrum predict(const nn::Network& net, const Spectrum& s) { return predict_many(net, {s}).front(); }

RatioExtraction extract_ratios(const Spectrum& metab, const BasisSet& basis) {
    if (metab.axis() != basis.axis()) throw ShapeError("spectrum and basis use different axes");
    if (!metab.all_finite()) throw InputError("spectrum contains non-finite values");
    const Eigen::MatrixXd A = basis_matrix(basis);
    require_full_column_rank(A, "basis set");
    const auto v = metab.values();
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    const NnlsResult r = nnls(A, b);
    RatioExtraction out;
    for (std::size_t j = 0; j < kNumMetabolites; ++j) out.amplitudes[j] = r.x(static_cast<Eigen::Index>(j));
    out.residual_norm = r.residual_norm;
    try {
        out.ratios = MetaboliteRatios::from_amplitudes(out.amplitudes);
    } catch (const ZeroReferenceError&) {
        out.ratios.reset();
    }
    return out;
}

Evaluation evaluate(const nn::Network& net, const std::vector<synth::Sample>& samples, const BasisSet& basis) {
    if (samples.empty()) throw DatasetError("no samples to evaluate");
    std::vector<Spectrum> inputs;
    inputs.reserve(samples.size());
    for (const auto& s : samples) inputs.push_back(s.measured);
    const auto pred = predict_many(net, inputs);
    Evaluation ev;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        ev.spectrum_mse += mse(pred[i], clean_reference(samples[i].ratios, basis));
        const RatioExtraction rx = extract_ratios(pred[i], basis);
        const Amplitudes est = rx.ratios ? rx.ratios->values : Amplitudes{};
        if (!rx.ratios) ++ev.unnormalizable;
        ev.ratio_mse += mse(est, samples[i].ratios.values);
    }
    ev.spectrum_mse /= static_cast<double>(samples.size());
    ev.ratio_mse /= static_cast<double>(samples.size());
    return ev;
}

}  // namespace b0spec::analysis
