#include "b0spec/genmodel.hpp"

#include <algorithm>
#include <cstring>
#include <random>

#include "b0spec/configs.hpp"
#include "b0spec/errors.hpp"
#include "b0spec/metrics.hpp"
#include "b0spec/parallel.hpp"

namespace b0spec::genmodel {

using nn::ForwardCache;
using nn::Network;
using nn::Tensor;

namespace {

constexpr std::size_t kSide = kB0MapSize;
constexpr std::size_t kPix = kSide * kSide;

enum class Target { Measured, Metabolites, Baseline };

// Normalized, upsampled tiles [t0, t1) of a sample list; tile t belongs to
// sample t / p² and is tile t % p² of that sample's map.
Tensor make_tiles(const std::vector<std::vector<double>>& norm_maps, int p, std::size_t t0, std::size_t t1) {
    const std::size_t pp = static_cast<std::size_t>(p * p);
    const std::size_t s = kSide / static_cast<std::size_t>(p);
    Tensor x({t1 - t0, 1, kSide, kSide});
    for (std::size_t t = t0; t < t1; ++t) {
        const std::vector<double>& m = norm_maps[t / pp];
        const std::size_t tile = t % pp;
        const std::size_t r0 = (tile / static_cast<std::size_t>(p)) * s;
        const std::size_t c0 = (tile % static_cast<std::size_t>(p)) * s;
        double* out = x.ptr() + (t - t0) * kPix;
        for (std::size_t y = 0; y < kSide; ++y) {
            const double* src = m.data() + (r0 + y / static_cast<std::size_t>(p)) * kSide + c0;
            double* dst = out + y * kSide;
            for (std::size_t c = 0; c < kSide; ++c) dst[c] = src[c / static_cast<std::size_t>(p)];
        }
    }
    return x;
}

Tensor make_side(const std::vector<MetaboliteRatios>& ratios, int p, std::size_t t0, std::size_t t1) {
    const std::size_t pp = static_cast<std::size_t>(p * p);
    Tensor s({t1 - t0, kNumMetabolites});
    for (std::size_t t = t0; t < t1; ++t)
        std::memcpy(s.ptr() + (t - t0) * kNumMetabolites, ratios[t / pp].values.data(),
                    kNumMetabolites * sizeof(double));
    return s;
}

// Adds y[t]/p² into out[t / p²] for tiles [t0, t1).
void accumulate_tiles(const Tensor& y, Tensor& out, int p, std::size_t t0) {
    const std::size_t pp = static_cast<std::size_t>(p * p);
    const std::size_t k = y.sample_size();
    const double w = 1.0 / static_cast<double>(pp);
    for (std::size_t i = 0; i < y.batch(); ++i) {
        const double* src = y.ptr() + i * k;
        double* dst = out.ptr() + ((t0 + i) / pp) * k;
        for (std::size_t j = 0; j < k; ++j) dst[j] += w * src[j];
    }
}

Tensor expand_grad(const Tensor& g, int p, std::size_t t0, std::size_t t1) {
    const std::size_t pp = static_cast<std::size_t>(p * p);
    const std::size_t k = g.sample_size();
    const double w = 1.0 / static_cast<double>(pp);
    Tensor out({t1 - t0, k});
    for (std::size_t t = t0; t < t1; ++t) {
        const double* src = g.ptr() + (t / pp) * k;
        double* dst = out.ptr() + (t - t0) * k;
        for (std::size_t j = 0; j < k; ++j) dst[j] = w * src[j];
    }
    return out;
}

struct Member {
    Network* net;
    bool uses_side;
    nn::AdamState adam;
    std::vector<double> grads;
    ForwardCache cache;
};

Member member(Network& net, bool uses_side) { return Member{&net, uses_side, nn::AdamState(), {}, {}}; }

const Spectrum& target_of(const synth::Sample& s, Target t) {
    switch (t) {
        case Target::Metabolites: return s.metabolites;
        case Target::Baseline: return s.baseline;
        case Target::Measured: break;
    }
    return s.measured;
}

// Samples are processed in groups whose tiles fit one pass, so every tile is
// forwarded once and back-propagated from its own cache. Gradients match a
// single full-batch pass because the loss separates over samples.
double batch_step(std::vector<Member>& members, const std::vector<synth::Sample>& data,
                  std::span<const std::size_t> idx, int p, std::size_t chunk, Target target) {
    const std::size_t B = idx.size();
    const std::size_t pp = static_cast<std::size_t>(p * p);
    const std::size_t per_pass = std::max<std::size_t>(1, chunk / pp);
    const double scale = static_cast<double>(B * kSpectrumPoints);
    for (auto& m : members) std::fill(m.grads.begin(), m.grads.end(), 0.0);

    double sse = 0.0;
    for (std::size_t b0 = 0; b0 < B; b0 += per_pass) {
        const std::size_t nb = std::min(per_pass, B - b0);
        std::vector<std::vector<double>> norms(nb);
        std::vector<MetaboliteRatios> ratios(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            const synth::Sample& s = data[idx[b0 + b]];
            norms[b] = normalize_b0(s.map());
            ratios[b] = s.ratios;
        }
        const std::size_t T = nb * pp;
        const Tensor x = make_tiles(norms, p, 0, T);
        const Tensor side = make_side(ratios, p, 0, T);
        Tensor out({nb, kSpectrumPoints});
        for (auto& m : members) {
            const Tensor& y = m.net->forward(x, m.uses_side ? &side : nullptr, &m.cache);
            accumulate_tiles(y, out, p, 0);
        }
        Tensor g({nb, kSpectrumPoints});
        for (std::size_t b = 0; b < nb; ++b) {
            const auto t = target_of(data[idx[b0 + b]], target).values();
            const auto o = out.sample(b);
            auto gb = g.sample(b);
            for (std::size_t j = 0; j < kSpectrumPoints; ++j) {
                const double d = o[j] - t[j];
                sse += d * d;
                gb[j] = 2.0 * d / scale;
            }
        }
        const Tensor gt = expand_grad(g, p, 0, T);
        for (auto& m : members) m.net->backward(m.cache, gt, m.grads);
    }
    for (auto& m : members) m.adam.step(m.net->mutable_params(), m.grads);
    return sse / scale;
}

nn::LossHistory run_phase(std::vector<Member> members, const std::vector<synth::Sample>& data, std::size_t epochs,
                          const GenHyper& h, int p, Target target, std::uint64_t seed) {
    for (auto& m : members) {
        m.adam = nn::AdamState(h.adam);
        m.grads.assign(m.net->param_count(), 0.0);
    }
    return nn::run_epochs(data.size(), epochs, h.batch_size, seed, [&](std::span<const std::size_t> idx) {
        return batch_step(members, data, idx, p, std::max<std::size_t>(1, h.tile_chunk), target);
    });
}

void ensure_init(Network& g1, Network& g2, std::uint64_t seed) {
    if (!g1.initialized()) g1.init(derive_seed(seed, 1));
    if (!g2.initialized()) g2.init(derive_seed(seed, 2));
}

}  // namespace

void check_patch(int p) {
    if (p != 1 && p != 2 && p != 4 && p != 8) throw PatchError("patch count must be 1, 2, 4 or 8, got " + std::to_string(p));
}

void TrainScheme::validate() const { check_patch(patch); }

std::string TrainScheme::label() const {
    return variant == SchemeVariant::OneStep ? "one-step" : "two-step-p" + std::to_string(patch);
}

std::vector<B0Map> patch_divide(const B0Map& b0, int p) {
    check_patch(p);
    const std::size_t up = static_cast<std::size_t>(p);
    const std::size_t s = kSide / up;
    std::vector<B0Map> tiles;
    tiles.reserve(up * up);
    for (std::size_t tr = 0; tr < up; ++tr) {
        for (std::size_t tc = 0; tc < up; ++tc) {
            std::vector<double> v(kPix);
            for (std::size_t y = 0; y < kSide; ++y)
                for (std::size_t x = 0; x < kSide; ++x) v[y * kSide + x] = b0.at(tr * s + y / up, tc * s + x / up);
            tiles.emplace_back(std::move(v));
        }
    }
    return tiles;
}

Network make_generator1() { return frozen_network("generator1"); }
Network make_generator2() { return frozen_network("generator2"); }

std::vector<Modeled> generate_many(const Network& g1, const Network& g2, const std::vector<GenInput>& inputs, int patch,
                                   std::size_t tile_chunk) {
    check_patch(patch);
    if (!g1.initialized() || !g2.initialized()) throw UntrainedError("generators have no weights");
    const std::size_t N = inputs.size();
    const std::size_t T = N * static_cast<std::size_t>(patch * patch);
    std::vector<std::vector<double>> norms(N);
    std::vector<MetaboliteRatios> ratios(N);
    for (std::size_t i = 0; i < N; ++i) {
        if (!inputs[i].b0) throw InputError("generator input without a field map");
        norms[i] = normalize_b0(*inputs[i].b0);
        ratios[i] = inputs[i].ratios;
    }
    Tensor metab({N, kSpectrumPoints});
    Tensor base({N, kSpectrumPoints});
    const std::size_t chunk = std::max<std::size_t>(1, tile_chunk);
    for (std::size_t t0 = 0; t0 < T; t0 += chunk) {
        const std::size_t t1 = std::min(T, t0 + chunk);
        const Tensor x = make_tiles(norms, patch, t0, t1);
        const Tensor side = make_side(ratios, patch, t0, t1);
        accumulate_tiles(g1.forward(x, &side), metab, patch, t0);
        accumulate_tiles(g2.forward(x), base, patch, t0);
    }
    const SpectralAxis axis = make_axis();
    std::vector<Modeled> out;
    out.reserve(N);
    for (std::size_t i = 0; i < N; ++i) {
        Modeled m;
        const auto ms = metab.sample(i), bs = base.sample(i);
        m.metab = Spectrum(axis, {ms.begin(), ms.end()});
        m.base = Spectrum(axis, {bs.begin(), bs.end()});
        m.full = m.metab + m.base;
        out.push_back(std::move(m));
    }
    return out;
}

Modeled generate_modeled(const Network& g1, const Network& g2, const B0Map& b0, const MetaboliteRatios& ratios,
                         int patch) {
    return std::move(generate_many(g1, g2, {GenInput{&b0, ratios}}, patch).front());
}

nlohmann::json GenHyper::to_json() const {
    return {{"epochs", epochs},
            {"pretrain_epochs", pretrain_epochs.value_or(epochs)},
            {"batch_size", batch_size},
            {"adam", adam.to_json()},
            {"seed", seed},
            {"tile_chunk", tile_chunk}};
}

GenTrainResult train_one_step(Network& g1, Network& g2, const std::vector<synth::Sample>& data, const GenHyper& h,
                              int patch) {
    check_patch(patch);
    ensure_init(g1, g2, h.seed);
    GenTrainResult r;
    r.joint = run_phase({member(g1, true), member(g2, false)}, data, h.epochs, h, patch, Target::Measured,
                        derive_seed(h.seed, 13));
    return r;
}

GenTrainResult train_two_step(Network& g1, Network& g2, const std::vector<synth::Sample>& data, const GenHyper& h,
                              int patch) {
    check_patch(patch);
    for (const auto& s : data) {
        const auto v = s.metabolites.values();
        if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }))
            throw DatasetError("sample '" + s.id + "' lacks a metabolite-only target");
    }
    ensure_init(g1, g2, h.seed);
    const std::size_t pre = h.pretrain_epochs.value_or(h.epochs);
    GenTrainResult r;
    r.pretrain_g1 = run_phase({member(g1, true)}, data, pre, h, patch, Target::Metabolites, derive_seed(h.seed, 11));
    r.pretrain_g2 = run_phase({member(g2, false)}, data, pre, h, patch, Target::Baseline, derive_seed(h.seed, 12));
    r.joint = run_phase({member(g1, true), member(g2, false)}, data, h.epochs, h, patch, Target::Measured,
                        derive_seed(h.seed, 13));
    return r;
}

GenTrainResult train_scheme(Network& g1, Network& g2, const std::vector<synth::Sample>& data,
                            const TrainScheme& scheme, const GenHyper& hyper) {
    scheme.validate();
    if (scheme.variant == SchemeVariant::OneStep) return train_one_step(g1, g2, data, hyper, scheme.patch);
    return train_two_step(g1, g2, data, hyper, scheme.patch);
}

double modeled_mse(const Network& g1, const Network& g2, const std::vector<synth::Sample>& data, int patch) {
    if (data.empty()) throw DatasetError("no samples to evaluate");
    std::vector<B0Map> maps;
    maps.reserve(data.size());
    std::vector<GenInput> in;
    for (const auto& s : data) maps.push_back(s.map());
    for (std::size_t i = 0; i < data.size(); ++i) in.push_back({&maps[i], data[i].ratios});
    const auto out = generate_many(g1, g2, in, patch);
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) total += mse(out[i].full, data[i].measured);
    return total / static_cast<double>(data.size());
}

synth::Dataset augment(const Network& g1, const Network& g2, const AugmentConfig& cfg) {
    check_patch(cfg.patch);
    if (!g1.initialized() || !g2.initialized()) throw UntrainedError("generators have no weights");
    // Fixed-size groups, padded at the end, so a record never depends on n.
    constexpr std::size_t kGroup = 32;
    std::vector<synth::Sample> records(cfg.n);
    const std::size_t groups = (cfg.n + kGroup - 1) / kGroup;
    parallel_for(groups, [&](std::size_t gi) {
        const std::size_t i0 = gi * kGroup;
        std::vector<B0Map> maps;
        std::vector<GenInput> in;
        maps.reserve(kGroup);
        for (std::size_t k = 0; k < kGroup; ++k) {
            const std::size_t i = i0 + k;
            if (i >= cfg.n) {
                in.push_back(in.back());
                continue;
            }
            synth::Sample& s = records[i];
            s.seed = derive_seed(cfg.seed, i);
            std::mt19937_64 rng(s.seed);
            s.ratios = synth::sample_ratios(rng);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            s.spread_hz = cfg.spread.lo + unit(rng) * (cfg.spread.hi - cfg.spread.lo);
            s.map_seed = derive_seed(s.seed, 7);
            s.b0_from_seed = true;
            maps.push_back(synth::sample_b0_map(s.spread_hz, s.map_seed));
            in.push_back({&maps.back(), s.ratios});
        }
        auto out = generate_many(g1, g2, in, cfg.patch);
        for (std::size_t k = 0; k < kGroup && i0 + k < cfg.n; ++k) {
            synth::Sample& s = records[i0 + k];
            char id[32];
            std::snprintf(id, sizeof id, "modeled_%05zu", i0 + k);
            s.id = id;
            s.measured = std::move(out[k].full);
            s.metabolites = std::move(out[k].metab);
            s.baseline = std::move(out[k].base);
            s.water_lw_hz = synth::water_linewidth(maps[k], cfg.linewidth_subgrid);
        }
    });
    synth::Dataset ds;
    ds.splits["modeled"] = std::move(records);
    ds.config = {{"kind", "modeled"},
                 {"n", cfg.n},
                 {"patch", cfg.patch},
                 {"spread_hz", {cfg.spread.lo, cfg.spread.hi}},
                 {"seed", cfg.seed}};
    return ds;
}

}  // namespace b0spec::genmodel
