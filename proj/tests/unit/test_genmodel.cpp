#include <doctest.h>

#include <cmath>

#include "b0spec/errors.hpp"
#include "b0spec/genmodel.hpp"
#include "b0spec/metrics.hpp"
#include "b0spec/parallel.hpp"
#include "b0spec/synth.hpp"

using namespace b0spec;
using namespace b0spec::genmodel;

namespace {

struct Pair {
    nn::Network g1 = make_generator1();
    nn::Network g2 = make_generator2();
    explicit Pair(std::uint64_t seed) {
        g1.init(seed);
        g2.init(seed + 1);
    }
};

MetaboliteRatios ratios(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return synth::sample_ratios(rng);
}

std::vector<synth::Sample> tiny_data(std::size_t n, double noise, double baseline, bool uniform) {
    synth::OracleConfig c;
    c.subgrid = 8;
    c.noise_sigma = noise;
    c.baseline_scale = baseline;
    std::vector<synth::Sample> out;
    for (std::size_t i = 0; i < n; ++i) {
        synth::Sample s;
        s.id = "s" + std::to_string(i);
        s.b0 = uniform ? B0Map::uniform(0.0) : synth::sample_b0_map(2.5, 100 + i);
        s.ratios = ratios(200 + i);
        c.seed = 300 + i;
        const auto o = synth::oracle_measured(*s.b0, s.ratios, synth::default_basis(), c);
        s.measured = o.measured;
        s.metabolites = o.metabolites;
        s.baseline = o.baseline;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_CASE("patch division") {
    const B0Map m = synth::sample_b0_map(3.0, 1);
    const auto one = patch_divide(m, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == m);
    const auto four = patch_divide(m, 4);
    REQUIRE(four.size() == 16);
    // Tile (1, 2) covers rows 32..63 and columns 64..95; each source pixel fills a 4×4 block.
    for (std::size_t r = 0; r < 128; ++r)
        for (std::size_t c = 0; c < 128; ++c) CHECK(four[1 * 4 + 2].at(r, c) == m.at(32 + r / 4, 64 + c / 4));
    const auto uni = patch_divide(B0Map::uniform(3.0), 8);
    for (const auto& t : uni) CHECK(t == B0Map::uniform(3.0));
    CHECK_THROWS_AS(patch_divide(m, 3), PatchError);
    CHECK_THROWS_AS(check_patch(16), PatchError);
    CHECK_THROWS_AS((TrainScheme{SchemeVariant::TwoStep, 5}.validate()), PatchError);
    CHECK(TrainScheme{SchemeVariant::TwoStep, 4}.label() == "two-step-p4");
    CHECK(TrainScheme{SchemeVariant::OneStep, 1}.label() == "one-step");
}

TEST_CASE("generate_modeled composition and patch averaging") {
    Pair p(5);
    const B0Map m = synth::sample_b0_map(2.0, 3);
    const MetaboliteRatios r = ratios(4);
    const Modeled a = generate_modeled(p.g1, p.g2, m, r, 1);
    CHECK(a.full.size() == 379);
    for (std::size_t i = 0; i < 379; ++i) CHECK(a.full[i] - a.base[i] == a.metab[i]);

    const Modeled u1 = generate_modeled(p.g1, p.g2, B0Map::uniform(1.5), r, 1);
    const Modeled u4 = generate_modeled(p.g1, p.g2, B0Map::uniform(1.5), r, 4);
    for (std::size_t i = 0; i < 379; ++i) CHECK(std::abs(u4.full[i] - u1.full[i]) <= 1e-12);

    // p = 2 equals the mean of single-tile passes over the four tiles.
    const auto tiles = patch_divide(m, 2);
    Spectrum mean(make_axis());
    for (const auto& t : tiles) mean += generate_modeled(p.g1, p.g2, t, r, 1).full;
    mean *= 0.25;
    const Modeled a2 = generate_modeled(p.g1, p.g2, m, r, 2);
    for (std::size_t i = 0; i < 379; ++i) CHECK(std::abs(a2.full[i] - mean[i]) <= 1e-12);

    std::vector<GenInput> in{{&m, r}, {&tiles[1], ratios(9)}};
    const auto many = generate_many(p.g1, p.g2, in, 2, 3);
    CHECK(mse(many[0].full, a2.full) < 1e-24);
    CHECK(mse(many[1].full, generate_modeled(p.g1, p.g2, tiles[1], ratios(9), 2).full) < 1e-24);

    nn::Network fresh = make_generator1();
    CHECK_THROWS_AS(generate_modeled(fresh, p.g2, m, r), UntrainedError);
}

TEST_CASE("one-step training overfits one sample and is deterministic") {
    const auto data = tiny_data(1, 0.0, 0.1, false);
    GenHyper h;
    h.epochs = 15;
    h.batch_size = 1;
    h.adam.lr = 1e-3;
    h.seed = 2;
    nn::Network a1 = make_generator1(), a2 = make_generator2();
    const auto ha = train_one_step(a1, a2, data, h);
    REQUIRE(ha.joint.epoch_loss.size() == 15);
    CHECK(ha.joint.epoch_loss.back() < ha.joint.epoch_loss.front());
    CHECK(ha.pretrain_g1.epoch_loss.empty());

    nn::Network b1 = make_generator1(), b2 = make_generator2();
    const auto hb = train_one_step(b1, b2, data, h);
    CHECK(hb.joint.epoch_loss == ha.joint.epoch_loss);
    CHECK(std::equal(a1.params().begin(), a1.params().end(), b1.params().begin()));

    GenHyper zero = h;
    zero.epochs = 0;
    nn::Network c1 = make_generator1(), c2 = make_generator2();
    train_one_step(c1, c2, data, zero);
    nn::Network d1 = make_generator1();
    d1.init(derive_seed(h.seed, 1));
    CHECK(c1.initialized());
    CHECK(std::equal(c1.params().begin(), c1.params().end(), d1.params().begin()));
}

TEST_CASE("two-step pretraining fits metabolite targets on clean uniform data") {
    const auto data = tiny_data(2, 0.0, 0.0, true);
    GenHyper h;
    h.epochs = 0;
    h.pretrain_epochs = 60;
    h.batch_size = 2;
    h.adam.lr = 1e-3;
    h.seed = 4;
    nn::Network g1 = make_generator1(), g2 = make_generator2();
    const auto hist = train_two_step(g1, g2, data, h, 1);
    REQUIRE(hist.pretrain_g1.epoch_loss.size() == 60);
    CHECK(hist.pretrain_g1.epoch_loss.back() < 1e-3);
    CHECK(hist.joint.epoch_loss.empty());

    auto missing = data;
    for (double& v : missing[0].metabolites.values()) v = 0.0;
    nn::Network m1 = make_generator1(), m2 = make_generator2();
    CHECK_THROWS_AS(train_two_step(m1, m2, missing, h, 1), DatasetError);
}

TEST_CASE("patch training runs for every patch size") {
    const auto data = tiny_data(2, 0.01, 0.1, false);
    GenHyper h;
    h.epochs = 1;
    h.batch_size = 2;
    h.seed = 8;
    h.tile_chunk = 16;
    for (int p : {2, 4, 8}) {
        nn::Network g1 = make_generator1(), g2 = make_generator2();
        const auto hist = train_scheme(g1, g2, data, {SchemeVariant::TwoStep, p}, h);
        CHECK(hist.joint.epoch_loss.size() == 1);
        CHECK(std::isfinite(modeled_mse(g1, g2, data, p)));
    }
}

TEST_CASE("augment") {
    Pair p(11);
    AugmentConfig c;
    c.n = 40;
    c.seed = 3;
    c.linewidth_subgrid = 8;
    const synth::Dataset a = augment(p.g1, p.g2, c);
    const auto& rec = a.split("modeled");
    REQUIRE(rec.size() == 40);
    for (const auto& s : rec) {
        CHECK(s.b0_from_seed);
        CHECK(mse(s.measured, s.metabolites + s.baseline) == 0.0);
        CHECK(s.spread_hz >= c.spread.lo);
        CHECK(s.spread_hz <= c.spread.hi);
    }
    const synth::Dataset again = augment(p.g1, p.g2, c);
    CHECK(mse(again.split("modeled")[17].measured, rec[17].measured) == 0.0);

    AugmentConfig small = c;
    small.n = 7;
    const synth::Dataset b = augment(p.g1, p.g2, small);
    const auto& pre = b.split("modeled");
    REQUIRE(pre.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(pre[i].ratios == rec[i].ratios);
        CHECK(mse(pre[i].measured, rec[i].measured) == 0.0);
    }
    CHECK(rec[5].map() == synth::sample_b0_map(rec[5].spread_hz, rec[5].map_seed));

    small.n = 0;
    CHECK(augment(p.g1, p.g2, small).total() == 0);
    nn::Network fresh = make_generator1();
    CHECK_THROWS_AS(augment(fresh, p.g2, c), UntrainedError);
}
