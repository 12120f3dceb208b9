#include <benchmark/benchmark.h>

#include <random>

#include "b0spec/analysis.hpp"
#include "b0spec/genmodel.hpp"
#include "b0spec/lcmfit.hpp"
#include "b0spec/nnls.hpp"
#include "b0spec/synth.hpp"

using namespace b0spec;

namespace {

const BasisSet& basis() {
    static const BasisSet b = synth::default_basis();
    return b;
}

MetaboliteRatios ratios() {
    std::mt19937_64 rng(3);
    return synth::sample_ratios(rng);
}

}  // namespace

static void BM_Oracle(benchmark::State& state) {
    const B0Map map = synth::sample_b0_map(2.5, 11);
    const MetaboliteRatios r = ratios();
    synth::OracleConfig c;
    c.subgrid = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(synth::oracle_measured(map, r, basis(), c));
}
BENCHMARK(BM_Oracle)->Arg(8)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_WaterLinewidth(benchmark::State& state) {
    const B0Map map = synth::sample_b0_map(2.5, 11);
    for (auto _ : state) benchmark::DoNotOptimize(synth::water_linewidth(map, 32));
}
BENCHMARK(BM_WaterLinewidth)->Unit(benchmark::kMillisecond);

static void BM_GeneratorForward(benchmark::State& state) {
    nn::Network g1 = genmodel::make_generator1();
    nn::Network g2 = genmodel::make_generator2();
    g1.init(1);
    g2.init(2);
    std::vector<B0Map> maps;
    for (int i = 0; i < 32; ++i) maps.push_back(synth::sample_b0_map(2.5, i));
    std::vector<genmodel::GenInput> in;
    for (const auto& m : maps) in.push_back({&m, ratios()});
    for (auto _ : state) benchmark::DoNotOptimize(genmodel::generate_many(g1, g2, in, static_cast<int>(state.range(0))));
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_GeneratorForward)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_AnalyzerTrainStep(benchmark::State& state) {
    synth::OracleConfig c;
    c.subgrid = 8;
    const auto ds = synth::build_dataset(12, {2.0, 3.2}, c, 5);
    const auto& train = ds.split("train");
    const analysis::AnalyzerData data{&train, nullptr, nullptr};
    analysis::AnalyzerHyper h;
    h.epochs = 1;
    for (auto _ : state) {
        nn::Network net = analysis::make_analyzer();
        benchmark::DoNotOptimize(
            analysis::train_analyzer(net, {analysis::Condition::MeasuredOnly, 0}, data, basis(), h));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(train.size()));
}
BENCHMARK(BM_AnalyzerTrainStep)->Unit(benchmark::kMillisecond);

static void BM_Nnls(benchmark::State& state) {
    Eigen::MatrixXd A(379, kNumMetabolites);
    for (std::size_t m = 0; m < kNumMetabolites; ++m)
        for (std::size_t i = 0; i < 379; ++i) A(i, m) = basis()[m].spectrum[i];
    const Spectrum s = basis().weighted_sum(ratios().values);
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(s.vec().data(), 379);
    for (auto _ : state) benchmark::DoNotOptimize(nnls(A, b));
}
BENCHMARK(BM_Nnls)->Unit(benchmark::kMicrosecond);

static void BM_LcmFit(benchmark::State& state) {
    Spectrum s = basis().weighted_sum(ratios().values);
    synth::add_white_noise(s, 0.01, 4);
    for (auto _ : state) benchmark::DoNotOptimize(lcm::lcm_fit(s, basis()));
}
BENCHMARK(BM_LcmFit)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
