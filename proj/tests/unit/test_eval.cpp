#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "b0spec/errors.hpp"
#include "b0spec/experiments.hpp"
#include "b0spec/metrics.hpp"
#include "b0spec/report.hpp"
#include "b0spec/svg.hpp"

using namespace b0spec;
using namespace b0spec::eval;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ExperimentConfig tiny() {
    return ExperimentConfig::from_json(json::parse(R"({
      "seeds": [4],
      "dataset": {"n_total": 12, "subgrid": 8},
      "generator": {"epochs": 1, "batch_size": 4, "lr": 0.001, "tile_chunk": 16},
      "table1": {"patches": [1, 2]},
      "augment": {"linewidth_subgrid": 8, "epochs": 1},
      "analyzer": {"epochs": 1},
      "table2": {"n_augment": 6},
      "fig5": {"n_augment": [0, 3, 6]},
      "fig6": {"repeats": 2, "subgrid": 32, "lcm": {"grid_step": 2.0, "refine": false}}
    })"));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("experiment config defaults") {
    const ExperimentConfig c = ExperimentConfig::from_json(json::object());
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(c.generator.epochs == 500);
    CHECK(c.generator.batch_size == 16);
    CHECK(c.generator.lr == 1e-4);
    CHECK(c.analyzer.epochs == 100);
    CHECK(c.analyzer.batch_size == 4);
    CHECK(c.analyzer.lr == 1e-4);
    CHECK(c.dataset.n_total == 174);
    CHECK(c.table2_n_augment == 1000);
    CHECK(c.fig5_n_augment == std::vector<std::size_t>{0, 100, 1000, 10000});
    CHECK(c.fig6_repeats == 7);
    CHECK(c.table1_patches == std::vector<int>{1, 2, 4, 8});
}

TEST_CASE("experiment config validation") {
    CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"sedes": [1]})")), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"generator": {"epoch": 3}})")), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"seeds": "one"})")), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"seeds": []})")), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"table1": {"patches": [3]}})")), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"dataset": {"spread_hz": [3, 1]}})")), ConfigError);
    CHECK_THROWS_AS(experiment_preset("laptop"), ConfigError);

    const ExperimentConfig desk = experiment_preset("desk");
    CHECK(desk.seeds.size() == 3);
    CHECK(desk.augment_epochs.has_value());
    const ExperimentConfig back = ExperimentConfig::from_json(desk.to_json());
    CHECK(back.to_json() == desk.to_json());
    CHECK(experiment_preset("full").to_json() == ExperimentConfig{}.to_json());
}

TEST_CASE("report aggregates and serialization") {
    ExperimentReport r;
    r.id = "demo";
    r.metric = "mse";
    r.seeds = {1, 2, 3};
    r.config = {{"k", 1}};
    const auto& a = r.add_arm("one", {1.0, 2.0, 4.0});
    CHECK(a.mean == doctest::Approx(7.0 / 3.0));
    CHECK(a.sd == doctest::Approx(std::sqrt(((1 - 7.0 / 3) * (1 - 7.0 / 3) + (2 - 7.0 / 3) * (2 - 7.0 / 3) +
                                             (4 - 7.0 / 3) * (4 - 7.0 / 3)) /
                                            2.0)));
    r.add_arm("two", {0.5, 0.5, 0.5});
    CHECK(r.arm("two").sd == 0.0);
    CHECK_THROWS_AS(r.arm("three"), InputError);

    const ExperimentReport back = ExperimentReport::from_json(json::parse(r.to_json().dump()));
    CHECK(back.to_json() == r.to_json());
    // aggregates recomputed from the stored per-seed values agree exactly
    for (const auto& arm : back.arms) {
        const MeanSd m = mean_sd(arm.per_seed);
        CHECK(m.mean == arm.mean);
        CHECK(m.sd == arm.sd);
    }
    CHECK(r.to_csv() ==
          "arm,mse_seed1,mse_seed2,mse_seed3,mean,sd\n"
          "one,1,2,4," + format_number(a.mean) + "," + format_number(a.sd) + "\n"
          "two,0.5,0.5,0.5,0.5,0\n");
    CHECK_THROWS_AS(ExperimentReport::from_json(json{{"format", "other"}}), ManifestError);
}

TEST_CASE("svg output") {
    const std::string bars = bar_chart_svg("t", "y", {{"a", 1.0, 0.1, "g"}, {"b", 2.0, 0.0, "h"}});
    CHECK(bars.rfind("<svg", 0) == 0);
    CHECK(bars.find("</svg>") != std::string::npos);
    CHECK(bars.find(">a<") != std::string::npos);
    CHECK(bar_chart_svg("t", "y", {{"a", 1.0, 0.1, "g"}}) == bar_chart_svg("t", "y", {{"a", 1.0, 0.1, "g"}}));
    const std::string lines = line_plot_svg("t", "ppm", "a.u.", {{"s", {1, 2, 3}, {0, 1, 0}}}, true);
    CHECK(lines.find("<polyline") != std::string::npos);
}

TEST_CASE("experiments on a tiny configuration") {
    Workbench wb(tiny());
    const ExperimentOutput t1 = exp_table1(wb);
    CHECK(t1.report.arms.size() == 3);
    CHECK(t1.report.arm("one-step").per_seed.size() == 1);
    CHECK(t1.report.arm("two-step-p2").mean > 0.0);
    CHECK(t1.figures.count("table1_bars.svg") == 1);

    const ExperimentOutput t2 = exp_table2(wb);
    REQUIRE(t2.report.arms.size() == 5);
    for (const char* name : {"measured_only", "simulated_only", "modeled_only", "measured_plus_simulated",
                             "measured_plus_modeled"})
        CHECK(std::isfinite(t2.report.arm(name).mean));

    const ExperimentOutput f5 = exp_fig5(wb);
    CHECK(f5.report.arms.size() == 3);
    CHECK(f5.report.arm("n=0").per_seed.size() == 1);

    const ExperimentOutput f6 = exp_fig6(wb);
    CHECK(f6.report.arms.size() == 16);
    CHECK(f6.report.arm("periphery/LCM stand-in/Glx").mean >= 0.0);
    CHECK(f6.report.arm("near_center/proposed/tNAA").mean >= 0.0);
    const auto& lw = f6.report.details.at("water_linewidth_hz");
    CHECK(lw.at("near_center").at(0).get<double>() == doctest::Approx(8.0).epsilon(1.0 / 8.0));
    CHECK(lw.at("periphery").at(0).get<double>() == doctest::Approx(10.9).epsilon(1.0 / 10.9));

    // same config and seeds in a fresh workbench: identical tables
    Workbench again(tiny());
    CHECK(exp_table2(again).report.to_json().dump() == t2.report.to_json().dump());

    const fs::path dir = fs::temp_directory_path() / "b0spec_eval_out";
    fs::remove_all(dir);
    write_output(t2, dir);
    CHECK(slurp(dir / "table2.csv") == t2.report.to_csv());
    CHECK(ExperimentReport::from_json(json::parse(slurp(dir / "table2.json"))).to_json() == t2.report.to_json());
    CHECK(fs::exists(dir / "table2_bars.svg"));
    fs::remove_all(dir);
    CHECK_THROWS_AS(run_experiment(wb, "table9"), ConfigError);
}
