// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: b0spec_acceptance [report-dir] [--only N[,N...]]

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "b0spec/analysis.hpp"
#include "b0spec/errors.hpp"
#include "b0spec/experiments.hpp"
#include "b0spec/genmodel.hpp"
#include "b0spec/io.hpp"
#include "b0spec/lcmfit.hpp"
#include "b0spec/lineshape.hpp"
#include "b0spec/nn/layers.hpp"
#include "b0spec/synth.hpp"
#include "gradcheck.hpp"

using namespace b0spec;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double max_abs_diff(const Spectrum& a, const Spectrum& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

// ---------------------------------------------------------------- 1

Verdict gradients() {
    using nn::LayerSpec;
    using testing::random_tensor;
    const auto t0 = Clock::now();
    double worst = 0.0;
    {
        nn::Network net("g", {1, 8, 6}, 3,
                        {LayerSpec::conv2d(1, 3), LayerSpec::relu(), LayerSpec::avgpool2d(2, 3),
                         LayerSpec::conv2d(3, 2), LayerSpec::flatten(), LayerSpec::concat(3),
                         LayerSpec::dense(2 * 4 * 2 + 3, 5), LayerSpec::relu(), LayerSpec::dense(5, 4)});
        const auto side = random_tensor({2, 3}, 11);
        worst = std::max(worst, testing::gradient_error(net, random_tensor({2, 1, 8, 6}, 10), &side, 12));
    }
    {
        nn::Network net("a", {1, 13}, 0,
                        {LayerSpec::conv1d(1, 3), LayerSpec::relu(), LayerSpec::maxpool1d(2), LayerSpec::conv1d(3, 2),
                         LayerSpec::maxpool1d(2), LayerSpec::flatten(), LayerSpec::dense(6, 7)});
        worst = std::max(worst, testing::gradient_error(net, random_tensor({3, 1, 13}, 20), nullptr, 21));
    }
    {
        nn::Network net("p", {2, 7, 5}, 0,
                        {LayerSpec::avgpool2d(3, 2), LayerSpec::flatten(), LayerSpec::dense(2 * 2 * 2, 3)});
        worst = std::max(worst, testing::gradient_error(net, random_tensor({2, 2, 7, 5}, 30), nullptr, 31));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-4 && secs < 120.0,
            "conv2d conv1d avgpool2d maxpool1d dense relu flatten concat; worst rel err " + fmt("%.2e", worst) +
                ", " + fmt("%.1f", secs) + " s"};
}

// ---------------------------------------------------------------- 2

Verdict oracle_suite() {
    const BasisSet basis = synth::default_basis();
    const SpectralAxis& axis = basis.axis();
    std::mt19937_64 rng(8);
    const MetaboliteRatios r = synth::sample_ratios(rng);
    synth::OracleConfig clean;
    clean.noise_sigma = 0.0;
    clean.baseline_scale = 0.0;
    std::string detail;
    bool ok = true;

    const double c = 3.7;
    const auto uni = synth::oracle_measured(B0Map::uniform(c), r, basis, clean);
    const double collapse = max_abs_diff(uni.metabolites, synth_lorentzian(basis.weighted_peaks(r.values), c, axis));
    ok = ok && collapse <= 1e-12;
    detail += "collapse " + fmt("%.1e", collapse);

    const B0Map map = synth::sample_b0_map(2.6, 77);
    MetaboliteRatios scaled = r;
    for (double& v : scaled.values) v *= 2.5;
    const auto one = synth::oracle_measured(map, r, basis, clean);
    const auto two = synth::oracle_measured(map, scaled, basis, clean);
    const double lin = max_abs_diff(two.metabolites, one.metabolites * 2.5);
    ok = ok && lin <= 1e-12;
    detail += ", linearity " + fmt("%.1e", lin);

    // Isolated peak under zero-mean Gaussian-random maps.
    const PeakList peak{{{2.4, 1.0, 2.0}}};
    std::string widths;
    double prev = 0.0;
    for (double sd : {0.0, 2.0, 4.0, 8.0}) {
        std::mt19937_64 g(static_cast<std::uint64_t>(sd * 10) + 1);
        std::normal_distribution<double> n(0.0, 1.0);
        std::vector<double> v(kB0MapSize * kB0MapSize);
        for (double& x : v) x = n(g);
        B0Map m(v);
        const double mu = m.mean(), s = m.stddev();
        for (double& x : m.values()) x = sd == 0.0 ? 0.0 : (x - mu) * sd / s;
        const double w = fwhm(synth::average_over_map(peak, m, axis, kB0MapSize));
        ok = ok && w >= prev;
        prev = w;
        widths += (widths.empty() ? "" : "/") + fmt("%.2f", w);
    }
    detail += ", fwhm over sd 0/2/4/8 Hz = " + widths;

    const double step_hz = axis.step_hz();
    const double lw = fwhm(synth_lorentzian(PeakList{{{2.0, 1.0, 5.0}}}, 0.0, axis));
    ok = ok && std::abs(lw - 10.0) <= step_hz;
    detail += ", Lorentzian gamma 5 fwhm " + fmt("%.3f", lw);
    return {ok, detail};
}

// ---------------------------------------------------------------- 3

Verdict param_counts() {
    const std::size_t g1 = genmodel::make_generator1().param_count();
    const std::size_t g2 = genmodel::make_generator2().param_count();
    const std::size_t an = analysis::make_analyzer().param_count();
    return {g1 == 788735 && g2 == 110001 && an == 121327,
            "generator1 " + std::to_string(g1) + ", generator2 " + std::to_string(g2) + ", analyzer " +
                std::to_string(an)};
}

// ---------------------------------------------------------------- 4-7

std::size_t count_seeds(std::size_t n, const std::function<bool(std::size_t)>& pred) {
    std::size_t k = 0;
    for (std::size_t s = 0; s < n; ++s) k += pred(s) ? 1 : 0;
    return k;
}

std::string table(const eval::ExperimentReport& r) {
    std::string out;
    for (const auto& a : r.arms) {
        out += "    " + a.name + ":";
        for (double v : a.per_seed) out += " " + fmt("%.5g", v);
        out += "  (mean " + fmt("%.5g", a.mean) + ")\n";
    }
    return out;
}

struct Experiments {
    eval::Workbench wb{eval::experiment_preset("desk")};
    fs::path dir;

    eval::ExperimentReport run(const std::string& id, double* secs = nullptr) {
        const auto t0 = Clock::now();
        const auto out = eval::run_experiment(wb, id);
        if (secs) *secs = seconds_since(t0);
        eval::write_output(out, dir);
        std::printf("  %s\n%s", id.c_str(), table(out.report).c_str());
        std::fflush(stdout);
        return out.report;
    }
};

Verdict table1(Experiments& ex) {
    double secs = 0.0;
    const auto r = ex.run("table1", &secs);
    const auto& one = r.arm("one-step").per_seed;
    const auto& two = r.arm("two-step-p1").per_seed;
    const std::size_t wins = count_seeds(one.size(), [&](std::size_t s) { return two[s] < one[s]; });
    bool patches = true;
    for (int p : {1, 2, 4, 8}) {
        try {
            r.arm("two-step-p" + std::to_string(p));
        } catch (const Error&) {
            patches = false;
        }
    }
    return {wins >= 2 && patches && secs < 1800.0,
            "two-step(p1) < one-step in " + std::to_string(wins) + "/" + std::to_string(one.size()) +
                " seeds; patch arms 1,2,4,8 " + (patches ? "present" : "missing") + "; " + fmt("%.0f", secs) +
                " s"};
}

Verdict table2(Experiments& ex) {
    const auto r = ex.run("table2");
    const std::size_t n = r.seeds.size();
    const std::size_t lowest = count_seeds(n, [&](std::size_t s) {
        const double mine = r.arm("measured_plus_modeled").per_seed[s];
        return std::all_of(r.arms.begin(), r.arms.end(), [&](const eval::ArmResult& a) {
            return a.name == "measured_plus_modeled" || mine < a.per_seed[s];
        });
    });
    const double gain = 1.0 - r.arm("measured_plus_modeled").mean / r.arm("measured_only").mean;
    return {lowest >= 2 && gain >= 0.10, "measured_plus_modeled lowest in " + std::to_string(lowest) + "/" +
                                             std::to_string(n) + " seeds; " + fmt("%.1f", 100 * gain) +
                                             "% below measured_only"};
}

Verdict fig5(Experiments& ex) {
    const auto r = ex.run("fig5");
    const auto& n0 = r.arm("n=0");
    const auto& n1k = r.arm("n=1000");
    const auto& n10k = r.arm("n=10000");
    const std::size_t wins =
        count_seeds(n0.per_seed.size(), [&](std::size_t s) { return n1k.per_seed[s] < n0.per_seed[s]; });
    const double ratio = n10k.mean / n1k.mean;
    return {wins >= 2 && std::abs(ratio - 1.0) <= 0.20,
            "n=1000 < n=0 in " + std::to_string(wins) + "/" + std::to_string(n0.per_seed.size()) +
                " seeds; n=10000 / n=1000 = " + fmt("%.3f", ratio)};
}

Verdict fig6(Experiments& ex) {
    const auto r = ex.run("fig6");
    bool lw_ok = true;
    std::string lw;
    for (const auto& [region, target] : {std::pair<std::string, double>{"near_center", 8.0}, {"periphery", 10.9}}) {
        for (const auto& v : r.details.at("water_linewidth_hz").at(region)) {
            const double x = v.get<double>();
            lw_ok = lw_ok && std::abs(x - target) <= 1.0;
            lw += " " + region + "=" + fmt("%.2f", x);
        }
    }
    const std::size_t n = r.seeds.size();
    const std::size_t wins = count_seeds(n, [&](std::size_t s) {
        int groups = 0;
        for (auto g : kGroupNames) {
            const std::string gs(g);
            groups += r.arm("periphery/proposed/" + gs).per_seed[s] <= r.arm("periphery/LCM stand-in/" + gs).per_seed[s];
        }
        return groups >= 2;
    });
    return {lw_ok && r.arms.size() == 16 && wins >= 2,
            "linewidths" + lw + "; " + std::to_string(r.arms.size()) + " cells; proposed <= LCM stand-in on >=2/4 " +
                "periphery groups in " + std::to_string(wins) + "/" + std::to_string(n) + " seeds"};
}

// ---------------------------------------------------------------- 8

Verdict lcm_oracle() {
    const BasisSet basis = synth::default_basis();
    double at_truth = 0.0, free_fit = 0.0;
    for (std::uint64_t seed : {1, 2, 3}) {
        std::mt19937_64 rng(seed);
        const MetaboliteRatios r = synth::sample_ratios(rng);
        auto rel = [&](const Amplitudes& a) {
            double w = 0.0;
            for (std::size_t m = 0; m < kNumMetabolites; ++m)
                if (r.values[m] > 0.0) w = std::max(w, std::abs(a[m] - r.values[m]) / r.values[m]);
            return w;
        };
        const Spectrum s = basis.weighted_sum(r.values);
        at_truth = std::max(at_truth, rel(lcm::fit_fixed(s, basis, 0.0, 0.0, 4).amplitudes));
        for (double shift : {-5.0, -1.7, 2.5, 5.0}) {
            const Eigen::MatrixXd B = lcm::broadened_basis(basis, shift, 0.0);
            const Eigen::VectorXd y = B * Eigen::Map<const Eigen::VectorXd>(r.values.data(), kNumMetabolites);
            const Spectrum shifted(basis.axis(), std::vector<double>(y.data(), y.data() + y.size()));
            free_fit = std::max(free_fit, rel(lcm::lcm_fit(shifted, basis).amplitudes));
        }
    }
    return {at_truth < 1e-6 && free_fit < 0.01, "max amplitude rel err at truth " + fmt("%.1e", at_truth) +
                                                    ", free fit |shift| <= 5 Hz " + fmt("%.2e", free_fit)};
}

// ---------------------------------------------------------------- 9

int cli(const std::string& args) {
    const std::string cmd = std::string(B0SPEC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Number of files that differ (or are missing) between two trees; -1 if `a` is empty.
int tree_diff(const fs::path& a, const fs::path& b) {
    int files = 0, diff = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        ++files;
        const fs::path other = b / fs::relative(e.path(), a);
        if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++diff;
    }
    return files == 0 ? -1 : diff;
}

Verdict determinism() {
    const fs::path root = fs::temp_directory_path() / "b0spec_acceptance_det";
    fs::remove_all(root);
    fs::create_directories(root);
    io::write_text(root / "tiny.json", R"({
      "seeds": [5],
      "dataset": {"n_total": 12, "subgrid": 8},
      "generator": {"epochs": 1, "batch_size": 4, "lr": 0.001, "tile_chunk": 16},
      "table1": {"patches": [1, 2]},
      "augment": {"linewidth_subgrid": 8},
      "analyzer": {"epochs": 1},
      "table2": {"n_augment": 6},
      "fig5": {"n_augment": [0, 6]},
      "fig6": {"repeats": 2, "subgrid": 32, "lcm": {"grid_step": 2.0, "refine": false}}
    })");
    const std::string tiny = (root / "tiny.json").string();
    auto at = [&](int run, const std::string& name) { return (root / ("run" + std::to_string(run)) / name).string(); };
    // run0 outputs feed later commands; run1 repeats each command.
    struct Cmd {
        std::string name;
        std::string out;
        std::string args;
    };
    const std::vector<Cmd> commands = {
        {"synth", "ds", "synth --total 12 --seed 9 --subgrid 8"},
        {"synth --phantom", "ph", "synth --phantom near_center --repeats 2 --subgrid 32"},
        {"train-gen", "gen",
         "train-gen --manifest " + at(0, "ds") + "/manifest.json --scheme two-step --patch 2 --epochs 1 --batch 4"},
        {"gen-spectra", "mod", "gen-spectra --generators " + at(0, "gen") + "/generators.ckpt --n 4 --linewidth-subgrid 8"},
        {"train-analyzer", "an",
         "train-analyzer --manifest " + at(0, "ds") + "/manifest.json --condition measured_plus_modeled --n-augment 4" +
             " --modeled " + at(0, "mod") + "/manifest.json --epochs 1"},
        {"fit-lcm", "lcm", "fit-lcm --manifest " + at(0, "ph") + "/manifest.json --step 2"},
        {"report", "rep", "report --experiment-config " + tiny + " --experiment all"},
    };
    std::string detail;
    bool ok = true;
    for (const auto& c : commands) {
        const int c0 = cli(c.args + " --out " + at(0, c.out));
        const int c1 = cli(c.args + " --out " + at(1, c.out));
        const int d = (c0 == 0 && c1 == 0) ? tree_diff(at(0, c.out), at(1, c.out)) : -2;
        ok = ok && d == 0;
        detail += (detail.empty() ? "" : ", ") + c.name + (d == 0 ? " identical" : d == -2 ? " failed" : " DIFFERS");
    }
    fs::remove_all(root);
    return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
    fs::path dir = "acceptance_reports";
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string tok;
            while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
        } else {
            dir = a;
        }
    }
    fs::create_directories(dir);

    Experiments ex;
    ex.dir = dir;
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"gradient checks", gradients},
        {"physics oracle", oracle_suite},
        {"parameter counts", param_counts},
        {"table1 trend", [&] { return table1(ex); }},
        {"table2 trend", [&] { return table2(ex); }},
        {"fig5 trend", [&] { return fig5(ex); }},
        {"fig6 harness", [&] { return fig6(ex); }},
        {"lcm oracle", lcm_oracle},
        {"determinism", determinism},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = Clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        failed += v.pass ? 0 : 1;
        std::printf("%s %d %s: %s [%.0f s]\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                    v.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
