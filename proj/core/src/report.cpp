#include "b0spec/report.hpp"

#include <cstdio>

#include "b0spec/errors.hpp"
#include "b0spec/metrics.hpp"

namespace b0spec::eval {

using nlohmann::json;

ArmResult& ExperimentReport::add_arm(const std::string& name, std::vector<double> per_seed) {
    ArmResult a;
    a.name = name;
    a.per_seed = std::move(per_seed);
    const MeanSd ms = mean_sd(a.per_seed);
    a.mean = ms.mean;
    a.sd = ms.sd;
    arms.push_back(std::move(a));
    return arms.back();
}

const ArmResult& ExperimentReport::arm(const std::string& name) const {
    for (const auto& a : arms)
        if (a.name == name) return a;
    throw InputError("report '" + id + "' has no arm '" + name + "'");
}

json ExperimentReport::to_json() const {
    json arr = json::array();
    for (const auto& a : arms)
        arr.push_back({{"arm", a.name}, {"per_seed", a.per_seed}, {"mean", a.mean}, {"sd", a.sd}});
    return {{"format", "b0spec-report"}, {"version", 1},      {"experiment", id}, {"metric", metric},
            {"seeds", seeds},            {"config", config}, {"arms", arr},      {"details", details}};
}

ExperimentReport ExperimentReport::from_json(const json& j) {
    try {
        if (j.at("format") != "b0spec-report") throw ManifestError("not an experiment report");
        ExperimentReport r;
        r.id = j.at("experiment").get<std::string>();
        r.metric = j.at("metric").get<std::string>();
        r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        r.config = j.at("config");
        r.details = j.value("details", json::object());
        for (const auto& a : j.at("arms")) {
            ArmResult ar;
            ar.name = a.at("arm").get<std::string>();
            ar.per_seed = a.at("per_seed").get<std::vector<double>>();
            ar.mean = a.at("mean").get<double>();
            ar.sd = a.at("sd").get<double>();
            r.arms.push_back(std::move(ar));
        }
        return r;
    } catch (const json::exception& e) {
        throw ManifestError(std::string("malformed report: ") + e.what());
    }
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string ExperimentReport::to_csv() const {
    std::string out = "arm";
    for (std::uint64_t s : seeds) out += "," + metric + "_seed" + std::to_string(s);
    out += ",mean,sd\n";
    for (const auto& a : arms) {
        out += a.name;
        for (double v : a.per_seed) out += "," + format_number(v);
        out += "," + format_number(a.mean) + "," + format_number(a.sd) + "\n";
    }
    return out;
}

}  // namespace b0spec::eval
