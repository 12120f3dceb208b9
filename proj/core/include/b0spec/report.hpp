#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace b0spec::eval {

struct ArmResult {
    std::string name;
    std::vector<double> per_seed;  ///< one value per entry of the report's seed list
    double mean = 0.0;
    double sd = 0.0;  ///< sample SD (n − 1)
};

struct ExperimentReport {
    std::string id;
    std::string metric;
    nlohmann::json config;
    std::vector<std::uint64_t> seeds;
    std::vector<ArmResult> arms;
    nlohmann::json details = nlohmann::json::object();

    /// Appends an arm; mean and SD are computed from `per_seed`.
    ArmResult& add_arm(const std::string& name, std::vector<double> per_seed);
    /// Throws InputError for an unknown arm.
    const ArmResult& arm(const std::string& name) const;

    nlohmann::json to_json() const;
    static ExperimentReport from_json(const nlohmann::json& j);
    /// arm,<metric>_seed<k>...,mean,sd
    std::string to_csv() const;
};

/// Exact-format number used in CSV tables.
std::string format_number(double v);

}  // namespace b0spec::eval
