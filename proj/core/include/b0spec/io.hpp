#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "b0spec/spectrum.hpp"

namespace b0spec::io {

/// CSV with header `ppm,intensity`, 17 significant digits.
void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& s);
std::string spectrum_csv(const Spectrum& s);
/// Reads a spectrum; the ppm column must match the standard axis.
Spectrum read_spectrum_csv(const std::filesystem::path& path);

/// Binary B0 map: 8-byte shape header (u32 rows, u32 cols, little-endian),
/// then rows·cols f64 little-endian, row-major.
void write_b0map_bin(const std::filesystem::path& path, const B0Map& map);
B0Map read_b0map_bin(const std::filesystem::path& path);
/// 128 rows of 128 comma-separated values.
void write_b0map_csv(const std::filesystem::path& path, const B0Map& map);
B0Map read_b0map_csv(const std::filesystem::path& path);

nlohmann::json peaklist_to_json(const PeakList& p);
PeakList peaklist_from_json(const nlohmann::json& j);
nlohmann::json basis_to_json(const BasisSet& basis);
BasisSet basis_from_json(const nlohmann::json& j);

nlohmann::json ratios_to_json(const MetaboliteRatios& r);
MetaboliteRatios ratios_from_json(const nlohmann::json& j);

nlohmann::json read_json(const std::filesystem::path& path);
/// Pretty-printed, trailing newline; deterministic for identical input.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace b0spec::io
