#include "b0spec/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "b0spec/errors.hpp"

namespace b0spec::io {

namespace fs = std::filesystem;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
void put_le(std::ostream& os, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw InputError("truncated binary file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, mode | std::ios::trunc);
    if (!os) throw ManifestError("cannot open '" + path.string() + "' for writing");
    return os;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream is(path, mode);
    if (!is) throw ManifestError("cannot open '" + path.string() + "'");
    return is;
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw InputError("cannot parse number '" + s + "'");
    }
    if (used != s.size() && s.find_first_not_of(" \r\t", used) != std::string::npos) {
        throw InputError("trailing characters in number '" + s + "'");
    }
    return v;
}

}  // namespace

std::string spectrum_csv(const Spectrum& s) {
    std::string out = "ppm,intensity\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += fmt17(s.axis().ppm(i));
        out += ',';
        out += fmt17(s[i]);
        out += '\n';
    }
    return out;
}

void write_spectrum_csv(const fs::path& path, const Spectrum& s) { write_text(path, spectrum_csv(s)); }

Spectrum read_spectrum_csv(const fs::path& path) {
    auto is = open_in(path);
    std::string line;
    if (!std::getline(is, line)) throw InputError("empty spectrum file '" + path.string() + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "ppm,intensity") throw InputError("bad spectrum header in '" + path.string() + "'");
    const SpectralAxis axis = make_axis();
    std::vector<double> values;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw InputError("malformed spectrum row '" + line + "'");
        const double ppm = parse_double(line.substr(0, comma));
        const double v = parse_double(line.substr(comma + 1));
        if (values.size() >= axis.n_points) throw ShapeError("spectrum file has more than 379 rows");
        if (std::abs(ppm - axis.ppm(values.size())) > 1e-9) {
            throw InputError("ppm column does not match the standard axis at row " + std::to_string(values.size()));
        }
        if (!std::isfinite(v)) throw InputError("non-finite intensity in '" + path.string() + "'");
        values.push_back(v);
    }
    return Spectrum(axis, std::move(values));
}

void write_b0map_bin(const fs::path& path, const B0Map& map) {
    auto os = open_out(path, std::ios::out | std::ios::binary);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(B0Map::side()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(B0Map::side()));
    for (double v : map.values()) put_le<double>(os, v);
    if (!os) throw ManifestError("write failed for '" + path.string() + "'");
}

B0Map read_b0map_bin(const fs::path& path) {
    auto is = open_in(path, std::ios::in | std::ios::binary);
    const auto rows = get_le<std::uint32_t>(is);
    const auto cols = get_le<std::uint32_t>(is);
    if (rows != B0Map::side() || cols != B0Map::side()) {
        throw ShapeError("B0 map file is " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    std::vector<double> v(static_cast<std::size_t>(rows) * cols);
    for (double& x : v) x = get_le<double>(is);
    return B0Map(std::move(v));
}

void write_b0map_csv(const fs::path& path, const B0Map& map) {
    std::string out;
    for (std::size_t r = 0; r < B0Map::side(); ++r) {
        for (std::size_t c = 0; c < B0Map::side(); ++c) {
            if (c) out += ',';
            out += fmt17(map.at(r, c));
        }
        out += '\n';
    }
    write_text(path, out);
}

B0Map read_b0map_csv(const fs::path& path) {
    auto is = open_in(path);
    std::vector<double> v;
    std::string line;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t cols = 0;
        while (std::getline(ss, cell, ',')) {
            v.push_back(parse_double(cell));
            ++cols;
        }
        if (cols != B0Map::side()) throw ShapeError("B0 map CSV row has " + std::to_string(cols) + " columns");
        ++rows;
    }
    if (rows != B0Map::side()) throw ShapeError("B0 map CSV has " + std::to_string(rows) + " rows");
    return B0Map(std::move(v));
}

nlohmann::json peaklist_to_json(const PeakList& p) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Peak& pk : p.peaks) {
        arr.push_back({{"center_ppm", pk.center_ppm}, {"amplitude", pk.amplitude}, {"gamma_hz", pk.gamma_hz}});
    }
    return arr;
}

PeakList peaklist_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw InputError("peak list must be a JSON array");
    PeakList p;
    for (const auto& e : j) {
        p.peaks.push_back(Peak{e.at("center_ppm").get<double>(), e.at("amplitude").get<double>(),
                               e.at("gamma_hz").get<double>()});
    }
    return p;
}

nlohmann::json basis_to_json(const BasisSet& basis) {
    const SpectralAxis& ax = basis.axis();
    nlohmann::json j;
    j["format"] = "b0spec-basis";
    j["version"] = 1;
    j["axis"] = {{"n_points", ax.n_points}, {"ppm_min", ax.ppm_min}, {"ppm_max", ax.ppm_max},
                 {"larmor_mhz", ax.larmor_mhz}};
    nlohmann::json entries = nlohmann::json::array();
    for (const BasisEntry& e : basis.entries()) {
        entries.push_back({{"name", e.name}, {"peaks", peaklist_to_json(e.peaks)}});
    }
    j["entries"] = entries;
    return j;
}

BasisSet basis_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "b0spec-basis") throw InputError("not a basis document");
        SpectralAxis ax;
        const auto& a = j.at("axis");
        ax.n_points = a.at("n_points").get<std::size_t>();
        ax.ppm_min = a.at("ppm_min").get<double>();
        ax.ppm_max = a.at("ppm_max").get<double>();
        ax.larmor_mhz = a.at("larmor_mhz").get<double>();
        if (ax != make_axis()) throw InputError("basis axis differs from the standard axis");
        std::vector<std::pair<std::string, PeakList>> entries;
        for (const auto& e : j.at("entries")) {
            entries.emplace_back(e.at("name").get<std::string>(), peaklist_from_json(e.at("peaks")));
        }
        return BasisSet(ax, std::move(entries));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed basis JSON: ") + e.what());
    }
}

nlohmann::json ratios_to_json(const MetaboliteRatios& r) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < kNumMetabolites; ++i) j[std::string(metabolite_name(i))] = r.values[i];
    return j;
}

MetaboliteRatios ratios_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.size() != kNumMetabolites) throw InputError("ratios must map all 15 metabolites");
    MetaboliteRatios r;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const double v = it.value().get<double>();
        if (!(v >= 0.0)) throw InputError("negative ratio for " + it.key());
        r.values[idx(metabolite_from_name(it.key()))] = v;
    }
    return r;
}

nlohmann::json read_json(const fs::path& path) {
    auto is = open_in(path);
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("cannot parse JSON '" + path.string() + "': " + e.what());
    }
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const fs::path& path, const std::string& text) {
    auto os = open_out(path, std::ios::out | std::ios::binary);
    os << text;
    if (!os) throw ManifestError("write failed for '" + path.string() + "'");
}

}  // namespace b0spec::io
