#include "b0spec/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "b0spec/errors.hpp"

namespace b0spec::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is, const std::string& what) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw CheckpointError("truncated checkpoint reading " + what);
    return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<const Network*>& nets) {
    nlohmann::json cfg = nlohmann::json::array();
    std::size_t total = 0;
    for (const Network* n : nets) {
        if (!n->initialized()) throw UntrainedError("cannot save untrained network '" + n->name() + "'");
        cfg.push_back(n->to_json());
        total += n->param_count();
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CheckpointError("cannot open " + path.string() + " for writing");
    const std::string blob = cfg.dump();
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    put<std::uint32_t>(os, kCheckpointVersion);
    put<std::uint64_t>(os, blob.size());
    os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    put<std::uint64_t>(os, total);
    for (const Network* n : nets) {
        const auto p = n->params();
        os.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
    }
    if (!os) throw CheckpointError("write failed for " + path.string());
}

std::vector<Network> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot open " + path.string());
    char magic[sizeof kCheckpointMagic];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
        throw CheckpointError(path.string() + " is not a network checkpoint");
    const auto version = get<std::uint32_t>(is, "version");
    if (version != kCheckpointVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    const auto len = get<std::uint64_t>(is, "config length");
    if (len > (1u << 26)) throw CheckpointError("implausible config length");
    std::string blob(len, '\0');
    if (!is.read(blob.data(), static_cast<std::streamsize>(len))) throw CheckpointError("truncated config blob");
    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(blob);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("bad config blob: ") + e.what());
    }
    std::vector<Network> nets;
    std::size_t expected = 0;
    try {
        for (const auto& j : cfg) {
            nets.push_back(Network::from_json(j));
            expected += nets.back().param_count();
        }
    } catch (const ConfigError& e) {
        throw CheckpointError(e.what());
    }
    const auto count = get<std::uint64_t>(is, "parameter count");
    if (count != expected) {
        throw CheckpointError("checkpoint holds " + std::to_string(count) + " parameters, config needs " +
                              std::to_string(expected));
    }
    for (Network& n : nets) {
        std::vector<double> p(n.param_count());
        if (!is.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double))))
            throw CheckpointError("truncated parameter stream");
        n.set_params(std::move(p));
    }
    if (is.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes after parameters");
    return nets;
}

}  // namespace b0spec::nn
