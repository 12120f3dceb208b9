#pragma once

#include <filesystem>
#include <vector>

#include "b0spec/nn/network.hpp"

namespace b0spec::nn {

inline constexpr char kCheckpointMagic[8] = {'B', '0', 'S', 'P', 'E', 'C', 'N', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// magic | u32 version | u64 config length | config JSON (array of network
/// descriptions) | u64 parameter count | f64 LE parameters in declaration order.
void save_checkpoint(const std::filesystem::path& path, const std::vector<const Network*>& nets);
/// Throws CheckpointError on a bad magic, version, truncation or size mismatch.
std::vector<Network> load_checkpoint(const std::filesystem::path& path);

}  // namespace b0spec::nn
