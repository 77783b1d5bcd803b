#pragma once

// Versioned binary checkpoints: an 8-byte magic, a 32-bit format version and
// a CBOR document holding the embedded configuration, its physics digest and
// the complete replica state in dense order.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "scd/simulation.hpp"

namespace scd {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Simulation& sim);
Simulation decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint(const std::filesystem::path& path, const Simulation& sim);
/// Throws CheckpointError on a missing, corrupt or version-mismatched file.
Simulation read_checkpoint(const std::filesystem::path& path);

}  // namespace scd
