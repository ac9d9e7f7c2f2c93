#pragma once

#include <string>

#include "bort/network.hpp"

namespace bort {

// Checkpoint file: magic "BORTCKPT", version u32 LE, u64 LE manifest length,
// manifest as UTF-8 JSON (arch, input shape, layer specs, constrained ids),
// then raw little-endian float32 parameter blocks in layer order, weight
// before bias. Round-trips bit-exactly.

inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

/// Writes to "<path>.tmp" then renames, so re-runs never leave torn files.
void atomic_write_file(const std::string& path, const std::string& bytes);

}  // namespace bort
