#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gvqa {

enum class CheckpointKind : std::uint32_t {
    GrounderRaw = 0,
    GrounderEma = 1,
    Vqa = 2,
};

const char* to_string(CheckpointKind k);

struct Checkpoint {
    CheckpointKind kind{CheckpointKind::GrounderRaw};
    std::uint64_t config_hash{0};
    std::uint64_t step{0};
    std::vector<double> params; // stored on disk as little-endian float32
};

// Fixed binary layout: magic, version, kind tag, config hash, parameter
// count, step, then the flat float32 parameter vector.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace gvqa
