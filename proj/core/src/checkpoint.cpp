#include "gvqa/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "gvqa/error.hpp"

namespace gvqa {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'G', 'V', 'Q', 'A', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    require(in.gcount() == static_cast<std::streamsize>(sizeof(T)),
            "load_checkpoint: truncated file while reading ", what);
    return v;
}

} // namespace

const char* to_string(CheckpointKind k) {
    switch (k) {
    case CheckpointKind::GrounderRaw: return "grounder";
    case CheckpointKind::GrounderEma: return "grounder-ema";
    case CheckpointKind::Vqa: return "vqa";
    }
    return "?";
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "save_checkpoint: cannot open ", path.string());

    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint32_t>(ckpt.kind));
    write_pod(out, ckpt.config_hash);
    write_pod(out, static_cast<std::uint64_t>(ckpt.params.size()));
    write_pod(out, ckpt.step);
    for (double p : ckpt.params) {
        write_pod(out, static_cast<float>(p));
    }
    require(out.good(), "save_checkpoint: write failed for ", path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "load_checkpoint: cannot open ", path.string());

    char magic[8];
    in.read(magic, sizeof(magic));
    require(in.gcount() == 8 && std::memcmp(magic, kMagic, 8) == 0,
            "load_checkpoint: bad magic in ", path.string());
    const auto version = read_pod<std::uint32_t>(in, "version");
    require(version == kVersion, "load_checkpoint: unsupported version ", version);

    Checkpoint ckpt;
    const auto kind = read_pod<std::uint32_t>(in, "kind");
    require(kind <= static_cast<std::uint32_t>(CheckpointKind::Vqa),
            "load_checkpoint: unknown kind tag ", kind);
    ckpt.kind = static_cast<CheckpointKind>(kind);
    ckpt.config_hash = read_pod<std::uint64_t>(in, "config hash");
    const auto count = read_pod<std::uint64_t>(in, "parameter count");
    ckpt.step = read_pod<std::uint64_t>(in, "step");
    ckpt.params.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        ckpt.params[i] = static_cast<double>(read_pod<float>(in, "parameters"));
    }
    return ckpt;
}

} // namespace gvqa
