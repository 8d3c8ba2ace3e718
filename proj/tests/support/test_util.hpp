#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gvqa/rng.hpp"
#include "gvqa/tubelet.hpp"

namespace gvqa::testsupport {

// Self-deleting directory under the system temp root.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline BoundingBox box(double x1, double y1, double x2, double y2) {
    return BoundingBox{x1, y1, x2, y2};
}

// Tiny tracking instance on an integer 10x10 grid: up to 3 frames, up to 2
// tracks per side, one box per track per frame with dropout. The coarse grid
// makes equal-IoU ties common, which stresses tie handling.
struct TinyInstance {
    std::vector<Tubelet> gt;
    std::vector<Tubelet> pred;
};

TinyInstance random_tiny_instance(Rng& rng);

// SHA-like content fingerprint of one file (FNV over bytes), for determinism
// comparisons.
std::uint64_t file_fingerprint(const std::filesystem::path& path);
std::uint64_t tree_fingerprint(const std::filesystem::path& root);

} // namespace gvqa::testsupport
