#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace gvqa {

// One RGB frame, values in [0, 1], row-major, channel-interleaved.
struct Frame {
    int width{0};
    int height{0};
    std::vector<float> rgb; // size = width * height * 3

    [[nodiscard]] float at(int x, int y, int c) const {
        return rgb[static_cast<std::size_t>((y * width + x) * 3 + c)];
    }
    float& at(int x, int y, int c) {
        return rgb[static_cast<std::size_t>((y * width + x) * 3 + c)];
    }
};

struct ArchiveHeader {
    int width{0};
    int height{0};
    int num_frames{0};
    double fps{0.0};
};

// One directory per video: header.json plus zero-padded per-frame raw RGB
// files (8-bit, lexicographic order = frame order).
void write_frame_archive(const std::filesystem::path& dir, const std::vector<Frame>& frames,
                         double fps);

ArchiveHeader read_archive_header(const std::filesystem::path& dir);

Frame read_archive_frame(const std::filesystem::path& dir, const ArchiveHeader& header, int index);

std::vector<Frame> read_archive_frames(const std::filesystem::path& dir,
                                       const std::vector<int>& indices);

} // namespace gvqa
