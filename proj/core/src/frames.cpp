#include "gvqa/frames.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gvqa/error.hpp"

namespace gvqa {

namespace {

std::string frame_file_name(int index) {
    std::ostringstream os;
    os << std::setfill('0') << std::setw(6) << index << ".rgb";
    return os.str();
}

} // namespace

void write_frame_archive(const std::filesystem::path& dir, const std::vector<Frame>& frames,
                         double fps) {
    require(!frames.empty(), "write_frame_archive: no frames");
    std::filesystem::create_directories(dir);

    const int w = frames.front().width;
    const int h = frames.front().height;

    nlohmann::json header;
    header["width"] = w;
    header["height"] = h;
    header["num_frames"] = static_cast<int>(frames.size());
    header["fps"] = fps;
    {
        std::ofstream out(dir / "header.json", std::ios::binary);
        require(out.good(), "write_frame_archive: cannot open ", (dir / "header.json").string());
        out << header.dump(2) << "\n";
    }

    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Frame& f = frames[i];
        require(f.width == w && f.height == h, "write_frame_archive: frame size mismatch");
        for (std::size_t k = 0; k < bytes.size(); ++k) {
            const float v = f.rgb[k];
            bytes[k] = static_cast<std::uint8_t>(std::lround(std::min(std::max(v, 0.0f), 1.0f) * 255.0f));
        }
        std::ofstream out(dir / frame_file_name(static_cast<int>(i)), std::ios::binary);
        require(out.good(), "write_frame_archive: cannot open frame file in ", dir.string());
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    }
}

ArchiveHeader read_archive_header(const std::filesystem::path& dir) {
    std::ifstream in(dir / "header.json", std::ios::binary);
    require(in.good(), "read_archive_header: cannot open ", (dir / "header.json").string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise("read_archive_header: malformed header.json in ", dir.string(), ": ", e.what());
    }
    ArchiveHeader h;
    h.width = j.at("width").get<int>();
    h.height = j.at("height").get<int>();
    h.num_frames = j.at("num_frames").get<int>();
    h.fps = j.at("fps").get<double>();
    return h;
}

Frame read_archive_frame(const std::filesystem::path& dir, const ArchiveHeader& header, int index) {
    require(index >= 0 && index < header.num_frames, "read_archive_frame: index ", index,
            " out of range [0, ", header.num_frames, ")");
    const auto path = dir / frame_file_name(index);
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "read_archive_frame: cannot open ", path.string());

    const std::size_t n = static_cast<std::size_t>(header.width) * header.height * 3;
    std::vector<std::uint8_t> bytes(n);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    require(static_cast<std::size_t>(in.gcount()) == n, "read_archive_frame: short read in ",
            path.string());

    Frame f;
    f.width = header.width;
    f.height = header.height;
    f.rgb.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        f.rgb[k] = static_cast<float>(bytes[k]) / 255.0f;
    }
    return f;
}

std::vector<Frame> read_archive_frames(const std::filesystem::path& dir,
                                       const std::vector<int>& indices) {
    const ArchiveHeader header = read_archive_header(dir);
    std::vector<Frame> frames;
    frames.reserve(indices.size());
    for (int idx : indices) {
        frames.push_back(read_archive_frame(dir, header, idx));
    }
    return frames;
}

} // namespace gvqa
