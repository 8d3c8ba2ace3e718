#include "gvqa/tubelet.hpp"

#include <cmath>
#include <sstream>

#include "gvqa/error.hpp"

namespace gvqa {

int SamplingConfig::stride_for(double native_fps) const {
    require(target_fps > 0.0, "SamplingConfig: target_fps must be > 0");
    const int stride = static_cast<int>(std::lround(native_fps / target_fps));
    return stride < 1 ? 1 : stride;
}

int SamplingConfig::duplication_for(double native_fps) const {
    if (duplication_factor > 0) {
        return duplication_factor;
    }
    return stride_for(native_fps);
}

std::vector<int> sample_frame_indices(int num_frames, double native_fps, const SamplingConfig& cfg) {
    require(num_frames >= 1, "sample_frame_indices: num_frames must be >= 1, got ", num_frames);
    require(cfg.max_sampled_frames >= 1, "sample_frame_indices: max_sampled_frames must be >= 1");

    const int stride = cfg.stride_for(native_fps);
    std::vector<int> indices;
    for (int f = 0; f < num_frames; f += stride) {
        indices.push_back(f);
    }

    const int cap = cfg.max_sampled_frames;
    const int n = static_cast<int>(indices.size());
    if (n <= cap) {
        return indices;
    }

    // Uniform subsample keeping both endpoints.
    std::vector<int> kept;
    kept.reserve(static_cast<std::size_t>(cap));
    for (int k = 0; k < cap; ++k) {
        const double pos = static_cast<double>(k) * static_cast<double>(n - 1) /
                           static_cast<double>(cap - 1);
        kept.push_back(indices[static_cast<std::size_t>(std::lround(pos))]);
    }
    return kept;
}

Tubelet expand_predictions(const Tubelet& sparse, const SamplingConfig& cfg, int num_frames,
                           double native_fps) {
    const std::vector<int> expected = sample_frame_indices(num_frames, native_fps, cfg);
    require(sparse.boxes.size() == expected.size(),
            "expand_predictions: sparse track has ", sparse.boxes.size(),
            " boxes but sampling yields ", expected.size(), " indices");
    {
        std::size_t k = 0;
        for (const auto& [frame, box] : sparse.boxes) {
            (void)box;
            require(frame == expected[k], "expand_predictions: sparse index ", frame,
                    " does not match sampled index ", expected[k]);
            ++k;
        }
    }

    const int dup = cfg.duplication_for(native_fps);
    Tubelet dense;
    dense.object_id = sparse.object_id;
    for (const auto& [frame, box] : sparse.boxes) {
        for (int d = 0; d < dup; ++d) {
            const int f = frame + d;
            if (f >= num_frames) {
                break;
            }
            dense.boxes[f] = box;
        }
    }

    // Cap subsampling can leave holes wider than the duplication run; hold the
    // nearest previous box so every frame carries exactly one.
    const BoundingBox* last = nullptr;
    for (int f = 0; f < num_frames; ++f) {
        auto it = dense.boxes.find(f);
        if (it != dense.boxes.end()) {
            last = &it->second;
            continue;
        }
        require(last != nullptr, "expand_predictions: no box available for frame ", f);
        dense.boxes[f] = *last;
    }
    return dense;
}

std::vector<std::string> validate_tubelet(const Tubelet& t, const VideoMeta& v) {
    std::vector<std::string> violations;
    for (const auto& [frame, box] : t.boxes) {
        std::ostringstream at;
        at << "track '" << t.object_id << "' frame " << frame;
        if (frame < 0 || frame >= v.num_frames) {
            violations.push_back(at.str() + ": frame out of range [0, " +
                                 std::to_string(v.num_frames) + ")");
        }
        if (!box.valid()) {
            violations.push_back(at.str() + ": degenerate box");
            continue;
        }
        if (box.x1 < 0.0 || box.y1 < 0.0 || box.x2 > static_cast<double>(v.width) ||
            box.y2 > static_cast<double>(v.height)) {
            violations.push_back(at.str() + ": box outside video bounds");
        }
    }
    return violations;
}

} // namespace gvqa
