#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gvqa/box.hpp"

namespace gvqa {

struct VideoMeta {
    std::string video_id;
    int num_frames{0};
    double native_fps{0.0};
    int width{0};
    int height{0};
};

// Temporal downsampling and dense-expansion knobs. A duplication factor of 0
// means "derive from the fps ratio", which matches the sampling stride.
struct SamplingConfig {
    double target_fps{5.0};
    int max_sampled_frames{200};
    int duplication_factor{0};

    [[nodiscard]] int stride_for(double native_fps) const;
    [[nodiscard]] int duplication_for(double native_fps) const;
};

// One object track: at most one box per frame, keyed by native frame index.
struct Tubelet {
    std::string object_id;
    std::map<int, BoundingBox> boxes;
};

struct QASample {
    VideoMeta video;
    std::string question;
    std::optional<std::string> answer; // absent on the test split
    std::vector<Tubelet> gt_tracks;
};

// Frame indices kept when reducing a video to the target rate: 0, stride,
// 2*stride, ... and, if that exceeds the cap, a uniform subsample that keeps
// the first and last entries. Strictly increasing, never empty.
std::vector<int> sample_frame_indices(int num_frames, double native_fps, const SamplingConfig& cfg);

// Inverse of the reduction: every sparse box is copied onto its own frame and
// the following duplication-1 frames, truncated at num_frames; gaps left by
// cap subsampling are filled by holding the nearest previous box. The sparse
// track must sit exactly on the indices sample_frame_indices() produces.
Tubelet expand_predictions(const Tubelet& sparse, const SamplingConfig& cfg, int num_frames,
                           double native_fps);

// Violations are data, not errors: empty result means the tubelet is valid.
std::vector<std::string> validate_tubelet(const Tubelet& t, const VideoMeta& v);

} // namespace gvqa
