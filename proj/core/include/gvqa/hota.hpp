#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gvqa/tubelet.hpp"

namespace gvqa {

enum class TrackRole { Prediction, GroundTruth };

struct TrackSet {
    TrackRole role{TrackRole::Prediction};
    std::map<std::string, std::vector<Tubelet>> by_video;

    // object_ids must be unique within a video for one role.
    void add(const std::string& video_id, Tubelet track);
};

struct FrameMatch {
    std::vector<std::pair<int, int>> pairs; // (pred index, gt index)
    int false_positives{0};
    int false_negatives{0};
};

// One-to-one assignment maximizing matched count, then total IoU, subject to
// IoU >= alpha.
FrameMatch match_frame(const std::vector<BoundingBox>& pred, const std::vector<BoundingBox>& gt,
                       double alpha);

struct AlphaScore {
    double alpha{0.0};
    std::int64_t tp{0};
    std::int64_t fn{0};
    std::int64_t fp{0};
    double det_a{0.0};
    double ass_a{0.0};
    double hota{0.0};
};

struct VideoHota {
    std::string video_id;
    std::vector<AlphaScore> alphas;
    double final_hota{0.0};
    bool exact{true}; // false when the tie-break search fell back to the heuristic
    bool missing_in_predictions{false};
    bool missing_in_ground_truth{false};
};

struct HOTAReport {
    std::string config_hash;
    std::vector<AlphaScore> overall;
    double final_hota{0.0};
    std::vector<VideoHota> per_video;
};

struct HotaConfig {
    std::vector<double> alphas;             // defaults to 0.05, 0.10, ..., 0.95
    std::uint64_t exact_search_budget{20000}; // max tie-break combinations per video/alpha

    static std::vector<double> default_alphas();
};

// Detection accuracy, association accuracy and their geometric mean, averaged
// over the IoU threshold grid. Per frame the matching is count-maximal
// (match_frame's rule); ties between count-maximal assignments are resolved
// by exhaustive search for the assignment combination that maximizes the
// final score when the instance is small enough, and by a track-alignment
// weighted matching otherwise.
HOTAReport compute_hota(const TrackSet& pred, const TrackSet& gt, const HotaConfig& cfg = {});

void write_report(const HOTAReport& report, const std::filesystem::path& path);
HOTAReport read_report(const std::filesystem::path& path);

} // namespace gvqa
