#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gvqa/tubelet.hpp"

namespace gvqa {

struct AnnotationSet {
    std::vector<VideoMeta> videos;
    std::vector<QASample> samples;

    [[nodiscard]] const VideoMeta& video(const std::string& video_id) const;
};

// One predicted track per (video, question) sample.
struct SamplePrediction {
    std::string video_id;
    std::string question;
    std::vector<Tubelet> tracks;
    std::vector<double> confidences; // parallel to tracks
};

struct PredictionSet {
    std::string config_hash;
    std::vector<SamplePrediction> samples;
};

// Box coordinates are quantized to 4 decimals before writing so the decimal
// text in the file reproduces the in-memory doubles exactly on re-read.
double quantize_coord(double v);

AnnotationSet read_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path, const AnnotationSet& set);

PredictionSet read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, const PredictionSet& preds);

// Accepts either a prediction file or an annotation file (ground truth reused
// as predictions scores a perfect run; confidence defaults to 1).
PredictionSet read_predictions_or_annotations(const std::filesystem::path& path);

} // namespace gvqa
