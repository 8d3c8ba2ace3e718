#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gvqa/annotation_io.hpp"
#include "gvqa/frames.hpp"
#include "gvqa/tubelet.hpp"

namespace gvqa {

enum class Shape { Square, Circle, Triangle };
enum class Color { Red, Green, Blue, Yellow };

const char* to_string(Shape s);
const char* to_string(Color c);

struct SceneObject {
    Shape shape{Shape::Square};
    Color color{Color::Red};
    int appearance_frame{0};
    double start_x{0.0}; // center at appearance_frame
    double start_y{0.0};
    double vel_x{0.0}; // px per frame
    double vel_y{0.0};
    double size{0.0}; // box side length

    bool operator==(const SceneObject&) const = default;
};

struct SceneSpec {
    std::uint64_t seed{0};
    int num_frames{0};
    int width{0};
    int height{0};
    double native_fps{30.0};
    std::vector<SceneObject> objects;

    bool operator==(const SceneSpec&) const = default;
};

struct SceneParams {
    int canvas_width{64};
    int canvas_height{64};
    double native_fps{30.0};
    int min_frames{30};
    int max_frames{60};
    int min_objects{1};
    int max_objects{3};
    double min_size{10.0};
    double max_size{20.0};
    double max_speed{1.5}; // px per frame, clipped so boxes stay on canvas
};

struct DatasetSplitSpec {
    std::string name; // train | val | test
    int num_samples{0};
    std::uint64_t seed{0};
};

// Analytic per-frame box of an object; valid for frame >= appearance_frame.
BoundingBox object_box_at(const SceneObject& obj, int frame);

// Deterministic scene synthesis. Guarantees every object's box stays on the
// canvas for all visible frames and that no object is ever fully occluded.
SceneSpec generate_scene(const SceneParams& params, std::uint64_t seed);

// Black background, palette colors, painter order = object list order,
// objects invisible before their appearance frame.
std::vector<Frame> render_video(const SceneSpec& scene);

// Ordinal questions: one per (color, shape) class instance, "track the k-th
// <color> <shape> that appears"; ground truth is the analytic trajectory box
// per visible frame, quantized like the annotation files.
std::vector<QASample> derive_qa(const SceneSpec& scene, const std::string& video_id);

struct SplitBuildResult {
    std::filesystem::path annotations_path;
    std::filesystem::path manifest_path;
    int num_scenes{0};
    int num_samples{0};
};

// Writes annotations.json, manifest.json and one frame archive per video
// under <data_root>/<split name>/. The test split is written without answers.
SplitBuildResult build_split(const DatasetSplitSpec& split, const SceneParams& params,
                             const std::filesystem::path& data_root,
                             const std::string& config_hash = "");

// Desk-scale analog of a 1859/3051/1859 train/val/test corpus.
std::vector<DatasetSplitSpec> default_split_specs(double scale, std::uint64_t base_seed);

} // namespace gvqa
