#include "gvqa/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gvqa/error.hpp"
#include "gvqa/rng.hpp"

namespace gvqa {

namespace {

constexpr int kSceneAttempts = 32;

std::array<float, 3> palette(Color c) {
    switch (c) {
    case Color::Red: return {1.0f, 0.0f, 0.0f};
    case Color::Green: return {0.0f, 1.0f, 0.0f};
    case Color::Blue: return {0.0f, 0.0f, 1.0f};
    case Color::Yellow: return {1.0f, 1.0f, 0.0f};
    }
    return {0.0f, 0.0f, 0.0f};
}

bool point_in_shape(const SceneObject& obj, double cx, double cy, double px, double py) {
    const double h = obj.size * 0.5;
    switch (obj.shape) {
    case Shape::Square:
        return std::abs(px - cx) <= h && std::abs(py - cy) <= h;
    case Shape::Circle: {
        const double dx = px - cx;
        const double dy = py - cy;
        return dx * dx + dy * dy <= h * h;
    }
    case Shape::Triangle: {
        // Apex up: (cx, cy-h), base corners (cx-h, cy+h), (cx+h, cy+h).
        if (py < cy - h || py > cy + h) {
            return false;
        }
        // Width shrinks linearly from the base to the apex.
        const double t = (py - (cy - h)) / (2.0 * h); // 0 at apex, 1 at base
        return std::abs(px - cx) <= h * t;
    }
    }
    return false;
}

void paint_object(Frame& frame, const SceneObject& obj, int t) {
    if (t < obj.appearance_frame) {
        return;
    }
    const int dt = t - obj.appearance_frame;
    const double cx = obj.start_x + obj.vel_x * dt;
    const double cy = obj.start_y + obj.vel_y * dt;
    const double h = obj.size * 0.5;
    const auto rgb = palette(obj.color);

    const int x_lo = std::max(0, static_cast<int>(std::floor(cx - h)) - 1);
    const int x_hi = std::min(frame.width - 1, static_cast<int>(std::ceil(cx + h)) + 1);
    const int y_lo = std::max(0, static_cast<int>(std::floor(cy - h)) - 1);
    const int y_hi = std::min(frame.height - 1, static_cast<int>(std::ceil(cy + h)) + 1);
    for (int y = y_lo; y <= y_hi; ++y) {
        for (int x = x_lo; x <= x_hi; ++x) {
            if (point_in_shape(obj, cx, cy, x + 0.5, y + 0.5)) {
                frame.at(x, y, 0) = rgb[0];
                frame.at(x, y, 1) = rgb[1];
                frame.at(x, y, 2) = rgb[2];
            }
        }
    }
}

// True when every object keeps at least one visible pixel on every frame it
// exists in, despite later-painted objects.
bool no_full_occlusion(const SceneSpec& scene) {
    const std::vector<Frame> frames = render_video(scene);
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const SceneObject& obj = scene.objects[i];
        const auto rgb = palette(obj.color);
        for (int t = obj.appearance_frame; t < scene.num_frames; ++t) {
            const int dt = t - obj.appearance_frame;
            const double cx = obj.start_x + obj.vel_x * dt;
            const double cy = obj.start_y + obj.vel_y * dt;
            const Frame& fr = frames[static_cast<std::size_t>(t)];
            bool visible = false;
            const double h = obj.size * 0.5;
            const int x_lo = std::max(0, static_cast<int>(std::floor(cx - h)));
            const int x_hi = std::min(fr.width - 1, static_cast<int>(std::ceil(cx + h)));
            const int y_lo = std::max(0, static_cast<int>(std::floor(cy - h)));
            const int y_hi = std::min(fr.height - 1, static_cast<int>(std::ceil(cy + h)));
            for (int y = y_lo; y <= y_hi && !visible; ++y) {
                for (int x = x_lo; x <= x_hi && !visible; ++x) {
                    if (!point_in_shape(obj, cx, cy, x + 0.5, y + 0.5)) {
                        continue;
                    }
                    visible = fr.at(x, y, 0) == rgb[0] && fr.at(x, y, 1) == rgb[1] &&
                              fr.at(x, y, 2) == rgb[2];
                }
            }
            if (!visible) {
                return false;
            }
        }
    }
    return true;
}

SceneSpec try_scene(const SceneParams& params, std::uint64_t seed, std::uint64_t attempt) {
    Rng rng(Rng::mix(seed, attempt));

    SceneSpec scene;
    scene.seed = seed;
    scene.width = params.canvas_width;
    scene.height = params.canvas_height;
    scene.native_fps = params.native_fps;
    scene.num_frames = rng.range(params.min_frames, params.max_frames);

    const int n = rng.range(params.min_objects, params.max_objects);
    for (int i = 0; i < n; ++i) {
        SceneObject obj;
        obj.shape = static_cast<Shape>(rng.range(0, 2));
        obj.color = static_cast<Color>(rng.range(0, 3));
        obj.size = quantize_coord(rng.uniform(params.min_size, params.max_size));
        obj.appearance_frame = rng.range(0, scene.num_frames - 1);

        // Keep the full box on canvas for every visible frame: pick the start
        // inside the margins, then a velocity whose endpoint also fits.
        const double margin = obj.size * 0.5 + 0.01;
        const double lo_x = margin;
        const double hi_x = params.canvas_width - margin;
        const double lo_y = margin;
        const double hi_y = params.canvas_height - margin;
        require(hi_x > lo_x && hi_y > lo_y, "generate_scene: canvas too small for object size ",
                obj.size);
        obj.start_x = quantize_coord(rng.uniform(lo_x, hi_x));
        obj.start_y = quantize_coord(rng.uniform(lo_y, hi_y));

        const int visible = scene.num_frames - 1 - obj.appearance_frame;
        if (visible > 0) {
            const double vx_lo = std::max(-params.max_speed, (lo_x - obj.start_x) / visible);
            const double vx_hi = std::min(params.max_speed, (hi_x - obj.start_x) / visible);
            const double vy_lo = std::max(-params.max_speed, (lo_y - obj.start_y) / visible);
            const double vy_hi = std::min(params.max_speed, (hi_y - obj.start_y) / visible);
            obj.vel_x = quantize_coord(rng.uniform(vx_lo, vx_hi));
            obj.vel_y = quantize_coord(rng.uniform(vy_lo, vy_hi));
        }
        scene.objects.push_back(obj);
    }
    return scene;
}

std::string ordinal(int k) {
    if (k == 1) return "1st";
    if (k == 2) return "2nd";
    if (k == 3) return "3rd";
    return std::to_string(k) + "th";
}

} // namespace

const char* to_string(Shape s) {
    switch (s) {
    case Shape::Square: return "square";
    case Shape::Circle: return "circle";
    case Shape::Triangle: return "triangle";
    }
    return "?";
}

const char* to_string(Color c) {
    switch (c) {
    case Color::Red: return "red";
    case Color::Green: return "green";
    case Color::Blue: return "blue";
    case Color::Yellow: return "yellow";
    }
    return "?";
}

BoundingBox object_box_at(const SceneObject& obj, int frame) {
    require(frame >= obj.appearance_frame, "object_box_at: frame ", frame,
            " before appearance frame ", obj.appearance_frame);
    const int dt = frame - obj.appearance_frame;
    const double cx = obj.start_x + obj.vel_x * dt;
    const double cy = obj.start_y + obj.vel_y * dt;
    const double h = obj.size * 0.5;
    return BoundingBox{cx - h, cy - h, cx + h, cy + h};
}

SceneSpec generate_scene(const SceneParams& params, std::uint64_t seed) {
    require(params.canvas_width >= 16 && params.canvas_height >= 16,
            "generate_scene: canvas must be at least 16x16");
    require(params.min_objects >= 1 && params.max_objects <= 6 &&
                params.min_objects <= params.max_objects,
            "generate_scene: object count must lie in [1, 6]");
    require(params.min_frames >= 1 && params.min_frames <= params.max_frames,
            "generate_scene: bad frame range");

    for (std::uint64_t attempt = 0; attempt < kSceneAttempts; ++attempt) {
        SceneSpec scene = try_scene(params, seed, attempt);
        if (no_full_occlusion(scene)) {
            return scene;
        }
    }
    raise("generate_scene: no feasible placement after ", kSceneAttempts, " attempts (seed ", seed,
          ")");
}

std::vector<Frame> render_video(const SceneSpec& scene) {
    std::vector<Frame> frames(static_cast<std::size_t>(scene.num_frames));
    for (int t = 0; t < scene.num_frames; ++t) {
        Frame& fr = frames[static_cast<std::size_t>(t)];
        fr.width = scene.width;
        fr.height = scene.height;
        fr.rgb.assign(static_cast<std::size_t>(scene.width) * scene.height * 3, 0.0f);
        for (const SceneObject& obj : scene.objects) {
            paint_object(fr, obj, t);
        }
    }
    return frames;
}

std::vector<QASample> derive_qa(const SceneSpec& scene, const std::string& video_id) {
    VideoMeta meta;
    meta.video_id = video_id;
    meta.num_frames = scene.num_frames;
    meta.native_fps = scene.native_fps;
    meta.width = scene.width;
    meta.height = scene.height;

    // Appearance order per (color, shape) class, ties broken by object index.
    std::map<std::pair<int, int>, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const SceneObject& obj = scene.objects[i];
        by_class[{static_cast<int>(obj.color), static_cast<int>(obj.shape)}].push_back(i);
    }

    std::vector<QASample> samples;
    for (auto& [cls, members] : by_class) {
        std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            return scene.objects[a].appearance_frame < scene.objects[b].appearance_frame;
        });
        for (std::size_t k = 0; k < members.size(); ++k) {
            const std::size_t obj_index = members[k];
            const SceneObject& obj = scene.objects[obj_index];
            const std::string color = to_string(obj.color);
            const std::string shape = to_string(obj.shape);

            QASample s;
            s.video = meta;
            s.question = "track the " + ordinal(static_cast<int>(k) + 1) + " " + color + " " +
                         shape + " that appears";
            s.answer = color + " " + shape;

            Tubelet track;
            track.object_id = "obj" + std::to_string(obj_index);
            for (int t = obj.appearance_frame; t < scene.num_frames; ++t) {
                const BoundingBox b = object_box_at(obj, t);
                track.boxes[t] = BoundingBox{quantize_coord(b.x1), quantize_coord(b.y1),
                                             quantize_coord(b.x2), quantize_coord(b.y2)};
            }
            s.gt_tracks.push_back(std::move(track));
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

SplitBuildResult build_split(const DatasetSplitSpec& split, const SceneParams& params,
                             const std::filesystem::path& data_root,
                             const std::string& config_hash) {
    require(split.num_samples >= 1, "build_split: num_samples must be >= 1");
    const std::filesystem::path split_dir = data_root / split.name;
    std::filesystem::create_directories(split_dir);

    const bool strip_answers = split.name == "test";

    AnnotationSet set;
    std::vector<std::uint64_t> scene_seeds;
    int scene_index = 0;
    while (static_cast<int>(set.samples.size()) < split.num_samples) {
        const std::uint64_t scene_seed = Rng::mix(split.seed, static_cast<std::uint64_t>(scene_index));
        const SceneSpec scene = generate_scene(params, scene_seed);

        std::ostringstream vid;
        vid << split.name << "_vid" << std::setw(4) << std::setfill('0') << scene_index;
        const std::string video_id = vid.str();

        std::vector<QASample> samples = derive_qa(scene, video_id);
        const std::vector<Frame> frames = render_video(scene);
        write_frame_archive(split_dir / "frames" / video_id, frames, scene.native_fps);

        set.videos.push_back(samples.front().video);
        scene_seeds.push_back(scene_seed);
        for (QASample& s : samples) {
            if (static_cast<int>(set.samples.size()) >= split.num_samples) {
                break;
            }
            if (strip_answers) {
                s.answer.reset();
            }
            set.samples.push_back(std::move(s));
        }
        ++scene_index;
    }

    SplitBuildResult result;
    result.annotations_path = split_dir / "annotations.json";
    result.manifest_path = split_dir / "manifest.json";
    result.num_scenes = scene_index;
    result.num_samples = static_cast<int>(set.samples.size());
    write_annotations(result.annotations_path, set);

    nlohmann::json manifest;
    manifest["split"] = split.name;
    manifest["seed"] = split.seed;
    manifest["num_samples"] = split.num_samples;
    manifest["config_hash"] = config_hash;
    manifest["scene_seeds"] = scene_seeds;
    {
        std::vector<std::string> ids;
        for (const auto& v : set.videos) {
            ids.push_back(v.video_id);
        }
        manifest["videos"] = ids;
    }
    std::ofstream out(result.manifest_path, std::ios::binary);
    require(out.good(), "build_split: cannot open ", result.manifest_path.string());
    out << manifest.dump(2) << "\n";
    return result;
}

std::vector<DatasetSplitSpec> default_split_specs(double scale, std::uint64_t base_seed) {
    require(scale > 0.0, "default_split_specs: scale must be > 0");
    const auto scaled = [scale](int n) {
        return std::max(1, static_cast<int>(std::lround(n * scale)));
    };
    return {
        {"train", scaled(1859), Rng::mix(base_seed, 1)},
        {"val", scaled(3051), Rng::mix(base_seed, 2)},
        {"test", scaled(1859), Rng::mix(base_seed, 3)},
    };
}

} // namespace gvqa
