#include "gvqa/annotation_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "gvqa/error.hpp"

namespace gvqa {

using nlohmann::json;

namespace {

json load_json(const std::filesystem::path& path, const char* who) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), who, ": cannot open ", path.string());
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::parse_error& e) {
        raise(who, ": malformed JSON in ", path.string(), ": ", e.what());
    }
}

void dump_json(const std::filesystem::path& path, const json& j, const char* who) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    require(out.good(), who, ": cannot open ", path.string());
    out << j.dump(2) << "\n";
}

const json& field(const json& j, const char* name, const char* context) {
    auto it = j.find(name);
    if (it == j.end()) {
        raise("schema error: missing field \"", name, "\" in ", context);
    }
    return *it;
}

json boxes_to_json(const Tubelet& t) {
    json boxes = json::object();
    for (const auto& [frame, box] : t.boxes) {
        boxes[std::to_string(frame)] = json::array(
            {quantize_coord(box.x1), quantize_coord(box.y1), quantize_coord(box.x2),
             quantize_coord(box.y2)});
    }
    return boxes;
}

Tubelet tubelet_from_json(const json& jt, const char* context) {
    Tubelet t;
    t.object_id = field(jt, "object_id", context).get<std::string>();
    const json& boxes = field(jt, "boxes", context);
    require(boxes.is_object(), "schema error: \"boxes\" must be an object in ", context);
    for (auto it = boxes.begin(); it != boxes.end(); ++it) {
        int frame = 0;
        try {
            std::size_t pos = 0;
            frame = std::stoi(it.key(), &pos);
            require(pos == it.key().size(), "not an integer");
        } catch (const std::exception&) {
            raise("schema error: frame key \"", it.key(), "\" is not an integer in ", context);
        }
        const json& arr = it.value();
        require(arr.is_array() && arr.size() == 4, "schema error: box at frame ", frame,
                " must be [x1,y1,x2,y2] in ", context);
        t.boxes[frame] = BoundingBox{arr[0].get<double>(), arr[1].get<double>(),
                                     arr[2].get<double>(), arr[3].get<double>()};
    }
    return t;
}

} // namespace

const VideoMeta& AnnotationSet::video(const std::string& video_id) const {
    for (const auto& v : videos) {
        if (v.video_id == video_id) {
            return v;
        }
    }
    raise("unknown video_id \"", video_id, "\"");
}

double quantize_coord(double v) {
    return std::round(v * 10000.0) / 10000.0;
}

AnnotationSet read_annotations(const std::filesystem::path& path) {
    const json j = load_json(path, "read_annotations");

    AnnotationSet set;
    std::unordered_map<std::string, VideoMeta> by_id;
    for (const json& jv : field(j, "videos", "annotation root")) {
        VideoMeta v;
        v.video_id = field(jv, "video_id", "videos entry").get<std::string>();
        v.num_frames = field(jv, "num_frames", "videos entry").get<int>();
        v.native_fps = field(jv, "native_fps", "videos entry").get<double>();
        v.width = field(jv, "width", "videos entry").get<int>();
        v.height = field(jv, "height", "videos entry").get<int>();
        require(v.num_frames >= 1, "read_annotations: video ", v.video_id, " has num_frames < 1");
        require(v.native_fps > 0.0, "read_annotations: video ", v.video_id, " has native_fps <= 0");
        require(v.width >= 1 && v.height >= 1, "read_annotations: video ", v.video_id,
                " has empty canvas");
        require(by_id.emplace(v.video_id, v).second, "read_annotations: duplicate video_id \"",
                v.video_id, "\"");
        set.videos.push_back(v);
    }

    std::set<std::pair<std::string, std::string>> sample_keys;
    for (const json& js : field(j, "samples", "annotation root")) {
        QASample s;
        const std::string vid = field(js, "video_id", "samples entry").get<std::string>();
        auto vit = by_id.find(vid);
        require(vit != by_id.end(), "read_annotations: sample references unknown video_id \"", vid,
                "\"");
        s.video = vit->second;
        s.question = field(js, "question", "samples entry").get<std::string>();
        require(!s.question.empty(), "read_annotations: empty question for video ", vid);
        if (js.contains("answer")) {
            s.answer = js.at("answer").get<std::string>();
        }
        require(sample_keys.emplace(vid, s.question).second,
                "read_annotations: duplicate video_id+question key (", vid, ", ", s.question, ")");
        for (const json& jt : field(js, "gt_tracks", "samples entry")) {
            Tubelet t = tubelet_from_json(jt, "gt_tracks entry");
            const auto violations = validate_tubelet(t, s.video);
            require(violations.empty(), "read_annotations: invalid gt track in video ", vid, ": ",
                    violations.front());
            s.gt_tracks.push_back(std::move(t));
        }
        set.samples.push_back(std::move(s));
    }
    return set;
}

void write_annotations(const std::filesystem::path& path, const AnnotationSet& set) {
    json j;
    j["videos"] = json::array();
    for (const auto& v : set.videos) {
        json jv;
        jv["video_id"] = v.video_id;
        jv["num_frames"] = v.num_frames;
        jv["native_fps"] = v.native_fps;
        jv["width"] = v.width;
        jv["height"] = v.height;
        j["videos"].push_back(jv);
    }
    j["samples"] = json::array();
    for (const auto& s : set.samples) {
        json js;
        js["video_id"] = s.video.video_id;
        js["question"] = s.question;
        if (s.answer.has_value()) {
            js["answer"] = *s.answer;
        }
        js["gt_tracks"] = json::array();
        for (const auto& t : s.gt_tracks) {
            json jt;
            jt["object_id"] = t.object_id;
            jt["boxes"] = boxes_to_json(t);
            js["gt_tracks"].push_back(jt);
        }
        j["samples"].push_back(js);
    }
    dump_json(path, j, "write_annotations");
}

PredictionSet read_predictions(const std::filesystem::path& path) {
    const json j = load_json(path, "read_predictions");
    PredictionSet preds;
    preds.config_hash = field(j, "config_hash", "prediction root").get<std::string>();
    for (const json& js : field(j, "samples", "prediction root")) {
        SamplePrediction p;
        p.video_id = field(js, "video_id", "prediction sample").get<std::string>();
        p.question = field(js, "question", "prediction sample").get<std::string>();
        for (const json& jt : field(js, "tracks", "prediction sample")) {
            p.tracks.push_back(tubelet_from_json(jt, "prediction track"));
            p.confidences.push_back(field(jt, "confidence", "prediction track").get<double>());
        }
        preds.samples.push_back(std::move(p));
    }
    return preds;
}

void write_predictions(const std::filesystem::path& path, const PredictionSet& preds) {
    json j;
    j["config_hash"] = preds.config_hash;
    j["samples"] = json::array();
    for (const auto& p : preds.samples) {
        json js;
        js["video_id"] = p.video_id;
        js["question"] = p.question;
        js["tracks"] = json::array();
        for (std::size_t i = 0; i < p.tracks.size(); ++i) {
            json jt;
            jt["object_id"] = p.tracks[i].object_id;
            jt["confidence"] = p.confidences[i];
            jt["boxes"] = boxes_to_json(p.tracks[i]);
            js["tracks"].push_back(jt);
        }
        j["samples"].push_back(js);
    }
    dump_json(path, j, "write_predictions");
}

PredictionSet read_predictions_or_annotations(const std::filesystem::path& path) {
    const json j = load_json(path, "read_predictions");
    if (j.contains("videos")) {
        const AnnotationSet set = read_annotations(path);
        PredictionSet preds;
        preds.config_hash = "ground-truth";
        for (const auto& s : set.samples) {
            SamplePrediction p;
            p.video_id = s.video.video_id;
            p.question = s.question;
            p.tracks = s.gt_tracks;
            p.confidences.assign(s.gt_tracks.size(), 1.0);
            preds.samples.push_back(std::move(p));
        }
        return preds;
    }
    return read_predictions(path);
}

} // namespace gvqa
