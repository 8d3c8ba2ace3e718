#include <fstream>

#include <nlohmann/json.hpp>

#include "gvqa/error.hpp"
#include "gvqa/hota.hpp"

namespace gvqa {

using nlohmann::json;

namespace {

json alpha_to_json(const AlphaScore& s) {
    json j;
    j["alpha"] = s.alpha;
    j["tp"] = s.tp;
    j["fn"] = s.fn;
    j["fp"] = s.fp;
    j["det_a"] = s.det_a;
    j["ass_a"] = s.ass_a;
    j["hota"] = s.hota;
    return j;
}

AlphaScore alpha_from_json(const json& j) {
    AlphaScore s;
    s.alpha = j.at("alpha").get<double>();
    s.tp = j.at("tp").get<std::int64_t>();
    s.fn = j.at("fn").get<std::int64_t>();
    s.fp = j.at("fp").get<std::int64_t>();
    s.det_a = j.at("det_a").get<double>();
    s.ass_a = j.at("ass_a").get<double>();
    s.hota = j.at("hota").get<double>();
    return s;
}

} // namespace

void write_report(const HOTAReport& report, const std::filesystem::path& path) {
    json j;
    j["config_hash"] = report.config_hash;
    j["final_hota"] = report.final_hota;
    j["alphas"] = json::array();
    for (const auto& s : report.overall) {
        j["alphas"].push_back(alpha_to_json(s));
    }
    j["per_video"] = json::array();
    for (const auto& v : report.per_video) {
        json jv;
        jv["video_id"] = v.video_id;
        jv["final_hota"] = v.final_hota;
        jv["exact"] = v.exact;
        jv["missing_in_predictions"] = v.missing_in_predictions;
        jv["missing_in_ground_truth"] = v.missing_in_ground_truth;
        jv["alphas"] = json::array();
        for (const auto& s : v.alphas) {
            jv["alphas"].push_back(alpha_to_json(s));
        }
        j["per_video"].push_back(jv);
    }
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "write_report: cannot open ", path.string());
    out << j.dump(2) << "\n";
}

HOTAReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "read_report: cannot open ", path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise("read_report: malformed JSON in ", path.string(), ": ", e.what());
    }
    HOTAReport r;
    r.config_hash = j.at("config_hash").get<std::string>();
    r.final_hota = j.at("final_hota").get<double>();
    for (const json& ja : j.at("alphas")) {
        r.overall.push_back(alpha_from_json(ja));
    }
    for (const json& jv : j.at("per_video")) {
        VideoHota v;
        v.video_id = jv.at("video_id").get<std::string>();
        v.final_hota = jv.at("final_hota").get<double>();
        v.exact = jv.at("exact").get<bool>();
        v.missing_in_predictions = jv.at("missing_in_predictions").get<bool>();
        v.missing_in_ground_truth = jv.at("missing_in_ground_truth").get<bool>();
        for (const json& ja : jv.at("alphas")) {
            v.alphas.push_back(alpha_from_json(ja));
        }
        r.per_video.push_back(std::move(v));
    }
    return r;
}

} // namespace gvqa
