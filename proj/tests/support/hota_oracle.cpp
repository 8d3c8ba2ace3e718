#include "hota_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "gvqa/box.hpp"

namespace gvqa::testsupport {

namespace {

struct FrameBoxes {
    std::vector<int> gt_track;
    std::vector<BoundingBox> gt_box;
    std::vector<int> pred_track;
    std::vector<BoundingBox> pred_box;
};

// Every maximum-cardinality one-to-one assignment between the feasible pairs
// of one frame, as lists of (gt track, pred track).
std::vector<std::vector<std::pair<int, int>>> frame_options(const FrameBoxes& fb, double alpha) {
    std::vector<std::pair<int, int>> edges;
    for (std::size_t a = 0; a < fb.gt_track.size(); ++a) {
        for (std::size_t b = 0; b < fb.pred_track.size(); ++b) {
            if (iou(fb.gt_box[a], fb.pred_box[b]) >= alpha) {
                edges.emplace_back(fb.gt_track[a], fb.pred_track[b]);
            }
        }
    }
    std::vector<std::vector<std::pair<int, int>>> matchings;
    std::vector<std::pair<int, int>> current;
    const std::function<void(std::size_t)> dfs = [&](std::size_t k) {
        if (k == edges.size()) {
            matchings.push_back(current);
            return;
        }
        const auto& [g, p] = edges[k];
        bool free = true;
        for (const auto& [cg, cp] : current) {
            if (cg == g || cp == p) {
                free = false;
                break;
            }
        }
        if (free) {
            current.emplace_back(g, p);
            dfs(k + 1);
            current.pop_back();
        }
        dfs(k + 1);
    };
    dfs(0);

    std::size_t best = 0;
    for (const auto& m : matchings) {
        best = std::max(best, m.size());
    }
    std::vector<std::vector<std::pair<int, int>>> out;
    for (auto& m : matchings) {
        if (m.size() == best) {
            out.push_back(std::move(m));
        }
    }
    return out;
}

} // namespace

OracleScores brute_force_hota(const std::vector<Tubelet>& gt, const std::vector<Tubelet>& pred,
                              const std::vector<double>& alphas) {
    std::map<int, FrameBoxes> frames;
    std::vector<std::int64_t> gt_count(gt.size(), 0);
    std::vector<std::int64_t> pred_count(pred.size(), 0);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        gt_count[i] = static_cast<std::int64_t>(gt[i].boxes.size());
        for (const auto& [f, box] : gt[i].boxes) {
            frames[f].gt_track.push_back(static_cast<int>(i));
            frames[f].gt_box.push_back(box);
        }
    }
    for (std::size_t j = 0; j < pred.size(); ++j) {
        pred_count[j] = static_cast<std::int64_t>(pred[j].boxes.size());
        for (const auto& [f, box] : pred[j].boxes) {
            frames[f].pred_track.push_back(static_cast<int>(j));
            frames[f].pred_box.push_back(box);
        }
    }
    std::int64_t gt_dets = 0;
    std::int64_t pred_dets = 0;
    for (auto c : gt_count) {
        gt_dets += c;
    }
    for (auto c : pred_count) {
        pred_dets += c;
    }

    OracleScores scores;
    for (double alpha : alphas) {
        std::vector<std::vector<std::vector<std::pair<int, int>>>> options;
        for (const auto& [f, fb] : frames) {
            (void)f;
            options.push_back(frame_options(fb, alpha));
        }

        std::map<std::pair<int, int>, std::int64_t> m;
        double best_hota = -1.0;

        const std::function<void(std::size_t)> dfs = [&](std::size_t fi) {
            if (fi == options.size()) {
                std::int64_t tp = 0;
                double ass_sum = 0.0;
                for (const auto& [pair, count] : m) {
                    if (count == 0) {
                        continue;
                    }
                    tp += count;
                    const double denom =
                        static_cast<double>(gt_count[static_cast<std::size_t>(pair.first)] +
                                            pred_count[static_cast<std::size_t>(pair.second)] -
                                            count);
                    ass_sum += static_cast<double>(count) * static_cast<double>(count) / denom;
                }
                const std::int64_t fn = gt_dets - tp;
                const std::int64_t fp = pred_dets - tp;
                double det_a;
                double ass_a;
                if (tp + fn + fp == 0) {
                    det_a = 1.0;
                    ass_a = 1.0;
                } else {
                    det_a = static_cast<double>(tp) / static_cast<double>(tp + fn + fp);
                    ass_a = tp > 0 ? ass_sum / static_cast<double>(tp) : 0.0;
                }
                best_hota = std::max(best_hota, std::sqrt(det_a * ass_a));
                return;
            }
            for (const auto& option : options[fi]) {
                for (const auto& pair : option) {
                    ++m[pair];
                }
                dfs(fi + 1);
                for (const auto& pair : option) {
                    --m[pair];
                }
            }
        };
        dfs(0);
        scores.per_alpha.push_back(best_hota);
    }

    double sum = 0.0;
    for (double h : scores.per_alpha) {
        sum += h;
    }
    scores.final_hota = alphas.empty() ? 0.0 : sum / static_cast<double>(alphas.size());
    return scores;
}

} // namespace gvqa::testsupport
