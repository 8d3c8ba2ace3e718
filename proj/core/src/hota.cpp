#include "gvqa/hota.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "gvqa/error.hpp"

namespace gvqa {

namespace {

constexpr double kCountWeight = 1048576.0; // dominates any secondary score sum

// Max-weight perfect assignment on a padded square matrix (Hungarian with
// potentials, O(n^3)). Returns, for each row, the assigned column.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& weight) {
    const int rows = static_cast<int>(weight.size());
    const int cols = rows == 0 ? 0 : static_cast<int>(weight[0].size());
    const int n = std::max(rows, cols);
    if (n == 0) {
        return {};
    }
    // Minimize cost = -weight over the padded square matrix.
    std::vector<std::vector<double>> cost(n + 1, std::vector<double>(n + 1, 0.0));
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            cost[i + 1][j + 1] = -weight[i][j];
        }
    }
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = std::numeric_limits<double>::infinity();
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = cost[i0][j] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(rows), -1);
    for (int j = 1; j <= n; ++j) {
        const int i = p[j];
        if (i >= 1 && i <= rows && j <= cols) {
            row_to_col[static_cast<std::size_t>(i - 1)] = j - 1;
        }
    }
    return row_to_col;
}

// ---- per-video scoring ------------------------------------------------------

struct FrameDets {
    std::vector<int> gt_tracks; // track indices with a box on this frame
    std::vector<BoundingBox> gt_boxes;
    std::vector<int> pred_tracks;
    std::vector<BoundingBox> pred_boxes;
};

struct VideoData {
    int n_gt_tracks{0};
    int n_pred_tracks{0};
    std::vector<std::int64_t> gt_count;   // boxes per gt track
    std::vector<std::int64_t> pred_count; // boxes per pred track
    std::int64_t total_dets{0};
    std::vector<FrameDets> frames;
};

VideoData collect_video(const std::vector<Tubelet>& gt, const std::vector<Tubelet>& pred) {
    VideoData d;
    d.n_gt_tracks = static_cast<int>(gt.size());
    d.n_pred_tracks = static_cast<int>(pred.size());
    d.gt_count.assign(gt.size(), 0);
    d.pred_count.assign(pred.size(), 0);

    std::map<int, FrameDets> frames;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        d.gt_count[i] = static_cast<std::int64_t>(gt[i].boxes.size());
        for (const auto& [f, box] : gt[i].boxes) {
            frames[f].gt_tracks.push_back(static_cast<int>(i));
            frames[f].gt_boxes.push_back(box);
        }
    }
    for (std::size_t j = 0; j < pred.size(); ++j) {
        d.pred_count[j] = static_cast<std::int64_t>(pred[j].boxes.size());
        for (const auto& [f, box] : pred[j].boxes) {
            frames[f].pred_tracks.push_back(static_cast<int>(j));
            frames[f].pred_boxes.push_back(box);
        }
    }
    for (auto& [f, dets] : frames) {
        d.frames.push_back(std::move(dets));
    }
    for (auto c : d.gt_count) {
        d.total_dets += c;
    }
    for (auto c : d.pred_count) {
        d.total_dets += c;
    }
    return d;
}

// Per-frame feasible edges at a threshold, as (gt track, pred track, iou).
struct Edge {
    int gt{0};
    int pred{0};
    double iou{0.0};
    bool operator<(const Edge& o) const {
        return std::tie(gt, pred) < std::tie(o.gt, o.pred);
    }
};

std::vector<Edge> feasible_edges(const FrameDets& fd, double alpha) {
    std::vector<Edge> edges;
    for (std::size_t a = 0; a < fd.gt_tracks.size(); ++a) {
        for (std::size_t b = 0; b < fd.pred_tracks.size(); ++b) {
            const double v = iou(fd.gt_boxes[a], fd.pred_boxes[b]);
            if (v >= alpha) {
                edges.push_back(Edge{fd.gt_tracks[a], fd.pred_tracks[b], v});
            }
        }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

// All count-maximal matchings of a small edge set, as vectors of edge indices.
std::vector<std::vector<int>> maximum_matchings(const std::vector<Edge>& edges) {
    std::vector<std::vector<int>> all;
    std::vector<int> current;
    std::set<int> used_gt, used_pred;
    std::size_t best = 0;

    const std::function<void(std::size_t)> dfs = [&](std::size_t k) {
        if (k == edges.size()) {
            if (current.size() > best) {
                best = current.size();
                all.clear();
            }
            if (current.size() == best) {
                all.push_back(current);
            }
            return;
        }
        const Edge& e = edges[k];
        if (used_gt.count(e.gt) == 0 && used_pred.count(e.pred) == 0) {
            used_gt.insert(e.gt);
            used_pred.insert(e.pred);
            current.push_back(static_cast<int>(k));
            dfs(k + 1);
            current.pop_back();
            used_gt.erase(e.gt);
            used_pred.erase(e.pred);
        }
        dfs(k + 1);
    };
    dfs(0);

    // dfs visits subsets in a stable order but may record shorter matchings
    // before a longer one raised the bar; filter to the final size.
    std::vector<std::vector<int>> out;
    for (auto& m : all) {
        if (m.size() == best) {
            out.push_back(std::move(m));
        }
    }
    return out;
}

struct AlphaOutcome {
    std::int64_t tp{0};
    double ass_sum{0.0}; // sum over TPs of the pair's association Jaccard
    bool exact{true};
};

// Association sum for a pair-usage matrix: sum over pairs of m^2/(ng+np-m).
double association_sum(const std::vector<std::int64_t>& m, const VideoData& d) {
    double s = 0.0;
    for (int i = 0; i < d.n_gt_tracks; ++i) {
        for (int j = 0; j < d.n_pred_tracks; ++j) {
            const std::int64_t mij = m[static_cast<std::size_t>(i) *
                                           static_cast<std::size_t>(d.n_pred_tracks) +
                                       static_cast<std::size_t>(j)];
            if (mij > 0) {
                const double denom = static_cast<double>(d.gt_count[static_cast<std::size_t>(i)] +
                                                         d.pred_count[static_cast<std::size_t>(j)] -
                                                         mij);
                s += static_cast<double>(mij) * static_cast<double>(mij) / denom;
            }
        }
    }
    return s;
}

// Exhaustive tie-break search: frames with a unique count-maximal matching
// are forced; the rest are grouped by identical edge sets and enumerated as
// compositions. Returns nullopt when the combination count exceeds budget.
std::optional<AlphaOutcome> exact_alpha_outcome(const VideoData& d, double alpha,
                                                std::uint64_t budget) {
    if (d.n_gt_tracks == 0 || d.n_pred_tracks == 0) {
        return AlphaOutcome{}; // no matches possible
    }
    const std::size_t pair_count =
        static_cast<std::size_t>(d.n_gt_tracks) * static_cast<std::size_t>(d.n_pred_tracks);
    std::vector<std::int64_t> m(pair_count, 0);

    struct Group {
        std::vector<std::vector<std::pair<int, int>>> options; // track pairs per option
        int count{0};
    };
    std::map<std::vector<Edge>, Group> groups;

    for (const FrameDets& fd : d.frames) {
        std::vector<Edge> edges = feasible_edges(fd, alpha);
        if (edges.empty()) {
            continue;
        }
        if (edges.size() > 16) {
            return std::nullopt; // matching enumeration would blow up
        }
        auto it = groups.find(edges);
        if (it != groups.end()) {
            ++it->second.count;
            continue;
        }
        Group g;
        g.count = 1;
        for (const auto& mm : maximum_matchings(edges)) {
            std::vector<std::pair<int, int>> pairs;
            pairs.reserve(mm.size());
            for (int e : mm) {
                pairs.emplace_back(edges[static_cast<std::size_t>(e)].gt,
                                   edges[static_cast<std::size_t>(e)].pred);
            }
            g.options.push_back(std::move(pairs));
        }
        groups.emplace(std::move(edges), std::move(g));
    }

    // Forced groups (single option) apply directly; the rest are searched.
    std::vector<Group> open;
    std::int64_t tp = 0;
    for (auto& [edges, g] : groups) {
        (void)edges;
        if (g.options.size() == 1) {
            for (const auto& [gt_i, pred_j] : g.options[0]) {
                m[static_cast<std::size_t>(gt_i) * d.n_pred_tracks +
                  static_cast<std::size_t>(pred_j)] += g.count;
                tp += g.count;
            }
        } else {
            open.push_back(std::move(g));
        }
    }

    // Combination count: product over open groups of C(count+k-1, k-1).
    double combos = 1.0;
    for (const Group& g : open) {
        const int k = static_cast<int>(g.options.size());
        double c = 1.0;
        for (int i = 1; i < k; ++i) {
            c *= static_cast<double>(g.count + i) / static_cast<double>(i);
        }
        combos *= c;
        if (combos > static_cast<double>(budget)) {
            return std::nullopt;
        }
    }

    AlphaOutcome best;
    best.tp = -1;
    double best_f = -1.0;

    // Count per option is fixed within a group (all options are maximum
    // matchings of the same edge set), so TP is constant across the search.
    std::int64_t open_tp = 0;
    for (const Group& g : open) {
        open_tp += static_cast<std::int64_t>(g.options[0].size()) * g.count;
    }
    const std::int64_t total_tp = tp + open_tp;
    const double denom = static_cast<double>(d.total_dets - total_tp);

    const std::function<void(std::size_t)> search = [&](std::size_t gi) {
        if (gi == open.size()) {
            const double ass = association_sum(m, d);
            const double f = denom > 0.0 ? ass / denom : 1.0;
            if (f > best_f + 1e-15) {
                best_f = f;
                best.tp = total_tp;
                best.ass_sum = ass;
            }
            return;
        }
        const Group& g = open[gi];
        const int k = static_cast<int>(g.options.size());
        // Distribute g.count frames over k options.
        std::vector<int> take(static_cast<std::size_t>(k), 0);
        const std::function<void(int, int)> distribute = [&](int opt, int left) {
            if (opt == k - 1) {
                take[static_cast<std::size_t>(opt)] = left;
                for (int o = 0; o < k; ++o) {
                    for (const auto& [gt_i, pred_j] : g.options[static_cast<std::size_t>(o)]) {
                        m[static_cast<std::size_t>(gt_i) * d.n_pred_tracks +
                          static_cast<std::size_t>(pred_j)] += take[static_cast<std::size_t>(o)];
                    }
                }
                search(gi + 1);
                for (int o = 0; o < k; ++o) {
                    for (const auto& [gt_i, pred_j] : g.options[static_cast<std::size_t>(o)]) {
                        m[static_cast<std::size_t>(gt_i) * d.n_pred_tracks +
                          static_cast<std::size_t>(pred_j)] -= take[static_cast<std::size_t>(o)];
                    }
                }
                return;
            }
            for (int c = 0; c <= left; ++c) {
                take[static_cast<std::size_t>(opt)] = c;
                distribute(opt + 1, left - c);
            }
        };
        distribute(0, g.count);
    };
    search(0);

    best.exact = true;
    if (best.tp < 0) {
        best.tp = total_tp;
        best.ass_sum = 0.0;
    }
    return best;
}

// Fallback for large instances: per-frame count-maximal matching with a
// track-alignment secondary score (Jaccard of potential co-occurrence) and
// IoU as the final tie-break. Deterministic, single pass.
AlphaOutcome heuristic_alpha_outcome(const VideoData& d, double alpha) {
    AlphaOutcome out;
    out.exact = false;
    if (d.n_gt_tracks == 0 || d.n_pred_tracks == 0) {
        return out;
    }
    const std::size_t pair_count =
        static_cast<std::size_t>(d.n_gt_tracks) * static_cast<std::size_t>(d.n_pred_tracks);

    std::vector<std::int64_t> potential(pair_count, 0);
    for (const FrameDets& fd : d.frames) {
        for (const Edge& e : feasible_edges(fd, alpha)) {
            ++potential[static_cast<std::size_t>(e.gt) * d.n_pred_tracks +
                        static_cast<std::size_t>(e.pred)];
        }
    }
    std::vector<double> alignment(pair_count, 0.0);
    for (int i = 0; i < d.n_gt_tracks; ++i) {
        for (int j = 0; j < d.n_pred_tracks; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * d.n_pred_tracks +
                                    static_cast<std::size_t>(j);
            if (potential[idx] > 0) {
                alignment[idx] = static_cast<double>(potential[idx]) /
                                 static_cast<double>(d.gt_count[static_cast<std::size_t>(i)] +
                                                     d.pred_count[static_cast<std::size_t>(j)] -
                                                     potential[idx]);
            }
        }
    }

    std::vector<std::int64_t> m(pair_count, 0);
    for (const FrameDets& fd : d.frames) {
        if (fd.gt_tracks.empty() || fd.pred_tracks.empty()) {
            continue;
        }
        std::vector<std::vector<double>> weight(
            fd.gt_tracks.size(), std::vector<double>(fd.pred_tracks.size(), 0.0));
        bool any = false;
        for (std::size_t a = 0; a < fd.gt_tracks.size(); ++a) {
            for (std::size_t b = 0; b < fd.pred_tracks.size(); ++b) {
                const double v = iou(fd.gt_boxes[a], fd.pred_boxes[b]);
                if (v >= alpha) {
                    const std::size_t idx =
                        static_cast<std::size_t>(fd.gt_tracks[a]) * d.n_pred_tracks +
                        static_cast<std::size_t>(fd.pred_tracks[b]);
                    weight[a][b] = kCountWeight + 256.0 * alignment[idx] + v;
                    any = true;
                }
            }
        }
        if (!any) {
            continue;
        }
        const std::vector<int> assign = solve_assignment(weight);
        for (std::size_t a = 0; a < assign.size(); ++a) {
            const int b = assign[a];
            if (b >= 0 && weight[a][static_cast<std::size_t>(b)] >= kCountWeight) {
                ++m[static_cast<std::size_t>(fd.gt_tracks[a]) * d.n_pred_tracks +
                    static_cast<std::size_t>(fd.pred_tracks[static_cast<std::size_t>(b)])];
                ++out.tp;
            }
        }
    }
    out.ass_sum = association_sum(m, d);
    return out;
}

AlphaScore score_from_outcome(const AlphaOutcome& o, double alpha, std::int64_t gt_dets,
                              std::int64_t pred_dets) {
    AlphaScore s;
    s.alpha = alpha;
    s.tp = o.tp;
    s.fn = gt_dets - o.tp;
    s.fp = pred_dets - o.tp;
    const std::int64_t denom = s.tp + s.fn + s.fp;
    if (denom == 0) {
        // Nothing annotated and nothing predicted.
        s.det_a = 1.0;
        s.ass_a = 1.0;
    } else {
        s.det_a = static_cast<double>(s.tp) / static_cast<double>(denom);
        s.ass_a = s.tp > 0 ? o.ass_sum / static_cast<double>(s.tp) : 0.0;
    }
    s.hota = std::sqrt(s.det_a * s.ass_a);
    return s;
}

} // namespace

void TrackSet::add(const std::string& video_id, Tubelet track) {
    auto& tracks = by_video[video_id];
    for (const auto& t : tracks) {
        require(t.object_id != track.object_id, "TrackSet: duplicate object_id \"", track.object_id,
                "\" in video ", video_id);
    }
    tracks.push_back(std::move(track));
}

FrameMatch match_frame(const std::vector<BoundingBox>& pred, const std::vector<BoundingBox>& gt,
                       double alpha) {
    FrameMatch result;
    if (pred.empty() || gt.empty()) {
        result.false_positives = static_cast<int>(pred.size());
        result.false_negatives = static_cast<int>(gt.size());
        return result;
    }
    std::vector<std::vector<double>> weight(pred.size(), std::vector<double>(gt.size(), 0.0));
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t j = 0; j < gt.size(); ++j) {
            const double v = iou(pred[i], gt[j]);
            if (v >= alpha) {
                weight[i][j] = kCountWeight + v;
            }
        }
    }
    const std::vector<int> assign = solve_assignment(weight);
    for (std::size_t i = 0; i < assign.size(); ++i) {
        const int j = assign[i];
        if (j >= 0 && weight[i][static_cast<std::size_t>(j)] >= kCountWeight) {
            result.pairs.emplace_back(static_cast<int>(i), j);
        }
    }
    result.false_positives = static_cast<int>(pred.size() - result.pairs.size());
    result.false_negatives = static_cast<int>(gt.size() - result.pairs.size());
    return result;
}

std::vector<double> HotaConfig::default_alphas() {
    std::vector<double> a;
    for (int k = 1; k <= 19; ++k) {
        a.push_back(0.05 * k);
    }
    return a;
}

HOTAReport compute_hota(const TrackSet& pred, const TrackSet& gt, const HotaConfig& cfg) {
    const std::vector<double> alphas = cfg.alphas.empty() ? HotaConfig::default_alphas() : cfg.alphas;

    std::set<std::string> video_ids;
    for (const auto& [vid, tracks] : gt.by_video) {
        (void)tracks;
        video_ids.insert(vid);
    }
    for (const auto& [vid, tracks] : pred.by_video) {
        (void)tracks;
        video_ids.insert(vid);
    }

    HOTAReport report;
    report.overall.resize(alphas.size());
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        report.overall[a].alpha = alphas[a];
    }

    static const std::vector<Tubelet> kNoTracks;
    std::vector<double> overall_ass_sum(alphas.size(), 0.0);

    for (const std::string& vid : video_ids) {
        const auto git = gt.by_video.find(vid);
        const auto pit = pred.by_video.find(vid);
        const std::vector<Tubelet>& gt_tracks = git == gt.by_video.end() ? kNoTracks : git->second;
        const std::vector<Tubelet>& pred_tracks =
            pit == pred.by_video.end() ? kNoTracks : pit->second;

        const VideoData data = collect_video(gt_tracks, pred_tracks);
        std::int64_t gt_dets = 0;
        std::int64_t pred_dets = 0;
        for (auto c : data.gt_count) {
            gt_dets += c;
        }
        for (auto c : data.pred_count) {
            pred_dets += c;
        }

        VideoHota vh;
        vh.video_id = vid;
        vh.missing_in_predictions = pit == pred.by_video.end();
        vh.missing_in_ground_truth = git == gt.by_video.end();

        double final_sum = 0.0;
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            std::optional<AlphaOutcome> outcome =
                exact_alpha_outcome(data, alphas[a], cfg.exact_search_budget);
            if (!outcome.has_value()) {
                outcome = heuristic_alpha_outcome(data, alphas[a]);
                vh.exact = false;
            }
            const AlphaScore s = score_from_outcome(*outcome, alphas[a], gt_dets, pred_dets);
            vh.alphas.push_back(s);
            final_sum += s.hota;

            report.overall[a].tp += s.tp;
            report.overall[a].fn += s.fn;
            report.overall[a].fp += s.fp;
            overall_ass_sum[a] += outcome->ass_sum;
        }
        vh.final_hota = final_sum / static_cast<double>(alphas.size());
        report.per_video.push_back(std::move(vh));
    }

    double overall_sum = 0.0;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        AlphaScore& s = report.overall[a];
        const std::int64_t denom = s.tp + s.fn + s.fp;
        if (denom == 0) {
            s.det_a = 1.0;
            s.ass_a = 1.0;
        } else {
            s.det_a = static_cast<double>(s.tp) / static_cast<double>(denom);
            s.ass_a = s.tp > 0 ? overall_ass_sum[a] / static_cast<double>(s.tp) : 0.0;
        }
        s.hota = std::sqrt(s.det_a * s.ass_a);
        overall_sum += s.hota;
    }
    report.final_hota = alphas.empty() ? 0.0 : overall_sum / static_cast<double>(alphas.size());
    return report;
}

} // namespace gvqa
