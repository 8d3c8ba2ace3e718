#include <benchmark/benchmark.h>

#include "gvqa/hota.hpp"
#include "gvqa/rng.hpp"

namespace {

using namespace gvqa;

Tubelet wandering_track(Rng& rng, const std::string& id, int frames) {
    Tubelet t;
    t.object_id = id;
    double x = rng.uniform(5, 40);
    double y = rng.uniform(5, 40);
    for (int f = 0; f < frames; ++f) {
        x += rng.uniform(-0.5, 0.5);
        y += rng.uniform(-0.5, 0.5);
        t.boxes[f] = BoundingBox{x, y, x + 12, y + 12};
    }
    return t;
}

Tubelet jittered(Rng& rng, const Tubelet& src, const std::string& id) {
    Tubelet t;
    t.object_id = id;
    for (const auto& [f, b] : src.boxes) {
        const double dx = rng.uniform(-2, 2);
        const double dy = rng.uniform(-2, 2);
        t.boxes[f] = BoundingBox{b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy};
    }
    return t;
}

void BM_Iou(benchmark::State& state) {
    const BoundingBox a{0, 0, 10, 10};
    const BoundingBox b{3, 2, 13, 14};
    for (auto _ : state) {
        benchmark::DoNotOptimize(iou(a, b));
    }
}
BENCHMARK(BM_Iou);

void BM_MatchFrame(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(1);
    std::vector<BoundingBox> gt;
    std::vector<BoundingBox> pred;
    for (int i = 0; i < n; ++i) {
        const double x = rng.uniform(0, 50);
        const double y = rng.uniform(0, 50);
        gt.push_back(BoundingBox{x, y, x + 10, y + 10});
        pred.push_back(BoundingBox{x + rng.uniform(-3, 3), y + rng.uniform(-3, 3), x + 10, y + 10});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(match_frame(pred, gt, 0.5));
    }
}
BENCHMARK(BM_MatchFrame)->Arg(2)->Arg(4)->Arg(8);

void BM_ComputeHota(benchmark::State& state) {
    const int frames = static_cast<int>(state.range(0));
    Rng rng(7);
    TrackSet gt;
    gt.role = TrackRole::GroundTruth;
    TrackSet pred;
    pred.role = TrackRole::Prediction;
    for (int k = 0; k < 3; ++k) {
        const Tubelet g = wandering_track(rng, "g" + std::to_string(k), frames);
        pred.add("v", jittered(rng, g, "p" + std::to_string(k)));
        gt.add("v", g);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(compute_hota(pred, gt));
    }
}
BENCHMARK(BM_ComputeHota)->Arg(60)->Arg(300)->Unit(benchmark::kMillisecond);

} // namespace
