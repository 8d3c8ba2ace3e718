#include <benchmark/benchmark.h>

#include "gvqa/synth.hpp"

namespace {

using namespace gvqa;

void BM_GenerateScene(benchmark::State& state) {
    SceneParams params;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_scene(params, seed++));
    }
}
BENCHMARK(BM_GenerateScene);

void BM_RenderVideo(benchmark::State& state) {
    SceneParams params;
    params.min_frames = 60;
    params.max_frames = 60;
    const SceneSpec scene = generate_scene(params, 11);
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_video(scene));
    }
}
BENCHMARK(BM_RenderVideo)->Unit(benchmark::kMillisecond);

} // namespace
