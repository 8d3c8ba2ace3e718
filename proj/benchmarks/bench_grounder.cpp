#include <benchmark/benchmark.h>

#include "gvqa/grounder.hpp"
#include "gvqa/synth.hpp"

namespace {

using namespace gvqa;

struct Fixture {
    GrounderState state;
    GrounderExample example;
    Prompt prompt;

    Fixture() : prompt{compose("track the 1st red square that appears", "red square")} {
        GrounderConfig cfg;
        cfg.vocab = TokenVocab::from_corpus({prompt.text});
        state = build_grounder(cfg, 1);

        SceneParams params;
        params.min_frames = 60;
        params.max_frames = 60;
        const SceneSpec scene = generate_scene(params, 3);
        const auto frames = render_video(scene);
        SamplingConfig sampling;
        example.sampled_indices =
            sample_frame_indices(scene.num_frames, scene.native_fps, sampling);
        for (int idx : example.sampled_indices) {
            example.sampled_frames.push_back(frames[static_cast<std::size_t>(idx)]);
        }
        example.prompt_text = prompt.text;
        const auto qa = derive_qa(scene, "v").front();
        example.target = target_from_track(qa.gt_tracks.front(), example.sampled_indices,
                                           scene.width, scene.height);
    }
};

void BM_GrounderForward(benchmark::State& state) {
    const Fixture fx;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            predict_tubelet(fx.example.sampled_frames, fx.example.sampled_indices, fx.prompt,
                            fx.state));
    }
}
BENCHMARK(BM_GrounderForward)->Unit(benchmark::kMillisecond);

void BM_GrounderTrainStep(benchmark::State& state) {
    Fixture fx;
    for (auto _ : state) {
        benchmark::DoNotOptimize(grounder_loss_gradient(fx.state, fx.example));
    }
}
BENCHMARK(BM_GrounderTrainStep)->Unit(benchmark::kMillisecond);

} // namespace
