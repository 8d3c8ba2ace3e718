#include <cmath>

#include "doctest.h"

#include "gvqa/error.hpp"
#include "gvqa/grounder.hpp"
#include "gvqa/rng.hpp"
#include "gvqa/synth.hpp"

using namespace gvqa;

namespace {

GrounderConfig tiny_config() {
    GrounderConfig c;
    c.model_dim = 8;
    c.heads = 2;
    c.encoder_layers = 1;
    c.decoder_layers = 1;
    c.ffn_dim = 16;
    c.text_embed_dim = 8;
    c.conv1_channels = 4;
    c.conv2_channels = 4;
    c.input_pool = 2;
    c.vocab = TokenVocab::from_corpus({"track the red square that appears"});
    return c;
}

Frame solid_frame(int size, float r, float g, float b) {
    Frame f;
    f.width = size;
    f.height = size;
    f.rgb.resize(static_cast<std::size_t>(size) * size * 3);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            f.at(x, y, 0) = r;
            f.at(x, y, 1) = g;
            f.at(x, y, 2) = b;
        }
    }
    return f;
}

GrounderExample tiny_example(int frames = 2, int size = 8) {
    GrounderExample ex;
    for (int i = 0; i < frames; ++i) {
        ex.sampled_frames.push_back(
            solid_frame(size, 0.1f * static_cast<float>(i + 1), 0.5f, 0.2f));
        ex.sampled_indices.push_back(i * 6);
        ex.target.boxes.push_back(std::array<double, 4>{0.4 + 0.05 * i, 0.5, 0.3, 0.25});
    }
    ex.prompt_text = "track the red square that appears";
    return ex;
}

} // namespace

TEST_CASE("predictions respect the output contract for any state") {
    const GrounderState state = build_grounder(tiny_config(), 7);
    const GrounderExample ex = tiny_example(3);
    const Prompt prompt = compose("track the red square that appears", "red square");

    const SparseTubeletPrediction pred =
        predict_tubelet(ex.sampled_frames, ex.sampled_indices, prompt, state);
    REQUIRE(pred.boxes.size() == 3);
    REQUIRE(pred.confidences.size() == 3);
    CHECK(pred.sampled_indices == ex.sampled_indices);
    for (std::size_t i = 0; i < pred.boxes.size(); ++i) {
        for (double v : pred.boxes[i]) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
        CHECK(pred.confidences[i] > 0.0);
        CHECK(pred.confidences[i] < 1.0);
    }

    // Determinism: identical inputs give identical outputs.
    const SparseTubeletPrediction again =
        predict_tubelet(ex.sampled_frames, ex.sampled_indices, prompt, state);
    CHECK(pred.boxes == again.boxes);
    CHECK(pred.confidences == again.confidences);
}

TEST_CASE("frame counts above the cap are rejected with a resample hint") {
    GrounderConfig cfg = tiny_config();
    cfg.max_sampled_frames = 2;
    const GrounderState state = build_grounder(cfg, 1);
    const GrounderExample ex = tiny_example(3);
    const Prompt prompt = compose("q", "a");
    try {
        predict_tubelet(ex.sampled_frames, ex.sampled_indices, prompt, state);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("resample") != std::string::npos);
    }
}

TEST_CASE("loss is zero for exact matches with perfect confidence") {
    GroundingTarget target;
    target.boxes = {std::array<double, 4>{0.5, 0.5, 0.2, 0.2},
                    std::array<double, 4>{0.3, 0.6, 0.1, 0.4}, std::nullopt};
    SparseTubeletPrediction pred;
    pred.boxes = {{0.5, 0.5, 0.2, 0.2}, {0.3, 0.6, 0.1, 0.4}, {0.9, 0.9, 0.1, 0.1}};
    pred.confidences = {1.0, 1.0, 0.0};
    pred.sampled_indices = {0, 6, 12};

    const LossBreakdown loss = grounding_loss(pred, target);
    CHECK(loss.l1 == 0.0);
    CHECK(loss.giou == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(loss.bce <= 1e-6); // clamped-target floor
    CHECK(loss.total <= 1e-6);
    CHECK(loss.total >= 0.0);
}

TEST_CASE("giou term matches the closed form for disjoint corner boxes") {
    // Equal boxes of side a touching at opposite corners of their 2a x 2a
    // enclosure: IoU 0, union 2a^2, hull 4a^2, so GIoU = -(4-2)/4 = -1/2 and
    // the loss term is 1 - (-1/2) = 3/2.
    GroundingTarget target;
    target.boxes = {std::array<double, 4>{0.25, 0.25, 0.25, 0.25}}; // corners 0.125..0.375
    SparseTubeletPrediction pred;
    pred.boxes = {{0.5, 0.5, 0.25, 0.25}}; // corners 0.375..0.625
    pred.confidences = {1.0};
    pred.sampled_indices = {0};

    const LossBreakdown loss = grounding_loss(pred, target, 5.0, 2.0);
    CHECK(loss.giou == doctest::Approx(1.5).epsilon(1e-12));
    // l1: mean |pred-gt| over 4 coords = (0.25 + 0.25 + 0 + 0) / 4
    CHECK(loss.l1 == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(loss.total ==
          doctest::Approx(5.0 * 0.125 + 2.0 * 1.5 + loss.bce).epsilon(1e-12));
}

TEST_CASE("loss rejects misaligned targets") {
    SparseTubeletPrediction pred;
    pred.boxes = {{0.5, 0.5, 0.2, 0.2}};
    pred.confidences = {0.5};
    pred.sampled_indices = {0};
    GroundingTarget target;
    target.boxes = {std::array<double, 4>{0.5, 0.5, 0.2, 0.2},
                    std::array<double, 4>{0.5, 0.5, 0.2, 0.2}};
    CHECK_THROWS_AS(grounding_loss(pred, target), Error);
}

TEST_CASE("analytic gradients match central finite differences") {
    const GrounderExample ex = tiny_example(2);
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        GrounderState state = build_grounder(tiny_config(), seed);
        const std::vector<double> grad = grounder_loss_gradient(state, ex);

        Rng pick(seed);
        const double h = 1e-5;
        int checked = 0;
        while (checked < 60) {
            const std::size_t i = static_cast<std::size_t>(pick.below(state.params.size()));
            const double saved = state.params.data()[i];
            state.params.data()[i] = saved + h;
            const double up = grounder_loss_value(state, ex);
            state.params.data()[i] = saved - h;
            const double down = grounder_loss_value(state, ex);
            state.params.data()[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double err =
                std::fabs(fd - grad[i]) / std::max(1.0, std::fabs(fd) + std::fabs(grad[i]));
            CHECK(err < 1e-3);
            ++checked;
        }
    }
}

TEST_CASE("training shrinks the loss and records history") {
    const SceneParams params = [] {
        SceneParams p;
        p.canvas_width = 32;
        p.canvas_height = 32;
        p.min_frames = 8;
        p.max_frames = 12;
        p.min_objects = 1;
        p.max_objects = 1;
        p.min_size = 8;
        p.max_size = 12;
        return p;
    }();
    SamplingConfig sampling;

    std::vector<GrounderExample> examples;
    std::vector<std::string> prompts;
    for (std::uint64_t s = 0; s < 12; ++s) {
        const SceneSpec scene = generate_scene(params, Rng::mix(500, s));
        const auto frames = render_video(scene);
        const auto samples = derive_qa(scene, "v" + std::to_string(s));
        const QASample& qa = samples.front();
        GrounderExample ex;
        ex.sampled_indices = sample_frame_indices(scene.num_frames, scene.native_fps, sampling);
        for (int idx : ex.sampled_indices) {
            ex.sampled_frames.push_back(frames[static_cast<std::size_t>(idx)]);
        }
        ex.prompt_text = compose(qa.question, *qa.answer).text;
        ex.target = target_from_track(qa.gt_tracks.front(), ex.sampled_indices, scene.width,
                                      scene.height);
        examples.push_back(std::move(ex));
        prompts.push_back(compose(qa.question, *qa.answer).text);
    }

    GrounderConfig cfg = tiny_config();
    cfg.model_dim = 16;
    cfg.heads = 2;
    cfg.ffn_dim = 32;
    cfg.conv1_channels = 6;
    cfg.conv2_channels = 8;
    cfg.vocab = TokenVocab::from_corpus(prompts);

    GrounderTrainConfig train;
    train.epochs = 4;
    train.learning_rate = 1e-3;
    train.seed = 3;

    SUBCASE("epochs=0 returns the initialized state") {
        GrounderTrainConfig zero = train;
        zero.epochs = 0;
        const TrainedGrounder out = train_grounder(examples, cfg, zero, true);
        CHECK(out.state.loss_history.empty());
        CHECK(out.ema.has_value());
        CHECK(out.ema->step_count == 0);
    }

    SUBCASE("a seeded run reduces the loss") {
        const TrainedGrounder out = train_grounder(examples, cfg, train, true);
        REQUIRE(out.state.loss_history.size() == 4);
        CHECK(out.state.loss_history.back() < out.state.loss_history.front());
        REQUIRE(out.ema.has_value());
        CHECK(out.ema->step_count == out.state.step);
        CHECK(out.ema->average.size() == out.state.params.size());
    }

    SUBCASE("training is deterministic in the seed") {
        const TrainedGrounder a = train_grounder(examples, cfg, train, false);
        const TrainedGrounder b = train_grounder(examples, cfg, train, false);
        CHECK(a.state.params.data() == b.state.params.data());
        CHECK_FALSE(a.ema.has_value());
    }

    SUBCASE("empty training sets are rejected") {
        CHECK_THROWS_AS(train_grounder({}, cfg, train, false), Error);
    }

    SUBCASE("overfitting a single sample localizes it") {
        GrounderTrainConfig overfit = train;
        overfit.epochs = 200; // one sample, so one step per epoch
        overfit.learning_rate = 8e-3;
        const std::vector<GrounderExample> one{examples.front()};
        const TrainedGrounder out = train_grounder(one, cfg, overfit, false);

        const Prompt prompt{one[0].prompt_text, "q", "a", AnswerSource::Oracle};
        const SparseTubeletPrediction pred =
            predict_tubelet(one[0].sampled_frames, one[0].sampled_indices, prompt, out.state);
        double iou_sum = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < pred.boxes.size(); ++i) {
            if (!one[0].target.boxes[i].has_value()) {
                continue;
            }
            const auto& g = *one[0].target.boxes[i];
            const BoundingBox pb = denormalize_box(pred.boxes[i], 32, 32);
            const BoundingBox gb = denormalize_box(g, 32, 32);
            iou_sum += iou(pb, gb);
            ++n;
        }
        REQUIRE(n > 0);
        CHECK(iou_sum / n >= 0.9);
    }
}

TEST_CASE("infer_full composes the stages and tags failures") {
    const SceneParams params = [] {
        SceneParams p;
        p.canvas_width = 32;
        p.canvas_height = 32;
        p.min_frames = 8;
        p.max_frames = 10;
        p.min_objects = 1;
        p.max_objects = 1;
        return p;
    }();
    const SceneSpec scene = generate_scene(params, 9);
    const auto frames = render_video(scene);
    QASample sample = derive_qa(scene, "vid9").front();

    GrounderConfig cfg = tiny_config();
    cfg.vocab = TokenVocab::from_corpus({compose(sample.question, *sample.answer).text});
    const GrounderState state = build_grounder(cfg, 4);

    InferStages stages;
    stages.grounder = &state;
    const FrameProvider provider = [&frames](int idx) {
        return frames[static_cast<std::size_t>(idx)];
    };
    SamplingConfig sampling;

    SUBCASE("oracle answers produce a dense track covering every frame") {
        InferOptions options;
        const InferResult r = infer_full(sample, provider, stages, options, sampling);
        CHECK(static_cast<int>(r.dense.boxes.size()) == scene.num_frames);
        CHECK(r.prompt_text == compose(sample.question, *sample.answer).text);
        REQUIRE(r.answer.has_value());
        CHECK(r.answer->source == AnswerSource::Oracle);
        const auto violations = validate_tubelet(r.dense, sample.video);
        CHECK(violations.empty());
    }

    SUBCASE("oracle answers on answerless samples fail in the vqa stage") {
        sample.answer.reset();
        InferOptions options;
        try {
            infer_full(sample, provider, stages, options, sampling);
            FAIL("expected an error");
        } catch (const Error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("[vqa]") != std::string::npos);
            CHECK(msg.find("answers unavailable") != std::string::npos);
        }
    }

    SUBCASE("question-only prompts skip stage 1") {
        InferOptions options;
        options.include_answer = false;
        sample.answer.reset(); // must still succeed
        const InferResult r = infer_full(sample, provider, stages, options, sampling);
        CHECK(r.prompt_text == sample.question);
        CHECK_FALSE(r.answer.has_value());
    }

    SUBCASE("model answers require a vqa model") {
        InferOptions options;
        options.answer_source = AnswerSource::Model;
        CHECK_THROWS_AS(infer_full(sample, provider, stages, options, sampling), Error);
    }
}

TEST_CASE("stage-2 behavior depends only on the prompt text") {
    // Permuting the stage-1 answer vocabulary cannot change grounding: the
    // stages couple only through the composed prompt string.
    const GrounderState state = build_grounder(tiny_config(), 12);
    const GrounderExample ex = tiny_example(2);
    const Prompt via_a = compose("track the red square that appears", "red square");
    Prompt via_b = via_a;
    via_b.answer_source = AnswerSource::Model; // different provenance, same text

    const auto pa = predict_tubelet(ex.sampled_frames, ex.sampled_indices, via_a, state);
    const auto pb = predict_tubelet(ex.sampled_frames, ex.sampled_indices, via_b, state);
    CHECK(pa.boxes == pb.boxes);
    CHECK(pa.confidences == pb.confidences);
}

TEST_CASE("normalize and denormalize boxes are mutually consistent") {
    const BoundingBox b{4.0, 6.0, 20.0, 26.0};
    const auto n = normalize_box(b, 32, 32);
    CHECK(n[0] == doctest::Approx(0.375));
    CHECK(n[1] == doctest::Approx(0.5));
    CHECK(n[2] == doctest::Approx(0.5));
    CHECK(n[3] == doctest::Approx(0.625));
    const BoundingBox back = denormalize_box(n, 32, 32);
    CHECK(back.x1 == doctest::Approx(b.x1).epsilon(1e-9));
    CHECK(back.y2 == doctest::Approx(b.y2).epsilon(1e-9));

    // Out-of-canvas centers clamp to a valid box.
    const BoundingBox clamped = denormalize_box({0.01, 0.01, 0.5, 0.5}, 32, 32);
    CHECK(clamped.valid());
    CHECK(clamped.x1 >= 0.0);
    CHECK(clamped.y1 >= 0.0);
}
