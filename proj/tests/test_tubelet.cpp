#include "doctest.h"

#include "gvqa/error.hpp"
#include "gvqa/rng.hpp"
#include "gvqa/tubelet.hpp"

using namespace gvqa;

namespace {

Tubelet sparse_track_at(const std::vector<int>& indices) {
    Tubelet t;
    t.object_id = "obj";
    for (int idx : indices) {
        t.boxes[idx] = BoundingBox{0, 0, 1.0 + idx, 1.0 + idx};
    }
    return t;
}

} // namespace

TEST_CASE("sampling at 30 fps to 5 fps strides by 6") {
    SamplingConfig cfg; // target 5, cap 200
    CHECK(sample_frame_indices(30, 30.0, cfg) == std::vector<int>{0, 6, 12, 18, 24});
}

TEST_CASE("sampling a 1000-frame video yields 167 indices") {
    SamplingConfig cfg;
    const auto idx = sample_frame_indices(1000, 30.0, cfg);
    CHECK(idx.size() == 167);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        CHECK(idx[i] == static_cast<int>(i) * 6);
    }
}

TEST_CASE("single-frame video keeps frame 0") {
    SamplingConfig cfg;
    CHECK(sample_frame_indices(1, 30.0, cfg) == std::vector<int>{0});
}

TEST_CASE("sampling over the cap subsamples uniformly keeping endpoints") {
    SamplingConfig cfg;
    const auto idx = sample_frame_indices(1500, 30.0, cfg);
    CHECK(idx.size() == 200);
    CHECK(idx.front() == 0);
    CHECK(idx.back() == 249 * 6);
    for (std::size_t i = 1; i < idx.size(); ++i) {
        CHECK(idx[i] > idx[i - 1]);
    }
}

TEST_CASE("sampling rejects empty videos") {
    SamplingConfig cfg;
    CHECK_THROWS_AS(sample_frame_indices(0, 30.0, cfg), Error);
}

TEST_CASE("expansion duplicates one box across the whole short video") {
    SamplingConfig cfg;
    const Tubelet dense = expand_predictions(sparse_track_at({0}), cfg, 6, 30.0);
    CHECK(dense.boxes.size() == 6);
    for (int f = 0; f < 6; ++f) {
        CHECK(dense.boxes.at(f) == dense.boxes.at(0));
    }
}

TEST_CASE("expansion truncates past the final frame") {
    SamplingConfig cfg;
    std::vector<int> indices;
    for (int f = 0; f < 1000; f += 6) {
        indices.push_back(f);
    }
    const Tubelet dense = expand_predictions(sparse_track_at(indices), cfg, 1000, 30.0);
    CHECK(dense.boxes.size() == 1000); // 167*6 = 1002 generated, 2 dropped
    for (int f = 0; f < 1000; ++f) {
        CHECK(dense.boxes.count(f) == 1);
    }
}

TEST_CASE("expansion with factor 1 is the identity on sampled frames") {
    SamplingConfig cfg;
    cfg.target_fps = 30.0;
    cfg.duplication_factor = 1;
    const Tubelet sparse = sparse_track_at({0, 1, 2, 3, 4});
    const Tubelet dense = expand_predictions(sparse, cfg, 5, 30.0);
    CHECK(dense.boxes == sparse.boxes);
}

TEST_CASE("expansion rejects sparse tracks off the sampling grid") {
    SamplingConfig cfg;
    CHECK_THROWS_AS(expand_predictions(sparse_track_at({0, 5}), cfg, 30, 30.0), Error);
    CHECK_THROWS_AS(expand_predictions(sparse_track_at({0, 6}), cfg, 30, 30.0), Error);
}

TEST_CASE("sample then expand covers every frame exactly once") {
    SamplingConfig cfg;
    Rng rng(11);
    for (int k = 0; k < 40; ++k) {
        const int num_frames = rng.range(1, 1600);
        const auto indices = sample_frame_indices(num_frames, 30.0, cfg);
        CHECK(static_cast<int>(indices.size()) <= cfg.max_sampled_frames);
        CHECK(indices.front() == 0);
        const Tubelet dense = expand_predictions(sparse_track_at(indices), cfg, num_frames, 30.0);
        CHECK(static_cast<int>(dense.boxes.size()) == num_frames);
        int expected = 0;
        for (const auto& [frame, box] : dense.boxes) {
            (void)box;
            CHECK(frame == expected++);
        }
    }
}

TEST_CASE("validate_tubelet flags bad frames and boxes") {
    VideoMeta v;
    v.video_id = "v";
    v.num_frames = 10;
    v.native_fps = 30.0;
    v.width = 64;
    v.height = 64;

    Tubelet ok;
    ok.object_id = "a";
    ok.boxes[5] = BoundingBox{1, 1, 5, 5};
    CHECK(validate_tubelet(ok, v).empty());

    Tubelet out_of_range = ok;
    out_of_range.boxes[10] = BoundingBox{1, 1, 5, 5};
    const auto v1 = validate_tubelet(out_of_range, v);
    REQUIRE(v1.size() == 1);
    CHECK(v1[0].find("frame out of range") != std::string::npos);

    Tubelet degenerate = ok;
    degenerate.boxes[3] = BoundingBox{5, 5, 5, 9};
    const auto v2 = validate_tubelet(degenerate, v);
    REQUIRE(v2.size() == 1);
    CHECK(v2[0].find("degenerate") != std::string::npos);

    Tubelet outside = ok;
    outside.boxes[2] = BoundingBox{-1, 0, 5, 5};
    CHECK(validate_tubelet(outside, v).size() == 1);
}
