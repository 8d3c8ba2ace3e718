#include "doctest.h"

#include "gvqa/box.hpp"
#include "gvqa/error.hpp"
#include "gvqa/rng.hpp"

using namespace gvqa;

TEST_CASE("iou of identical boxes is 1") {
    const BoundingBox b{0, 0, 10, 10};
    CHECK(iou(b, b) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("iou of disjoint boxes is 0") {
    CHECK(iou({0, 0, 10, 10}, {20, 20, 30, 30}) == 0.0);
}

TEST_CASE("iou of half-overlapping boxes") {
    // Independent area arithmetic: intersection 5x10 = 50, union 100+100-50 = 150.
    const double inter = 50.0;
    const double uni = 150.0;
    CHECK(iou({0, 0, 10, 10}, {5, 0, 15, 10}) == doctest::Approx(inter / uni).epsilon(1e-12));
    CHECK(iou({0, 0, 10, 10}, {5, 0, 15, 10}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("iou rejects degenerate boxes") {
    CHECK_THROWS_AS(iou({5, 5, 5, 9}, {0, 0, 10, 10}), Error);
    CHECK_THROWS_AS(iou({0, 0, 10, 10}, {3, 7, 9, 7}), Error);
}

TEST_CASE("iou properties on random boxes") {
    Rng rng(7);
    for (int k = 0; k < 500; ++k) {
        const auto rand_box = [&rng]() {
            const double x1 = rng.uniform(0, 90);
            const double y1 = rng.uniform(0, 90);
            return BoundingBox{x1, y1, x1 + rng.uniform(0.5, 30), y1 + rng.uniform(0.5, 30)};
        };
        const BoundingBox a = rand_box();
        const BoundingBox b = rand_box();
        const double ab = iou(a, b);
        CHECK(ab == iou(b, a));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK(iou(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("generalized iou matches the closed form on disjoint corners") {
    // Two unit boxes at opposite corners of their 2x2 enclosure: IoU 0,
    // hull 4, union 2, so GIoU = -(4-2)/4 = -0.5.
    CHECK(generalized_iou({0, 0, 1, 1}, {1, 1, 2, 2}) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(generalized_iou({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0).epsilon(1e-12));
}
