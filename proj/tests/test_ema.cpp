#include <cmath>

#include "doctest.h"
#include "test_util.hpp"

#include "gvqa/checkpoint.hpp"
#include "gvqa/ema.hpp"
#include "gvqa/error.hpp"
#include "gvqa/rng.hpp"

using namespace gvqa;
using namespace gvqa::testsupport;

TEST_CASE("ema_init copies the initial parameters") {
    const EMAState s = ema_init({1.0, 2.0}, 0.999);
    CHECK(s.average == std::vector<double>{1.0, 2.0});
    CHECK(s.step_count == 0);
    CHECK(s.beta == 0.999);
}

TEST_CASE("ema_init rejects beta outside [0,1]") {
    CHECK_THROWS_AS(ema_init({1.0}, 1.5), Error);
    CHECK_THROWS_AS(ema_init({1.0}, -0.1), Error);
}

TEST_CASE("ema_init preserves shape") {
    const std::vector<double> theta(17, 0.25);
    CHECK(ema_init(theta, 0.5).average.size() == 17);
}

TEST_CASE("beta zero tracks the current parameters exactly") {
    EMAState s = ema_init({0.0, 0.0}, 0.0);
    ema_update(s, {3.0, -1.0});
    CHECK(s.average == std::vector<double>{3.0, -1.0});
    ema_update(s, {7.0, 2.0});
    CHECK(s.average == std::vector<double>{7.0, 2.0});
    CHECK(s.step_count == 2);
}

TEST_CASE("one decay step with beta 0.999") {
    EMAState s = ema_init({0.0}, 0.999);
    ema_update(s, {1.0});
    CHECK(s.average[0] == doctest::Approx(0.001).epsilon(1e-12));
}

TEST_CASE("a random sequence matches the closed form") {
    Rng rng(99);
    for (double beta : {0.0, 0.5, 0.999, 1.0}) {
        const int n = 4;
        std::vector<double> theta0(n);
        for (double& x : theta0) {
            x = rng.uniform(-1, 1);
        }
        EMAState s = ema_init(theta0, beta);
        std::vector<std::vector<double>> history;
        const int T = 200;
        for (int t = 0; t < T; ++t) {
            std::vector<double> theta(n);
            for (double& x : theta) {
                x = rng.uniform(-1, 1);
            }
            history.push_back(theta);
            ema_update(s, theta);
        }
        // nu_T = beta^T nu_0 + (1-beta) sum_i beta^(T-i) theta_i
        for (int k = 0; k < n; ++k) {
            double expected = std::pow(beta, T) * theta0[static_cast<std::size_t>(k)];
            for (int i = 1; i <= T; ++i) {
                expected += (1.0 - beta) * std::pow(beta, T - i) *
                            history[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)];
            }
            CHECK(std::fabs(s.average[static_cast<std::size_t>(k)] - expected) < 1e-9);
        }
    }
}

TEST_CASE("each coordinate stays within the convex hull of its inputs") {
    Rng rng(123);
    const int n = 3;
    std::vector<double> theta0{0.5, -0.5, 0.0};
    EMAState s = ema_init(theta0, 0.9);
    std::vector<double> lo = theta0;
    std::vector<double> hi = theta0;
    for (int t = 0; t < 100; ++t) {
        std::vector<double> theta(n);
        for (double& x : theta) {
            x = rng.uniform(-2, 2);
        }
        for (int k = 0; k < n; ++k) {
            lo[static_cast<std::size_t>(k)] = std::min(lo[static_cast<std::size_t>(k)],
                                                       theta[static_cast<std::size_t>(k)]);
            hi[static_cast<std::size_t>(k)] = std::max(hi[static_cast<std::size_t>(k)],
                                                       theta[static_cast<std::size_t>(k)]);
        }
        ema_update(s, theta);
        for (int k = 0; k < n; ++k) {
            CHECK(s.average[static_cast<std::size_t>(k)] >=
                  lo[static_cast<std::size_t>(k)] - 1e-12);
            CHECK(s.average[static_cast<std::size_t>(k)] <=
                  hi[static_cast<std::size_t>(k)] + 1e-12);
        }
    }
}

TEST_CASE("with constant parameters the average converges monotonically") {
    EMAState s = ema_init({0.0}, 0.9);
    const std::vector<double> theta{1.0};
    double prev_gap = 1.0;
    for (int t = 0; t < 50; ++t) {
        ema_update(s, theta);
        const double gap = std::fabs(s.average[0] - 1.0);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
}

TEST_CASE("ema_update rejects shape mismatches and non-finite input") {
    EMAState s = ema_init({1.0, 2.0}, 0.5);
    CHECK_THROWS_AS(ema_update(s, {1.0}), Error);
    CHECK_THROWS_AS(ema_update(s, {1.0, std::nan("")}), Error);
}

TEST_CASE("ema_extract returns an independent copy") {
    EMAState s = ema_init({1.0, 2.0}, 0.0);
    std::vector<double> out = ema_extract(s);
    out[0] = 99.0;
    CHECK(s.average[0] == 1.0);
    ema_update(s, {4.0, 5.0});
    CHECK(ema_extract(s) == std::vector<double>{4.0, 5.0});
}

TEST_CASE("ema state round-trips through the checkpoint format") {
    TempDir tmp("ema");
    EMAState s = ema_init({0.125, -3.5, 0.75}, 0.999); // float-exact values
    ema_update(s, {0.25, -3.0, 1.0});

    Checkpoint ckpt;
    ckpt.kind = CheckpointKind::GrounderEma;
    ckpt.config_hash = 42;
    ckpt.step = s.step_count;
    ckpt.params = ema_extract(s);
    const auto p1 = tmp.path() / "ema.ckpt";
    const auto p2 = tmp.path() / "ema2.ckpt";
    save_checkpoint(p1, ckpt);

    const Checkpoint back = load_checkpoint(p1);
    CHECK(back.kind == CheckpointKind::GrounderEma);
    CHECK(back.step == s.step_count);
    // Values are stored as float32; a second save must be bit-identical.
    save_checkpoint(p2, back);
    CHECK(file_fingerprint(p1) == file_fingerprint(p2));
    for (std::size_t i = 0; i < back.params.size(); ++i) {
        CHECK(static_cast<float>(back.params[i]) == static_cast<float>(ckpt.params[i]));
    }
}
