#include <cmath>
#include <functional>

#include "doctest.h"

#include "gvqa/nn/params.hpp"
#include "gvqa/nn/tape.hpp"
#include "gvqa/rng.hpp"

using namespace gvqa;
using namespace gvqa::nn;

namespace {

Mat random_mat(Rng& rng, int r, int c, double lo = -1.0, double hi = 1.0) {
    Mat m(r, c);
    for (double& x : m.v) {
        x = rng.uniform(lo, hi);
    }
    return m;
}

// Central finite differences of a scalar graph against the tape gradients.
void check_gradients(const std::vector<Mat>& inputs,
                     const std::function<Var(Tape&, const std::vector<Var>&)>& build,
                     double h = 1e-6, double tol = 1e-5) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const Mat& m : inputs) {
        vars.push_back(tape.input(m));
    }
    Var loss = build(tape, vars);
    tape.backward(loss);

    for (std::size_t mi = 0; mi < inputs.size(); ++mi) {
        for (std::size_t k = 0; k < inputs[mi].v.size(); ++k) {
            const auto eval = [&](double delta) {
                std::vector<Mat> shifted = inputs;
                shifted[mi].v[k] += delta;
                Tape t2;
                std::vector<Var> vs;
                for (const Mat& m : shifted) {
                    vs.push_back(t2.input(m));
                }
                return t2.scalar_value(build(t2, vs));
            };
            const double fd = (eval(h) - eval(-h)) / (2.0 * h);
            const double an = tape.grad(vars[mi]).v[k];
            const double err = std::fabs(fd - an) / std::max(1.0, std::fabs(fd) + std::fabs(an));
            CHECK(err < tol);
        }
    }
}

} // namespace

TEST_CASE("matmul gradients, all transpose combinations") {
    Rng rng(1);
    for (bool ta : {false, true}) {
        for (bool tb : {false, true}) {
            const Mat a = ta ? random_mat(rng, 4, 3) : random_mat(rng, 3, 4);
            const Mat b = tb ? random_mat(rng, 5, 4) : random_mat(rng, 4, 5);
            check_gradients({a, b}, [ta, tb](Tape& t, const std::vector<Var>& v) {
                return t.sum(t.matmul(v[0], v[1], ta, tb));
            });
        }
    }
}

TEST_CASE("elementwise op gradients") {
    Rng rng(2);
    const Mat a = random_mat(rng, 3, 4, 0.2, 2.0);
    const Mat b = random_mat(rng, 3, 4, 0.3, 2.0);
    check_gradients({a, b}, [](Tape& t, const std::vector<Var>& v) {
        Var x = t.mul(v[0], v[1]);
        x = t.div(x, t.add_const(v[1], 1.0));
        x = t.add(x, t.sub(v[0], v[1]));
        x = t.add(x, t.minimum(v[0], v[1]));
        x = t.add(x, t.maximum(v[0], v[1]));
        return t.sum(x);
    });
}

TEST_CASE("activation gradients") {
    Rng rng(3);
    const Mat a = random_mat(rng, 2, 6);
    check_gradients({a}, [](Tape& t, const std::vector<Var>& v) {
        Var x = t.sigmoid(v[0]);
        x = t.add(x, t.relu(v[0]));
        x = t.add(x, t.abs(v[0]));
        return t.mean(x);
    });
}

TEST_CASE("log and clamp gradients away from the pin points") {
    Rng rng(4);
    const Mat a = random_mat(rng, 2, 5, 0.1, 0.9);
    check_gradients({a}, [](Tape& t, const std::vector<Var>& v) {
        return t.sum(t.log(t.clamp(v[0], 1e-3, 1.0 - 1e-3)));
    });
}

TEST_CASE("softmax gradients") {
    Rng rng(5);
    const Mat a = random_mat(rng, 3, 5);
    const Mat w = random_mat(rng, 3, 5);
    check_gradients({a, w}, [](Tape& t, const std::vector<Var>& v) {
        return t.sum(t.mul(t.softmax_rows(v[0]), v[1]));
    });
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(6);
    Tape t;
    Var s = t.softmax_rows(t.input(random_mat(rng, 4, 7, -5.0, 5.0)));
    const Mat& m = t.value(s);
    for (int r = 0; r < m.rows; ++r) {
        double sum = 0.0;
        for (int c = 0; c < m.cols; ++c) {
            sum += m.at(r, c);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("layer_norm gradients") {
    Rng rng(7);
    const Mat a = random_mat(rng, 3, 6);
    const Mat g = random_mat(rng, 1, 6, 0.5, 1.5);
    const Mat b = random_mat(rng, 1, 6);
    const Mat w = random_mat(rng, 3, 6);
    check_gradients({a, g, b, w}, [](Tape& t, const std::vector<Var>& v) {
        return t.sum(t.mul(t.layer_norm(v[0], v[1], v[2]), v[3]));
    });
}

TEST_CASE("shape op gradients") {
    Rng rng(8);
    const Mat a = random_mat(rng, 3, 4);
    const Mat b = random_mat(rng, 2, 4);
    const Mat c = random_mat(rng, 3, 2);
    check_gradients({a, b, c}, [](Tape& t, const std::vector<Var>& v) {
        Var rows = t.concat_rows({v[0], v[1]});   // [5, 4]
        Var cols = t.concat_cols({v[0], v[2]});   // [3, 6]
        Var s1 = t.sum(t.slice_cols(rows, 1, 3));
        Var s2 = t.sum(t.mean_rows(cols));
        return t.add(s1, s2);
    });
}

TEST_CASE("gather_rows gradients accumulate over repeated ids") {
    Rng rng(9);
    const Mat table = random_mat(rng, 5, 3);
    check_gradients({table}, [](Tape& t, const std::vector<Var>& v) {
        return t.sum(t.gather_rows(v[0], {0, 2, 2, 4}));
    });
}

TEST_CASE("im2col gradients") {
    Rng rng(10);
    const Mat img = random_mat(rng, 16, 2); // 4x4, 2 channels
    const Mat w = random_mat(rng, 18, 3);   // 3x3x2 -> 3
    check_gradients({img, w}, [](Tape& t, const std::vector<Var>& v) {
        Var col = t.im2col(v[0], 4, 4, 2, 3, 2, 1);
        return t.sum(t.matmul(col, v[1]));
    });
}

TEST_CASE("add_row broadcast gradients") {
    Rng rng(11);
    const Mat a = random_mat(rng, 4, 3);
    const Mat r = random_mat(rng, 1, 3);
    check_gradients({a, r}, [](Tape& t, const std::vector<Var>& v) {
        return t.sum(t.sigmoid(t.add_row(v[0], v[1])));
    });
}

TEST_CASE("adam converges on a quadratic") {
    std::vector<double> params{5.0, -3.0};
    Adam opt(2, 0.05);
    for (int i = 0; i < 2000; ++i) {
        const std::vector<double> grad{2.0 * (params[0] - 1.0), 2.0 * (params[1] + 2.0)};
        opt.step(params, grad);
    }
    CHECK(params[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(params[1] == doctest::Approx(-2.0).epsilon(1e-3));
    CHECK(opt.steps() == 2000);
}

TEST_CASE("param store initializes deterministically and round-trips matrices") {
    ParamStore p;
    const int w = p.add("w", 3, 4);
    const int b = p.add("b", 1, 4, Init::Zero);
    const int g = p.add("g", 1, 4, Init::One);
    p.init_values(123);

    ParamStore q;
    q.add("w", 3, 4);
    q.add("b", 1, 4, Init::Zero);
    q.add("g", 1, 4, Init::One);
    q.init_values(123);
    CHECK(p.data() == q.data());

    const Mat wm = p.matrix(w);
    CHECK(wm.rows == 3);
    for (double x : p.matrix(b).v) {
        CHECK(x == 0.0);
    }
    for (double x : p.matrix(g).v) {
        CHECK(x == 1.0);
    }
    Mat wm2 = wm;
    wm2.at(0, 0) = 9.0;
    p.set_matrix(w, wm2);
    CHECK(p.matrix(w).at(0, 0) == 9.0);
}
