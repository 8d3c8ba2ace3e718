#pragma once

#include <cassert>
#include <vector>

namespace gvqa::nn {

// Dense row-major matrix of doubles. Everything numeric in the models runs in
// double so gradient checks and the EMA closed form hold at tight tolerances.
struct Mat {
    int rows{0};
    int cols{0};
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

    static Mat zeros(int r, int c) { return Mat(r, c); }

    [[nodiscard]] double at(int r, int c) const {
        return v[static_cast<std::size_t>(r) * cols + c];
    }
    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }

    [[nodiscard]] std::size_t size() const { return v.size(); }
    [[nodiscard]] bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

} // namespace gvqa::nn
