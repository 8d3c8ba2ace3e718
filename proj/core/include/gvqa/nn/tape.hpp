#pragma once

#include <functional>
#include <vector>

#include "gvqa/nn/mat.hpp"

namespace gvqa::nn {

struct Var {
    int id{-1};
    [[nodiscard]] bool ok() const { return id >= 0; }
};

// Reverse-mode autodiff over matrices. Ops append nodes; backward() walks the
// node list in reverse creation order, which is a valid topological order
// because ops only consume already-created vars.
class Tape {
public:
    Var input(Mat m);

    Var matmul(Var a, Var b, bool transpose_a = false, bool transpose_b = false);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var minimum(Var a, Var b);
    Var maximum(Var a, Var b);
    Var add_row(Var a, Var row); // row is [1, c], broadcast over rows of a
    Var scale(Var a, double k);
    Var add_const(Var a, double k);
    Var relu(Var a);
    Var sigmoid(Var a);
    Var abs(Var a);
    Var log(Var a);
    Var clamp(Var a, double lo, double hi);
    Var softmax_rows(Var a);
    Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5);
    Var concat_rows(const std::vector<Var>& parts);
    Var concat_cols(const std::vector<Var>& parts);
    Var slice_cols(Var a, int c0, int c1);
    Var gather_rows(Var table, std::vector<int> ids);
    Var mean_rows(Var a); // [r, c] -> [1, c]
    Var sum(Var a);       // -> [1, 1]
    Var mean(Var a);      // -> [1, 1]

    // a laid out [h*w, channels]; result [oh*ow, k*k*channels] with zero pad.
    Var im2col(Var a, int h, int w, int channels, int ksize, int stride, int pad);

    void backward(Var scalar);

    [[nodiscard]] const Mat& value(Var x) const { return nodes_[x.id].val; }
    [[nodiscard]] const Mat& grad(Var x) const { return nodes_[x.id].grad; }
    [[nodiscard]] double scalar_value(Var x) const { return nodes_[x.id].val.at(0, 0); }
    [[nodiscard]] int node_count() const { return static_cast<int>(nodes_.size()); }

private:
    struct Node {
        Mat val;
        Mat grad;
        std::function<void(Tape&)> back; // empty for leaves
    };

    Var push(Mat val, std::function<void(Tape&)> back);
    Mat& grad_ref(Var x) { return nodes_[x.id].grad; }

    std::vector<Node> nodes_;
};

// Plain matrix product with optional transposes, shared by ops and tests.
Mat raw_matmul(const Mat& a, const Mat& b, bool transpose_a = false, bool transpose_b = false);

} // namespace gvqa::nn
