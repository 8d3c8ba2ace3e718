#include "gvqa/nn/tape.hpp"

#include <cmath>
#include <utility>

#include "gvqa/error.hpp"

namespace gvqa::nn {

namespace {

Mat transposed(const Mat& a) {
    Mat t(a.cols, a.rows);
    for (int r = 0; r < a.rows; ++r) {
        for (int c = 0; c < a.cols; ++c) {
            t.at(c, r) = a.at(r, c);
        }
    }
    return t;
}

void add_into(Mat& dst, const Mat& src) {
    for (std::size_t i = 0; i < dst.v.size(); ++i) {
        dst.v[i] += src.v[i];
    }
}

} // namespace

Mat raw_matmul(const Mat& a, const Mat& b, bool transpose_a, bool transpose_b) {
    Mat lhs_store;
    Mat rhs_store;
    if (transpose_a) {
        lhs_store = transposed(a);
    }
    if (transpose_b) {
        rhs_store = transposed(b);
    }
    const Mat& A = transpose_a ? lhs_store : a;
    const Mat& B = transpose_b ? rhs_store : b;
    require(A.cols == B.rows, "matmul: inner dimensions mismatch (", A.rows, "x", A.cols, " vs ",
            B.rows, "x", B.cols, ")");
    Mat out(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i) {
        for (int k = 0; k < A.cols; ++k) {
            const double aik = A.at(i, k);
            if (aik == 0.0) {
                continue;
            }
            const double* brow = &B.v[static_cast<std::size_t>(k) * B.cols];
            double* orow = &out.v[static_cast<std::size_t>(i) * out.cols];
            for (int j = 0; j < B.cols; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

Var Tape::push(Mat val, std::function<void(Tape&)> back) {
    nodes_.push_back(Node{std::move(val), Mat{}, std::move(back)});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Mat m) {
    return push(std::move(m), nullptr);
}

Var Tape::matmul(Var a, Var b, bool transpose_a, bool transpose_b) {
    Mat out = raw_matmul(value(a), value(b), transpose_a, transpose_b);
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, b, self, transpose_a, transpose_b](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& av = t.value(a);
        const Mat& bv = t.value(b);
        Mat da = transpose_a ? raw_matmul(bv, g, transpose_b, true)
                             : raw_matmul(g, bv, false, !transpose_b);
        Mat db = transpose_b ? raw_matmul(g, av, true, transpose_a)
                             : raw_matmul(av, g, !transpose_a, false);
        add_into(t.grad_ref(a), da);
        add_into(t.grad_ref(b), db);
    });
}

Var Tape::add(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    require(av.same_shape(bv), "add: shape mismatch");
    Mat out = av;
    add_into(out, bv);
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, b, self](Tape& t) {
        add_into(t.grad_ref(a), t.grad(self));
        add_into(t.grad_ref(b), t.grad(self));
    });
}

Var Tape::sub(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    require(av.same_shape(bv), "sub: shape mismatch");
    Mat out = av;
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        out.v[i] -= bv.v[i];
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, b, self](Tape& t) {
        const Mat& g = t.grad(self);
        add_into(t.grad_ref(a), g);
        Mat& gb = t.grad_ref(b);
        for (std::size_t i = 0; i < gb.v.size(); ++i) {
            gb.v[i] -= g.v[i];
        }
    });
}

Var Tape::mul(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    require(av.same_shape(bv), "mul: shape mismatch");
    Mat out = av;
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        out.v[i] *= bv.v[i];
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, b, self](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& av2 = t.value(a);
        const Mat& bv2 = t.value(b);
        Mat& ga = t.grad_ref(a);
        Mat& gb = t.grad_ref(b);
        for (std::size_t i = 0; i < g.v.size(); ++i) {
            ga.v[i] += g.v[i] * bv2.v[i];
            gb.v[i] += g.v[i] * av2.v[i];
        }
    });
}

Var Tape::div(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    require(av.same_shape(bv), "div: shape mismatch");
    Mat out = av;
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        out.v[i] /= bv.v[i];
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, b, self](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& av2 = t.value(a);
        const Mat& bv2 = t.value(b);
        Mat& ga = t.grad_ref(a);
        Mat& gb = t.grad_ref(b);
        for (std::size_t i = 0; i < g.v.size(); ++i) {
            const double inv = 1.0 / bv2.v[i];
            ga.v[i] += g.v[i] * inv;
            gb.v[i] -= g.v[i] * av2.v[i] * inv * inv;
        }
    });
}

Var Tape::minimum(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    require(av.same_shape(bv), "minimum: shape mismatch");
    Mat out = av;
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        out.v[i] = std::min(av.v[i], bv.v[i]);
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, b, self](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& av2 = t.value(a);
        const Mat& bv2 = t.value(b);
        Mat& ga = t.grad_ref(a);
        Mat& gb = t.grad_ref(b);
        for (std::size_t i = 0; i < g.v.size(); ++i) {
            if (av2.v[i] <= bv2.v[i]) {
                ga.v[i] += g.v[i];
            } else {
                gb.v[i] += g.v[i];
            }
        }
    });
}

Var Tape::maximum(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    require(av.same_shape(bv), "maximum: shape mismatch");
    Mat out = av;
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        out.v[i] = std::max(av.v[i], bv.v[i]);
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, b, self](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& av2 = t.value(a);
        const Mat& bv2 = t.value(b);
        Mat& ga = t.grad_ref(a);
        Mat& gb = t.grad_ref(b);
        for (std::size_t i = 0; i < g.v.size(); ++i) {
            if (av2.v[i] >= bv2.v[i]) {
                ga.v[i] += g.v[i];
            } else {
                gb.v[i] += g.v[i];
            }
        }
    });
}

Var Tape::add_row(Var a, Var row) {
    const Mat& av = value(a);
    const Mat& rv = value(row);
    require(rv.rows == 1 && rv.cols == av.cols, "add_row: row must be [1, cols]");
    Mat out = av;
    for (int r = 0; r < out.rows; ++r) {
        for (int c = 0; c < out.cols; ++c) {
            out.at(r, c) += rv.at(0, c);
        }
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, row, self](Tape& t) {
        const Mat& g = t.grad(self);
        add_into(t.grad_ref(a), g);
        Mat& gr = t.grad_ref(row);
        for (int r = 0; r < g.rows; ++r) {
            for (int c = 0; c < g.cols; ++c) {
                gr.at(0, c) += g.at(r, c);
            }
        }
    });
}

Var Tape::scale(Var a, double k) {
    Mat out = value(a);
    for (double& x : out.v) {
        x *= k;
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, k, self](Tape& t) {
        const Mat& g = t.grad(self);
        Mat& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < ga.v.size(); ++i) {
            ga.v[i] += g.v[i] * k;
        }
    });
}

Var Tape::add_const(Var a, double k) {
    Mat out = value(a);
    for (double& x : out.v) {
        x += k;
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, self](Tape& t) { add_into(t.grad_ref(a), t.grad(self)); });
}

Var Tape::relu(Var a) {
    Mat out = value(a);
    for (double& x : out.v) {
        x = x > 0.0 ? x : 0.0;
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, self](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& av = t.value(a);
        Mat& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < ga.v.size(); ++i) {
            if (av.v[i] > 0.0) {
                ga.v[i] += g.v[i];
            }
        }
    });
}

Var Tape::sigmoid(Var a) {
    Mat out = value(a);
    for (double& x : out.v) {
        x = 1.0 / (1.0 + std::exp(-x));
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, self](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& y = t.value(self);
        Mat& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < ga.v.size(); ++i) {
            ga.v[i] += g.v[i] * y.v[i] * (1.0 - y.v[i]);
        }
    });
}

Var Tape::abs(Var a) {
    Mat out = value(a);
    for (double& x : out.v) {
        x = std::fabs(x);
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, self](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& av = t.value(a);
        Mat& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < ga.v.size(); ++i) {
            const double s = av.v[i] > 0.0 ? 1.0 : (av.v[i] < 0.0 ? -1.0 : 0.0);
            ga.v[i] += g.v[i] * s;
        }
    });
}

Var Tape::log(Var a) {
    Mat out = value(a);
    for (double& x : out.v) {
        x = std::log(x);
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, self](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& av = t.value(a);
        Mat& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < ga.v.size(); ++i) {
            ga.v[i] += g.v[i] / av.v[i];
        }
    });
}

Var Tape::clamp(Var a, double lo, double hi) {
    Mat out = value(a);
    for (double& x : out.v) {
        x = x < lo ? lo : (x > hi ? hi : x);
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, lo, hi, self](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& av = t.value(a);
        Mat& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < ga.v.size(); ++i) {
            if (av.v[i] >= lo && av.v[i] <= hi) {
                ga.v[i] += g.v[i];
            }
        }
    });
}

Var Tape::softmax_rows(Var a) {
    Mat out = value(a);
    for (int r = 0; r < out.rows; ++r) {
        double mx = out.at(r, 0);
        for (int c = 1; c < out.cols; ++c) {
            mx = std::max(mx, out.at(r, c));
        }
        double denom = 0.0;
        for (int c = 0; c < out.cols; ++c) {
            out.at(r, c) = std::exp(out.at(r, c) - mx);
            denom += out.at(r, c);
        }
        for (int c = 0; c < out.cols; ++c) {
            out.at(r, c) /= denom;
        }
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, self](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& y = t.value(self);
        Mat& ga = t.grad_ref(a);
        for (int r = 0; r < g.rows; ++r) {
            double dot = 0.0;
            for (int c = 0; c < g.cols; ++c) {
                dot += g.at(r, c) * y.at(r, c);
            }
            for (int c = 0; c < g.cols; ++c) {
                ga.at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
            }
        }
    });
}

Var Tape::layer_norm(Var a, Var gain, Var bias, double eps) {
    const Mat& av = value(a);
    const Mat& gv = value(gain);
    const Mat& bv = value(bias);
    require(gv.rows == 1 && gv.cols == av.cols && bv.rows == 1 && bv.cols == av.cols,
            "layer_norm: gain/bias must be [1, cols]");
    Mat out(av.rows, av.cols);
    for (int r = 0; r < av.rows; ++r) {
        double mean = 0.0;
        for (int c = 0; c < av.cols; ++c) {
            mean += av.at(r, c);
        }
        mean /= av.cols;
        double var = 0.0;
        for (int c = 0; c < av.cols; ++c) {
            const double d = av.at(r, c) - mean;
            var += d * d;
        }
        var /= av.cols;
        const double inv = 1.0 / std::sqrt(var + eps);
        for (int c = 0; c < av.cols; ++c) {
            out.at(r, c) = (av.at(r, c) - mean) * inv * gv.at(0, c) + bv.at(0, c);
        }
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, gain, bias, eps, self](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& av2 = t.value(a);
        const Mat& gv2 = t.value(gain);
        Mat& ga = t.grad_ref(a);
        Mat& gg = t.grad_ref(gain);
        Mat& gb = t.grad_ref(bias);
        const int n = av2.cols;
        for (int r = 0; r < av2.rows; ++r) {
            double mean = 0.0;
            for (int c = 0; c < n; ++c) {
                mean += av2.at(r, c);
            }
            mean /= n;
            double var = 0.0;
            for (int c = 0; c < n; ++c) {
                const double d = av2.at(r, c) - mean;
                var += d * d;
            }
            var /= n;
            const double inv = 1.0 / std::sqrt(var + eps);

            double sum_dxhat = 0.0;
            double sum_dxhat_xhat = 0.0;
            for (int c = 0; c < n; ++c) {
                const double xhat = (av2.at(r, c) - mean) * inv;
                const double dxhat = g.at(r, c) * gv2.at(0, c);
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * xhat;
                gg.at(0, c) += g.at(r, c) * xhat;
                gb.at(0, c) += g.at(r, c);
            }
            for (int c = 0; c < n; ++c) {
                const double xhat = (av2.at(r, c) - mean) * inv;
                const double dxhat = g.at(r, c) * gv2.at(0, c);
                ga.at(r, c) += inv * (dxhat - sum_dxhat / n - xhat * sum_dxhat_xhat / n);
            }
        }
    });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat_rows: no parts");
    const int cols = value(parts[0]).cols;
    int rows = 0;
    for (Var p : parts) {
        require(value(p).cols == cols, "concat_rows: column mismatch");
        rows += value(p).rows;
    }
    Mat out(rows, cols);
    int r0 = 0;
    for (Var p : parts) {
        const Mat& pv = value(p);
        for (int r = 0; r < pv.rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                out.at(r0 + r, c) = pv.at(r, c);
            }
        }
        r0 += pv.rows;
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [parts, self](Tape& t) {
        const Mat& g = t.grad(self);
        int r0 = 0;
        for (Var p : parts) {
            Mat& gp = t.grad_ref(p);
            for (int r = 0; r < gp.rows; ++r) {
                for (int c = 0; c < gp.cols; ++c) {
                    gp.at(r, c) += g.at(r0 + r, c);
                }
            }
            r0 += gp.rows;
        }
    });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat_cols: no parts");
    const int rows = value(parts[0]).rows;
    int cols = 0;
    for (Var p : parts) {
        require(value(p).rows == rows, "concat_cols: row mismatch");
        cols += value(p).cols;
    }
    Mat out(rows, cols);
    int c0 = 0;
    for (Var p : parts) {
        const Mat& pv = value(p);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < pv.cols; ++c) {
                out.at(r, c0 + c) = pv.at(r, c);
            }
        }
        c0 += pv.cols;
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [parts, self](Tape& t) {
        const Mat& g = t.grad(self);
        int c0 = 0;
        for (Var p : parts) {
            Mat& gp = t.grad_ref(p);
            for (int r = 0; r < gp.rows; ++r) {
                for (int c = 0; c < gp.cols; ++c) {
                    gp.at(r, c) += g.at(r, c0 + c);
                }
            }
            c0 += gp.cols;
        }
    });
}

Var Tape::slice_cols(Var a, int c0, int c1) {
    const Mat& av = value(a);
    require(0 <= c0 && c0 < c1 && c1 <= av.cols, "slice_cols: bad range");
    Mat out(av.rows, c1 - c0);
    for (int r = 0; r < av.rows; ++r) {
        for (int c = c0; c < c1; ++c) {
            out.at(r, c - c0) = av.at(r, c);
        }
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, c0, self](Tape& t) {
        const Mat& g = t.grad(self);
        Mat& ga = t.grad_ref(a);
        for (int r = 0; r < g.rows; ++r) {
            for (int c = 0; c < g.cols; ++c) {
                ga.at(r, c0 + c) += g.at(r, c);
            }
        }
    });
}

Var Tape::gather_rows(Var table, std::vector<int> ids) {
    const Mat& tv = value(table);
    Mat out(static_cast<int>(ids.size()), tv.cols);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        require(ids[i] >= 0 && ids[i] < tv.rows, "gather_rows: id out of range");
        for (int c = 0; c < tv.cols; ++c) {
            out.at(static_cast<int>(i), c) = tv.at(ids[i], c);
        }
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [table, ids = std::move(ids), self](Tape& t) {
        const Mat& g = t.grad(self);
        Mat& gt = t.grad_ref(table);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            for (int c = 0; c < g.cols; ++c) {
                gt.at(ids[i], c) += g.at(static_cast<int>(i), c);
            }
        }
    });
}

Var Tape::mean_rows(Var a) {
    const Mat& av = value(a);
    Mat out(1, av.cols);
    for (int r = 0; r < av.rows; ++r) {
        for (int c = 0; c < av.cols; ++c) {
            out.at(0, c) += av.at(r, c);
        }
    }
    for (int c = 0; c < av.cols; ++c) {
        out.at(0, c) /= av.rows;
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, self](Tape& t) {
        const Mat& g = t.grad(self);
        Mat& ga = t.grad_ref(a);
        for (int r = 0; r < ga.rows; ++r) {
            for (int c = 0; c < ga.cols; ++c) {
                ga.at(r, c) += g.at(0, c) / ga.rows;
            }
        }
    });
}

Var Tape::sum(Var a) {
    const Mat& av = value(a);
    Mat out(1, 1);
    for (double x : av.v) {
        out.at(0, 0) += x;
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, self](Tape& t) {
        const double g = t.grad(self).at(0, 0);
        Mat& ga = t.grad_ref(a);
        for (double& x : ga.v) {
            x += g;
        }
    });
}

Var Tape::mean(Var a) {
    const auto n = static_cast<double>(value(a).size());
    return scale(sum(a), 1.0 / n);
}

Var Tape::im2col(Var a, int h, int w, int channels, int ksize, int stride, int pad) {
    const Mat& av = value(a);
    require(av.rows == h * w && av.cols == channels, "im2col: input must be [h*w, channels]");
    const int oh = (h + 2 * pad - ksize) / stride + 1;
    const int ow = (w + 2 * pad - ksize) / stride + 1;
    require(oh > 0 && ow > 0, "im2col: empty output");

    Mat out(oh * ow, ksize * ksize * channels);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const int orow = oy * ow + ox;
            for (int ky = 0; ky < ksize; ++ky) {
                const int y = oy * stride - pad + ky;
                if (y < 0 || y >= h) {
                    continue;
                }
                for (int kx = 0; kx < ksize; ++kx) {
                    const int x = ox * stride - pad + kx;
                    if (x < 0 || x >= w) {
                        continue;
                    }
                    const int irow = y * w + x;
                    const int ocol0 = (ky * ksize + kx) * channels;
                    for (int c = 0; c < channels; ++c) {
                        out.at(orow, ocol0 + c) = av.at(irow, c);
                    }
                }
            }
        }
    }
    Var self{static_cast<int>(nodes_.size())};
    return push(std::move(out), [a, h, w, channels, ksize, stride, pad, self](Tape& t) {
        const Mat& g = t.grad(self);
        Mat& ga = t.grad_ref(a);
        const int ow = (w + 2 * pad - ksize) / stride + 1;
        const int oh = (h + 2 * pad - ksize) / stride + 1;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const int orow = oy * ow + ox;
                for (int ky = 0; ky < ksize; ++ky) {
                    const int y = oy * stride - pad + ky;
                    if (y < 0 || y >= h) {
                        continue;
                    }
                    for (int kx = 0; kx < ksize; ++kx) {
                        const int x = ox * stride - pad + kx;
                        if (x < 0 || x >= w) {
                            continue;
                        }
                        const int irow = y * w + x;
                        const int ocol0 = (ky * ksize + kx) * channels;
                        for (int c = 0; c < channels; ++c) {
                            ga.at(irow, c) += g.at(orow, ocol0 + c);
                        }
                    }
                }
            }
        }
    });
}

void Tape::backward(Var scalar) {
    const Mat& sv = value(scalar);
    require(sv.rows == 1 && sv.cols == 1, "backward: loss must be a 1x1 value");
    for (Node& n : nodes_) {
        n.grad = Mat::zeros(n.val.rows, n.val.cols);
    }
    nodes_[scalar.id].grad.at(0, 0) = 1.0;
    for (int i = scalar.id; i >= 0; --i) {
        if (nodes_[i].back) {
            nodes_[i].back(*this);
        }
    }
}

} // namespace gvqa::nn
