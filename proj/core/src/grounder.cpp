#include "gvqa/grounder.hpp"

#include <algorithm>
#include <cmath>

#include "gvqa/error.hpp"
#include "gvqa/rng.hpp"

namespace gvqa {

namespace {

using nn::Mat;
using nn::Tape;
using nn::Var;

constexpr int kConvKernel = 3;
constexpr int kConvStride = 2;
constexpr int kInputChannels = 5; // RGB + normalized x, y coordinate maps
constexpr double kBceEps = 1e-7;

Mat sinusoid_encoding(int n, int dim) {
    Mat pe(n, dim);
    for (int t = 0; t < n; ++t) {
        for (int i = 0; i < dim / 2; ++i) {
            const double angle =
                static_cast<double>(t) /
                std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(dim));
            pe.at(t, 2 * i) = std::sin(angle);
            pe.at(t, 2 * i + 1) = std::cos(angle);
        }
    }
    return pe;
}

// Average-pool the frame by `pool`, append coordinate channels.
Mat frame_to_mat(const Frame& fr, int pool) {
    const int h = fr.height / pool;
    const int w = fr.width / pool;
    require(h >= 1 && w >= 1, "grounder: frame smaller than input pool factor");
    Mat m(h * w, kInputChannels);
    const double inv = 1.0 / static_cast<double>(pool * pool);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc[3] = {0.0, 0.0, 0.0};
            for (int dy = 0; dy < pool; ++dy) {
                for (int dx = 0; dx < pool; ++dx) {
                    for (int c = 0; c < 3; ++c) {
                        acc[c] += fr.at(x * pool + dx, y * pool + dy, c);
                    }
                }
            }
            const int row = y * w + x;
            for (int c = 0; c < 3; ++c) {
                m.at(row, c) = acc[c] * inv;
            }
            m.at(row, 3) = w > 1 ? static_cast<double>(x) / (w - 1) : 0.5;
            m.at(row, 4) = h > 1 ? static_cast<double>(y) / (h - 1) : 0.5;
        }
    }
    return m;
}

struct LayerNames {
    std::string prefix;
    [[nodiscard]] std::string operator()(const char* suffix) const { return prefix + suffix; }
};

// Parameter registration; order defines the flat checkpoint layout.
void register_params(GrounderState& s) {
    const GrounderConfig& c = s.config;
    require(c.model_dim % c.heads == 0, "grounder: model_dim must be divisible by heads");
    require(c.vocab.size() >= 1, "grounder: empty prompt vocabulary");
    auto& p = s.params;

    p.add("text_embed", c.vocab.size(), c.text_embed_dim);
    p.add("text_proj_w", c.text_embed_dim, c.model_dim);
    p.add("text_proj_b", 1, c.model_dim, nn::Init::Zero);

    p.add("conv1_w", kConvKernel * kConvKernel * kInputChannels, c.conv1_channels);
    p.add("conv1_b", 1, c.conv1_channels, nn::Init::Zero);
    p.add("conv2_w", kConvKernel * kConvKernel * c.conv1_channels, c.conv2_channels);
    p.add("conv2_b", 1, c.conv2_channels, nn::Init::Zero);
    p.add("vis_proj_w", c.conv2_channels, c.model_dim);
    p.add("vis_proj_b", 1, c.model_dim, nn::Init::Zero);

    p.add("vis_seg", 1, c.model_dim, nn::Init::Zero);
    p.add("text_seg", 1, c.model_dim, nn::Init::Zero);

    for (int l = 0; l < c.encoder_layers; ++l) {
        LayerNames n{"enc" + std::to_string(l) + "_"};
        p.add(n("ln1_g"), 1, c.model_dim, nn::Init::One);
        p.add(n("ln1_b"), 1, c.model_dim, nn::Init::Zero);
        p.add(n("wq"), c.model_dim, c.model_dim);
        p.add(n("wk"), c.model_dim, c.model_dim);
        p.add(n("wv"), c.model_dim, c.model_dim);
        p.add(n("wo"), c.model_dim, c.model_dim);
        p.add(n("wo_b"), 1, c.model_dim, nn::Init::Zero);
        p.add(n("ln2_g"), 1, c.model_dim, nn::Init::One);
        p.add(n("ln2_b"), 1, c.model_dim, nn::Init::Zero);
        p.add(n("ffn1_w"), c.model_dim, c.ffn_dim);
        p.add(n("ffn1_b"), 1, c.ffn_dim, nn::Init::Zero);
        p.add(n("ffn2_w"), c.ffn_dim, c.model_dim);
        p.add(n("ffn2_b"), 1, c.model_dim, nn::Init::Zero);
    }
    p.add("enc_ln_g", 1, c.model_dim, nn::Init::One);
    p.add("enc_ln_b", 1, c.model_dim, nn::Init::Zero);

    p.add("query_base", 1, c.model_dim, nn::Init::Zero);
    p.add("query_skip_w", c.model_dim, c.model_dim);

    for (int l = 0; l < c.decoder_layers; ++l) {
        LayerNames n{"dec" + std::to_string(l) + "_"};
        p.add(n("lnq_g"), 1, c.model_dim, nn::Init::One);
        p.add(n("lnq_b"), 1, c.model_dim, nn::Init::Zero);
        p.add(n("cq"), c.model_dim, c.model_dim);
        p.add(n("ck"), c.model_dim, c.model_dim);
        p.add(n("cv"), c.model_dim, c.model_dim);
        p.add(n("co"), c.model_dim, c.model_dim);
        p.add(n("co_b"), 1, c.model_dim, nn::Init::Zero);
        p.add(n("lnf_g"), 1, c.model_dim, nn::Init::One);
        p.add(n("lnf_b"), 1, c.model_dim, nn::Init::Zero);
        p.add(n("ffn1_w"), c.model_dim, c.ffn_dim);
        p.add(n("ffn1_b"), 1, c.ffn_dim, nn::Init::Zero);
        p.add(n("ffn2_w"), c.ffn_dim, c.model_dim);
        p.add(n("ffn2_b"), 1, c.model_dim, nn::Init::Zero);
    }
    p.add("dec_ln_g", 1, c.model_dim, nn::Init::One);
    p.add("dec_ln_b", 1, c.model_dim, nn::Init::Zero);

    p.add("box_head_w", c.model_dim, 4);
    p.add("box_head_b", 1, 4, nn::Init::Zero);
    p.add("conf_head_w", c.model_dim, 1);
    p.add("conf_head_b", 1, 1, nn::Init::Zero);
}

struct EntryLookup {
    const GrounderState* state;
    Tape* tape;
    nn::BoundParams* bound;

    Var operator()(const std::string& name) const {
        for (int i = 0; i < state->params.entry_count(); ++i) {
            if (state->params.entry(i).name == name) {
                return bound->use(*tape, state->params, i);
            }
        }
        raise("grounder: unknown parameter ", name);
    }
};

Var multi_head_attention(Tape& t, Var queries, Var keys_values, int heads, Var wq, Var wk, Var wv,
                         Var wo, Var wo_b) {
    const int d = t.value(wq).cols;
    const int dh = d / heads;
    Var q = t.matmul(queries, wq);
    Var k = t.matmul(keys_values, wk);
    Var v = t.matmul(keys_values, wv);
    std::vector<Var> head_outputs;
    head_outputs.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        Var qh = t.slice_cols(q, h * dh, (h + 1) * dh);
        Var kh = t.slice_cols(k, h * dh, (h + 1) * dh);
        Var vh = t.slice_cols(v, h * dh, (h + 1) * dh);
        Var scores = t.scale(t.matmul(qh, kh, false, true), 1.0 / std::sqrt(double(dh)));
        Var attn = t.softmax_rows(scores);
        head_outputs.push_back(t.matmul(attn, vh));
    }
    return t.add_row(t.matmul(t.concat_cols(head_outputs), wo), wo_b);
}

struct GrounderForward {
    Var boxes;            // [T, 4] sigmoid cx, cy, w, h
    Var conf;             // [T, 1] sigmoid visibility
    nn::BoundParams bound;
};

GrounderForward forward_grounder(Tape& t, const GrounderState& state,
                                 const std::vector<Frame>& frames,
                                 const std::string& prompt_text) {
    const GrounderConfig& c = state.config;
    require(!frames.empty(), "grounder: no sampled frames");
    require(static_cast<int>(frames.size()) <= c.max_sampled_frames,
            "grounder: got ", frames.size(), " frames, cap is ", c.max_sampled_frames,
            "; resample the video first");

    GrounderForward f;
    EntryLookup P{&state, &t, &f.bound};
    const int T = static_cast<int>(frames.size());

    // Per-frame visual embedding.
    Var conv1_w = P("conv1_w");
    Var conv1_b = P("conv1_b");
    Var conv2_w = P("conv2_w");
    Var conv2_b = P("conv2_b");
    Var vis_proj_w = P("vis_proj_w");
    Var vis_proj_b = P("vis_proj_b");
    std::vector<Var> per_frame;
    per_frame.reserve(static_cast<std::size_t>(T));
    for (const Frame& fr : frames) {
        const int h = fr.height / c.input_pool;
        const int w = fr.width / c.input_pool;
        Var x = t.input(frame_to_mat(fr, c.input_pool));
        Var col1 = t.im2col(x, h, w, kInputChannels, kConvKernel, kConvStride, 1);
        Var a1 = t.relu(t.add_row(t.matmul(col1, conv1_w), conv1_b));
        const int h1 = (h + 2 - kConvKernel) / kConvStride + 1;
        const int w1 = (w + 2 - kConvKernel) / kConvStride + 1;
        Var col2 = t.im2col(a1, h1, w1, c.conv1_channels, kConvKernel, kConvStride, 1);
        Var a2 = t.relu(t.add_row(t.matmul(col2, conv2_w), conv2_b));
        Var pooled = t.mean_rows(a2);
        per_frame.push_back(t.add_row(t.matmul(pooled, vis_proj_w), vis_proj_b));
    }
    Var visual = t.concat_rows(per_frame); // [T, d]
    visual = t.add(visual, t.input(sinusoid_encoding(T, c.model_dim)));
    visual = t.add_row(visual, P("vis_seg"));

    // Prompt embedding.
    std::vector<int> ids = c.vocab.encode(prompt_text);
    if (ids.empty()) {
        ids.push_back(0);
    }
    const int n_text = static_cast<int>(ids.size());
    Var text = t.gather_rows(P("text_embed"), std::move(ids));
    text = t.add_row(t.matmul(text, P("text_proj_w")), P("text_proj_b"));
    text = t.add(text, t.input(sinusoid_encoding(n_text, c.model_dim)));
    text = t.add_row(text, P("text_seg"));

    // Joint encoder over the concatenated sequence.
    Var enc = t.concat_rows({visual, text});
    for (int l = 0; l < c.encoder_layers; ++l) {
        LayerNames n{"enc" + std::to_string(l) + "_"};
        Var a = t.layer_norm(enc, P(n("ln1_g")), P(n("ln1_b")));
        Var mha = multi_head_attention(t, a, a, c.heads, P(n("wq")), P(n("wk")), P(n("wv")),
                                       P(n("wo")), P(n("wo_b")));
        enc = t.add(enc, mha);
        Var ff_in = t.layer_norm(enc, P(n("ln2_g")), P(n("ln2_b")));
        Var ff = t.add_row(
            t.matmul(t.relu(t.add_row(t.matmul(ff_in, P(n("ffn1_w"))), P(n("ffn1_b")))),
                     P(n("ffn2_w"))),
            P(n("ffn2_b")));
        enc = t.add(enc, ff);
    }
    enc = t.layer_norm(enc, P("enc_ln_g"), P("enc_ln_b"));

    // One decoder query per sampled frame: temporal encoding + a learned base
    // + a direct skip from the frame's own visual token.
    Var queries = t.input(sinusoid_encoding(T, c.model_dim));
    queries = t.add_row(queries, P("query_base"));
    queries = t.add(queries, t.matmul(visual, P("query_skip_w")));
    for (int l = 0; l < c.decoder_layers; ++l) {
        LayerNames n{"dec" + std::to_string(l) + "_"};
        Var a = t.layer_norm(queries, P(n("lnq_g")), P(n("lnq_b")));
        Var cross = multi_head_attention(t, a, enc, c.heads, P(n("cq")), P(n("ck")), P(n("cv")),
                                         P(n("co")), P(n("co_b")));
        queries = t.add(queries, cross);
        Var ff_in = t.layer_norm(queries, P(n("lnf_g")), P(n("lnf_b")));
        Var ff = t.add_row(
            t.matmul(t.relu(t.add_row(t.matmul(ff_in, P(n("ffn1_w"))), P(n("ffn1_b")))),
                     P(n("ffn2_w"))),
            P(n("ffn2_b")));
        queries = t.add(queries, ff);
    }
    Var dec = t.layer_norm(queries, P("dec_ln_g"), P("dec_ln_b"));

    f.boxes = t.sigmoid(t.add_row(t.matmul(dec, P("box_head_w")), P("box_head_b")));
    f.conf = t.sigmoid(t.add_row(t.matmul(dec, P("conf_head_w")), P("conf_head_b")));
    return f;
}

struct LossVars {
    Var total;
    double l1{0.0};
    double giou{0.0};
    double bce{0.0};
};

// Masked L1 + masked (1 - generalized IoU) over visible frames plus a
// visibility BCE over all frames. boxes/conf may be predictions on the tape
// or plain inputs; the expression is identical either way.
LossVars loss_vars(Tape& t, Var boxes, Var conf, const GroundingTarget& target, double lambda_l1,
                   double lambda_giou) {
    const int T = t.value(boxes).rows;
    require(static_cast<int>(target.boxes.size()) == T, "grounding_loss: target has ",
            target.boxes.size(), " entries for ", T, " predictions (misaligned indices)");

    int n_vis = 0;
    Mat gt(T, 4);
    Mat mask4(T, 4);
    Mat vis(T, 1);
    for (int i = 0; i < T; ++i) {
        if (target.boxes[static_cast<std::size_t>(i)].has_value()) {
            const auto& b = *target.boxes[static_cast<std::size_t>(i)];
            for (int k = 0; k < 4; ++k) {
                gt.at(i, k) = b[static_cast<std::size_t>(k)];
                mask4.at(i, k) = 1.0;
            }
            vis.at(i, 0) = 1.0;
            ++n_vis;
        }
    }

    Var gt_v = t.input(gt);
    Var mask_v = t.input(mask4);
    Var vis_v = t.input(vis);

    LossVars out;
    Var total{-1};

    if (n_vis > 0) {
        // L1 on the visible rows.
        Var diff = t.mul(t.sub(boxes, gt_v), mask_v);
        Var l1 = t.scale(t.sum(t.abs(diff)), 1.0 / (4.0 * n_vis));

        // Generalized IoU on the visible rows, via corner arithmetic.
        Var half = t.scale(boxes, 0.5);
        Var cx = t.slice_cols(boxes, 0, 1);
        Var cy = t.slice_cols(boxes, 1, 2);
        Var hw = t.slice_cols(half, 2, 3);
        Var hh = t.slice_cols(half, 3, 4);
        Var px1 = t.sub(cx, hw);
        Var px2 = t.add(cx, hw);
        Var py1 = t.sub(cy, hh);
        Var py2 = t.add(cy, hh);

        Mat g1(T, 1), g2(T, 1), g3(T, 1), g4(T, 1), garea(T, 1);
        for (int i = 0; i < T; ++i) {
            const auto& ob = target.boxes[static_cast<std::size_t>(i)];
            // Invisible rows carry a unit dummy box; their terms are masked out.
            const std::array<double, 4> b = ob.value_or(std::array<double, 4>{0.5, 0.5, 1.0, 1.0});
            g1.at(i, 0) = b[0] - b[2] * 0.5;
            g2.at(i, 0) = b[0] + b[2] * 0.5;
            g3.at(i, 0) = b[1] - b[3] * 0.5;
            g4.at(i, 0) = b[1] + b[3] * 0.5;
            garea.at(i, 0) = b[2] * b[3];
        }
        Var gx1 = t.input(g1);
        Var gx2 = t.input(g2);
        Var gy1 = t.input(g3);
        Var gy2 = t.input(g4);
        Var gt_area = t.input(garea);

        Var iw = t.relu(t.sub(t.minimum(px2, gx2), t.maximum(px1, gx1)));
        Var ih = t.relu(t.sub(t.minimum(py2, gy2), t.maximum(py1, gy1)));
        Var inter = t.mul(iw, ih);
        Var pred_area = t.mul(t.sub(px2, px1), t.sub(py2, py1));
        Var uni = t.sub(t.add(pred_area, gt_area), inter);
        Var iou = t.div(inter, uni);
        Var hull_w = t.sub(t.maximum(px2, gx2), t.minimum(px1, gx1));
        Var hull_h = t.sub(t.maximum(py2, gy2), t.minimum(py1, gy1));
        Var hull = t.mul(hull_w, hull_h);
        Var giou = t.sub(iou, t.div(t.sub(hull, uni), hull));
        Var one_minus = t.scale(t.add_const(giou, -1.0), -1.0);
        Var vis_mask = t.slice_cols(mask_v, 0, 1);
        Var giou_loss = t.scale(t.sum(t.mul(one_minus, vis_mask)), 1.0 / n_vis);

        total = t.add(t.scale(l1, lambda_l1), t.scale(giou_loss, lambda_giou));
        out.l1 = t.scalar_value(l1);
        out.giou = t.scalar_value(giou_loss);
    }

    // Visibility BCE over every sampled frame, clamped away from log(0).
    Var p = t.clamp(conf, kBceEps, 1.0 - kBceEps);
    Var pos = t.mul(vis_v, t.log(p));
    Var neg = t.mul(t.scale(t.add_const(vis_v, -1.0), -1.0),
                    t.log(t.scale(t.add_const(p, -1.0), -1.0)));
    Var bce = t.scale(t.mean(t.add(pos, neg)), -1.0);
    out.bce = t.scalar_value(bce);

    out.total = total.ok() ? t.add(total, bce) : bce;
    return out;
}

std::vector<int> validate_alignment(const std::vector<Frame>& frames,
                                    const std::vector<int>& indices) {
    require(frames.size() == indices.size(), "grounder: ", frames.size(), " frames but ",
            indices.size(), " sampled indices");
    return indices;
}

} // namespace

GrounderState build_grounder(const GrounderConfig& config, std::uint64_t seed) {
    GrounderState s;
    s.config = config;
    register_params(s);
    s.params.init_values(Rng::mix(seed, 0x67726e64ULL));
    return s;
}

GrounderState grounder_from_params(const GrounderConfig& config, const std::vector<double>& params,
                                   std::uint64_t step) {
    GrounderState s;
    s.config = config;
    register_params(s);
    require(params.size() == s.params.size(), "grounder_from_params: checkpoint has ",
            params.size(), " parameters, architecture needs ", s.params.size());
    s.params.data() = params;
    s.step = step;
    return s;
}

SparseTubeletPrediction predict_tubelet(const std::vector<Frame>& sampled_frames,
                                        const std::vector<int>& sampled_indices,
                                        const Prompt& prompt, const GrounderState& state) {
    validate_alignment(sampled_frames, sampled_indices);
    Tape tape;
    const GrounderForward f = forward_grounder(tape, state, sampled_frames, prompt.text);
    const Mat& boxes = tape.value(f.boxes);
    const Mat& conf = tape.value(f.conf);

    SparseTubeletPrediction pred;
    pred.sampled_indices = sampled_indices;
    pred.boxes.resize(sampled_frames.size());
    pred.confidences.resize(sampled_frames.size());
    for (int i = 0; i < boxes.rows; ++i) {
        pred.boxes[static_cast<std::size_t>(i)] = {boxes.at(i, 0), boxes.at(i, 1), boxes.at(i, 2),
                                                   boxes.at(i, 3)};
        pred.confidences[static_cast<std::size_t>(i)] = conf.at(i, 0);
    }
    return pred;
}

LossBreakdown grounding_loss(const SparseTubeletPrediction& pred, const GroundingTarget& target,
                             double lambda_l1, double lambda_giou) {
    require(pred.boxes.size() == pred.confidences.size(), "grounding_loss: malformed prediction");
    Tape tape;
    Mat boxes(static_cast<int>(pred.boxes.size()), 4);
    Mat conf(static_cast<int>(pred.boxes.size()), 1);
    for (std::size_t i = 0; i < pred.boxes.size(); ++i) {
        for (int k = 0; k < 4; ++k) {
            boxes.at(static_cast<int>(i), k) = pred.boxes[i][static_cast<std::size_t>(k)];
        }
        conf.at(static_cast<int>(i), 0) = pred.confidences[i];
    }
    const LossVars lv = loss_vars(tape, tape.input(std::move(boxes)), tape.input(std::move(conf)),
                                  target, lambda_l1, lambda_giou);
    LossBreakdown out;
    out.total = tape.scalar_value(lv.total);
    out.l1 = lv.l1;
    out.giou = lv.giou;
    out.bce = lv.bce;
    return out;
}

double grounder_loss_value(const GrounderState& state, const GrounderExample& example) {
    Tape tape;
    const GrounderForward f =
        forward_grounder(tape, state, example.sampled_frames, example.prompt_text);
    const LossVars lv = loss_vars(tape, f.boxes, f.conf, example.target, state.config.lambda_l1,
                                  state.config.lambda_giou);
    return tape.scalar_value(lv.total);
}

std::vector<double> grounder_loss_gradient(const GrounderState& state,
                                           const GrounderExample& example,
                                           LossBreakdown* breakdown) {
    Tape tape;
    GrounderForward f = forward_grounder(tape, state, example.sampled_frames, example.prompt_text);
    const LossVars lv = loss_vars(tape, f.boxes, f.conf, example.target, state.config.lambda_l1,
                                  state.config.lambda_giou);
    tape.backward(lv.total);
    std::vector<double> grad(state.params.size(), 0.0);
    f.bound.add_grads(tape, state.params, grad);
    if (breakdown != nullptr) {
        breakdown->total = tape.scalar_value(lv.total);
        breakdown->l1 = lv.l1;
        breakdown->giou = lv.giou;
        breakdown->bce = lv.bce;
    }
    return grad;
}

TrainedGrounder train_grounder(const std::vector<GrounderExample>& examples,
                               const GrounderConfig& config, const GrounderTrainConfig& train,
                               bool ema_enabled) {
    require(!examples.empty(), "train_grounder: empty training set");
    for (const auto& ex : examples) {
        validate_alignment(ex.sampled_frames, ex.sampled_indices);
        require(!ex.prompt_text.empty(), "train_grounder: example with empty prompt");
    }

    TrainedGrounder out;
    out.state = build_grounder(config, train.seed);
    nn::Adam opt(out.state.params.size(), train.learning_rate, train.adam_beta1, train.adam_beta2);
    if (ema_enabled) {
        out.ema = ema_init(out.state.params.data(), train.ema_beta);
    }

    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    for (int epoch = 0; epoch < train.epochs; ++epoch) {
        Rng rng(Rng::mix(train.seed, 0x2000ULL + static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t idx : order) {
            LossBreakdown bd;
            const std::vector<double> grad =
                grounder_loss_gradient(out.state, examples[idx], &bd);
            opt.step(out.state.params.data(), grad);
            if (out.ema.has_value()) {
                ema_update(*out.ema, out.state.params.data());
                // The average must track post-update parameters, step for step.
                require(out.ema->step_count == opt.steps(),
                        "train_grounder: EMA step count diverged from optimizer");
            }
            epoch_loss += bd.total;
        }
        out.state.loss_history.push_back(epoch_loss / static_cast<double>(examples.size()));
        out.state.step = opt.steps();
    }
    return out;
}

std::array<double, 4> normalize_box(const BoundingBox& box, int width, int height) {
    require(box.valid(), "normalize_box: degenerate box");
    const double w = static_cast<double>(width);
    const double h = static_cast<double>(height);
    return {(box.x1 + box.x2) * 0.5 / w, (box.y1 + box.y2) * 0.5 / h, (box.x2 - box.x1) / w,
            (box.y2 - box.y1) / h};
}

BoundingBox denormalize_box(const std::array<double, 4>& cxcywh, int width, int height) {
    const double w = static_cast<double>(width);
    const double h = static_cast<double>(height);
    double x1 = (cxcywh[0] - cxcywh[2] * 0.5) * w;
    double x2 = (cxcywh[0] + cxcywh[2] * 0.5) * w;
    double y1 = (cxcywh[1] - cxcywh[3] * 0.5) * h;
    double y2 = (cxcywh[1] + cxcywh[3] * 0.5) * h;
    // Clamp to the canvas but keep a positive extent.
    constexpr double kMinExtent = 0.01;
    x1 = std::clamp(x1, 0.0, w - kMinExtent);
    y1 = std::clamp(y1, 0.0, h - kMinExtent);
    x2 = std::clamp(x2, x1 + kMinExtent, w);
    y2 = std::clamp(y2, y1 + kMinExtent, h);
    return BoundingBox{x1, y1, x2, y2};
}

GroundingTarget target_from_track(const Tubelet& gt, const std::vector<int>& sampled_indices,
                                  int width, int height) {
    GroundingTarget target;
    target.boxes.reserve(sampled_indices.size());
    for (int idx : sampled_indices) {
        auto it = gt.boxes.find(idx);
        if (it == gt.boxes.end()) {
            target.boxes.push_back(std::nullopt);
        } else {
            target.boxes.push_back(normalize_box(it->second, width, height));
        }
    }
    return target;
}

InferResult infer_full(const QASample& sample, const FrameProvider& frames,
                       const InferStages& stages, const InferOptions& options,
                       const SamplingConfig& sampling) {
    require(stages.grounder != nullptr, "[grounder] infer_full: no grounder state loaded");

    const auto with_stage = [](const char* stage, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            raise("[", stage, "] ", e.what());
        }
    };

    InferResult result;
    std::string answer_text;
    if (options.include_answer) {
        result.answer = with_stage("vqa", [&]() -> AnswerResult {
            switch (options.answer_source) {
            case AnswerSource::Oracle:
                return oracle_answer(sample);
            case AnswerSource::Model: {
                require(stages.vqa != nullptr, "infer_full: model answers requested but no "
                                               "vqa model loaded");
                const std::vector<int> idx =
                    sample_frame_indices(sample.video.num_frames, sample.video.native_fps, sampling);
                std::vector<Frame> fs;
                fs.reserve(idx.size());
                for (int i : idx) {
                    fs.push_back(frames(i));
                }
                return predict_answer(fs, sample.question, *stages.vqa);
            }
            case AnswerSource::External:
                require(stages.external != nullptr, "infer_full: external answers requested but "
                                                    "no endpoint configured");
                return external_answer(*stages.external, sample.video.video_id, sample.question);
            }
            raise("infer_full: unknown answer source");
        });
        answer_text = result.answer->answer;
    }

    Prompt prompt = options.include_answer
                        ? with_stage("prompt", [&] {
                              return compose(sample.question, answer_text,
                                             result.answer->source);
                          })
                        : Prompt{sample.question, sample.question, "", options.answer_source};
    result.prompt_text = prompt.text;

    const std::vector<int> indices = with_stage("sampling", [&] {
        return sample_frame_indices(sample.video.num_frames, sample.video.native_fps, sampling);
    });
    std::vector<Frame> sampled;
    sampled.reserve(indices.size());
    for (int i : indices) {
        sampled.push_back(frames(i));
    }

    const SparseTubeletPrediction sparse = with_stage(
        "grounder", [&] { return predict_tubelet(sampled, indices, prompt, *stages.grounder); });

    Tubelet sparse_track;
    sparse_track.object_id = sample.gt_tracks.empty() ? std::string("pred") :
                                                        sample.gt_tracks.front().object_id;
    double conf_sum = 0.0;
    for (std::size_t i = 0; i < sparse.boxes.size(); ++i) {
        sparse_track.boxes[sparse.sampled_indices[i]] =
            denormalize_box(sparse.boxes[i], sample.video.width, sample.video.height);
        conf_sum += sparse.confidences[i];
    }
    result.track_confidence = conf_sum / static_cast<double>(sparse.boxes.size());

    result.dense = with_stage("sampling", [&] {
        return expand_predictions(sparse_track, sampling, sample.video.num_frames,
                                  sample.video.native_fps);
    });
    return result;
}

} // namespace gvqa
