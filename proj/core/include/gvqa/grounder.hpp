#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gvqa/ema.hpp"
#include "gvqa/frames.hpp"
#include "gvqa/nn/params.hpp"
#include "gvqa/prompt.hpp"
#include "gvqa/text.hpp"
#include "gvqa/tubelet.hpp"
#include "gvqa/vqa.hpp"

namespace gvqa {

// Miniature detection-transformer grounder: per-frame conv features with
// coordinate channels, token embeddings, a joint self-attention encoder over
// the concatenated sequences, and one decoder query per sampled frame that
// cross-attends to the encoder output and emits a sigmoid-bounded box plus a
// visibility confidence.
struct GrounderConfig {
    int model_dim{48};
    int heads{4};
    int encoder_layers{1};
    int decoder_layers{1};
    int ffn_dim{96};
    int text_embed_dim{32};
    int conv1_channels{12};
    int conv2_channels{24};
    int input_pool{2}; // average-pool factor applied to frames before conv
    int max_sampled_frames{200};
    double lambda_l1{5.0};
    double lambda_giou{2.0};
    TokenVocab vocab;
};

struct GrounderState {
    GrounderConfig config;
    nn::ParamStore params;
    std::vector<double> loss_history; // mean loss per epoch
    std::uint64_t step{0};
};

// One normalized (cx, cy, w, h) box plus confidence per sampled frame.
struct SparseTubeletPrediction {
    std::vector<std::array<double, 4>> boxes;
    std::vector<double> confidences;
    std::vector<int> sampled_indices;
};

// Ground truth aligned to the sampled indices; nullopt marks frames where the
// target is not visible yet (or no longer annotated).
struct GroundingTarget {
    std::vector<std::optional<std::array<double, 4>>> boxes; // normalized cx,cy,w,h
};

struct LossBreakdown {
    double total{0.0};
    double l1{0.0};
    double giou{0.0};
    double bce{0.0};
};

struct GrounderExample {
    std::vector<Frame> sampled_frames;
    std::vector<int> sampled_indices;
    std::string prompt_text;
    GroundingTarget target;
};

struct GrounderTrainConfig {
    int epochs{20};
    double learning_rate{5e-5};
    std::uint64_t seed{0};
    double adam_beta1{0.9};
    double adam_beta2{0.999};
    double ema_beta{0.999};
};

GrounderState build_grounder(const GrounderConfig& config, std::uint64_t seed);

// Restores a state from a flat parameter vector (checkpoint payload).
GrounderState grounder_from_params(const GrounderConfig& config, const std::vector<double>& params,
                                   std::uint64_t step);

SparseTubeletPrediction predict_tubelet(const std::vector<Frame>& sampled_frames,
                                        const std::vector<int>& sampled_indices,
                                        const Prompt& prompt, const GrounderState& state);

// Weighted sum of masked L1, masked (1 - generalized IoU) and visibility
// binary cross-entropy. Pure value route used by tests and reporting; the
// trainer computes the identical expression on the tape.
LossBreakdown grounding_loss(const SparseTubeletPrediction& pred, const GroundingTarget& target,
                             double lambda_l1 = 5.0, double lambda_giou = 2.0);

// Full train-step objective as a function of the parameter vector, plus its
// analytic gradient; the gradient check drives these two.
double grounder_loss_value(const GrounderState& state, const GrounderExample& example);
std::vector<double> grounder_loss_gradient(const GrounderState& state,
                                           const GrounderExample& example,
                                           LossBreakdown* breakdown = nullptr);

struct TrainedGrounder {
    GrounderState state;
    std::optional<EMAState> ema;
};

TrainedGrounder train_grounder(const std::vector<GrounderExample>& examples,
                               const GrounderConfig& config, const GrounderTrainConfig& train,
                               bool ema_enabled);

// ---- pipeline composition -------------------------------------------------

using FrameProvider = std::function<Frame(int frame_index)>;

struct InferStages {
    const GrounderState* grounder{nullptr};
    const VqaModel* vqa{nullptr};               // required for AnswerSource::Model
    const ExternalEndpoint* external{nullptr};  // required for AnswerSource::External
};

struct InferOptions {
    AnswerSource answer_source{AnswerSource::Oracle};
    bool include_answer{true}; // false = question-only prompt (ablation)
};

struct InferResult {
    Tubelet dense; // pixel corner boxes covering every frame of the video
    double track_confidence{0.0};
    std::optional<AnswerResult> answer;
    std::string prompt_text;
};

// answer -> prompt -> sample -> predict -> expand. Stage failures are
// re-raised with the failing stage name attached.
InferResult infer_full(const QASample& sample, const FrameProvider& frames,
                       const InferStages& stages, const InferOptions& options,
                       const SamplingConfig& sampling);

// Normalized (cx, cy, w, h) for a pixel box, and back. Clamps the inverse to
// the canvas, keeping a positive extent.
std::array<double, 4> normalize_box(const BoundingBox& box, int width, int height);
BoundingBox denormalize_box(const std::array<double, 4>& cxcywh, int width, int height);

// Target construction shared by trainer and tests.
GroundingTarget target_from_track(const Tubelet& gt, const std::vector<int>& sampled_indices,
                                  int width, int height);

} // namespace gvqa
