#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gvqa/frames.hpp"
#include "gvqa/nn/params.hpp"
#include "gvqa/prompt.hpp"
#include "gvqa/text.hpp"
#include "gvqa/tubelet.hpp"

namespace gvqa {

class AnswerVocabulary {
public:
    AnswerVocabulary() = default;
    explicit AnswerVocabulary(std::vector<std::string> answers);

    // Unique sorted answers of the samples; samples without answers are skipped.
    static AnswerVocabulary from_samples(const std::vector<QASample>& samples);

    [[nodiscard]] const std::vector<std::string>& answers() const { return answers_; }
    [[nodiscard]] int size() const { return static_cast<int>(answers_.size()); }
    [[nodiscard]] std::optional<int> index_of(const std::string& answer) const;

private:
    std::vector<std::string> answers_;
};

struct AnswerResult {
    std::string answer;
    double confidence{0.0};
    AnswerSource source{AnswerSource::Model};
};

struct VqaConfig {
    int epochs{20};
    double learning_rate{5e-5};
    int batch_size{16};
    int embed_dim{16};
    int hidden_dim{32};
    std::uint64_t seed{0};
};

struct VqaModel {
    VqaConfig config;
    AnswerVocabulary vocab;
    TokenVocab tokens;
    nn::ParamStore params;
    std::vector<double> loss_history; // mean cross-entropy per epoch

    // Parameter entry indices.
    int embed{-1};
    int w1{-1};
    int b1{-1};
    int w2{-1};
    int b2{-1};
};

struct VqaExample {
    std::vector<Frame> frames; // sampled frames of the video
    std::string question;
    std::string answer;
};

// Color-mass statistics per frame, mean-pooled over the clip.
std::vector<double> video_features(const std::vector<Frame>& frames);
int video_feature_dim();

VqaModel build_vqa_model(const AnswerVocabulary& vocab, const TokenVocab& tokens,
                         const VqaConfig& config);

// Closed-vocabulary answer: argmax over softmax logits, confidence = max
// probability. Pure in (frames, question, model).
AnswerResult predict_answer(const std::vector<Frame>& frames, const std::string& question,
                            const VqaModel& model);

// Mini-batch gradient descent over a seeded shuffle; loss history gets one
// entry per epoch. Every answer must be in the vocabulary.
VqaModel train_vqa(const std::vector<VqaExample>& examples, const AnswerVocabulary& vocab,
                   const VqaConfig& config);

// Ground-truth passthrough; fails on samples without answers (test split).
AnswerResult oracle_answer(const QASample& sample);

struct ExternalEndpoint {
    std::string host;
    int port{80};
    std::string path{"/answer"};
    int timeout_ms{2000};
};

// POSTs {"video_id","question"} and expects {"answer","confidence"}. Network
// and protocol failures raise; there is no silent fallback.
AnswerResult external_answer(const ExternalEndpoint& endpoint, const std::string& video_id,
                             const std::string& question);

} // namespace gvqa
