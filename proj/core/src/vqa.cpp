#include "gvqa/vqa.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "httplib.h"

#include "gvqa/error.hpp"
#include "gvqa/rng.hpp"

namespace gvqa {

namespace {

constexpr int kHistBins = 8;  // black/red/green/blue/yellow/magenta/cyan/white
constexpr int kColorStats = 3; // mass fraction, bbox fill, bbox aspect
constexpr int kPaletteColors = 4;

int pixel_bin(float r, float g, float b) {
    const int rb = r > 0.5f ? 1 : 0;
    const int gb = g > 0.5f ? 1 : 0;
    const int bb = b > 0.5f ? 1 : 0;
    // 3-bit code ordered black, blue, green, cyan, red, magenta, yellow, white.
    return (rb << 2) | (gb << 1) | bb;
}

// Palette color -> histogram bin of pixel_bin().
constexpr int kColorToBin[kPaletteColors] = {4 /*red*/, 2 /*green*/, 1 /*blue*/, 6 /*yellow*/};

} // namespace

AnswerVocabulary::AnswerVocabulary(std::vector<std::string> answers) : answers_(std::move(answers)) {
    require(!answers_.empty(), "AnswerVocabulary: empty");
    std::set<std::string> unique(answers_.begin(), answers_.end());
    require(unique.size() == answers_.size(), "AnswerVocabulary: duplicate entries");
}

AnswerVocabulary AnswerVocabulary::from_samples(const std::vector<QASample>& samples) {
    std::set<std::string> unique;
    for (const auto& s : samples) {
        if (s.answer.has_value()) {
            unique.insert(*s.answer);
        }
    }
    require(!unique.empty(), "AnswerVocabulary::from_samples: no answers in samples");
    return AnswerVocabulary(std::vector<std::string>(unique.begin(), unique.end()));
}

std::optional<int> AnswerVocabulary::index_of(const std::string& answer) const {
    for (std::size_t i = 0; i < answers_.size(); ++i) {
        if (answers_[i] == answer) {
            return static_cast<int>(i);
        }
    }
    return std::nullopt;
}

int video_feature_dim() {
    return kHistBins + kPaletteColors * kColorStats;
}

std::vector<double> video_features(const std::vector<Frame>& frames) {
    require(!frames.empty(), "video_features: empty frame list");
    std::vector<double> feat(static_cast<std::size_t>(video_feature_dim()), 0.0);
    for (const Frame& fr : frames) {
        std::vector<double> hist(kHistBins, 0.0);
        double min_x[kPaletteColors], max_x[kPaletteColors];
        double min_y[kPaletteColors], max_y[kPaletteColors];
        double mass[kPaletteColors] = {0, 0, 0, 0};
        for (int c = 0; c < kPaletteColors; ++c) {
            min_x[c] = fr.width;
            max_x[c] = -1;
            min_y[c] = fr.height;
            max_y[c] = -1;
        }
        for (int y = 0; y < fr.height; ++y) {
            for (int x = 0; x < fr.width; ++x) {
                const int bin = pixel_bin(fr.at(x, y, 0), fr.at(x, y, 1), fr.at(x, y, 2));
                hist[static_cast<std::size_t>(bin)] += 1.0;
                for (int c = 0; c < kPaletteColors; ++c) {
                    if (bin == kColorToBin[c]) {
                        mass[c] += 1.0;
                        min_x[c] = std::min(min_x[c], static_cast<double>(x));
                        max_x[c] = std::max(max_x[c], static_cast<double>(x));
                        min_y[c] = std::min(min_y[c], static_cast<double>(y));
                        max_y[c] = std::max(max_y[c], static_cast<double>(y));
                    }
                }
            }
        }
        const double total = static_cast<double>(fr.width) * fr.height;
        for (int b = 0; b < kHistBins; ++b) {
            feat[static_cast<std::size_t>(b)] += hist[static_cast<std::size_t>(b)] / total;
        }
        for (int c = 0; c < kPaletteColors; ++c) {
            const std::size_t base = static_cast<std::size_t>(kHistBins + c * kColorStats);
            if (mass[c] <= 0.0) {
                continue;
            }
            const double bw = max_x[c] - min_x[c] + 1.0;
            const double bh = max_y[c] - min_y[c] + 1.0;
            feat[base + 0] += mass[c] / total;
            feat[base + 1] += mass[c] / (bw * bh);
            feat[base + 2] += bw / (bw + bh);
        }
    }
    for (double& f : feat) {
        f /= static_cast<double>(frames.size());
    }
    return feat;
}

VqaModel build_vqa_model(const AnswerVocabulary& vocab, const TokenVocab& tokens,
                         const VqaConfig& config) {
    require(vocab.size() >= 1, "build_vqa_model: empty answer vocabulary");
    VqaModel m;
    m.config = config;
    m.vocab = vocab;
    m.tokens = tokens;
    const int in_dim = video_feature_dim() + config.embed_dim;
    m.embed = m.params.add("embed", tokens.size(), config.embed_dim);
    m.w1 = m.params.add("w1", in_dim, config.hidden_dim);
    m.b1 = m.params.add("b1", 1, config.hidden_dim, nn::Init::Zero);
    // Zero-init head: the argmax follows the training signal from step one,
    // which matters at the small default learning rate.
    m.w2 = m.params.add("w2", config.hidden_dim, vocab.size(), nn::Init::Zero);
    m.b2 = m.params.add("b2", 1, vocab.size(), nn::Init::Zero);
    m.params.init_values(Rng::mix(config.seed, 0x76716100ULL));
    return m;
}

namespace {

struct VqaForward {
    nn::Var probs; // [1, vocab]
    nn::BoundParams bound;
};

VqaForward vqa_forward(nn::Tape& tape, const VqaModel& model, const std::vector<double>& features,
                       const std::string& question) {
    VqaForward f;
    nn::Mat feat(1, video_feature_dim());
    for (int i = 0; i < feat.cols; ++i) {
        feat.at(0, i) = features[static_cast<std::size_t>(i)];
    }
    nn::Var video = tape.input(std::move(feat));

    std::vector<int> ids = model.tokens.encode(question);
    if (ids.empty()) {
        ids.push_back(0); // UNK, keeps the pipeline total on blank questions
    }
    nn::Var embed = f.bound.use(tape, model.params, model.embed);
    nn::Var q = tape.mean_rows(tape.gather_rows(embed, ids));

    nn::Var x = tape.concat_cols({video, q});
    nn::Var h = tape.relu(tape.add_row(tape.matmul(x, f.bound.use(tape, model.params, model.w1)),
                                       f.bound.use(tape, model.params, model.b1)));
    nn::Var logits = tape.add_row(tape.matmul(h, f.bound.use(tape, model.params, model.w2)),
                                  f.bound.use(tape, model.params, model.b2));
    f.probs = tape.softmax_rows(logits);
    return f;
}

} // namespace

AnswerResult predict_answer(const std::vector<Frame>& frames, const std::string& question,
                            const VqaModel& model) {
    require(!frames.empty(), "predict_answer: empty frame list");
    nn::Tape tape;
    const VqaForward f = vqa_forward(tape, model, video_features(frames), question);
    const nn::Mat& p = tape.value(f.probs);
    int best = 0;
    for (int i = 1; i < p.cols; ++i) {
        if (p.at(0, i) > p.at(0, best)) {
            best = i;
        }
    }
    AnswerResult r;
    r.answer = model.vocab.answers()[static_cast<std::size_t>(best)];
    r.confidence = p.at(0, best);
    r.source = AnswerSource::Model;
    return r;
}

VqaModel train_vqa(const std::vector<VqaExample>& examples, const AnswerVocabulary& vocab,
                   const VqaConfig& config) {
    require(!examples.empty(), "train_vqa: empty training set");

    std::vector<std::string> offenders;
    for (const auto& ex : examples) {
        if (!vocab.index_of(ex.answer).has_value()) {
            offenders.push_back(ex.answer);
        }
    }
    if (!offenders.empty()) {
        std::ostringstream os;
        for (std::size_t i = 0; i < offenders.size(); ++i) {
            os << (i ? ", " : "") << "\"" << offenders[i] << "\"";
        }
        raise("train_vqa: answers outside vocabulary: ", os.str());
    }

    std::vector<std::string> questions;
    questions.reserve(examples.size());
    for (const auto& ex : examples) {
        questions.push_back(ex.question);
    }
    const TokenVocab tokens = TokenVocab::from_corpus(questions);
    VqaModel model = build_vqa_model(vocab, tokens, config);

    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    features.reserve(examples.size());
    for (const auto& ex : examples) {
        features.push_back(video_features(ex.frames));
        labels.push_back(*vocab.index_of(ex.answer));
    }

    nn::Sgd opt(config.learning_rate);
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(Rng::mix(config.seed, 0x1000ULL + static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);

        double epoch_loss = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t batch_end =
                std::min(order.size(), pos + static_cast<std::size_t>(config.batch_size));
            std::vector<double> grad(model.params.size(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t k = pos; k < batch_end; ++k) {
                const std::size_t idx = order[k];
                nn::Tape tape;
                VqaForward f = vqa_forward(tape, model, features[idx], examples[idx].question);
                nn::Var picked = tape.slice_cols(f.probs, labels[static_cast<std::size_t>(idx)],
                                                 labels[static_cast<std::size_t>(idx)] + 1);
                nn::Var loss = tape.scale(tape.sum(tape.log(tape.clamp(picked, 1e-12, 1.0))), -1.0);
                tape.backward(loss);
                f.bound.add_grads(tape, model.params, grad);
                batch_loss += tape.scalar_value(loss);
            }
            const double inv = 1.0 / static_cast<double>(batch_end - pos);
            for (double& g : grad) {
                g *= inv;
            }
            opt.step(model.params.data(), grad);
            epoch_loss += batch_loss;
            pos = batch_end;
        }
        model.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return model;
}

AnswerResult oracle_answer(const QASample& sample) {
    require(sample.answer.has_value(), "oracle_answer: answers unavailable for video ",
            sample.video.video_id, " (test split has no answers)");
    return AnswerResult{*sample.answer, 1.0, AnswerSource::Oracle};
}

AnswerResult external_answer(const ExternalEndpoint& endpoint, const std::string& video_id,
                             const std::string& question) {
    httplib::Client client(endpoint.host, endpoint.port);
    client.set_connection_timeout(0, endpoint.timeout_ms * 1000);
    client.set_read_timeout(0, endpoint.timeout_ms * 1000);

    nlohmann::json body;
    body["video_id"] = video_id;
    body["question"] = question;

    httplib::Result res = client.Post(endpoint.path, body.dump(), "application/json");
    require(static_cast<bool>(res), "external_answer: cannot reach ", endpoint.host, ":",
            endpoint.port, " (", httplib::to_string(res.error()), ")");
    require(res->status >= 200 && res->status < 300, "external_answer: HTTP status ", res->status,
            " from ", endpoint.host, ":", endpoint.port);

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        raise("external_answer: malformed response body: ", e.what());
    }
    require(j.contains("answer") && j["answer"].is_string(),
            "external_answer: response missing \"answer\" field");
    AnswerResult r;
    r.answer = j["answer"].get<std::string>();
    r.confidence = j.value("confidence", 1.0);
    r.source = AnswerSource::External;
    return r;
}

} // namespace gvqa
