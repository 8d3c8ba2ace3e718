#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gvqa/config.hpp"
#include "gvqa/hota.hpp"

namespace gvqa {

enum class TrainStage { Vqa, Grounder };

struct GenDataOutput {
    std::vector<std::filesystem::path> annotation_files;
};

struct TrainOutput {
    std::filesystem::path checkpoint;
    std::optional<std::filesystem::path> ema_checkpoint;
    std::vector<double> loss_history;
};

struct InferOutput {
    std::filesystem::path predictions;
    int num_samples{0};
};

struct EvalOutput {
    std::filesystem::path report_path;
    HOTAReport report;
};

// The four pipeline commands. Each stamps its artifacts with the config hash
// and refuses to overwrite existing outputs unless force is set.
GenDataOutput cmd_gen_data(const RunConfig& config, bool force = false);

TrainOutput cmd_train(const RunConfig& config, TrainStage stage, bool force = false);

InferOutput cmd_infer(const RunConfig& config, const std::string& split, AnswerSource source,
                      bool include_answer = true, bool force = false);

EvalOutput cmd_eval(const RunConfig& config, const std::filesystem::path& predictions,
                    const std::filesystem::path& annotations,
                    const std::filesystem::path& report_path = {}, bool force = false);

// Derived prompt-token vocabulary of a training split; infer rebuilds it to
// validate checkpoint compatibility.
TokenVocab grounder_vocab_from_train(const RunConfig& config);

std::filesystem::path default_predictions_path(const RunConfig& config, const std::string& split,
                                               AnswerSource source, bool include_answer);

} // namespace gvqa
