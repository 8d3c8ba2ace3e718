// Command line front end: gen-data, train, infer, eval.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "gvqa/config.hpp"
#include "gvqa/error.hpp"
#include "gvqa/pipeline.hpp"

namespace {

gvqa::RunConfig load_config(const std::string& config_path) {
    if (config_path.empty()) {
        return gvqa::RunConfig{};
    }
    return gvqa::RunConfig::from_file(config_path);
}

gvqa::AnswerSource parse_source(const std::string& s) {
    if (s == "model") {
        return gvqa::AnswerSource::Model;
    }
    if (s == "oracle") {
        return gvqa::AnswerSource::Oracle;
    }
    if (s == "external") {
        return gvqa::AnswerSource::External;
    }
    gvqa::raise("--answers must be model, oracle or external, got \"", s, "\"");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage grounded video question answering on a synthetic corpus"};
    app.require_subcommand(1);

    std::string config_path;
    bool force = false;
    app.add_option("--config", config_path, "Path to the run configuration file")
        ->envname("GVQA_CONFIG");
    app.add_flag("--force", force, "Overwrite existing outputs");

    auto* gen = app.add_subcommand("gen-data", "Generate the synthetic train/val/test splits");

    auto* train = app.add_subcommand("train", "Train one pipeline stage");
    std::string stage;
    train->add_option("--stage", stage, "vqa or grounder")->required();

    auto* infer = app.add_subcommand("infer", "Predict tubelets for a split");
    std::string split = "val";
    std::string answers = "oracle";
    std::string prompt_mode = "full";
    infer->add_option("--split", split, "train, val or test");
    infer->add_option("--answers", answers, "model, oracle or external");
    infer->add_option("--prompt-mode", prompt_mode,
                      "full (question + answer) or question-only (ablation)");

    auto* eval = app.add_subcommand("eval", "Score predictions against annotations");
    std::string predictions;
    std::string annotations;
    std::string report;
    eval->add_option("--predictions", predictions, "Predictions JSON (or annotations JSON)")
        ->required();
    eval->add_option("--annotations", annotations, "Ground-truth annotations JSON")->required();
    eval->add_option("--report", report, "Where to write the report JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        const gvqa::RunConfig config = load_config(config_path);

        if (gen->parsed()) {
            const auto out = gvqa::cmd_gen_data(config, force);
            for (const auto& p : out.annotation_files) {
                std::cout << "wrote " << p.string() << "\n";
            }
        } else if (train->parsed()) {
            gvqa::TrainStage st;
            if (stage == "vqa") {
                st = gvqa::TrainStage::Vqa;
            } else if (stage == "grounder") {
                st = gvqa::TrainStage::Grounder;
            } else {
                gvqa::raise("--stage must be vqa or grounder, got \"", stage, "\"");
            }
            const auto out = gvqa::cmd_train(config, st, force);
            std::cout << "wrote " << out.checkpoint.string() << "\n";
            if (out.ema_checkpoint.has_value()) {
                std::cout << "wrote " << out.ema_checkpoint->string() << "\n";
            }
            if (!out.loss_history.empty()) {
                std::cout << "final epoch loss " << out.loss_history.back() << "\n";
            }
        } else if (infer->parsed()) {
            if (prompt_mode != "full" && prompt_mode != "question-only") {
                gvqa::raise("--prompt-mode must be full or question-only, got \"", prompt_mode,
                            "\"");
            }
            const auto out = gvqa::cmd_infer(config, split, parse_source(answers),
                                             prompt_mode == "full", force);
            std::cout << "wrote " << out.predictions.string() << " (" << out.num_samples
                      << " samples)\n";
        } else if (eval->parsed()) {
            const auto out = gvqa::cmd_eval(config, predictions, annotations, report, force);
            std::cout << "HOTA=" << out.report.final_hota << "\n";
            std::cout << "report " << out.report_path.string() << "\n";
        }
    } catch (const gvqa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
