#include "gvqa/pipeline.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gvqa/annotation_io.hpp"
#include "gvqa/checkpoint.hpp"
#include "gvqa/error.hpp"
#include "gvqa/frames.hpp"
#include "gvqa/grounder.hpp"
#include "gvqa/rng.hpp"
#include "gvqa/synth.hpp"

namespace gvqa {

namespace {

void check_overwrite(const std::filesystem::path& path, bool force, const char* what) {
    if (!force && std::filesystem::exists(path)) {
        raise(what, " already exists at ", path.string(), "; pass --force to overwrite");
    }
}

std::filesystem::path split_dir(const RunConfig& c, const std::string& split) {
    return c.data_root / split;
}

AnnotationSet load_split(const RunConfig& c, const std::string& split) {
    const auto path = split_dir(c, split) / "annotations.json";
    require(std::filesystem::exists(path), "missing annotations for split \"", split, "\" at ",
            path.string(), "; run gen-data first");
    return read_annotations(path);
}

std::vector<int> sampled_indices_for(const RunConfig& c, const VideoMeta& v) {
    return sample_frame_indices(v.num_frames, v.native_fps, c.sampling);
}

std::vector<Frame> load_sampled_frames(const RunConfig& c, const std::string& split,
                                       const VideoMeta& v) {
    return read_archive_frames(split_dir(c, split) / "frames" / v.video_id,
                               sampled_indices_for(c, v));
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::ostringstream os;
    for (const auto& t : tokens) {
        os << t << '\x1f';
    }
    return os.str();
}

std::uint64_t vqa_checkpoint_hash(const RunConfig& c, const AnswerVocabulary& vocab,
                                  const TokenVocab& tokens) {
    return fnv1a64(c.canonical() + "|answers:" + join_tokens(vocab.answers()) +
                   "|tokens:" + join_tokens(tokens.tokens()));
}

std::uint64_t grounder_checkpoint_hash(const RunConfig& c, const TokenVocab& vocab) {
    return fnv1a64(c.canonical() + "|prompt-tokens:" + join_tokens(vocab.tokens()));
}

AnswerVocabulary vqa_vocab_from(const AnnotationSet& train) {
    return AnswerVocabulary::from_samples(train.samples);
}

TokenVocab vqa_tokens_from(const AnnotationSet& train) {
    std::vector<std::string> questions;
    questions.reserve(train.samples.size());
    for (const auto& s : train.samples) {
        questions.push_back(s.question);
    }
    return TokenVocab::from_corpus(questions);
}

TokenVocab grounder_tokens_from(const AnnotationSet& train) {
    std::vector<std::string> corpus;
    corpus.reserve(train.samples.size());
    for (const auto& s : train.samples) {
        require(s.answer.has_value(), "grounder vocabulary needs answers; split is missing them");
        corpus.push_back(compose(s.question, *s.answer).text);
    }
    return TokenVocab::from_corpus(corpus);
}

VqaModel load_vqa_model(const RunConfig& c) {
    const AnnotationSet train = load_split(c, "train");
    const AnswerVocabulary vocab = vqa_vocab_from(train);
    const TokenVocab tokens = vqa_tokens_from(train);
    const auto path = c.checkpoint_dir / "vqa.ckpt";
    require(std::filesystem::exists(path), "missing vqa checkpoint at ", path.string(),
            "; run train --stage vqa first");
    const Checkpoint ckpt = load_checkpoint(path);
    require(ckpt.kind == CheckpointKind::Vqa, "checkpoint at ", path.string(), " is ",
            to_string(ckpt.kind), ", expected vqa");
    const std::uint64_t expected = vqa_checkpoint_hash(c, vocab, tokens);
    require(ckpt.config_hash == expected, "vqa checkpoint hash mismatch: file ",
            hash_hex(ckpt.config_hash), " vs current config ", hash_hex(expected));
    VqaModel model = build_vqa_model(vocab, tokens, c.vqa);
    require(ckpt.params.size() == model.params.size(), "vqa checkpoint has ", ckpt.params.size(),
            " parameters, architecture needs ", model.params.size());
    model.params.data() = ckpt.params;
    return model;
}

GrounderState load_grounder_state(const RunConfig& c) {
    GrounderConfig gc = c.grounder;
    gc.vocab = grounder_vocab_from_train(c);
    const bool use_ema = c.ema_enabled && c.ema_for_inference;
    const auto path = c.checkpoint_dir / (use_ema ? "grounder_ema.ckpt" : "grounder.ckpt");
    require(std::filesystem::exists(path), "missing grounder checkpoint at ", path.string(),
            "; run train --stage grounder first");
    const Checkpoint ckpt = load_checkpoint(path);
    const CheckpointKind want = use_ema ? CheckpointKind::GrounderEma : CheckpointKind::GrounderRaw;
    require(ckpt.kind == want, "checkpoint at ", path.string(), " is ", to_string(ckpt.kind),
            ", expected ", to_string(want));
    const std::uint64_t expected = grounder_checkpoint_hash(c, gc.vocab);
    require(ckpt.config_hash == expected, "grounder checkpoint hash mismatch: file ",
            hash_hex(ckpt.config_hash), " vs current config ", hash_hex(expected));
    return grounder_from_params(gc, ckpt.params, ckpt.step);
}

} // namespace

TokenVocab grounder_vocab_from_train(const RunConfig& config) {
    return grounder_tokens_from(load_split(config, "train"));
}

GenDataOutput cmd_gen_data(const RunConfig& config, bool force) {
    const std::vector<DatasetSplitSpec> splits = {
        {"train", config.train_samples, Rng::mix(config.seed, 1)},
        {"val", config.val_samples, Rng::mix(config.seed, 2)},
        {"test", config.test_samples, Rng::mix(config.seed, 3)},
    };
    GenDataOutput out;
    for (const auto& split : splits) {
        const auto dir = split_dir(config, split.name);
        check_overwrite(dir / "annotations.json", force, "split");
        if (force) {
            std::filesystem::remove_all(dir);
        }
        const SplitBuildResult r = build_split(split, config.scene, config.data_root,
                                               config.hash_string());
        out.annotation_files.push_back(r.annotations_path);
    }
    return out;
}

TrainOutput cmd_train(const RunConfig& config, TrainStage stage, bool force) {
    const AnnotationSet train = load_split(config, "train");
    TrainOutput out;

    if (stage == TrainStage::Vqa) {
        const auto path = config.checkpoint_dir / "vqa.ckpt";
        check_overwrite(path, force, "vqa checkpoint");

        std::vector<VqaExample> examples;
        examples.reserve(train.samples.size());
        for (const auto& s : train.samples) {
            require(s.answer.has_value(), "train split sample without answer");
            VqaExample ex;
            ex.frames = load_sampled_frames(config, "train", s.video);
            ex.question = s.question;
            ex.answer = *s.answer;
            examples.push_back(std::move(ex));
        }
        const AnswerVocabulary vocab = vqa_vocab_from(train);
        const VqaModel model = train_vqa(examples, vocab, config.vqa);

        Checkpoint ckpt;
        ckpt.kind = CheckpointKind::Vqa;
        ckpt.config_hash = vqa_checkpoint_hash(config, vocab, model.tokens);
        ckpt.step = static_cast<std::uint64_t>(model.loss_history.size());
        ckpt.params = model.params.data();
        save_checkpoint(path, ckpt);
        out.checkpoint = path;
        out.loss_history = model.loss_history;
        return out;
    }

    const auto raw_path = config.checkpoint_dir / "grounder.ckpt";
    const auto ema_path = config.checkpoint_dir / "grounder_ema.ckpt";
    check_overwrite(raw_path, force, "grounder checkpoint");
    if (config.ema_enabled) {
        check_overwrite(ema_path, force, "grounder EMA checkpoint");
    }

    GrounderConfig gc = config.grounder;
    gc.vocab = grounder_tokens_from(train);

    std::vector<GrounderExample> examples;
    examples.reserve(train.samples.size());
    for (const auto& s : train.samples) {
        require(s.answer.has_value(), "train split sample without answer");
        require(!s.gt_tracks.empty(), "train split sample without ground-truth track");
        GrounderExample ex;
        ex.sampled_indices = sampled_indices_for(config, s.video);
        ex.sampled_frames = load_sampled_frames(config, "train", s.video);
        ex.prompt_text = compose(s.question, *s.answer).text;
        ex.target = target_from_track(s.gt_tracks.front(), ex.sampled_indices, s.video.width,
                                      s.video.height);
        examples.push_back(std::move(ex));
    }

    const TrainedGrounder trained =
        train_grounder(examples, gc, config.grounder_train, config.ema_enabled);

    const std::uint64_t hash = grounder_checkpoint_hash(config, gc.vocab);
    Checkpoint raw;
    raw.kind = CheckpointKind::GrounderRaw;
    raw.config_hash = hash;
    raw.step = trained.state.step;
    raw.params = trained.state.params.data();
    save_checkpoint(raw_path, raw);
    out.checkpoint = raw_path;
    out.loss_history = trained.state.loss_history;

    if (trained.ema.has_value()) {
        Checkpoint ema;
        ema.kind = CheckpointKind::GrounderEma;
        ema.config_hash = hash;
        ema.step = trained.ema->step_count;
        ema.params = ema_extract(*trained.ema);
        save_checkpoint(ema_path, ema);
        out.ema_checkpoint = ema_path;
    }
    return out;
}

std::filesystem::path default_predictions_path(const RunConfig& config, const std::string& split,
                                               AnswerSource source, bool include_answer) {
    std::string name = "predictions_" + split + "_" + to_string(source);
    if (!include_answer) {
        name += "_question_only";
    }
    return config.report_dir / (name + ".json");
}

InferOutput cmd_infer(const RunConfig& config, const std::string& split, AnswerSource source,
                      bool include_answer, bool force) {
    const AnnotationSet set = load_split(config, split);
    const auto out_path = default_predictions_path(config, split, source, include_answer);
    check_overwrite(out_path, force, "predictions file");

    const GrounderState grounder = load_grounder_state(config);
    std::optional<VqaModel> vqa;
    if (source == AnswerSource::Model) {
        vqa = load_vqa_model(config);
    }

    InferStages stages;
    stages.grounder = &grounder;
    stages.vqa = vqa.has_value() ? &*vqa : nullptr;
    stages.external = &config.external;

    InferOptions options;
    options.answer_source = source;
    options.include_answer = include_answer;

    PredictionSet preds;
    preds.config_hash = config.hash_string();
    for (const auto& sample : set.samples) {
        const auto dir = split_dir(config, split) / "frames" / sample.video.video_id;
        const ArchiveHeader header = read_archive_header(dir);
        const FrameProvider provider = [&dir, &header](int idx) {
            return read_archive_frame(dir, header, idx);
        };
        const InferResult r = infer_full(sample, provider, stages, options, config.sampling);

        SamplePrediction p;
        p.video_id = sample.video.video_id;
        p.question = sample.question;
        p.tracks.push_back(r.dense);
        p.confidences.push_back(r.track_confidence);
        preds.samples.push_back(std::move(p));
    }
    write_predictions(out_path, preds);
    return InferOutput{out_path, static_cast<int>(preds.samples.size())};
}

EvalOutput cmd_eval(const RunConfig& config, const std::filesystem::path& predictions,
                    const std::filesystem::path& annotations,
                    const std::filesystem::path& report_path, bool force) {
    require(std::filesystem::exists(predictions), "missing predictions file ",
            predictions.string());
    require(std::filesystem::exists(annotations), "missing annotations file ",
            annotations.string());

    const PredictionSet preds = read_predictions_or_annotations(predictions);
    if (preds.config_hash != "ground-truth") {
        require(preds.config_hash == config.hash_string(),
                "predictions were produced under config hash ", preds.config_hash,
                ", current config is ", config.hash_string());
    }
    const AnnotationSet set = read_annotations(annotations);

    TrackSet gt;
    gt.role = TrackRole::GroundTruth;
    for (const auto& s : set.samples) {
        for (const auto& t : s.gt_tracks) {
            gt.add(s.video.video_id, t);
        }
    }
    TrackSet pred;
    pred.role = TrackRole::Prediction;
    for (const auto& p : preds.samples) {
        for (const auto& t : p.tracks) {
            pred.add(p.video_id, t);
        }
    }

    HOTAReport report = compute_hota(pred, gt);
    report.config_hash = config.hash_string();

    std::filesystem::path out_path = report_path;
    if (out_path.empty()) {
        out_path = config.report_dir / (predictions.stem().string() + "_hota.json");
    }
    check_overwrite(out_path, force, "report");
    write_report(report, out_path);
    return EvalOutput{out_path, std::move(report)};
}

} // namespace gvqa
