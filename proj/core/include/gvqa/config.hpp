#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "gvqa/grounder.hpp"
#include "gvqa/synth.hpp"
#include "gvqa/tubelet.hpp"
#include "gvqa/vqa.hpp"

namespace gvqa {

// Minimal TOML-style file: [sections], key = value pairs, # comments.
// Values are strings ("..."), numbers or booleans; keys flatten to
// "section.key". Unknown keys are ignored.
class ConfigFile {
public:
    static ConfigFile parse_file(const std::filesystem::path& path);
    static ConfigFile parse_string(const std::string& text, const std::string& origin = "<string>");

    [[nodiscard]] bool has(const std::string& key) const;
    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] double get_double(const std::string& key, double fallback) const;
    [[nodiscard]] int get_int(const std::string& key, int fallback) const;
    [[nodiscard]] std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;

private:
    std::map<std::string, std::string> values_; // raw value tokens
    std::string origin_;
};

std::uint64_t fnv1a64(const std::string& text);
std::string hash_hex(std::uint64_t h);

// Effective settings of one run. The artifact hash covers every field here,
// so two runs agree on outputs iff they agree on this struct.
struct RunConfig {
    std::uint64_t seed{42};
    std::filesystem::path data_root{"data"};
    std::filesystem::path checkpoint_dir{"checkpoints"};
    std::filesystem::path report_dir{"reports"};

    SamplingConfig sampling{};
    SceneParams scene{};
    int train_samples{200};
    int val_samples{40};
    int test_samples{40};

    VqaConfig vqa{};

    GrounderConfig grounder{}; // vocab left empty; derived from the train split
    GrounderTrainConfig grounder_train{};

    bool ema_enabled{true};
    double ema_beta{0.999};
    bool ema_for_inference{true};

    AnswerSource answer_source{AnswerSource::Oracle};
    ExternalEndpoint external{};

    static RunConfig from_file(const std::filesystem::path& path);
    static RunConfig from_config(const ConfigFile& file);

    // Deterministic serialization of every effective field.
    [[nodiscard]] std::string canonical() const;
    [[nodiscard]] std::uint64_t hash() const;
    [[nodiscard]] std::string hash_string() const;
};

} // namespace gvqa
