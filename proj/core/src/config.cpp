#include "gvqa/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gvqa/error.hpp"

namespace gvqa {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

ConfigFile ConfigFile::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "config: cannot open ", path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path.string());
}

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash_pos = line.find('#');
        if (hash_pos != std::string::npos) {
            // Keep # inside quoted strings.
            const std::size_t q1 = line.find('"');
            if (q1 == std::string::npos || hash_pos < q1) {
                line = line.substr(0, hash_pos);
            }
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            require(line.back() == ']', "config: unterminated section at ", origin, ":", line_no);
            section = trim(line.substr(1, line.size() - 2));
            require(!section.empty(), "config: empty section name at ", origin, ":", line_no);
            continue;
        }
        const std::size_t eq = line.find('=');
        require(eq != std::string::npos, "config: expected key = value at ", origin, ":", line_no);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        require(!key.empty(), "config: empty key at ", origin, ":", line_no);
        require(!value.empty(), "config: empty value at ", origin, ":", line_no);
        if (!section.empty()) {
            key = section + "." + key;
        }
        cfg.values_[key] = value;
    }
    return cfg;
}

bool ConfigFile::has(const std::string& key) const {
    return values_.count(key) > 0;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    const std::string& raw = it->second;
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
        return raw.substr(1, raw.size() - 2);
    }
    return raw;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        require(pos == it->second.size(), "trailing characters");
        return v;
    } catch (const std::exception&) {
        raise("config: value of \"", key, "\" is not a number: ", it->second);
    }
}

int ConfigFile::get_int(const std::string& key, int fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    try {
        std::size_t pos = 0;
        const int v = std::stoi(it->second, &pos);
        require(pos == it->second.size(), "trailing characters");
        return v;
    } catch (const std::exception&) {
        raise("config: value of \"", key, "\" is not an integer: ", it->second);
    }
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(it->second, &pos);
        require(pos == it->second.size(), "trailing characters");
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        raise("config: value of \"", key, "\" is not an unsigned integer: ", it->second);
    }
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    if (it->second == "true") {
        return true;
    }
    if (it->second == "false") {
        return false;
    }
    raise("config: value of \"", key, "\" is not a boolean: ", it->second);
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return s;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    return from_config(ConfigFile::parse_file(path));
}

RunConfig RunConfig::from_config(const ConfigFile& f) {
    RunConfig c;
    c.seed = f.get_u64("seed", c.seed);
    c.data_root = f.get_string("data_root", c.data_root.string());
    c.checkpoint_dir = f.get_string("checkpoint_dir", c.checkpoint_dir.string());
    c.report_dir = f.get_string("report_dir", c.report_dir.string());
    if (const char* env_root = std::getenv("GVQA_DATA_ROOT")) {
        c.data_root = env_root;
    }

    c.sampling.target_fps = f.get_double("sampling.target_fps", c.sampling.target_fps);
    c.sampling.max_sampled_frames =
        f.get_int("sampling.max_sampled_frames", c.sampling.max_sampled_frames);
    c.sampling.duplication_factor =
        f.get_int("sampling.duplication_factor", c.sampling.duplication_factor);

    c.scene.canvas_width = f.get_int("dataset.canvas_width", c.scene.canvas_width);
    c.scene.canvas_height = f.get_int("dataset.canvas_height", c.scene.canvas_height);
    c.scene.native_fps = f.get_double("dataset.native_fps", c.scene.native_fps);
    c.scene.min_frames = f.get_int("dataset.min_frames", c.scene.min_frames);
    c.scene.max_frames = f.get_int("dataset.max_frames", c.scene.max_frames);
    c.scene.min_objects = f.get_int("dataset.min_objects", c.scene.min_objects);
    c.scene.max_objects = f.get_int("dataset.max_objects", c.scene.max_objects);
    c.scene.min_size = f.get_double("dataset.min_size", c.scene.min_size);
    c.scene.max_size = f.get_double("dataset.max_size", c.scene.max_size);
    c.scene.max_speed = f.get_double("dataset.max_speed", c.scene.max_speed);
    c.train_samples = f.get_int("dataset.train_samples", c.train_samples);
    c.val_samples = f.get_int("dataset.val_samples", c.val_samples);
    c.test_samples = f.get_int("dataset.test_samples", c.test_samples);

    c.vqa.epochs = f.get_int("vqa.epochs", c.vqa.epochs);
    c.vqa.learning_rate = f.get_double("vqa.learning_rate", c.vqa.learning_rate);
    c.vqa.batch_size = f.get_int("vqa.batch_size", c.vqa.batch_size);
    c.vqa.embed_dim = f.get_int("vqa.embed_dim", c.vqa.embed_dim);
    c.vqa.hidden_dim = f.get_int("vqa.hidden_dim", c.vqa.hidden_dim);
    c.vqa.seed = c.seed;

    c.grounder.model_dim = f.get_int("grounder.model_dim", c.grounder.model_dim);
    c.grounder.heads = f.get_int("grounder.heads", c.grounder.heads);
    c.grounder.encoder_layers = f.get_int("grounder.encoder_layers", c.grounder.encoder_layers);
    c.grounder.decoder_layers = f.get_int("grounder.decoder_layers", c.grounder.decoder_layers);
    c.grounder.ffn_dim = f.get_int("grounder.ffn_dim", c.grounder.ffn_dim);
    c.grounder.text_embed_dim = f.get_int("grounder.text_embed_dim", c.grounder.text_embed_dim);
    c.grounder.conv1_channels = f.get_int("grounder.conv1_channels", c.grounder.conv1_channels);
    c.grounder.conv2_channels = f.get_int("grounder.conv2_channels", c.grounder.conv2_channels);
    c.grounder.input_pool = f.get_int("grounder.input_pool", c.grounder.input_pool);
    c.grounder.max_sampled_frames = c.sampling.max_sampled_frames;
    c.grounder.lambda_l1 = f.get_double("grounder.lambda_l1", c.grounder.lambda_l1);
    c.grounder.lambda_giou = f.get_double("grounder.lambda_giou", c.grounder.lambda_giou);

    c.grounder_train.epochs = f.get_int("grounder.epochs", c.grounder_train.epochs);
    c.grounder_train.learning_rate = f.get_double("grounder.learning_rate",
                                                  c.grounder_train.learning_rate);
    c.grounder_train.seed = c.seed;

    c.ema_enabled = f.get_bool("ema.enabled", c.ema_enabled);
    c.ema_beta = f.get_double("ema.beta", c.ema_beta);
    c.ema_for_inference = f.get_bool("ema.use_for_inference", c.ema_for_inference);
    c.grounder_train.ema_beta = c.ema_beta;

    const std::string source = f.get_string("infer.answer_source", "oracle");
    if (source == "oracle") {
        c.answer_source = AnswerSource::Oracle;
    } else if (source == "model") {
        c.answer_source = AnswerSource::Model;
    } else if (source == "external") {
        c.answer_source = AnswerSource::External;
    } else {
        raise("config: infer.answer_source must be model, oracle or external, got \"", source,
              "\"");
    }
    c.external.host = f.get_string("external.host", c.external.host);
    c.external.port = f.get_int("external.port", c.external.port);
    c.external.path = f.get_string("external.path", c.external.path);
    c.external.timeout_ms = f.get_int("external.timeout_ms", c.external.timeout_ms);
    return c;
}

std::string RunConfig::canonical() const {
    std::ostringstream os;
    os.precision(17);
    os << "seed=" << seed << "\n";
    os << "sampling.target_fps=" << sampling.target_fps << "\n";
    os << "sampling.max_sampled_frames=" << sampling.max_sampled_frames << "\n";
    os << "sampling.duplication_factor=" << sampling.duplication_factor << "\n";
    os << "dataset.canvas_width=" << scene.canvas_width << "\n";
    os << "dataset.canvas_height=" << scene.canvas_height << "\n";
    os << "dataset.native_fps=" << scene.native_fps << "\n";
    os << "dataset.min_frames=" << scene.min_frames << "\n";
    os << "dataset.max_frames=" << scene.max_frames << "\n";
    os << "dataset.min_objects=" << scene.min_objects << "\n";
    os << "dataset.max_objects=" << scene.max_objects << "\n";
    os << "dataset.min_size=" << scene.min_size << "\n";
    os << "dataset.max_size=" << scene.max_size << "\n";
    os << "dataset.max_speed=" << scene.max_speed << "\n";
    os << "dataset.train_samples=" << train_samples << "\n";
    os << "dataset.val_samples=" << val_samples << "\n";
    os << "dataset.test_samples=" << test_samples << "\n";
    os << "vqa.epochs=" << vqa.epochs << "\n";
    os << "vqa.learning_rate=" << vqa.learning_rate << "\n";
    os << "vqa.batch_size=" << vqa.batch_size << "\n";
    os << "vqa.embed_dim=" << vqa.embed_dim << "\n";
    os << "vqa.hidden_dim=" << vqa.hidden_dim << "\n";
    os << "grounder.model_dim=" << grounder.model_dim << "\n";
    os << "grounder.heads=" << grounder.heads << "\n";
    os << "grounder.encoder_layers=" << grounder.encoder_layers << "\n";
    os << "grounder.decoder_layers=" << grounder.decoder_layers << "\n";
    os << "grounder.ffn_dim=" << grounder.ffn_dim << "\n";
    os << "grounder.text_embed_dim=" << grounder.text_embed_dim << "\n";
    os << "grounder.conv1_channels=" << grounder.conv1_channels << "\n";
    os << "grounder.conv2_channels=" << grounder.conv2_channels << "\n";
    os << "grounder.input_pool=" << grounder.input_pool << "\n";
    os << "grounder.lambda_l1=" << grounder.lambda_l1 << "\n";
    os << "grounder.lambda_giou=" << grounder.lambda_giou << "\n";
    os << "grounder.epochs=" << grounder_train.epochs << "\n";
    os << "grounder.learning_rate=" << grounder_train.learning_rate << "\n";
    os << "ema.enabled=" << (ema_enabled ? "true" : "false") << "\n";
    os << "ema.beta=" << ema_beta << "\n";
    os << "ema.use_for_inference=" << (ema_for_inference ? "true" : "false") << "\n";
    return os.str();
}

std::uint64_t RunConfig::hash() const {
    return fnv1a64(canonical());
}

std::string RunConfig::hash_string() const {
    return hash_hex(hash());
}

} // namespace gvqa
