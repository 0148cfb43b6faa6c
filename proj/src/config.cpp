#include "spanqa/config.hpp"

#include <cstdio>
#include <cstdlib>

#include "spanqa/errors.hpp"

namespace spanqa {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool parse_i64(const std::string& s, long long& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtoll(s.c_str(), &end, 10);
    return end == s.c_str() + s.size();
}

bool parse_f64(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

bool parse_bool(const std::string& s, bool& out) {
    if (s == "true" || s == "1") {
        out = true;
        return true;
    }
    if (s == "false" || s == "0") {
        out = false;
        return true;
    }
    return false;
}

std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Applies one key, appending a message to issues on failure. Returns false
// for unrecognized keys.
class Applier {
public:
    Applier(RunConfig& cfg, std::vector<std::string>& issues) : cfg_(cfg), issues_(issues) {}

    bool apply(const std::string& key, const std::string& value) {
        if (key == "model.encoder") return set_enum(key, value, true);
        if (key == "model.attention") return set_enum(key, value, false);
        if (key == "model.hidden_size") return set_int(key, value, cfg_.model.hidden_size);
        if (key == "model.attention_dim") return set_int(key, value, cfg_.model.attention_dim);
        if (key == "model.span_length") return set_int(key, value, cfg_.model.span_length);
        if (key == "model.mask_padding") return set_bool(key, value, cfg_.model.mask_padding);
        if (key == "model.seed") return set_u64(key, value, cfg_.model.seed);
        if (key == "embedding.source") {
            if (value != "glove" && value != "random") {
                issues_.push_back(key + ": expected glove|random, got \"" + value + "\"");
                return true;
            }
            cfg_.embedding.source = value;
            return true;
        }
        if (key == "embedding.path") {
            cfg_.embedding.path = value;
            return true;
        }
        if (key == "embedding.dim") return set_int(key, value, cfg_.embedding.dim);
        if (key == "embedding.trainable") return set_bool(key, value, cfg_.embedding.trainable);
        if (key == "embedding.seed") return set_u64(key, value, cfg_.embedding.seed);
        if (key == "train.epochs") return set_int(key, value, cfg_.train.epochs);
        if (key == "train.batch_size") return set_int(key, value, cfg_.train.batch_size);
        if (key == "train.learning_rate") return set_dbl(key, value, cfg_.train.learning_rate);
        if (key == "train.beta1") return set_dbl(key, value, cfg_.train.beta1);
        if (key == "train.beta2") return set_dbl(key, value, cfg_.train.beta2);
        if (key == "train.epsilon") return set_dbl(key, value, cfg_.train.epsilon);
        if (key == "train.shuffle_seed") return set_u64(key, value, cfg_.train.shuffle_seed);
        if (key == "train.checkpoint_every") return set_int(key, value, cfg_.train.checkpoint_every);
        if (key == "train.grad_clip") return set_dbl(key, value, cfg_.train.grad_clip);
        return false;
    }

private:
    bool set_enum(const std::string&, const std::string& value, bool encoder) {
        try {
            if (encoder)
                cfg_.model.encoder = parse_encoder(value);
            else
                cfg_.model.attention = parse_attention(value);
        } catch (const ConfigError& e) {
            issues_.push_back(e.what());
        }
        return true;
    }
    bool set_int(const std::string& key, const std::string& value, int& dst) {
        long long v = 0;
        if (!parse_i64(value, v))
            issues_.push_back(key + ": not an integer: \"" + value + "\"");
        else
            dst = static_cast<int>(v);
        return true;
    }
    bool set_u64(const std::string& key, const std::string& value, std::uint64_t& dst) {
        long long v = 0;
        if (!parse_i64(value, v) || v < 0)
            issues_.push_back(key + ": not a nonnegative integer: \"" + value + "\"");
        else
            dst = static_cast<std::uint64_t>(v);
        return true;
    }
    bool set_dbl(const std::string& key, const std::string& value, double& dst) {
        double v = 0.0;
        if (!parse_f64(value, v))
            issues_.push_back(key + ": not a number: \"" + value + "\"");
        else
            dst = v;
        return true;
    }
    bool set_bool(const std::string& key, const std::string& value, bool& dst) {
        bool v = false;
        if (!parse_bool(value, v))
            issues_.push_back(key + ": expected true|false: \"" + value + "\"");
        else
            dst = v;
        return true;
    }

    RunConfig& cfg_;
    std::vector<std::string>& issues_;
};

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string line =
            nl == std::string::npos ? text.substr(pos) : text.substr(pos, nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

RunConfig run_config_from_text(const std::string& text) {
    RunConfig cfg;
    std::vector<std::string> issues;
    Applier applier(cfg, issues);
    for (const auto& [key, value] : parse_config_text(text)) {
        if (!applier.apply(key, value)) issues.push_back("unknown config key: " + key);
    }
    if (cfg.embedding.source == "glove" && cfg.embedding.path.empty())
        issues.push_back("embedding.path is required when embedding.source = glove");
    if (cfg.embedding.dim < 1) issues.push_back("embedding.dim must be >= 1");
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return cfg;
}

std::string serialize_model_config(const ModelConfig& c) {
    std::string out;
    out += std::string("model.encoder = ") + to_string(c.encoder) + "\n";
    out += std::string("model.attention = ") + to_string(c.attention) + "\n";
    out += "model.hidden_size = " + std::to_string(c.hidden_size) + "\n";
    out += "model.attention_dim = " + std::to_string(c.attention_dim) + "\n";
    out += "model.span_length = " + std::to_string(c.span_length) + "\n";
    out += "model.max_context_len = " + std::to_string(c.max_context_len) + "\n";
    out += "model.max_question_len = " + std::to_string(c.max_question_len) + "\n";
    out += std::string("model.mask_padding = ") + (c.mask_padding ? "true" : "false") + "\n";
    out += "model.seed = " + std::to_string(c.seed) + "\n";
    return out;
}

ModelConfig model_config_from_text(const std::string& text) {
    ModelConfig c;
    std::vector<std::string> issues;
    for (const auto& [key, value] : parse_config_text(text)) {
        try {
            if (key == "model.encoder")
                c.encoder = parse_encoder(value);
            else if (key == "model.attention")
                c.attention = parse_attention(value);
            else if (key == "model.hidden_size")
                c.hidden_size = std::stoi(value);
            else if (key == "model.attention_dim")
                c.attention_dim = std::stoi(value);
            else if (key == "model.span_length")
                c.span_length = std::stoi(value);
            else if (key == "model.max_context_len")
                c.max_context_len = std::stoi(value);
            else if (key == "model.max_question_len")
                c.max_question_len = std::stoi(value);
            else if (key == "model.mask_padding")
                c.mask_padding = (value == "true" || value == "1");
            else if (key == "model.seed")
                c.seed = std::stoull(value);
            else
                issues.push_back("unknown model config key: " + key);
        } catch (const ConfigError& e) {
            issues.push_back(e.what());
        } catch (const std::exception&) {
            issues.push_back(key + ": bad value \"" + value + "\"");
        }
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return c;
}

std::string serialize_run_config(const RunConfig& c) {
    std::string out = serialize_model_config(c.model);
    out += "embedding.source = " + c.embedding.source + "\n";
    out += "embedding.path = " + c.embedding.path + "\n";
    out += "embedding.dim = " + std::to_string(c.embedding.dim) + "\n";
    out += std::string("embedding.trainable = ") + (c.embedding.trainable ? "true" : "false") + "\n";
    out += "embedding.seed = " + std::to_string(c.embedding.seed) + "\n";
    out += "train.epochs = " + std::to_string(c.train.epochs) + "\n";
    out += "train.batch_size = " + std::to_string(c.train.batch_size) + "\n";
    out += "train.learning_rate = " + fmt_double(c.train.learning_rate) + "\n";
    out += "train.beta1 = " + fmt_double(c.train.beta1) + "\n";
    out += "train.beta2 = " + fmt_double(c.train.beta2) + "\n";
    out += "train.epsilon = " + fmt_double(c.train.epsilon) + "\n";
    out += "train.shuffle_seed = " + std::to_string(c.train.shuffle_seed) + "\n";
    out += "train.checkpoint_every = " + std::to_string(c.train.checkpoint_every) + "\n";
    out += "train.grad_clip = " + fmt_double(c.train.grad_clip) + "\n";
    return out;
}

}  // namespace spanqa
