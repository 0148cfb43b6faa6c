#pragma once

#include <map>
#include <string>

#include "spanqa/model.hpp"
#include "spanqa/training.hpp"

namespace spanqa {

struct EmbeddingSettings {
    std::string source = "random";  // glove | random
    std::string path;               // required for glove
    int dim = 300;
    bool trainable = false;
    std::uint64_t seed = 1;
};

// Everything a training run needs besides the dataset. max_context_len and
// max_question_len are not config keys; they come from the prepared dataset.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    EmbeddingSettings embedding;
};

// `key = value` lines, '#' comments, blank lines ignored.
std::map<std::string, std::string> parse_config_text(const std::string& text);

// Applies config keys over the defaults, collecting every violation
// (unknown key, unparseable value, out-of-range setting) into one ConfigError.
RunConfig run_config_from_text(const std::string& text);

std::string serialize_model_config(const ModelConfig& config);
ModelConfig model_config_from_text(const std::string& text);

// Full resolved snapshot for run manifests.
std::string serialize_run_config(const RunConfig& config);

}  // namespace spanqa
