#pragma once

#include <string>

#include "spanqa/corpus.hpp"
#include "spanqa/model.hpp"
#include "spanqa/training.hpp"

namespace spanqa {

// Self-contained trained state: model parameters, the vocabulary and
// embedding they were trained against, and optimizer state for resuming.
// Saving also writes a plain-text manifest at <path>.manifest.
struct Checkpoint {
    SpanModel model;
    Vocabulary vocab;
    std::string embedding_source;  // "random" or "glove:<path>"
    AdamaxState opt_state;
    bool has_opt_state = false;
    int completed_epochs = 0;

    std::uint64_t vocab_hash() const { return vocab.content_hash(); }
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

// Rebuilds the model from the stored config and overwrites its parameters
// by name; refuses containers whose stored vocabulary hash does not match
// the stored tokens.
Checkpoint load_checkpoint(const std::string& path);

std::string checkpoint_manifest_text(const Checkpoint& ckpt);

}  // namespace spanqa
