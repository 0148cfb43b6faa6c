#pragma once

#include <string>

#include "spanqa/corpus.hpp"

namespace spanqa {

// Binary container for a prepared dataset. Context token text and padded ids
// are reconstructed from offsets and the stored vocabulary at load time, so
// the file stays compact and writes are byte-identical across reruns.
void write_dataset(const std::string& path, const PreparedDataset& dataset);
PreparedDataset read_dataset(const std::string& path);

// Plain-text counts manifest (total / answerable / dropped / failures).
std::string dataset_manifest_text(const PreparedDataset& dataset);

}  // namespace spanqa
