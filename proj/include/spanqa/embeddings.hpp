#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <unordered_map>
#include <vector>

#include "spanqa/corpus.hpp"
#include "spanqa/matrix.hpp"

namespace spanqa {

// vocab_size x dim lookup table. Row 0 (pad) is all zeros; rows for tokens
// found in the pretrained file equal the file's vectors exactly.
struct EmbeddingMatrix {
    Matrix values;
    int dim = 0;
    int oov_count = 0;  // randomly initialized rows (the OOV row included)
    bool trainable = false;
};

struct VectorMap {
    std::unordered_map<std::string, std::vector<double>> vectors;
    std::uint64_t skipped = 0;  // lines whose float count != expected_dim
};

// Reads GloVe-format text: `token v1 v2 ... vD` per line. Tokens are
// lowercased; the first occurrence of a duplicate wins. Throws SchemaError
// when nothing parses.
VectorMap load_vectors(std::istream& source, int expected_dim);
VectorMap load_vectors_file(const std::string& path, int expected_dim);

// Row 0 zeros; the OOV row and every absent-token row drawn uniform(-0.05,
// 0.05) from the seeded generator.
EmbeddingMatrix build_matrix(const Vocabulary& vocab, const VectorMap& vectors, int dim,
                             std::uint64_t seed);

// The `random` embedding source: no file, every token row random.
EmbeddingMatrix random_matrix(const Vocabulary& vocab, int dim, std::uint64_t seed);

}  // namespace spanqa
