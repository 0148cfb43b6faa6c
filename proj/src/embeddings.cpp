#include "spanqa/embeddings.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "spanqa/errors.hpp"

namespace spanqa {

namespace {

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; }

// Strict float parse: the whole field must be consumed.
bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

}  // namespace

VectorMap load_vectors(std::istream& source, int expected_dim) {
    VectorMap result;
    std::string line;
    while (std::getline(source, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream iss(line);
        std::string token;
        if (!(iss >> token)) {
            ++result.skipped;  // blank line
            continue;
        }
        std::vector<double> vec;
        vec.reserve(static_cast<std::size_t>(expected_dim));
        std::string field;
        bool ok = true;
        while (iss >> field) {
            double v = 0.0;
            if (!parse_double(field, v)) {
                ok = false;
                break;
            }
            vec.push_back(v);
        }
        if (!ok || static_cast<int>(vec.size()) != expected_dim) {
            ++result.skipped;
            continue;
        }
        for (auto& c : token) c = ascii_lower(c);
        result.vectors.emplace(std::move(token), std::move(vec));  // first occurrence wins
    }
    if (result.vectors.empty())
        throw SchemaError("embedding source contains no parseable " +
                          std::to_string(expected_dim) + "-dimensional vectors");
    return result;
}

VectorMap load_vectors_file(const std::string& path, int expected_dim) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read embedding file: " + path);
    return load_vectors(in, expected_dim);
}

EmbeddingMatrix build_matrix(const Vocabulary& vocab, const VectorMap& vectors, int dim,
                             std::uint64_t seed) {
    EmbeddingMatrix emb;
    emb.dim = dim;
    emb.values = Matrix::zeros(vocab.size(), dim);
    Rng rng(seed);
    // Row 0 stays zero. Row 1 (OOV) and every unmatched token row are random;
    // draw order follows id order so the matrix is seed-deterministic.
    for (int id = Vocabulary::kOovId; id < vocab.size(); ++id) {
        const std::vector<double>* vec = nullptr;
        if (id >= Vocabulary::kFirstTokenId) {
            auto it = vectors.vectors.find(vocab.token_for(id));
            if (it != vectors.vectors.end()) vec = &it->second;
        }
        if (vec != nullptr) {
            for (int j = 0; j < dim; ++j) emb.values(id, j) = (*vec)[static_cast<std::size_t>(j)];
        } else {
            for (int j = 0; j < dim; ++j) emb.values(id, j) = rng.uniform(-0.05, 0.05);
            ++emb.oov_count;
        }
    }
    return emb;
}

EmbeddingMatrix random_matrix(const Vocabulary& vocab, int dim, std::uint64_t seed) {
    return build_matrix(vocab, VectorMap{}, dim, seed);
}

}  // namespace spanqa
