#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "spanqa/embeddings.hpp"
#include "spanqa/errors.hpp"

using namespace spanqa;

TEST_CASE("load_vectors: basic line") {
    std::istringstream in("cat 0.1 0.2\n");
    const VectorMap m = load_vectors(in, 2);
    REQUIRE(m.vectors.count("cat") == 1);
    CHECK(m.vectors.at("cat") == std::vector<double>{0.1, 0.2});
    CHECK(m.skipped == 0);
}

TEST_CASE("load_vectors: wrong dimension is skipped, later line wins") {
    std::istringstream in("cat 0.1\ncat 0.3 0.4\n");
    const VectorMap m = load_vectors(in, 2);
    CHECK(m.vectors.at("cat") == std::vector<double>{0.3, 0.4});
    CHECK(m.skipped == 1);
}

TEST_CASE("load_vectors: first duplicate wins") {
    std::istringstream in("dog 1 2\ndog 3 4\n");
    const VectorMap m = load_vectors(in, 2);
    CHECK(m.vectors.at("dog") == std::vector<double>{1, 2});
    CHECK(m.skipped == 0);
}

TEST_CASE("load_vectors: tokens are lowercased, junk is skipped") {
    std::istringstream in("CAT 1 2\nbad x y\n\n");
    const VectorMap m = load_vectors(in, 2);
    CHECK(m.vectors.count("cat") == 1);
    CHECK(m.vectors.size() == 1);
    CHECK(m.skipped == 2);  // unparseable floats + blank line
}

TEST_CASE("load_vectors: zero parseable lines") {
    std::istringstream in("one 1 2 3\n");
    CHECK_THROWS_AS(load_vectors(in, 2), SchemaError);
}

TEST_CASE("build_matrix: matched rows copied exactly, pad row zero") {
    const Vocabulary vocab({"cat"});
    VectorMap vectors;
    vectors.vectors["cat"] = {1.0, 2.0};
    const EmbeddingMatrix emb = build_matrix(vocab, vectors, 2, 7);
    REQUIRE(emb.values.rows() == 3);
    CHECK(emb.values(0, 0) == 0.0);
    CHECK(emb.values(0, 1) == 0.0);
    CHECK(emb.values(2, 0) == 1.0);
    CHECK(emb.values(2, 1) == 2.0);
    CHECK(emb.oov_count == 1);  // the OOV row itself
    // coverage: oov rows + matched rows + pad == vocab size
    CHECK(emb.oov_count + 1 + 1 == vocab.size());
}

TEST_CASE("build_matrix: empty vector map randomizes every non-pad row") {
    const Vocabulary vocab({"a", "b", "c"});
    const EmbeddingMatrix emb = random_matrix(vocab, 4, 99);
    CHECK(emb.oov_count == vocab.size() - 1);
    for (int j = 0; j < 4; ++j) CHECK(emb.values(0, j) == 0.0);
    for (int id = 1; id < vocab.size(); ++id) {
        bool nonzero = false;
        for (int j = 0; j < 4; ++j) {
            CHECK(emb.values(id, j) >= -0.05);
            CHECK(emb.values(id, j) < 0.05);
            nonzero = nonzero || emb.values(id, j) != 0.0;
        }
        CHECK(nonzero);
    }
}

TEST_CASE("build_matrix: same seed, same matrix") {
    const Vocabulary vocab({"a", "b", "c", "d"});
    const EmbeddingMatrix e1 = random_matrix(vocab, 8, 1234);
    const EmbeddingMatrix e2 = random_matrix(vocab, 8, 1234);
    const EmbeddingMatrix e3 = random_matrix(vocab, 8, 1235);
    REQUIRE(e1.values.size() == e2.values.size());
    bool same12 = true, same13 = true;
    for (std::size_t i = 0; i < e1.values.size(); ++i) {
        same12 = same12 && e1.values[i] == e2.values[i];
        same13 = same13 && e1.values[i] == e3.values[i];
    }
    CHECK(same12);
    CHECK_FALSE(same13);
}
