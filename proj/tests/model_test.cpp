#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <tuple>

#include "spanqa/errors.hpp"
#include "spanqa/model.hpp"
#include "spanqa/rng.hpp"

using namespace spanqa;

namespace {

Matrix random_matrix_values(int rows, int cols, Rng& rng, double scale = 1.0) {
    return Matrix::uniform(rows, cols, -scale, scale, rng);
}

Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

SpanDistribution random_distribution(int n, Rng& rng) {
    SpanDistribution d;
    d.start_probs.resize(static_cast<std::size_t>(n));
    d.end_probs.resize(static_cast<std::size_t>(n));
    double ssum = 0.0, esum = 0.0;
    for (int i = 0; i < n; ++i) {
        d.start_probs[static_cast<std::size_t>(i)] = rng.uniform01() + 1e-9;
        d.end_probs[static_cast<std::size_t>(i)] = rng.uniform01() + 1e-9;
        ssum += d.start_probs[static_cast<std::size_t>(i)];
        esum += d.end_probs[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < n; ++i) {
        d.start_probs[static_cast<std::size_t>(i)] /= ssum;
        d.end_probs[static_cast<std::size_t>(i)] /= esum;
    }
    return d;
}

// Independent of decode_span's banded loop: scans every (i, j) pair and
// applies the validity predicate directly.
std::tuple<int, int, double> exhaustive_argmax(const Matrix& joint, int span_length,
                                               int pad_offset) {
    const int n = joint.rows();
    int best_i = -1, best_j = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const bool valid = i >= pad_offset && j >= i && (j - i + 1) <= span_length;
            if (!valid) continue;
            if (joint(i, j) > best) {
                best = joint(i, j);
                best_i = i;
                best_j = j;
            }
        }
    }
    return {best_i, best_j, best};
}

std::vector<OffsetToken> dummy_tokens(int count) {
    std::vector<OffsetToken> toks;
    for (int i = 0; i < count; ++i) toks.push_back(OffsetToken{"t", 2 * i, 2 * i + 1});
    return toks;
}

EncoderParams make_encoder_params(const ModelConfig& cfg, int input_dim, Rng& rng) {
    EncoderParams p;
    const int h = cfg.hidden_size;
    auto lstm = [&rng, h](int in) {
        return LstmParams{random_matrix_values(in, 4 * h, rng, 0.3),
                          random_matrix_values(h, 4 * h, rng, 0.3),
                          random_matrix_values(1, 4 * h, rng, 0.1)};
    };
    switch (cfg.encoder) {
        case EncoderKind::kVanilla:
            p.forward_layers.push_back(lstm(input_dim));
            break;
        case EncoderKind::kBilstm:
            p.forward_layers.push_back(lstm(input_dim));
            p.backward_layers.push_back(lstm(input_dim));
            break;
        case EncoderKind::kStacked3:
            p.forward_layers.push_back(lstm(input_dim));
            p.forward_layers.push_back(lstm(h));
            p.forward_layers.push_back(lstm(h));
            break;
    }
    return p;
}

}  // namespace

TEST_CASE("embed: row lookup") {
    EmbeddingMatrix emb;
    emb.dim = 2;
    emb.values = Matrix(8, 2);
    for (int i = 0; i < 8; ++i) {
        emb.values(i, 0) = i;
        emb.values(i, 1) = 10 + i;
    }
    for (int j = 0; j < 2; ++j) emb.values(0, j) = 0.0;

    const Matrix pad = embed({0}, emb);
    CHECK(pad(0, 0) == 0.0);
    CHECK(pad(0, 1) == 0.0);

    const Matrix twice = embed({2, 2}, emb);
    CHECK(twice(0, 0) == twice(1, 0));
    CHECK(twice(0, 1) == twice(1, 1));

    const Matrix padded = embed({0, 0, 0, 7}, emb);
    CHECK(padded(0, 0) == 0.0);
    CHECK(padded(2, 1) == 0.0);
    CHECK(padded(3, 0) == 7.0);
    CHECK(padded(3, 1) == 17.0);

    CHECK_THROWS_AS(embed({8}, emb), LookupError);
    CHECK_THROWS_AS(embed({-1}, emb), LookupError);
}

TEST_CASE("encode: output shapes per variant") {
    Rng rng(11);
    const Matrix x = random_matrix_values(5, 3, rng);

    ModelConfig cfg;
    cfg.hidden_size = 8;

    cfg.encoder = EncoderKind::kVanilla;
    CHECK(encode(x, cfg, make_encoder_params(cfg, 3, rng)).values.rows() == 5);
    CHECK(encode(x, cfg, make_encoder_params(cfg, 3, rng)).values.cols() == 8);

    cfg.encoder = EncoderKind::kBilstm;
    CHECK(encode(x, cfg, make_encoder_params(cfg, 3, rng)).values.cols() == 16);

    cfg.encoder = EncoderKind::kStacked3;
    CHECK(encode(x, cfg, make_encoder_params(cfg, 3, rng)).values.cols() == 8);
}

TEST_CASE("encode: deterministic") {
    Rng rng(12);
    const Matrix x = random_matrix_values(6, 4, rng);
    ModelConfig cfg;
    cfg.encoder = EncoderKind::kBilstm;
    cfg.hidden_size = 5;
    const EncoderParams params = make_encoder_params(cfg, 4, rng);
    const HiddenStates a = encode(x, cfg, params);
    const HiddenStates b = encode(x, cfg, params);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
}

TEST_CASE("encode: bilstm forward half matches vanilla with tied weights") {
    Rng rng(13);
    const Matrix x = random_matrix_values(7, 3, rng);
    ModelConfig bicfg;
    bicfg.encoder = EncoderKind::kBilstm;
    bicfg.hidden_size = 8;
    const EncoderParams bi = make_encoder_params(bicfg, 3, rng);

    ModelConfig vcfg = bicfg;
    vcfg.encoder = EncoderKind::kVanilla;
    EncoderParams vanilla;
    vanilla.forward_layers.push_back(bi.forward_layers[0]);  // tie the forward weights

    const HiddenStates hbi = encode(x, bicfg, bi);
    const HiddenStates hv = encode(x, vcfg, vanilla);
    const int last = 6;
    for (int j = 0; j < 8; ++j)
        CHECK(hbi.values(last, j) == doctest::Approx(hv.values(last, j)).epsilon(1e-12));
}

TEST_CASE("encode: mask_padding zeroes the pad prefix") {
    Rng rng(14);
    const Matrix x = random_matrix_values(5, 3, rng);
    ModelConfig cfg;
    cfg.encoder = EncoderKind::kBilstm;
    cfg.hidden_size = 4;
    const EncoderParams params = make_encoder_params(cfg, 3, rng);

    cfg.mask_padding = true;
    const HiddenStates masked = encode(x, cfg, params, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < masked.values.cols(); ++j) CHECK(masked.values(i, j) == 0.0);
    bool real_nonzero = false;
    for (int j = 0; j < masked.values.cols(); ++j)
        real_nonzero = real_nonzero || masked.values(4, j) != 0.0;
    CHECK(real_nonzero);

    cfg.mask_padding = false;
    const HiddenStates unmasked = encode(x, cfg, params, 2);
    bool prefix_nonzero = false;
    for (int j = 0; j < unmasked.values.cols(); ++j)
        prefix_nonzero = prefix_nonzero || unmasked.values(0, j) != 0.0;
    CHECK(prefix_nonzero);  // pad steps processed as ordinary inputs
}

TEST_CASE("alignment_matrix: identity oracle") {
    // W = I, so each row softmaxes (1, 0) -> (e/(e+1), 1/(e+1))
    const Matrix a = alignment_matrix(identity(2), identity(2));
    CHECK(a(0, 0) == doctest::Approx(0.7310585786).epsilon(1e-9));
    CHECK(a(0, 1) == doctest::Approx(0.2689414214).epsilon(1e-9));
    CHECK(a(1, 0) == doctest::Approx(0.2689414214).epsilon(1e-9));
    CHECK(a(1, 1) == doctest::Approx(0.7310585786).epsilon(1e-9));

    // Uq = A * Hq = A when Hq is the identity
    const Matrix uq = matmul(a, identity(2));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(uq(i, j) == doctest::Approx(a(i, j)));
}

TEST_CASE("c2q: single question token attends fully") {
    Rng rng(21);
    const Matrix hc = random_matrix_values(4, 3, rng);
    const Matrix hq = random_matrix_values(1, 3, rng);
    const Matrix a = alignment_matrix(hc, hq);
    for (int i = 0; i < 4; ++i) CHECK(a(i, 0) == doctest::Approx(1.0));
    const Matrix uq = matmul(a, hq);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) CHECK(uq(i, j) == doctest::Approx(hq(0, j)));
}

TEST_CASE("c2q: identical context rows give identical output rows") {
    Rng rng(22);
    Matrix hc(3, 4);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) hc(i, j) = 0.3 * j - 0.1;
    const Matrix hq = random_matrix_values(5, 4, rng);
    const Matrix wd = random_matrix_values(8, 6, rng);
    const Matrix bd = random_matrix_values(1, 6, rng);
    const Matrix out = c2q_attention(hc, hq, wd, bd);
    REQUIRE(out.rows() == 3);
    REQUIRE(out.cols() == 6);
    for (int i = 1; i < 3; ++i)
        for (int j = 0; j < 6; ++j) CHECK(out(i, j) == doctest::Approx(out(0, j)));
}

TEST_CASE("c2q: invariant under question row permutation") {
    Rng rng(23);
    const Matrix hc = random_matrix_values(5, 4, rng);
    Matrix hq = random_matrix_values(6, 4, rng);
    const Matrix wd = random_matrix_values(8, 7, rng);
    const Matrix bd = random_matrix_values(1, 7, rng);
    const Matrix base = c2q_attention(hc, hq, wd, bd);

    Matrix permuted(6, 4);
    const int perm[6] = {3, 0, 5, 1, 4, 2};
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 4; ++j) permuted(i, j) = hq(perm[i], j);
    const Matrix shuffled = c2q_attention(hc, permuted, wd, bd);
    for (std::size_t i = 0; i < base.size(); ++i)
        CHECK(std::fabs(base[i] - shuffled[i]) <= 1e-6);
}

TEST_CASE("q2c: single context row passes through") {
    Rng rng(31);
    const Matrix hc = random_matrix_values(1, 4, rng);
    const Matrix hq = random_matrix_values(3, 4, rng);
    const Matrix out = q2c_attention(hc, hq);
    REQUIRE(out.rows() == 1);
    for (int j = 0; j < 4; ++j) CHECK(out(0, j) == doctest::Approx(hc(0, j)));
}

TEST_CASE("q2c: all output rows identical") {
    Rng rng(32);
    const Matrix hc = random_matrix_values(6, 5, rng);
    const Matrix hq = random_matrix_values(4, 5, rng);
    const Matrix out = q2c_attention(hc, hq);
    for (int i = 1; i < out.rows(); ++i)
        for (int j = 0; j < out.cols(); ++j) CHECK(out(i, j) == out(0, j));
}

TEST_CASE("q2c: saturated max picks the dominant row") {
    // W = Hc * Hq^T = [24, 0, 4]^T; the margin of 20 saturates the softmax
    Matrix hc(3, 2);
    hc(0, 0) = 6.0;
    hc(1, 1) = 1.0;
    hc(2, 0) = 1.0;
    hc(2, 1) = 1.0;
    Matrix hq(1, 2);
    hq(0, 0) = 4.0;
    const Matrix out = q2c_attention(hc, hq);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::fabs(out(i, 0) - 6.0) <= 1e-6);
        CHECK(std::fabs(out(i, 1) - 0.0) <= 1e-6);
    }
}

TEST_CASE("bidaf_merge: concatenation layout") {
    Rng rng(41);
    const Matrix hc = random_matrix_values(3, 4, rng);
    const Matrix c2q_out = random_matrix_values(3, 6, rng);
    const Matrix q2c_zero(3, 4);
    const Matrix merged = bidaf_merge(hc, c2q_out, q2c_zero);
    REQUIRE(merged.cols() == 14);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 4; ++j) CHECK(merged(i, j) == hc(i, j));
        for (int j = 0; j < 6; ++j) CHECK(merged(i, 4 + j) == c2q_out(i, j));
        for (int j = 0; j < 4; ++j) CHECK(merged(i, 10 + j) == 0.0);
    }
    CHECK_THROWS_AS(bidaf_merge(hc, random_matrix_values(2, 6, rng), q2c_zero), ShapeError);
}

TEST_CASE("bilinear: zero weights give the uniform distribution") {
    Rng rng(51);
    const Matrix f = random_matrix_values(5, 3, rng);
    const Matrix ws(3, 2);
    const Matrix we = random_matrix_values(3, 2, rng);
    const SpanDistribution d = bilinear_span_distribution(f, {0.4, -0.2}, ws, we);
    for (double p : d.start_probs) CHECK(p == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("bilinear: single position") {
    Rng rng(52);
    const Matrix f = random_matrix_values(1, 3, rng);
    const Matrix ws = random_matrix_values(3, 2, rng);
    const SpanDistribution d = bilinear_span_distribution(f, {1.0, 2.0}, ws, ws);
    CHECK(d.start_probs == std::vector<double>{1.0});
    CHECK(d.end_probs == std::vector<double>{1.0});
}

TEST_CASE("bilinear: hand-computed softmax oracle") {
    Matrix f = identity(2);
    Matrix ws(2, 1), we(2, 1);
    ws(0, 0) = 2.0;
    we(1, 0) = 2.0;
    const SpanDistribution d = bilinear_span_distribution(f, {1.0}, ws, we);
    CHECK(d.start_probs[0] == doctest::Approx(0.8807970780).epsilon(1e-9));
    CHECK(d.start_probs[1] == doctest::Approx(0.1192029220).epsilon(1e-9));
    CHECK(d.end_probs[0] == doctest::Approx(0.1192029220).epsilon(1e-9));
    CHECK(d.end_probs[1] == doctest::Approx(0.8807970780).epsilon(1e-9));
}

TEST_CASE("span_joint: band and values") {
    SpanDistribution d;
    d.start_probs = {0.6, 0.4};
    d.end_probs = {0.3, 0.7};
    const Matrix j = span_joint(d, 2);
    CHECK(j(0, 0) == doctest::Approx(0.18));
    CHECK(j(0, 1) == doctest::Approx(0.42));
    CHECK(j(1, 0) == 0.0);
    CHECK(j(1, 1) == doctest::Approx(0.28));

    const Matrix diag = span_joint(d, 1);
    CHECK(diag(0, 1) == 0.0);
    CHECK(diag(0, 0) == doctest::Approx(0.18));

    SpanDistribution single;
    single.start_probs = {1.0};
    single.end_probs = {1.0};
    CHECK(span_joint(single, 5)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("span_joint: zero outside the valid band") {
    Rng rng(61);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(12));
        const int span = 1 + static_cast<int>(rng.below(5));
        const Matrix j = span_joint(random_distribution(n, rng), span);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if (b < a || b > a + span - 1) CHECK(j(a, b) == 0.0);
    }
}

TEST_CASE("decode_span: continues the joint example") {
    SpanDistribution d;
    d.start_probs = {0.6, 0.4};
    d.end_probs = {0.3, 0.7};
    const Matrix j = span_joint(d, 2);
    const std::string text = "ab cd";
    const std::vector<OffsetToken> toks = {{"ab", 0, 2}, {"cd", 3, 5}};
    const SpanPrediction p = decode_span(j, 2, 0, toks, text);
    CHECK(p.span.start == 0);
    CHECK(p.span.end == 1);
    CHECK(p.joint_prob == doctest::Approx(0.42));
    CHECK(p.answer_text == "ab cd");
}

TEST_CASE("decode_span: tie-break picks the smallest (i, j)") {
    SpanDistribution d;
    d.start_probs = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    d.end_probs = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    const SpanPrediction p = decode_span(span_joint(d, 3), 3, 0, dummy_tokens(3), "t t t");
    CHECK(p.span.start == 0);
    CHECK(p.span.end == 0);
}

TEST_CASE("decode_span: excludes the pad prefix and maps to unpadded coordinates") {
    SpanDistribution d;
    d.start_probs = {0.9, 0.05, 0.05};
    d.end_probs = {0.9, 0.05, 0.05};
    // position 0 dominates but lies in the pad prefix
    const std::string text = "x y";
    const std::vector<OffsetToken> toks = {{"x", 0, 1}, {"y", 2, 3}};
    const SpanPrediction p = decode_span(span_joint(d, 3), 3, 1, toks, text);
    CHECK(p.span.start == 0);
    CHECK(p.span.end == 0);
    CHECK(p.answer_text == "x");
    CHECK_FALSE(p.degenerate);
}

TEST_CASE("decode_span: degenerate when everything is padding") {
    SpanDistribution d;
    d.start_probs = {0.5, 0.5};
    d.end_probs = {0.5, 0.5};
    const SpanPrediction p = decode_span(span_joint(d, 2), 2, 2, {}, "");
    CHECK(p.degenerate);
    CHECK(p.answer_text.empty());
    CHECK(p.joint_prob == 0.0);
}

TEST_CASE("decode_span: matches the exhaustive oracle") {
    Rng rng(71);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(20));
        const int span = 1 + static_cast<int>(rng.below(6));
        const int pad = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        const SpanDistribution d = random_distribution(n, rng);
        const Matrix j = span_joint(d, span);
        const auto [bi, bj, bv] = exhaustive_argmax(j, span, pad);
        const SpanPrediction p = decode_span(j, span, pad, dummy_tokens(n - pad), std::string(2 * n, 'x'));
        REQUIRE(bi >= 0);
        CHECK(p.span.start == bi - pad);
        CHECK(p.span.end == bj - pad);
        CHECK(p.joint_prob == doctest::Approx(bv));
    }
}

TEST_CASE("decode_span: argmax invariant under positive scaling") {
    Rng rng(72);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(15));
        SpanDistribution d = random_distribution(n, rng);
        const SpanPrediction base =
            decode_span(span_joint(d, 5), 5, 0, dummy_tokens(n), std::string(2 * n, 'x'));
        SpanDistribution scaled = d;
        const double cs = 0.1 + 3.0 * rng.uniform01();
        const double ce = 0.1 + 3.0 * rng.uniform01();
        for (auto& v : scaled.start_probs) v *= cs;
        for (auto& v : scaled.end_probs) v *= ce;
        const SpanPrediction after =
            decode_span(span_joint(scaled, 5), 5, 0, dummy_tokens(n), std::string(2 * n, 'x'));
        CHECK(after.span.start == base.span.start);
        CHECK(after.span.end == base.span.end);
    }
}

TEST_CASE("span_loss: identities") {
    SpanDistribution perfect;
    perfect.start_probs = {0.0, 1.0};
    perfect.end_probs = {0.0, 1.0};
    CHECK(span_loss(perfect, {0, 1, 0, 1}) == doctest::Approx(0.0).epsilon(1e-12));

    SpanDistribution uniform;
    uniform.start_probs = {0.25, 0.25, 0.25, 0.25};
    uniform.end_probs = {0.25, 0.25, 0.25, 0.25};
    std::vector<std::uint8_t> target(8, 0);
    target[1] = 1;
    target[4 + 2] = 1;
    CHECK(span_loss(uniform, target) == doctest::Approx(2.0 * std::log(4.0)).epsilon(1e-12));
    CHECK(span_loss(uniform, target) == doctest::Approx(2.7725887222).epsilon(1e-9));

    SpanDistribution half;
    half.start_probs = {0.5, 0.5};
    half.end_probs = {0.25, 0.75};
    CHECK(span_loss(half, {1, 0, 1, 0}) ==
          doctest::Approx(std::log(2.0) + std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("span_loss: malformed targets are contract errors") {
    SpanDistribution d;
    d.start_probs = {0.5, 0.5};
    d.end_probs = {0.5, 0.5};
    CHECK_THROWS_AS(span_loss(d, {1, 1, 0, 1}), ContractError);
    CHECK_THROWS_AS(span_loss(d, {0, 0, 0, 1}), ContractError);
    CHECK_THROWS_AS(span_loss(d, {1, 0, 0}), ContractError);
}

TEST_CASE("softmax outputs are nonnegative and sum to one") {
    Rng rng(81);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(8));
        const int m = 1 + static_cast<int>(rng.below(8));
        const Matrix a =
            alignment_matrix(random_matrix_values(n, 4, rng, 3.0), random_matrix_values(m, 4, rng, 3.0));
        for (int i = 0; i < n; ++i) {
            double sum = 0.0;
            for (int j = 0; j < m; ++j) {
                CHECK(a(i, j) >= 0.0);
                sum += a(i, j);
            }
            CHECK(std::fabs(sum - 1.0) <= 1e-6);
        }

        // the bilinear position softmaxes obey the same invariant
        const Matrix f = random_matrix_values(n, 3, rng, 2.0);
        const Matrix ws = random_matrix_values(3, 2, rng, 2.0);
        const Matrix we = random_matrix_values(3, 2, rng, 2.0);
        const SpanDistribution d = bilinear_span_distribution(f, {0.7, -1.3}, ws, we);
        double ssum = 0.0, esum = 0.0;
        for (int i = 0; i < n; ++i) {
            CHECK(d.start_probs[static_cast<std::size_t>(i)] >= 0.0);
            CHECK(d.end_probs[static_cast<std::size_t>(i)] >= 0.0);
            ssum += d.start_probs[static_cast<std::size_t>(i)];
            esum += d.end_probs[static_cast<std::size_t>(i)];
        }
        CHECK(std::fabs(ssum - 1.0) <= 1e-6);
        CHECK(std::fabs(esum - 1.0) <= 1e-6);
    }
}

TEST_CASE("ModelConfig::validate collects every issue") {
    ModelConfig cfg;
    cfg.hidden_size = 0;
    cfg.span_length = 50;
    cfg.max_context_len = 10;
    cfg.max_question_len = 0;
    try {
        cfg.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.issues().size() == 3);
        bool names_both = false;
        for (const auto& issue : e.issues())
            names_both = names_both || (issue.find("50") != std::string::npos &&
                                        issue.find("10") != std::string::npos);
        CHECK(names_both);
    }
}

TEST_CASE("SpanModel: forward distributions are normalized and seed-deterministic") {
    ModelConfig cfg;
    cfg.encoder = EncoderKind::kBilstm;
    cfg.attention = AttentionKind::kC2q;
    cfg.hidden_size = 6;
    cfg.span_length = 3;
    cfg.max_context_len = 5;
    cfg.max_question_len = 3;
    cfg.seed = 42;

    const Vocabulary vocab({"a", "b", "c", "d"});
    const EmbeddingMatrix emb = [] {
        Rng r(5);
        EmbeddingMatrix e;
        e.dim = 4;
        e.values = Matrix::uniform(6, 4, -0.1, 0.1, r);
        for (int j = 0; j < 4; ++j) e.values(0, j) = 0.0;
        return e;
    }();

    const SpanModel m1(cfg, emb);
    const SpanModel m2(cfg, emb);
    const std::vector<int> ctx{0, 2, 3, 4, 5};
    const std::vector<int> q{0, 2, 5};

    const SpanDistribution d1 = m1.forward(ctx, 1, q, 1);
    const SpanDistribution d2 = m2.forward(ctx, 1, q, 1);
    REQUIRE(d1.start_probs.size() == 5);
    double sum = 0.0;
    for (double p : d1.start_probs) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t i = 0; i < d1.start_probs.size(); ++i) {
        CHECK(d1.start_probs[i] == d2.start_probs[i]);
        CHECK(d1.end_probs[i] == d2.end_probs[i]);
    }
}

TEST_CASE("SpanModel: tape loss equals the plain span_loss") {
    for (AttentionKind attn : {AttentionKind::kNone, AttentionKind::kC2q, AttentionKind::kBidaf}) {
        for (EncoderKind enc :
             {EncoderKind::kVanilla, EncoderKind::kBilstm, EncoderKind::kStacked3}) {
            ModelConfig cfg;
            cfg.encoder = enc;
            cfg.attention = attn;
            cfg.hidden_size = 4;
            cfg.span_length = 2;
            cfg.max_context_len = 4;
            cfg.max_question_len = 2;
            cfg.seed = 7;

            Rng r(6);
            EmbeddingMatrix emb;
            emb.dim = 3;
            emb.values = Matrix::uniform(5, 3, -0.1, 0.1, r);

            const SpanModel model(cfg, emb);
            const std::vector<int> ctx{0, 2, 3, 4};
            const std::vector<int> q{2, 3};

            const double tape_loss = example_loss(model, ctx, 1, q, 0, 1, 2);
            const SpanDistribution dist = model.forward(ctx, 1, q, 0);
            std::vector<std::uint8_t> target(8, 0);
            target[1] = 1;
            target[4 + 2] = 1;
            CHECK(tape_loss == doctest::Approx(span_loss(dist, target)).epsilon(1e-12));
        }
    }
}
