#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "spanqa/checkpoint.hpp"
#include "spanqa/corpus.hpp"
#include "spanqa/embeddings.hpp"
#include "spanqa/errors.hpp"
#include "spanqa/manifest.hpp"
#include "spanqa/training.hpp"

using namespace spanqa;

namespace {

std::string fixture_path(const std::string& name) {
    return std::string(SPANQA_FIXTURES_DIR) + "/" + name;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

PreparedDataset tiny_dataset() {
    return prepare_dataset(read_text_file(fixture_path("squad_tiny.json")));
}

SpanModel tiny_model(const PreparedDataset& ds, std::uint64_t seed = 3) {
    ModelConfig cfg;
    cfg.encoder = EncoderKind::kBilstm;
    cfg.attention = AttentionKind::kC2q;
    cfg.hidden_size = 6;
    cfg.span_length = 3;
    cfg.max_context_len = ds.max_context_len;
    cfg.max_question_len = ds.max_question_len;
    cfg.seed = seed;
    EmbeddingMatrix emb = random_matrix(ds.vocab, 8, seed + 1);
    return SpanModel(cfg, std::move(emb));
}

}  // namespace

TEST_CASE("make_batches: chunk sizes") {
    const auto batches = make_batches(5, 2, 0);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 2);
    CHECK(batches[1].size() == 2);
    CHECK(batches[2].size() == 1);
}

TEST_CASE("make_batches: same seed, same order") {
    const auto a = make_batches(16, 4, 99);
    const auto b = make_batches(16, 4, 99);
    CHECK(a == b);
}

TEST_CASE("make_batches: different seeds permute, union is identical") {
    const auto a = make_batches(12, 5, 1);
    const auto b = make_batches(12, 5, 2);
    std::vector<std::size_t> flat_a, flat_b;
    for (const auto& batch : a) flat_a.insert(flat_a.end(), batch.begin(), batch.end());
    for (const auto& batch : b) flat_b.insert(flat_b.end(), batch.begin(), batch.end());
    CHECK(flat_a != flat_b);
    std::sort(flat_a.begin(), flat_a.end());
    std::sort(flat_b.begin(), flat_b.end());
    CHECK(flat_a == flat_b);
    for (std::size_t i = 0; i < 12; ++i) CHECK(flat_a[i] == i);  // exactly once each
}

TEST_CASE("make_batches: empty dataset is a configuration error") {
    CHECK_THROWS_AS(make_batches(0, 4, 0), ConfigError);
}

TEST_CASE("adamax_step: zero gradient leaves parameters unchanged") {
    Matrix theta(2, 2, 1.5);
    AdamaxState state;
    TrainConfig cfg;
    adamax_step({{"w", &theta}}, {Matrix::zeros(2, 2)}, state, cfg);
    for (std::size_t i = 0; i < theta.size(); ++i) CHECK(theta[i] == 1.5);
    CHECK(state.step == 1);
}

TEST_CASE("adamax_step: hand-stepped scalar recurrence") {
    Matrix theta(1, 1, 0.0);
    Matrix g(1, 1, 1.0);
    AdamaxState state;
    TrainConfig cfg;  // lr 0.002, beta1 0.9, beta2 0.999, eps 1e-7
    adamax_step({{"w", &theta}}, {g}, state, cfg);
    CHECK(state.m[0](0, 0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(state.u[0](0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    // theta -= (0.002 / (1 - 0.9)) * 0.1 / (1 + 1e-7)
    CHECK(theta(0, 0) == doctest::Approx(-0.002).epsilon(1e-6));
    CHECK(theta(0, 0) < 0.0);
}

TEST_CASE("adamax_step: update sign opposes the first moment") {
    Rng rng(17);
    Matrix theta(4, 4, 0.0);
    AdamaxState state;
    TrainConfig cfg;
    Matrix prev = theta;
    for (int step = 0; step < 20; ++step) {
        Matrix g = Matrix::uniform(4, 4, -1.0, 1.0, rng);
        const Matrix u_prev = state.initialized() ? state.u[0] : Matrix::zeros(4, 4);
        adamax_step({{"w", &theta}}, {g}, state, cfg);
        CHECK(all_finite(state.m[0]));
        CHECK(all_finite(state.u[0]));
        CHECK(all_finite(theta));
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double update = theta[i] - prev[i];
            const double m = state.m[0][i];
            CHECK(state.u[0][i] >= 0.0);
            CHECK(state.u[0][i] ==
                  doctest::Approx(std::max(cfg.beta2 * u_prev[i], std::fabs(g[i]))).epsilon(1e-15));
            if (state.u[0][i] > 0.0 && m != 0.0) CHECK(update * m <= 0.0);
        }
        prev = theta;
    }
}

TEST_CASE("adamax_step: infinity norm tracks max(beta2*u, |g|)") {
    Matrix theta(1, 1, 0.0);
    AdamaxState state;
    TrainConfig cfg;
    Matrix g(1, 1, 2.0);
    adamax_step({{"w", &theta}}, {g}, state, cfg);
    CHECK(state.u[0](0, 0) == doctest::Approx(2.0));
    g(0, 0) = 0.5;  // decays: max(0.999*2, 0.5) = 1.998
    adamax_step({{"w", &theta}}, {g}, state, cfg);
    CHECK(state.u[0](0, 0) == doctest::Approx(1.998));
}

TEST_CASE("adamax_step: non-finite gradient names the parameter") {
    Matrix theta(1, 1, 0.0);
    Matrix g(1, 1, std::nan(""));
    AdamaxState state;
    TrainConfig cfg;
    CHECK_THROWS_WITH_AS(adamax_step({{"bilinear.ws", &theta}}, {g}, state, cfg),
                         doctest::Contains("bilinear.ws"), NumericError);
}

TEST_CASE("TrainConfig: zero epochs rejected") {
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("train: loss decreases over the first epochs of a tiny run") {
    const PreparedDataset ds = tiny_dataset();
    SpanModel model = tiny_model(ds);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 2;
    cfg.shuffle_seed = 5;
    AdamaxState state;
    const TrainHistory history = train(model, ds, cfg, state);
    REQUIRE(history.records.size() == 3);
    int plateaus = 0;
    for (std::size_t i = 1; i < history.records.size(); ++i) {
        const double prev = history.records[i - 1].mean_loss;
        const double cur = history.records[i].mean_loss;
        if (cur < prev) continue;
        CHECK(cur - prev <= 1e-6);
        ++plateaus;
    }
    CHECK(plateaus <= 1);
}

TEST_CASE("train: identical seeds give identical loss curves") {
    const PreparedDataset ds = tiny_dataset();
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 1;
    cfg.shuffle_seed = 11;
    auto run = [&]() {
        SpanModel model = tiny_model(ds);
        AdamaxState state;
        return train(model, ds, cfg, state);
    };
    const TrainHistory a = run();
    const TrainHistory b = run();
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i)
        CHECK(a.records[i].csv_row().substr(0, a.records[i].csv_row().rfind(',')) ==
              b.records[i].csv_row().substr(0, b.records[i].csv_row().rfind(',')));
}

TEST_CASE("train: trainable embeddings keep the pad row at zero") {
    const PreparedDataset ds = tiny_dataset();
    ModelConfig cfg;
    cfg.encoder = EncoderKind::kVanilla;
    cfg.attention = AttentionKind::kNone;
    cfg.hidden_size = 4;
    cfg.span_length = 3;
    cfg.max_context_len = ds.max_context_len;
    cfg.max_question_len = ds.max_question_len;
    EmbeddingMatrix emb = random_matrix(ds.vocab, 6, 2);
    emb.trainable = true;
    SpanModel model(cfg, std::move(emb));

    TrainConfig tcfg;
    tcfg.epochs = 2;
    tcfg.batch_size = 1;
    AdamaxState state;
    train(model, ds, tcfg, state);
    for (int j = 0; j < model.embedding().values.cols(); ++j)
        CHECK(model.embedding().values(Vocabulary::kPadId, j) == 0.0);
    // non-pad rows did move
    bool moved = false;
    const EmbeddingMatrix fresh = random_matrix(ds.vocab, 6, 2);
    for (int j = 0; j < 6; ++j)
        moved = moved || model.embedding().values(2, j) != fresh.values(2, j);
    CHECK(moved);
}

TEST_CASE("checkpoint: save and load reproduce the dataset loss exactly") {
    const PreparedDataset ds = tiny_dataset();
    SpanModel model = tiny_model(ds);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 2;
    AdamaxState state;
    train(model, ds, cfg, state);

    const double before = dataset_loss(model, ds);
    const std::string path = temp_path("spanqa_test_ckpt.ckpt");
    Checkpoint ckpt{std::move(model), ds.vocab, "random", state, true, cfg.epochs};
    save_checkpoint(path, ckpt);
    const Checkpoint loaded = load_checkpoint(path);
    const double after = dataset_loss(loaded.model, ds);
    CHECK(std::fabs(after - before) <= 1e-6);
    CHECK(loaded.completed_epochs == 2);
    CHECK(loaded.has_opt_state);
    CHECK(loaded.opt_state.step == state.step);
    CHECK(loaded.vocab.content_hash() == ds.vocab.content_hash());
    std::filesystem::remove(path);
    std::filesystem::remove(path + ".manifest");
}

TEST_CASE("train: resume reproduces the uninterrupted run") {
    const PreparedDataset ds = tiny_dataset();
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = 1;
    cfg.shuffle_seed = 21;

    // straight run
    SpanModel straight = tiny_model(ds);
    AdamaxState straight_state;
    const TrainHistory full = train(straight, ds, cfg, straight_state);

    // split run: 3 epochs, checkpoint, resume 3 more
    SpanModel part = tiny_model(ds);
    AdamaxState part_state;
    TrainConfig first_half = cfg;
    first_half.epochs = 3;
    train(part, ds, first_half, part_state);

    TrainOptions resume_opts;
    resume_opts.start_epoch = 3;
    const TrainHistory tail = train(part, ds, cfg, part_state, resume_opts);

    REQUIRE(tail.records.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(tail.records[i].epoch == full.records[i + 3].epoch);
        CHECK(tail.records[i].mean_loss ==
              doctest::Approx(full.records[i + 3].mean_loss).epsilon(1e-12));
    }
    CHECK(dataset_loss(part, ds) == doctest::Approx(dataset_loss(straight, ds)).epsilon(1e-12));
}

TEST_CASE("train: dev history columns appear when a dev set is supplied") {
    const PreparedDataset ds = tiny_dataset();
    SpanModel model = tiny_model(ds);
    TrainConfig cfg;
    cfg.epochs = 1;
    TrainOptions options;
    options.dev = &ds;
    AdamaxState state;
    const TrainHistory history = train(model, ds, cfg, state, options);
    REQUIRE(history.records.size() == 1);
    CHECK(history.records[0].dev_f1.has_value());
    const std::string csv = history.to_csv();
    CHECK(csv.find("dev_f1") != std::string::npos);
}
