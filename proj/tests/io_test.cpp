#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "spanqa/checkpoint.hpp"
#include "spanqa/config.hpp"
#include "spanqa/dataset_io.hpp"
#include "spanqa/errors.hpp"
#include "spanqa/manifest.hpp"

using namespace spanqa;

namespace {

std::string fixture_path(const std::string& name) {
    return std::string(SPANQA_FIXTURES_DIR) + "/" + name;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("dataset round-trips through the binary container") {
    const PreparedDataset ds = prepare_dataset(read_text_file(fixture_path("squad_100.json")));
    const std::string path = temp_path("spanqa_ds_roundtrip.bin");
    write_dataset(path, ds);
    const PreparedDataset back = read_dataset(path);

    CHECK(back.vocab.content_hash() == ds.vocab.content_hash());
    CHECK(back.max_context_len == ds.max_context_len);
    CHECK(back.max_question_len == ds.max_question_len);
    CHECK(back.counts.total == ds.counts.total);
    CHECK(back.counts.alignment_failures == ds.counts.alignment_failures);
    REQUIRE(back.contexts.size() == ds.contexts.size());
    REQUIRE(back.examples.size() == ds.examples.size());
    for (std::size_t i = 0; i < ds.contexts.size(); ++i) {
        CHECK(back.contexts[i].text == ds.contexts[i].text);
        CHECK(back.contexts[i].padded_ids == ds.contexts[i].padded_ids);
        CHECK(back.contexts[i].pad_offset == ds.contexts[i].pad_offset);
        REQUIRE(back.contexts[i].tokens.size() == ds.contexts[i].tokens.size());
        for (std::size_t t = 0; t < ds.contexts[i].tokens.size(); ++t)
            CHECK(back.contexts[i].tokens[t].text == ds.contexts[i].tokens[t].text);
    }
    for (std::size_t i = 0; i < ds.examples.size(); ++i) {
        CHECK(back.examples[i].qa_id == ds.examples[i].qa_id);
        CHECK(back.examples[i].question_ids == ds.examples[i].question_ids);
        CHECK(back.examples[i].has_target == ds.examples[i].has_target);
        CHECK(back.examples[i].target_start == ds.examples[i].target_start);
        CHECK(back.examples[i].target_end == ds.examples[i].target_end);
        CHECK(back.examples[i].gold_answers == ds.examples[i].gold_answers);
        CHECK(back.examples[i].plausible_answers == ds.examples[i].plausible_answers);
    }
    std::filesystem::remove(path);
}

TEST_CASE("dataset writes are byte-identical across runs") {
    const std::string json = read_text_file(fixture_path("squad_tiny.json"));
    const std::string p1 = temp_path("spanqa_ds_a.bin");
    const std::string p2 = temp_path("spanqa_ds_b.bin");
    write_dataset(p1, prepare_dataset(json));
    write_dataset(p2, prepare_dataset(json));
    CHECK(read_text_file(p1) == read_text_file(p2));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("reading garbage is a schema error, missing file an input error") {
    const std::string path = temp_path("spanqa_not_a_dataset.bin");
    write_text_file(path, "junk bytes");
    CHECK_THROWS_AS(read_dataset(path), SchemaError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_dataset(temp_path("spanqa_never_written.bin")), InputError);
}

TEST_CASE("corrupted checkpoints are refused") {
    const std::string path = temp_path("spanqa_bad_ckpt.ckpt");
    write_text_file(path, "definitely not a checkpoint");
    CHECK_THROWS_AS(spanqa::load_checkpoint(path), SchemaError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(spanqa::load_checkpoint(temp_path("spanqa_no_ckpt.ckpt")), InputError);
}

TEST_CASE("dataset manifest lists the required counts") {
    const PreparedDataset ds = prepare_dataset(read_text_file(fixture_path("squad_100.json")));
    const std::string text = dataset_manifest_text(ds);
    CHECK(text.find("total: 100") != std::string::npos);
    CHECK(text.find("answerable: 90") != std::string::npos);
    CHECK(text.find("dropped_by_truncation: 0") != std::string::npos);
    CHECK(text.find("alignment_failures: 2") != std::string::npos);
}

TEST_CASE("config: defaults and overrides") {
    const RunConfig defaults = run_config_from_text("");
    CHECK(defaults.train.epochs == 25);
    CHECK(defaults.train.batch_size == 32);
    CHECK(defaults.train.learning_rate == 0.002);
    CHECK(defaults.train.beta1 == 0.9);
    CHECK(defaults.train.beta2 == 0.999);
    CHECK(defaults.train.epsilon == 1e-7);
    CHECK(defaults.model.hidden_size == 128);
    CHECK(defaults.model.span_length == 20);
    CHECK(defaults.model.mask_padding == false);
    CHECK(defaults.embedding.dim == 300);
    CHECK(defaults.embedding.trainable == false);

    const RunConfig cfg = run_config_from_text(
        "# comment\n"
        "model.encoder = stacked3\n"
        "model.attention = bidaf\n"
        "model.hidden_size = 32\n"
        "train.epochs = 3   # inline comment\n"
        "embedding.source = random\n"
        "embedding.dim = 50\n");
    CHECK(cfg.model.encoder == EncoderKind::kStacked3);
    CHECK(cfg.model.attention == AttentionKind::kBidaf);
    CHECK(cfg.model.hidden_size == 32);
    CHECK(cfg.train.epochs == 3);
    CHECK(cfg.embedding.dim == 50);
}

TEST_CASE("config: all violations reported at once") {
    try {
        run_config_from_text(
            "model.encoder = transformer\n"
            "train.epochs = many\n"
            "nonsense.key = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.issues().size() == 3);
    }
}

TEST_CASE("config: glove source requires a path") {
    CHECK_THROWS_AS(run_config_from_text("embedding.source = glove\n"), ConfigError);
}

TEST_CASE("model config snapshot round-trips") {
    ModelConfig cfg;
    cfg.encoder = EncoderKind::kStacked3;
    cfg.attention = AttentionKind::kBidaf;
    cfg.hidden_size = 17;
    cfg.attention_dim = 9;
    cfg.span_length = 4;
    cfg.max_context_len = 33;
    cfg.max_question_len = 12;
    cfg.mask_padding = true;
    cfg.seed = 987654321;
    const ModelConfig back = model_config_from_text(serialize_model_config(cfg));
    CHECK(back.encoder == cfg.encoder);
    CHECK(back.attention == cfg.attention);
    CHECK(back.hidden_size == cfg.hidden_size);
    CHECK(back.attention_dim == cfg.attention_dim);
    CHECK(back.span_length == cfg.span_length);
    CHECK(back.max_context_len == cfg.max_context_len);
    CHECK(back.max_question_len == cfg.max_question_len);
    CHECK(back.mask_padding == cfg.mask_padding);
    CHECK(back.seed == cfg.seed);
}

TEST_CASE("run manifest indents multi-line values") {
    const std::string path = temp_path("spanqa_manifest.txt");
    write_run_manifest(path, {{"command", "prepare"}, {"config", "a = 1\nb = 2\n"}});
    const std::string text = read_text_file(path);
    CHECK(text.find("command: prepare") != std::string::npos);
    CHECK(text.find("  a = 1") != std::string::npos);
    CHECK(text.find("  b = 2") != std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("fnv1a digest is content-determined") {
    const std::string p1 = temp_path("spanqa_digest_a");
    const std::string p2 = temp_path("spanqa_digest_b");
    write_text_file(p1, "same bytes");
    write_text_file(p2, "same bytes");
    CHECK(fnv1a_file(p1) == fnv1a_file(p2));
    write_text_file(p2, "other bytes");
    CHECK(fnv1a_file(p1) != fnv1a_file(p2));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}
