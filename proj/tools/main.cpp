// spanqa: prepare / train / evaluate / ask for span-extraction reading
// comprehension over SQuAD-2.0-format data.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spanqa/checkpoint.hpp"
#include "spanqa/config.hpp"
#include "spanqa/corpus.hpp"
#include "spanqa/dataset_io.hpp"
#include "spanqa/embeddings.hpp"
#include "spanqa/errors.hpp"
#include "spanqa/evaluation.hpp"
#include "spanqa/manifest.hpp"
#include "spanqa/training.hpp"
#include "spanqa/version.hpp"

namespace fs = std::filesystem;
using namespace spanqa;

namespace {

std::string iso_utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string fmt_seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", s);
    return buf;
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw IoError("cannot create output directory " + path + ": " + ec.message());
}

// Accepts either the dataset file itself or the directory prepare wrote.
std::string resolve_dataset_path(const std::string& path) {
    if (fs::is_directory(path)) return (fs::path(path) / "dataset.bin").string();
    return path;
}

struct PrepareArgs {
    std::string input;
    std::string out;
    int max_context = 0;
    int max_question = 0;
    bool train_on_plausible = false;
    std::string vocab_from;
};

void run_prepare(const PrepareArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string json = read_text_file(args.input);

    PreparedDataset vocab_source;
    PrepareOptions options;
    options.max_context_cap = args.max_context;
    options.max_question_cap = args.max_question;
    options.train_on_plausible = args.train_on_plausible;
    if (!args.vocab_from.empty()) {
        vocab_source = read_dataset(resolve_dataset_path(args.vocab_from));
        options.vocab_source = &vocab_source;
    }

    const PreparedDataset dataset = prepare_dataset(json, options);

    ensure_dir(args.out);
    const fs::path out(args.out);
    write_dataset((out / "dataset.bin").string(), dataset);
    write_text_file((out / "dataset_manifest.txt").string(), dataset_manifest_text(dataset));

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string opts;
    opts += "max_context_cap = " + std::to_string(args.max_context) + "\n";
    opts += "max_question_cap = " + std::to_string(args.max_question) + "\n";
    opts += std::string("train_on_plausible = ") + (args.train_on_plausible ? "true" : "false") +
            "\n";
    opts += "vocab_from = " + args.vocab_from + "\n";
    write_run_manifest((out / "run_manifest.txt").string(),
                       {{"command", "prepare"},
                        {"tool_version", std::string(kToolName) + " " + kToolVersion},
                        {"started_at", iso_utc_now()},
                        {"input", args.input},
                        {"input_digest", hex_digest(fnv1a_file(args.input))},
                        {"options", opts},
                        {"wall_seconds", fmt_seconds(seconds)}});

    std::cout << "total=" << dataset.counts.total << " answerable=" << dataset.counts.answerable
              << " with_target=" << dataset.counts.with_target
              << " dropped_by_truncation=" << dataset.counts.dropped_truncation
              << " alignment_failures=" << dataset.counts.alignment_failures << "\n";
}

struct TrainArgs {
    std::string data;
    std::string config;
    std::string out;
    std::string dev;
    std::string resume;
};

EmbeddingMatrix make_embedding(const EmbeddingSettings& settings, const Vocabulary& vocab,
                               std::string& source_label) {
    if (settings.source == "glove") {
        const VectorMap vectors = load_vectors_file(settings.path, settings.dim);
        source_label = "glove:" + settings.path;
        EmbeddingMatrix emb = build_matrix(vocab, vectors, settings.dim, settings.seed);
        emb.trainable = settings.trainable;
        return emb;
    }
    source_label = "random";
    EmbeddingMatrix emb = random_matrix(vocab, settings.dim, settings.seed);
    emb.trainable = settings.trainable;
    return emb;
}

void run_train(const TrainArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    const PreparedDataset dataset = read_dataset(resolve_dataset_path(args.data));
    PreparedDataset dev;
    if (!args.dev.empty()) dev = read_dataset(resolve_dataset_path(args.dev));

    RunConfig cfg = run_config_from_text(read_text_file(args.config));
    cfg.model.max_context_len = dataset.max_context_len;
    cfg.model.max_question_len = dataset.max_question_len;
    cfg.model.validate();
    cfg.train.validate();

    ensure_dir(args.out);
    const fs::path out(args.out);
    const std::string ckpt_path = (out / "checkpoint.ckpt").string();

    Checkpoint ckpt = [&]() -> Checkpoint {
        if (!args.resume.empty()) {
            Checkpoint resumed = load_checkpoint(args.resume);
            if (resumed.vocab.content_hash() != dataset.vocab.content_hash())
                throw InputError("resume checkpoint vocabulary does not match the dataset");
            return resumed;
        }
        std::string source_label;
        EmbeddingMatrix emb = make_embedding(cfg.embedding, dataset.vocab, source_label);
        return Checkpoint{SpanModel(cfg.model, std::move(emb)), dataset.vocab, source_label,
                          AdamaxState{}, false, 0};
    }();

    TrainOptions options;
    options.dev = args.dev.empty() ? nullptr : &dev;
    options.start_epoch = ckpt.completed_epochs;
    options.on_epoch = [](const EpochRecord& r) { std::cout << r.csv_row() << "\n" << std::flush; };
    options.on_checkpoint = [&](int completed) {
        ckpt.has_opt_state = true;
        ckpt.completed_epochs = completed;
        save_checkpoint((out / ("checkpoint_epoch" + std::to_string(completed) + ".ckpt")).string(),
                        ckpt);
    };

    const TrainHistory history = train(ckpt.model, dataset, cfg.train, ckpt.opt_state, options);

    ckpt.has_opt_state = true;
    ckpt.completed_epochs = cfg.train.epochs;
    save_checkpoint(ckpt_path, ckpt);

    // Resumed runs append their epochs to any existing history rows.
    std::string history_csv = history.to_csv();
    if (!args.resume.empty() && fs::exists(out / "history.csv")) {
        std::string previous = read_text_file((out / "history.csv").string());
        const std::size_t header_end = history_csv.find('\n');
        history_csv = previous + history_csv.substr(header_end + 1);
    }
    write_text_file((out / "history.csv").string(), history_csv);

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::vector<std::pair<std::string, std::string>> entries{
        {"command", "train"},
        {"tool_version", std::string(kToolName) + " " + kToolVersion},
        {"started_at", iso_utc_now()},
        {"data", args.data},
        {"data_digest", hex_digest(fnv1a_file(resolve_dataset_path(args.data)))},
        {"config_file", args.config},
        {"config_digest", hex_digest(fnv1a_file(args.config))},
        {"resolved_config", serialize_run_config(cfg)},
        {"vocab_hash", hex_digest(dataset.vocab.content_hash())},
        {"resume", args.resume.empty() ? "none" : args.resume},
        {"wall_seconds", fmt_seconds(seconds)}};
    if (!args.dev.empty()) {
        entries.insert(entries.begin() + 5,
                       {"dev_digest", hex_digest(fnv1a_file(resolve_dataset_path(args.dev)))});
    }
    write_run_manifest((out / "run_manifest.txt").string(), entries);
}

struct EvaluateArgs {
    std::string data;
    std::string checkpoint;
    std::string predictions;
    std::string out;
};

void run_evaluate(const EvaluateArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    const PreparedDataset dataset = read_dataset(resolve_dataset_path(args.data));
    const Checkpoint ckpt = load_checkpoint(args.checkpoint);

    const EvaluationResult result = evaluate_dataset(ckpt.model, ckpt.vocab_hash(), dataset);
    std::cout << format_report_table(result.report);
    std::cout << format_report_csv(result.report);

    if (!args.predictions.empty())
        write_text_file(args.predictions, export_predictions(result.predictions));

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::vector<std::pair<std::string, std::string>> entries{
        {"command", "evaluate"},
        {"tool_version", std::string(kToolName) + " " + kToolVersion},
        {"started_at", iso_utc_now()},
        {"data", args.data},
        {"data_digest", hex_digest(fnv1a_file(resolve_dataset_path(args.data)))},
        {"checkpoint", args.checkpoint},
        {"checkpoint_digest", hex_digest(fnv1a_file(args.checkpoint))},
        {"report_csv", format_report_csv(result.report)},
        {"wall_seconds", fmt_seconds(seconds)}};
    if (!args.out.empty()) {
        ensure_dir(args.out);
        write_text_file((fs::path(args.out) / "report.csv").string(),
                        format_report_csv(result.report));
        write_run_manifest((fs::path(args.out) / "run_manifest.txt").string(), entries);
    } else if (!args.predictions.empty()) {
        write_run_manifest(args.predictions + ".manifest", entries);
    }
}

struct AskArgs {
    std::string checkpoint;
    std::string article;
    std::string question;
    bool repl = false;
};

struct LoadedArticle {
    std::string text;
    std::vector<OffsetToken> tokens;  // truncated to the model window
    std::vector<int> padded_ids;
    int pad_offset = 0;
};

LoadedArticle load_article(const std::string& article_arg, const Checkpoint& ckpt) {
    LoadedArticle article;
    article.text = fs::exists(article_arg) ? read_text_file(article_arg) : article_arg;
    std::vector<OffsetToken> tokens = tokenize(article.text);
    const int max_len = ckpt.model.config().max_context_len;
    if (static_cast<int>(tokens.size()) > max_len) {
        std::cerr << "warning: article has " << tokens.size() << " tokens; only the first "
                  << max_len << " fit the model window, the tail is ignored\n";
        tokens.resize(static_cast<std::size_t>(max_len));
    }
    auto [ids, pad] = encode_tokens(tokens, ckpt.vocab, max_len);
    article.tokens = std::move(tokens);
    article.padded_ids = std::move(ids);
    article.pad_offset = pad;
    return article;
}

std::string answer_line(const Checkpoint& ckpt, const LoadedArticle& article,
                        const std::string& question) {
    const std::vector<OffsetToken> q_tokens = tokenize(question);
    auto [q_ids, q_pad] = encode_tokens(q_tokens, ckpt.vocab, ckpt.model.config().max_question_len);
    const SpanDistribution dist =
        ckpt.model.forward(article.padded_ids, article.pad_offset, q_ids, q_pad);
    const Matrix joint = span_joint(dist, ckpt.model.config().span_length);
    const SpanPrediction pred = decode_span(joint, ckpt.model.config().span_length,
                                            article.pad_offset, article.tokens, article.text);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", pred.joint_prob);
    return pred.answer_text + "\t" + buf + "\t" + std::to_string(pred.span.start) + ":" +
           std::to_string(pred.span.end);
}

void run_ask(const AskArgs& args) {
    const Checkpoint ckpt = load_checkpoint(args.checkpoint);
    if (args.article.empty())
        throw ConfigError("ask: an article is required (--article text-or-file)");
    if (!args.repl && args.question.empty())
        throw ConfigError("ask: a question is required (--question or --repl)");

    const LoadedArticle article = load_article(args.article, ckpt);
    if (!args.question.empty()) std::cout << answer_line(ckpt, article, args.question) << "\n";
    if (args.repl) {
        std::string line;
        while (std::getline(std::cin, line)) {
            if (line.empty()) {
                std::cerr << "error: empty question\n";
                continue;
            }
            std::cout << answer_line(ckpt, article, line) << "\n" << std::flush;
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"span-extraction reading comprehension: prepare, train, evaluate, ask"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    PrepareArgs prepare_args;
    CLI::App* prepare = app.add_subcommand("prepare", "encode a SQuAD 2.0 JSON file for training");
    prepare->add_option("--input", prepare_args.input, "SQuAD 2.0 JSON file")->required();
    prepare->add_option("--out", prepare_args.out, "output directory")->required();
    prepare->add_option("--max-context", prepare_args.max_context,
                        "context window cap (default: dataset maximum)");
    prepare->add_option("--max-question", prepare_args.max_question,
                        "question window cap (default: dataset maximum)");
    prepare->add_flag("--train-on-plausible", prepare_args.train_on_plausible,
                      "give unanswerable questions their plausible answers as targets");
    prepare->add_option("--vocab-from", prepare_args.vocab_from,
                        "reuse vocabulary and windows from an existing prepared dataset");

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model on a prepared dataset");
    train_cmd->add_option("--data", train_args.data, "prepared dataset (dir or file)")->required();
    train_cmd->add_option("--config", train_args.config, "key = value config file")->required();
    train_cmd->add_option("--out", train_args.out, "output directory")->required();
    train_cmd->add_option("--dev", train_args.dev, "prepared dev dataset scored once per epoch");
    train_cmd->add_option("--resume", train_args.resume, "checkpoint to continue from");

    EvaluateArgs eval_args;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a prepared dataset");
    evaluate->add_option("--data", eval_args.data, "prepared dataset (dir or file)")->required();
    evaluate->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file")->required();
    evaluate->add_option("--predictions", eval_args.predictions, "write predictions JSON here");
    evaluate->add_option("--out", eval_args.out, "directory for report.csv and manifest");

    AskArgs ask_args;
    CLI::App* ask = app.add_subcommand("ask", "answer questions against an article");
    ask->add_option("--checkpoint", ask_args.checkpoint, "checkpoint file")->required();
    ask->add_option("--article", ask_args.article, "article text or a file containing it");
    ask->add_option("--question", ask_args.question, "single question");
    ask->add_flag("--repl", ask_args.repl, "read questions line-by-line from stdin");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 4;
    }

    try {
        if (prepare->parsed()) run_prepare(prepare_args);
        if (train_cmd->parsed()) run_train(train_args);
        if (evaluate->parsed()) run_evaluate(eval_args);
        if (ask->parsed()) run_ask(ask_args);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error:\n" << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const AlignmentError& e) {
        std::cerr << "alignment error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
