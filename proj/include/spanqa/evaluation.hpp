#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spanqa/corpus.hpp"
#include "spanqa/model.hpp"

namespace spanqa {

// SQuAD-convention normalization: lowercase, strip punctuation, drop the
// articles a/an/the, collapse whitespace.
std::string normalize_answer(const std::string& text);

// Token-multiset F1 between normalized strings. Both empty -> 1, exactly one
// empty -> 0.
double token_f1(const std::string& prediction, const std::string& gold);

// 1 iff the normalized strings are equal.
int exact_match(const std::string& prediction, const std::string& gold);

// Four-column report: answerable questions scored against gold answers,
// unanswerable ones against their plausible answers.
struct EvalReport {
    double f1_ans = 0.0;   // percentages
    double em_ans = 0.0;
    double f1_plau = 0.0;
    double em_plau = 0.0;
    std::uint64_t answerable_count = 0;
    std::uint64_t unanswerable_count = 0;
    std::uint64_t plausible_scored = 0;   // unanswerable with at least one plausible answer
    std::uint64_t plausible_skipped = 0;  // unanswerable without plausible answers
    std::uint64_t total = 0;
};

// Scores a complete prediction set against the dataset's gold answers.
// Every example must have exactly one prediction; per-question scores take
// the max over multiple golds. Summation runs in qa_id order so the report
// is independent of example ordering.
EvalReport score_predictions(const std::vector<std::pair<std::string, std::string>>& predictions,
                             const PreparedDataset& dataset);

// Single JSON object {qa_id: answer}, keys sorted. Duplicate ids are an error.
std::string export_predictions(const std::vector<std::pair<std::string, std::string>>& predictions);

std::string format_report_table(const EvalReport& report);
std::string format_report_csv(const EvalReport& report);

// Decoded answer for one prepared example.
SpanPrediction predict_example(const SpanModel& model, const PreparedDataset& dataset,
                               std::size_t index);

// (qa_id, answer) for every example, in dataset order.
std::vector<std::pair<std::string, std::string>> predict_all(const SpanModel& model,
                                                             const PreparedDataset& dataset);

struct EvaluationResult {
    EvalReport report;
    std::vector<std::pair<std::string, std::string>> predictions;
};

// Predicts and scores the whole dataset. model_vocab_hash is the hash the
// checkpoint was trained against; a mismatch with the dataset's vocabulary
// is refused with both hashes printed.
EvaluationResult evaluate_dataset(const SpanModel& model, std::uint64_t model_vocab_hash,
                                  const PreparedDataset& dataset);

}  // namespace spanqa
