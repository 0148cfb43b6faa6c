#include "spanqa/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "spanqa/errors.hpp"

namespace spanqa {

namespace {

std::vector<std::string> whitespace_split(const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

bool is_article(const std::string& tok) { return tok == "a" || tok == "an" || tok == "the"; }

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string normalize_answer(const std::string& text) {
    std::string lowered;
    lowered.reserve(text.size());
    for (char c : text) {
        const unsigned char uc = static_cast<unsigned char>(c);
        if (std::ispunct(uc)) continue;
        lowered.push_back(uc >= 'A' && uc <= 'Z' ? static_cast<char>(uc + 32) : c);
    }
    std::string out;
    for (const std::string& tok : whitespace_split(lowered)) {
        if (is_article(tok)) continue;
        if (!out.empty()) out.push_back(' ');
        out += tok;
    }
    return out;
}

double token_f1(const std::string& prediction, const std::string& gold) {
    const auto pred_tokens = whitespace_split(normalize_answer(prediction));
    const auto gold_tokens = whitespace_split(normalize_answer(gold));
    if (pred_tokens.empty() && gold_tokens.empty()) return 1.0;
    if (pred_tokens.empty() || gold_tokens.empty()) return 0.0;
    std::unordered_map<std::string, int> gold_counts;
    for (const auto& t : gold_tokens) ++gold_counts[t];
    std::size_t overlap = 0;
    for (const auto& t : pred_tokens) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
    const double recall = static_cast<double>(overlap) / static_cast<double>(gold_tokens.size());
    return 2.0 * precision * recall / (precision + recall);
}

int exact_match(const std::string& prediction, const std::string& gold) {
    return normalize_answer(prediction) == normalize_answer(gold) ? 1 : 0;
}

EvalReport score_predictions(const std::vector<std::pair<std::string, std::string>>& predictions,
                             const PreparedDataset& dataset) {
    std::unordered_map<std::string, const std::string*> by_id;
    by_id.reserve(predictions.size());
    for (const auto& [id, text] : predictions) {
        if (!by_id.emplace(id, &text).second)
            throw ContractError("score_predictions: duplicate prediction for qa_id " + id);
    }

    struct Scored {
        double f1 = 0.0;
        double em = 0.0;
        bool answerable = false;
    };
    // qa_id-ordered accumulation keeps the report independent of example order.
    std::map<std::string, Scored> scores;
    EvalReport report;
    report.total = dataset.examples.size();

    for (const PreparedExample& ex : dataset.examples) {
        auto it = by_id.find(ex.qa_id);
        if (it == by_id.end())
            throw ContractError("score_predictions: missing prediction for qa_id " + ex.qa_id);
        const std::string& pred = *it->second;

        if (ex.answerable) {
            ++report.answerable_count;
            Scored s;
            s.answerable = true;
            for (const std::string& gold : ex.gold_answers) {
                s.f1 = std::max(s.f1, token_f1(pred, gold));
                s.em = std::max(s.em, static_cast<double>(exact_match(pred, gold)));
            }
            scores.emplace(ex.qa_id, s);
        } else {
            ++report.unanswerable_count;
            if (ex.plausible_answers.empty()) {
                ++report.plausible_skipped;
                continue;
            }
            ++report.plausible_scored;
            Scored s;
            for (const std::string& gold : ex.plausible_answers) {
                s.f1 = std::max(s.f1, token_f1(pred, gold));
                s.em = std::max(s.em, static_cast<double>(exact_match(pred, gold)));
            }
            scores.emplace(ex.qa_id, s);
        }
    }

    double f1_ans = 0.0, em_ans = 0.0, f1_plau = 0.0, em_plau = 0.0;
    for (const auto& [id, s] : scores) {
        if (s.answerable) {
            f1_ans += s.f1;
            em_ans += s.em;
        } else {
            f1_plau += s.f1;
            em_plau += s.em;
        }
    }
    if (report.answerable_count > 0) {
        report.f1_ans = 100.0 * f1_ans / static_cast<double>(report.answerable_count);
        report.em_ans = 100.0 * em_ans / static_cast<double>(report.answerable_count);
    }
    if (report.plausible_scored > 0) {
        report.f1_plau = 100.0 * f1_plau / static_cast<double>(report.plausible_scored);
        report.em_plau = 100.0 * em_plau / static_cast<double>(report.plausible_scored);
    }
    return report;
}

std::string export_predictions(const std::vector<std::pair<std::string, std::string>>& predictions) {
    std::map<std::string, std::string> sorted;
    for (const auto& [id, text] : predictions) {
        if (!sorted.emplace(id, text).second)
            throw ContractError("export_predictions: duplicate qa_id " + id);
    }
    nlohmann::json obj = nlohmann::json::object();
    for (const auto& [id, text] : sorted) obj[id] = text;
    return obj.dump();
}

std::string format_report_table(const EvalReport& r) {
    char line[256];
    std::string out;
    std::snprintf(line, sizeof(line), "%-14s %-14s %-14s %-14s\n", "F1(Ans)", "EM(Ans)",
                  "F1(Plau Ans)", "EM(Plau Ans)");
    out += line;
    std::snprintf(line, sizeof(line), "%-14.6f %-14.6f %-14.6f %-14.6f\n", r.f1_ans, r.em_ans,
                  r.f1_plau, r.em_plau);
    out += line;
    std::snprintf(line, sizeof(line),
                  "answerable=%llu unanswerable=%llu plau_scored=%llu plau_skipped=%llu total=%llu\n",
                  static_cast<unsigned long long>(r.answerable_count),
                  static_cast<unsigned long long>(r.unanswerable_count),
                  static_cast<unsigned long long>(r.plausible_scored),
                  static_cast<unsigned long long>(r.plausible_skipped),
                  static_cast<unsigned long long>(r.total));
    out += line;
    return out;
}

SpanPrediction predict_example(const SpanModel& model, const PreparedDataset& dataset,
                               std::size_t index) {
    const PreparedExample& ex = dataset.examples.at(index);
    const PreparedContext& ctx = dataset.contexts.at(static_cast<std::size_t>(ex.context_index));
    const SpanDistribution dist =
        model.forward(ctx.padded_ids, ctx.pad_offset, ex.question_ids, ex.question_pad_offset);
    const Matrix joint = span_joint(dist, model.config().span_length);
    return decode_span(joint, model.config().span_length, ctx.pad_offset, ctx.tokens, ctx.text);
}

std::vector<std::pair<std::string, std::string>> predict_all(const SpanModel& model,
                                                             const PreparedDataset& dataset) {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(dataset.examples.size());
    for (std::size_t i = 0; i < dataset.examples.size(); ++i)
        out.emplace_back(dataset.examples[i].qa_id, predict_example(model, dataset, i).answer_text);
    return out;
}

EvaluationResult evaluate_dataset(const SpanModel& model, std::uint64_t model_vocab_hash,
                                  const PreparedDataset& dataset) {
    const std::uint64_t dataset_hash = dataset.vocab.content_hash();
    if (dataset_hash != model_vocab_hash) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "vocabulary mismatch: checkpoint hash %016llx, dataset hash %016llx",
                      static_cast<unsigned long long>(model_vocab_hash),
                      static_cast<unsigned long long>(dataset_hash));
        throw InputError(buf);
    }
    EvaluationResult result;
    result.predictions = predict_all(model, dataset);
    result.report = score_predictions(result.predictions, dataset);
    return result;
}

std::string format_report_csv(const EvalReport& r) {
    std::string out = "f1_ans,em_ans,f1_plau,em_plau,answerable,unanswerable,plau_scored,plau_skipped,total\n";
    out += fmt(r.f1_ans) + "," + fmt(r.em_ans) + "," + fmt(r.f1_plau) + "," + fmt(r.em_plau) + "," +
           std::to_string(r.answerable_count) + "," + std::to_string(r.unanswerable_count) + "," +
           std::to_string(r.plausible_scored) + "," + std::to_string(r.plausible_skipped) + "," +
           std::to_string(r.total) + "\n";
    return out;
}

}  // namespace spanqa
