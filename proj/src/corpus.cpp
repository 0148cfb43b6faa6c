#include "spanqa/corpus.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "spanqa/errors.hpp"
#include "spanqa/evaluation.hpp"

namespace spanqa {

namespace {

using nlohmann::json;

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; }

// SQuAD offsets count unicode codepoints (the files are written by Python);
// convert to a byte offset into the UTF-8 context. Returns -1 when the
// offset lies past the end of the string.
int codepoint_to_byte(const std::string& s, int cp) {
    if (cp < 0) return -1;
    int idx = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
            if (idx == cp) return static_cast<int>(i);
            ++idx;
        }
    }
    return idx == cp ? static_cast<int>(s.size()) : -1;
}

const json& require_field(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError("schema error at " + path + "." + key + ": missing");
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
    const json& v = require_field(obj, key, path);
    if (!v.is_string()) throw SchemaError("schema error at " + path + "." + key + ": not a string");
    return v.get<std::string>();
}

std::vector<RawAnswer> parse_answers(const json& arr, const std::string& context,
                                     const std::string& path) {
    if (!arr.is_array()) throw SchemaError("schema error at " + path + ": not an array");
    std::vector<RawAnswer> out;
    for (std::size_t a = 0; a < arr.size(); ++a) {
        const std::string apath = path + "[" + std::to_string(a) + "]";
        const json& ans = arr[a];
        if (!ans.is_object()) throw SchemaError("schema error at " + apath + ": not an object");
        RawAnswer raw;
        raw.text = require_string(ans, "text", apath);
        const json& start = require_field(ans, "answer_start", apath);
        if (!start.is_number_integer())
            throw SchemaError("schema error at " + apath + ".answer_start: not an integer");
        const int cp = start.get<int>();
        const int byte_off = codepoint_to_byte(context, cp);
        if (cp < 0 || byte_off < 0 || byte_off >= static_cast<int>(context.size()))
            throw SchemaError("schema error at " + apath +
                              ".answer_start: offset outside the owning context");
        raw.char_start = byte_off;
        out.push_back(std::move(raw));
    }
    return out;
}

}  // namespace

std::vector<ParsedParagraph> parse_squad(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("schema error at document: invalid JSON (") + e.what() + ")");
    }
    if (!doc.is_object() || !doc.contains("data"))
        throw SchemaError("schema error at document: missing \"data\" key");
    const json& data = doc["data"];
    if (!data.is_array()) throw SchemaError("schema error at data: not an array");

    std::vector<ParsedParagraph> out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::string article_path = "data[" + std::to_string(i) + "]";
        const json& paragraphs = require_field(data[i], "paragraphs", article_path);
        if (!paragraphs.is_array())
            throw SchemaError("schema error at " + article_path + ".paragraphs: not an array");
        for (std::size_t j = 0; j < paragraphs.size(); ++j) {
            const std::string para_path = article_path + ".paragraphs[" + std::to_string(j) + "]";
            ParsedParagraph para;
            para.context = require_string(paragraphs[j], "context", para_path);
            const json& qas = require_field(paragraphs[j], "qas", para_path);
            if (!qas.is_array())
                throw SchemaError("schema error at " + para_path + ".qas: not an array");
            for (std::size_t k = 0; k < qas.size(); ++k) {
                const std::string qa_path = para_path + ".qas[" + std::to_string(k) + "]";
                const json& q = qas[k];
                RawQA qa;
                qa.id = require_string(q, "id", qa_path);
                qa.question = require_string(q, "question", qa_path);
                qa.is_impossible = q.value("is_impossible", false);
                if (q.contains("answers"))
                    qa.answers = parse_answers(q["answers"], para.context, qa_path + ".answers");
                if (q.contains("plausible_answers"))
                    qa.plausible_answers =
                        parse_answers(q["plausible_answers"], para.context, qa_path + ".plausible_answers");
                if (!qa.is_impossible && qa.answers.empty())
                    throw SchemaError("schema error at " + qa_path +
                                      ".answers: answerable question without answers");
                para.qas.push_back(std::move(qa));
            }
            out.push_back(std::move(para));
        }
    }
    return out;
}

std::vector<OffsetToken> tokenize(const std::string& text) {
    std::vector<OffsetToken> out;
    const std::size_t n = text.size();
    auto is_word = [](unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; };
    std::size_t i = 0;
    while (i < n) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (is_word(c)) {
            while (i < n && is_word(static_cast<unsigned char>(text[i]))) ++i;
        } else {
            ++i;  // punctuation: one character, one token
        }
        OffsetToken tok;
        tok.text = text.substr(start, i - start);
        for (auto& ch : tok.text) ch = ascii_lower(ch);
        tok.char_start = static_cast<int>(start);
        tok.char_end = static_cast<int>(i);
        out.push_back(std::move(tok));
    }
    return out;
}

TokenSpan align_answer(const std::vector<OffsetToken>& tokens, const std::string& context,
                       const std::string& answer_text, int answer_char_start) {
    if (answer_text.empty()) throw AlignmentError("empty answer text");
    const int last_char = answer_char_start + static_cast<int>(answer_text.size()) - 1;
    int start = -1;
    int end = -1;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const OffsetToken& t = tokens[i];
        if (t.char_start <= answer_char_start && answer_char_start < t.char_end)
            start = static_cast<int>(i);
        if (t.char_start <= last_char && last_char < t.char_end) end = static_cast<int>(i);
    }
    if (start < 0 || end < 0 || start > end)
        throw AlignmentError("answer at offset " + std::to_string(answer_char_start) +
                             " falls outside every token range");
    const std::string slice =
        context.substr(static_cast<std::size_t>(tokens[start].char_start),
                       static_cast<std::size_t>(tokens[end].char_end - tokens[start].char_start));
    if (normalize_answer(slice) != normalize_answer(answer_text))
        throw AlignmentError("detokenized span \"" + slice + "\" disagrees with answer \"" +
                             answer_text + "\"");
    return TokenSpan{start, end};
}

Vocabulary::Vocabulary() : id_to_token_(kFirstTokenId) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens_in_id_order)
    : id_to_token_(kFirstTokenId), tokens_only_(std::move(tokens_in_id_order)) {
    id_to_token_.reserve(kFirstTokenId + tokens_only_.size());
    token_to_id_.reserve(tokens_only_.size());
    for (const auto& tok : tokens_only_) {
        const int id = static_cast<int>(id_to_token_.size());
        id_to_token_.push_back(tok);
        token_to_id_.emplace(tok, id);
    }
}

int Vocabulary::id_for(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kOovId : it->second;
}

const std::string& Vocabulary::token_for(int id) const {
    if (!has_token_for(id))
        throw LookupError("vocabulary: id " + std::to_string(id) + " has no token");
    return id_to_token_[static_cast<std::size_t>(id)];
}

std::uint64_t Vocabulary::content_hash() const {
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&h](const char* s, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(s[i]);
            h *= 1099511628211ULL;
        }
    };
    for (const auto& tok : tokens_only_) {
        mix(tok.data(), tok.size());
        mix("\n", 1);
    }
    return h;
}

void VocabularyBuilder::add_stream(const std::vector<OffsetToken>& tokens) {
    for (const auto& t : tokens) ++counts_[t.text];
}

Vocabulary VocabularyBuilder::build() const {
    std::vector<std::pair<std::string, std::uint64_t>> entries(counts_.begin(), counts_.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> ordered;
    ordered.reserve(entries.size());
    for (auto& e : entries) ordered.push_back(std::move(e.first));
    return Vocabulary(std::move(ordered));
}

Vocabulary build_vocabulary(const std::vector<std::vector<OffsetToken>>& streams) {
    VocabularyBuilder builder;
    for (const auto& s : streams) builder.add_stream(s);
    return builder.build();
}

std::pair<std::vector<int>, int> encode_tokens(const std::vector<OffsetToken>& tokens,
                                               const Vocabulary& vocab, int max_len) {
    if (max_len < 1) throw ContractError("encode_tokens: max_len must be >= 1");
    const int count = static_cast<int>(tokens.size());
    const int kept = std::min(count, max_len);
    const int pad_offset = max_len - kept;
    std::vector<int> ids(static_cast<std::size_t>(max_len), Vocabulary::kPadId);
    for (int i = 0; i < kept; ++i)
        ids[static_cast<std::size_t>(pad_offset + i)] = vocab.id_for(tokens[static_cast<std::size_t>(i)].text);
    return {std::move(ids), pad_offset};
}

std::vector<std::uint8_t> build_target(TokenSpan span, int pad_offset, int max_context_len) {
    if (span.start < 0 || span.start > span.end)
        throw ContractError("build_target: invalid span (" + std::to_string(span.start) + "," +
                            std::to_string(span.end) + ")");
    if (pad_offset < 0) throw ContractError("build_target: negative pad_offset");
    if (span.end + pad_offset >= max_context_len)
        throw SpanWindowError("answer end position " + std::to_string(span.end + pad_offset) +
                              " does not fit window of " + std::to_string(max_context_len));
    std::vector<std::uint8_t> target(2 * static_cast<std::size_t>(max_context_len), 0);
    target[static_cast<std::size_t>(span.start + pad_offset)] = 1;
    target[static_cast<std::size_t>(max_context_len + span.end + pad_offset)] = 1;
    return target;
}

std::pair<int, int> target_positions(const std::vector<std::uint8_t>& target) {
    if (target.empty() || target.size() % 2 != 0)
        throw ContractError("target: length must be 2 * max_context_len");
    const std::size_t n = target.size() / 2;
    int start = -1;
    int end = -1;
    int start_ones = 0;
    int end_ones = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (target[i]) {
            ++start_ones;
            start = static_cast<int>(i);
        }
        if (target[n + i]) {
            ++end_ones;
            end = static_cast<int>(i);
        }
    }
    if (start_ones != 1 || end_ones != 1)
        throw ContractError("target: each half must contain exactly one 1");
    return {start, end};
}

EncodedExample PreparedDataset::encoded(std::size_t index) const {
    const PreparedExample& ex = examples.at(index);
    const PreparedContext& ctx = contexts.at(static_cast<std::size_t>(ex.context_index));
    EncodedExample enc;
    enc.qa_id = ex.qa_id;
    enc.context_ids = ctx.padded_ids;
    enc.question_ids = ex.question_ids;
    enc.pad_offset = ctx.pad_offset;
    enc.answerable = ex.answerable;
    if (ex.has_target) {
        std::vector<std::uint8_t> target(2 * static_cast<std::size_t>(max_context_len), 0);
        target[static_cast<std::size_t>(ex.target_start)] = 1;
        target[static_cast<std::size_t>(max_context_len + ex.target_end)] = 1;
        enc.target = std::move(target);
    }
    return enc;
}

PreparedDataset prepare_dataset(const std::string& squad_json, const PrepareOptions& options) {
    const std::vector<ParsedParagraph> paragraphs = parse_squad(squad_json);

    std::vector<std::vector<OffsetToken>> context_tokens;
    context_tokens.reserve(paragraphs.size());
    std::vector<std::vector<std::vector<OffsetToken>>> question_tokens(paragraphs.size());

    int max_ctx = 0;
    int max_q = 0;
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
        context_tokens.push_back(tokenize(paragraphs[p].context));
        max_ctx = std::max(max_ctx, static_cast<int>(context_tokens.back().size()));
        for (const RawQA& qa : paragraphs[p].qas) {
            question_tokens[p].push_back(tokenize(qa.question));
            max_q = std::max(max_q, static_cast<int>(question_tokens[p].back().size()));
        }
    }

    PreparedDataset ds;
    if (options.vocab_source != nullptr) {
        ds.vocab = options.vocab_source->vocab;
        ds.max_context_len = options.vocab_source->max_context_len;
        ds.max_question_len = options.vocab_source->max_question_len;
    } else {
        VocabularyBuilder builder;
        for (std::size_t p = 0; p < paragraphs.size(); ++p) {
            builder.add_stream(context_tokens[p]);
            for (const auto& qt : question_tokens[p]) builder.add_stream(qt);
        }
        ds.vocab = builder.build();
        ds.max_context_len = max_ctx;
        ds.max_question_len = max_q;
    }
    if (options.max_context_cap > 0) ds.max_context_len = options.max_context_cap;
    if (options.max_question_cap > 0) ds.max_question_len = options.max_question_cap;

    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
        const ParsedParagraph& para = paragraphs[p];
        const std::vector<OffsetToken>& full_tokens = context_tokens[p];

        PreparedContext ctx;
        ctx.text = para.context;
        auto [ctx_ids, ctx_pad] = encode_tokens(full_tokens, ds.vocab, ds.max_context_len);
        ctx.padded_ids = std::move(ctx_ids);
        ctx.pad_offset = ctx_pad;
        const std::size_t kept =
            std::min(full_tokens.size(), static_cast<std::size_t>(ds.max_context_len));
        ctx.tokens.assign(full_tokens.begin(), full_tokens.begin() + static_cast<long>(kept));
        const int context_index = static_cast<int>(ds.contexts.size());
        ds.contexts.push_back(std::move(ctx));

        for (std::size_t k = 0; k < para.qas.size(); ++k) {
            const RawQA& qa = para.qas[k];
            PreparedExample ex;
            ex.qa_id = qa.id;
            ex.context_index = context_index;
            auto [q_ids, q_pad] = encode_tokens(question_tokens[p][k], ds.vocab, ds.max_question_len);
            ex.question_ids = std::move(q_ids);
            ex.question_pad_offset = q_pad;
            ex.answerable = !qa.is_impossible;

            ++ds.counts.total;
            if (ex.answerable)
                ++ds.counts.answerable;
            else
                ++ds.counts.unanswerable;

            for (const RawAnswer& a : qa.answers) ex.gold_answers.push_back(a.text);
            for (const RawAnswer& a : qa.plausible_answers) ex.plausible_answers.push_back(a.text);

            // Unanswerable questions carry no training target unless the
            // train_on_plausible flag substitutes the plausible span.
            const RawAnswer* target_answer = nullptr;
            if (ex.answerable) {
                target_answer = &qa.answers.front();
            } else if (options.train_on_plausible && !qa.plausible_answers.empty()) {
                target_answer = &qa.plausible_answers.front();
            }
            if (target_answer != nullptr) {
                try {
                    const TokenSpan span =
                        align_answer(full_tokens, para.context, target_answer->text,
                                     target_answer->char_start);
                    const std::vector<std::uint8_t> target =
                        build_target(span, ctx_pad, ds.max_context_len);
                    const auto [s, e] = target_positions(target);
                    ex.has_target = true;
                    ex.target_start = s;
                    ex.target_end = e;
                    ++ds.counts.with_target;
                } catch (const SpanWindowError&) {
                    ++ds.counts.dropped_truncation;
                } catch (const AlignmentError&) {
                    ++ds.counts.alignment_failures;
                }
            }
            ds.examples.push_back(std::move(ex));
        }
    }
    return ds;
}

}  // namespace spanqa
