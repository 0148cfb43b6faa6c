#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace spanqa {

// One answer occurrence. char_start is a byte offset into the owning context;
// parse_squad converts the codepoint offsets found in SQuAD files.
struct RawAnswer {
    std::string text;
    int char_start = 0;
};

struct RawQA {
    std::string id;
    std::string question;
    bool is_impossible = false;
    std::vector<RawAnswer> answers;
    std::vector<RawAnswer> plausible_answers;
};

struct ParsedParagraph {
    std::string context;
    std::vector<RawQA> qas;
};

// Parses SQuAD-2.0-format JSON. Throws SchemaError naming the JSON path of
// the first offending element (e.g. data[0].paragraphs[0].qas[0].id).
std::vector<ParsedParagraph> parse_squad(const std::string& json_text);

// Token with byte offsets into the source string; text is the lowercased
// source slice [char_start, char_end).
struct OffsetToken {
    std::string text;
    int char_start = 0;
    int char_end = 0;
};

// Maximal alphanumeric runs (bytes >= 0x80 count as letters) are tokens,
// every other non-space character is its own token. Offsets index the
// original string; token text is ASCII-lowercased.
std::vector<OffsetToken> tokenize(const std::string& text);

// Inclusive token indices.
struct TokenSpan {
    int start = 0;
    int end = 0;
};

// Maps a character-offset answer onto token indices. Throws AlignmentError
// when no token contains the start/end character or when the normalized
// source slice disagrees with the normalized answer text.
TokenSpan align_answer(const std::vector<OffsetToken>& tokens, const std::string& context,
                       const std::string& answer_text, int answer_char_start);

// Token <-> id bijection. Id 0 is padding, id 1 is out-of-vocabulary; real
// tokens start at id 2, assigned by descending frequency then lexicographic.
class Vocabulary {
public:
    static constexpr int kPadId = 0;
    static constexpr int kOovId = 1;
    static constexpr int kFirstTokenId = 2;

    Vocabulary();
    // tokens[i] receives id kFirstTokenId + i.
    explicit Vocabulary(std::vector<std::string> tokens_in_id_order);

    int id_for(const std::string& token) const;  // kOovId when absent
    const std::string& token_for(int id) const;  // valid for ids >= kFirstTokenId
    bool has_token_for(int id) const { return id >= kFirstTokenId && id < size(); }
    int size() const { return static_cast<int>(id_to_token_.size()); }

    // Tokens in id order starting at kFirstTokenId.
    const std::vector<std::string>& tokens() const { return tokens_only_; }

    // FNV-1a over the id-ordered token list; stable across runs.
    std::uint64_t content_hash() const;

private:
    std::vector<std::string> id_to_token_;  // [0] and [1] are placeholders
    std::vector<std::string> tokens_only_;
    std::unordered_map<std::string, int> token_to_id_;
};

// Accumulates token counts across streams, then assigns ids.
class VocabularyBuilder {
public:
    void add_stream(const std::vector<OffsetToken>& tokens);
    Vocabulary build() const;

private:
    std::unordered_map<std::string, std::uint64_t> counts_;
};

Vocabulary build_vocabulary(const std::vector<std::vector<OffsetToken>>& streams);

// Pre-padded encoding: unknown tokens map to the OOV id, sequences longer
// than max_len keep the first max_len tokens, shorter ones get a zero prefix.
// Returns (ids, pad_offset).
std::pair<std::vector<int>, int> encode_tokens(const std::vector<OffsetToken>& tokens,
                                               const Vocabulary& vocab, int max_len);

// Concatenated start/end one-hot target in padded coordinates. Throws
// SpanWindowError when the span does not fit the window; callers drop the
// example and count it.
std::vector<std::uint8_t> build_target(TokenSpan span, int pad_offset, int max_context_len);

// Argmax positions of a well-formed target; throws ContractError otherwise.
std::pair<int, int> target_positions(const std::vector<std::uint8_t>& target);

struct EncodedExample {
    std::string qa_id;
    std::vector<int> context_ids;   // length max_context_len, pre-padded
    std::vector<int> question_ids;  // length max_question_len, pre-padded
    int pad_offset = 0;             // leading pad ids in context_ids
    std::optional<std::vector<std::uint8_t>> target;
    bool answerable = false;
};

// ---- prepared dataset (the corpus module's output container) ----

struct PreparedContext {
    std::string text;                  // original casing, full length
    std::vector<OffsetToken> tokens;   // truncated to max_context_len
    std::vector<int> padded_ids;       // length max_context_len
    int pad_offset = 0;
};

struct PreparedExample {
    std::string qa_id;
    int context_index = 0;
    std::vector<int> question_ids;  // length max_question_len
    int question_pad_offset = 0;
    bool answerable = false;
    bool has_target = false;
    int target_start = 0;  // padded coordinates
    int target_end = 0;
    std::vector<std::string> gold_answers;
    std::vector<std::string> plausible_answers;
};

struct PrepareCounts {
    std::uint64_t total = 0;
    std::uint64_t answerable = 0;
    std::uint64_t unanswerable = 0;
    std::uint64_t with_target = 0;
    std::uint64_t dropped_truncation = 0;
    std::uint64_t alignment_failures = 0;
};

struct PreparedDataset {
    Vocabulary vocab;
    int max_context_len = 0;
    int max_question_len = 0;
    std::vector<PreparedContext> contexts;
    std::vector<PreparedExample> examples;
    PrepareCounts counts;

    // Materializes one example with its full padded target vector.
    EncodedExample encoded(std::size_t index) const;
};

struct PrepareOptions {
    int max_context_cap = 0;   // 0 = dataset maximum
    int max_question_cap = 0;  // 0 = dataset maximum
    bool train_on_plausible = false;
    // When set, reuse an existing vocabulary and window sizes (dev/test
    // preparation); OOV tokens map to id 1.
    const PreparedDataset* vocab_source = nullptr;
};

// Full pipeline: parse -> tokenize -> vocabulary -> align -> encode.
// Deterministic: identical input bytes and options give identical output.
PreparedDataset prepare_dataset(const std::string& squad_json, const PrepareOptions& options = {});

}  // namespace spanqa
