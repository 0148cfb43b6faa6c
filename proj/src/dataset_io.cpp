#include "spanqa/dataset_io.hpp"

#include <algorithm>

#include "spanqa/binio.hpp"
#include "spanqa/errors.hpp"

namespace spanqa {

namespace {

constexpr char kMagic[9] = "SQPREP01";

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; }

}  // namespace

void write_dataset(const std::string& path, const PreparedDataset& ds) {
    BinaryWriter w(path);
    w.str(kMagic);
    w.i32(ds.max_context_len);
    w.i32(ds.max_question_len);

    w.u64(ds.vocab.tokens().size());
    for (const std::string& tok : ds.vocab.tokens()) w.str(tok);

    w.u64(ds.contexts.size());
    for (const PreparedContext& ctx : ds.contexts) {
        w.str(ctx.text);
        w.u32(static_cast<std::uint32_t>(ctx.tokens.size()));
        for (const OffsetToken& t : ctx.tokens) {
            w.i32(t.char_start);
            w.i32(t.char_end);
        }
    }

    w.u64(ds.examples.size());
    for (const PreparedExample& ex : ds.examples) {
        w.str(ex.qa_id);
        w.i32(ex.context_index);
        w.i32_vec(ex.question_ids);
        w.i32(ex.question_pad_offset);
        w.u8(ex.answerable ? 1 : 0);
        w.u8(ex.has_target ? 1 : 0);
        w.i32(ex.target_start);
        w.i32(ex.target_end);
        w.u32(static_cast<std::uint32_t>(ex.gold_answers.size()));
        for (const std::string& a : ex.gold_answers) w.str(a);
        w.u32(static_cast<std::uint32_t>(ex.plausible_answers.size()));
        for (const std::string& a : ex.plausible_answers) w.str(a);
    }

    w.u64(ds.counts.total);
    w.u64(ds.counts.answerable);
    w.u64(ds.counts.unanswerable);
    w.u64(ds.counts.with_target);
    w.u64(ds.counts.dropped_truncation);
    w.u64(ds.counts.alignment_failures);
    w.finish();
}

PreparedDataset read_dataset(const std::string& path) {
    BinaryReader r(path);
    if (r.str() != kMagic) throw SchemaError("not a prepared dataset: " + path);

    PreparedDataset ds;
    ds.max_context_len = r.i32();
    ds.max_question_len = r.i32();

    const std::uint64_t vocab_count = r.u64();
    std::vector<std::string> tokens;
    tokens.reserve(vocab_count);
    for (std::uint64_t i = 0; i < vocab_count; ++i) tokens.push_back(r.str());
    ds.vocab = Vocabulary(std::move(tokens));

    const std::uint64_t context_count = r.u64();
    ds.contexts.reserve(context_count);
    for (std::uint64_t i = 0; i < context_count; ++i) {
        PreparedContext ctx;
        ctx.text = r.str();
        const std::uint32_t ntok = r.u32();
        ctx.tokens.reserve(ntok);
        for (std::uint32_t t = 0; t < ntok; ++t) {
            OffsetToken tok;
            tok.char_start = r.i32();
            tok.char_end = r.i32();
            if (tok.char_start < 0 || tok.char_end <= tok.char_start ||
                tok.char_end > static_cast<int>(ctx.text.size()))
                throw SchemaError("corrupt token offsets in " + path);
            tok.text = ctx.text.substr(static_cast<std::size_t>(tok.char_start),
                                       static_cast<std::size_t>(tok.char_end - tok.char_start));
            for (auto& c : tok.text) c = ascii_lower(c);
            ctx.tokens.push_back(std::move(tok));
        }
        auto [ids, pad] = encode_tokens(ctx.tokens, ds.vocab, ds.max_context_len);
        ctx.padded_ids = std::move(ids);
        ctx.pad_offset = pad;
        ds.contexts.push_back(std::move(ctx));
    }

    const std::uint64_t example_count = r.u64();
    ds.examples.reserve(example_count);
    for (std::uint64_t i = 0; i < example_count; ++i) {
        PreparedExample ex;
        ex.qa_id = r.str();
        ex.context_index = r.i32();
        if (ex.context_index < 0 || static_cast<std::size_t>(ex.context_index) >= ds.contexts.size())
            throw SchemaError("corrupt context index in " + path);
        ex.question_ids = r.i32_vec();
        ex.question_pad_offset = r.i32();
        ex.answerable = r.u8() != 0;
        ex.has_target = r.u8() != 0;
        ex.target_start = r.i32();
        ex.target_end = r.i32();
        const std::uint32_t ngold = r.u32();
        for (std::uint32_t a = 0; a < ngold; ++a) ex.gold_answers.push_back(r.str());
        const std::uint32_t nplau = r.u32();
        for (std::uint32_t a = 0; a < nplau; ++a) ex.plausible_answers.push_back(r.str());
        ds.examples.push_back(std::move(ex));
    }

    ds.counts.total = r.u64();
    ds.counts.answerable = r.u64();
    ds.counts.unanswerable = r.u64();
    ds.counts.with_target = r.u64();
    ds.counts.dropped_truncation = r.u64();
    ds.counts.alignment_failures = r.u64();
    return ds;
}

std::string dataset_manifest_text(const PreparedDataset& ds) {
    std::string out;
    out += "total: " + std::to_string(ds.counts.total) + "\n";
    out += "answerable: " + std::to_string(ds.counts.answerable) + "\n";
    out += "unanswerable: " + std::to_string(ds.counts.unanswerable) + "\n";
    out += "with_target: " + std::to_string(ds.counts.with_target) + "\n";
    out += "dropped_by_truncation: " + std::to_string(ds.counts.dropped_truncation) + "\n";
    out += "alignment_failures: " + std::to_string(ds.counts.alignment_failures) + "\n";
    out += "vocab_size: " + std::to_string(ds.vocab.size()) + "\n";
    out += "max_context_len: " + std::to_string(ds.max_context_len) + "\n";
    out += "max_question_len: " + std::to_string(ds.max_question_len) + "\n";
    return out;
}

}  // namespace spanqa
