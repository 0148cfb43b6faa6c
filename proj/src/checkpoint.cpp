#include "spanqa/checkpoint.hpp"

#include <cstdio>
#include <fstream>

#include "spanqa/binio.hpp"
#include "spanqa/config.hpp"
#include "spanqa/errors.hpp"
#include "spanqa/version.hpp"

namespace spanqa {

namespace {

constexpr char kMagic[9] = "SQCKPT01";

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    BinaryWriter w(path);
    w.str(kMagic);
    w.str(serialize_model_config(ckpt.model.config()));
    w.str(ckpt.embedding_source);

    w.u64(ckpt.vocab.tokens().size());
    for (const std::string& tok : ckpt.vocab.tokens()) w.str(tok);
    w.u64(ckpt.vocab.content_hash());

    const EmbeddingMatrix& emb = ckpt.model.embedding();
    w.u8(emb.trainable ? 1 : 0);
    w.i32(emb.dim);
    w.i32(emb.oov_count);
    w.matrix(emb.values);

    const ParameterSet& params = ckpt.model.params();
    w.u32(static_cast<std::uint32_t>(params.count()));
    for (std::size_t i = 0; i < params.count(); ++i) {
        w.str(params.at(i).name);
        w.matrix(params.at(i).value);
    }

    w.u8(ckpt.has_opt_state ? 1 : 0);
    if (ckpt.has_opt_state) {
        w.u64(ckpt.opt_state.step);
        w.u32(static_cast<std::uint32_t>(ckpt.opt_state.m.size()));
        for (std::size_t i = 0; i < ckpt.opt_state.m.size(); ++i) {
            w.matrix(ckpt.opt_state.m[i]);
            w.matrix(ckpt.opt_state.u[i]);
        }
    }
    w.i32(ckpt.completed_epochs);
    w.finish();

    std::ofstream manifest(path + ".manifest");
    if (!manifest) throw IoError("cannot write checkpoint manifest: " + path + ".manifest");
    manifest << checkpoint_manifest_text(ckpt);
    if (!manifest.good()) throw IoError("write failed: " + path + ".manifest");
}

Checkpoint load_checkpoint(const std::string& path) {
    BinaryReader r(path);
    if (r.str() != kMagic) throw SchemaError("not a checkpoint: " + path);

    const ModelConfig config = model_config_from_text(r.str());
    const std::string embedding_source = r.str();

    const std::uint64_t vocab_count = r.u64();
    std::vector<std::string> tokens;
    tokens.reserve(vocab_count);
    for (std::uint64_t i = 0; i < vocab_count; ++i) tokens.push_back(r.str());
    Vocabulary vocab(std::move(tokens));
    const std::uint64_t stored_hash = r.u64();
    if (vocab.content_hash() != stored_hash)
        throw SchemaError("checkpoint vocabulary hash mismatch (stored " + hex64(stored_hash) +
                          ", recomputed " + hex64(vocab.content_hash()) + "): " + path);

    EmbeddingMatrix emb;
    emb.trainable = r.u8() != 0;
    emb.dim = r.i32();
    emb.oov_count = r.i32();
    emb.values = r.matrix();
    if (emb.values.rows() != vocab.size())
        throw SchemaError("checkpoint embedding rows do not match vocabulary: " + path);

    SpanModel model(config, std::move(emb));
    const std::uint32_t param_count = r.u32();
    if (param_count != model.params().count())
        throw SchemaError("checkpoint parameter count mismatch: " + path);
    for (std::uint32_t i = 0; i < param_count; ++i) {
        const std::string name = r.str();
        Matrix value = r.matrix();
        const int idx = model.params().index_of(name);
        if (idx < 0) throw SchemaError("checkpoint has unknown parameter " + name + ": " + path);
        Matrix& dst = model.params().at(static_cast<std::size_t>(idx)).value;
        if (!dst.same_shape(value))
            throw SchemaError("checkpoint parameter " + name + " has wrong shape: " + path);
        dst = std::move(value);
    }

    Checkpoint ckpt{std::move(model), std::move(vocab), embedding_source, AdamaxState{}, false, 0};
    if (r.u8() != 0) {
        ckpt.has_opt_state = true;
        ckpt.opt_state.step = r.u64();
        const std::uint32_t slots = r.u32();
        for (std::uint32_t i = 0; i < slots; ++i) {
            ckpt.opt_state.m.push_back(r.matrix());
            ckpt.opt_state.u.push_back(r.matrix());
        }
    }
    ckpt.completed_epochs = r.i32();
    return ckpt;
}

std::string checkpoint_manifest_text(const Checkpoint& ckpt) {
    std::string out;
    out += std::string("tool: ") + kToolName + " " + kToolVersion + "\n";
    out += serialize_model_config(ckpt.model.config());
    out += "vocab_hash: " + hex64(ckpt.vocab.content_hash()) + "\n";
    out += "vocab_size: " + std::to_string(ckpt.vocab.size()) + "\n";
    out += "embedding_source: " + ckpt.embedding_source + "\n";
    out += "embedding_dim: " + std::to_string(ckpt.model.embedding().dim) + "\n";
    out += std::string("embedding_trainable: ") +
           (ckpt.model.embedding().trainable ? "true" : "false") + "\n";
    out += "embedding_oov_rows: " + std::to_string(ckpt.model.embedding().oov_count) + "\n";
    out += "completed_epochs: " + std::to_string(ckpt.completed_epochs) + "\n";
    out += std::string("optimizer_state: ") + (ckpt.has_opt_state ? "present" : "absent") + "\n";
    return out;
}

}  // namespace spanqa
