#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spanqa/autodiff.hpp"
#include "spanqa/corpus.hpp"
#include "spanqa/embeddings.hpp"
#include "spanqa/matrix.hpp"

namespace spanqa {

enum class EncoderKind { kVanilla, kBilstm, kStacked3 };
enum class AttentionKind { kNone, kC2q, kBidaf };

const char* to_string(EncoderKind kind);
const char* to_string(AttentionKind kind);
EncoderKind parse_encoder(const std::string& name);      // throws ConfigError
AttentionKind parse_attention(const std::string& name);  // throws ConfigError

struct ModelConfig {
    EncoderKind encoder = EncoderKind::kBilstm;
    AttentionKind attention = AttentionKind::kC2q;
    int hidden_size = 128;
    int attention_dim = 0;  // 0 = hidden_size
    int span_length = 20;
    int max_context_len = 0;
    int max_question_len = 0;
    bool mask_padding = false;
    std::uint64_t seed = 1;

    int resolved_attention_dim() const { return attention_dim > 0 ? attention_dim : hidden_size; }
    // Per-timestep feature width the encoder emits.
    int encoder_width() const {
        return encoder == EncoderKind::kBilstm ? 2 * hidden_size : hidden_size;
    }
    // Collects every violation into one ConfigError.
    void validate() const;
};

struct HiddenStates {
    Matrix values;  // seq_len x encoder_width
};

// Per-token start/end probabilities over padded positions.
struct SpanDistribution {
    std::vector<double> start_probs;
    std::vector<double> end_probs;
};

struct SpanPrediction {
    TokenSpan span{0, 0};  // unpadded coordinates
    double joint_prob = 0.0;
    std::string answer_text;
    bool degenerate = false;  // no real token positions to choose from
};

// Gate order inside the packed 4h blocks: input, forget, cell, output.
struct LstmParams {
    Matrix wx;  // input_dim x 4h
    Matrix wh;  // h x 4h
    Matrix b;   // 1 x 4h
};

struct EncoderParams {
    std::vector<LstmParams> forward_layers;   // vanilla: 1, stacked3: 3
    std::vector<LstmParams> backward_layers;  // bilstm only
};

// ---- graph builders ----
// The tape-level pieces every forward pass is assembled from. The plain
// operations below run these on a throwaway tape, so there is exactly one
// implementation of each formula.
namespace graph {

struct LstmRefs {
    Tape::Ref wx, wh, b;
};
struct EncoderRefs {
    std::vector<LstmRefs> forward_layers;
    std::vector<LstmRefs> backward_layers;
};

// Full hidden-state sequence (seq x hidden). With mask set, the pad prefix
// emits zero rows and does not advance the recurrence.
Tape::Ref lstm_sequence(Tape& t, Tape::Ref x, const LstmRefs& p, int hidden, bool reverse,
                        int pad_offset, bool mask);
Tape::Ref encoder(Tape& t, Tape::Ref x, const ModelConfig& config, const EncoderRefs& p,
                  int pad_offset);
Tape::Ref alignment_matrix(Tape& t, Tape::Ref hc, Tape::Ref hq);  // softmax_rows(Hc Hq^T)
Tape::Ref c2q(Tape& t, Tape::Ref hc, Tape::Ref hq, Tape::Ref dense_w, Tape::Ref dense_b);
Tape::Ref q2c(Tape& t, Tape::Ref hc, Tape::Ref hq);
Tape::Ref bidaf(Tape& t, Tape::Ref hc, Tape::Ref c2q_out, Tape::Ref q2c_out);
// Start/end probability rows (each 1 x n) from the bilinear scores.
std::pair<Tape::Ref, Tape::Ref> bilinear_probs(Tape& t, Tape::Ref f, Tape::Ref q_summary,
                                               Tape::Ref ws, Tape::Ref we);
// -log p_start[s] - log p_end[e], clamped at 1e-12.
Tape::Ref nll_loss(Tape& t, Tape::Ref start_probs, Tape::Ref end_probs, int start_pos,
                   int end_pos);

}  // namespace graph

// ---- plain operations ----

// Row i of the result is the embedding row of ids[i]; throws LookupError on
// out-of-range ids.
Matrix embed(const std::vector<int>& ids, const EmbeddingMatrix& matrix);

HiddenStates encode(const Matrix& embedded, const ModelConfig& config, const EncoderParams& params,
                    int pad_offset = 0);

Matrix alignment_weights(const Matrix& hc, const Matrix& hq);  // Hc Hq^T
Matrix alignment_matrix(const Matrix& hc, const Matrix& hq);   // row-softmaxed weights

Matrix c2q_attention(const Matrix& hc, const Matrix& hq, const Matrix& dense_w,
                     const Matrix& dense_b);
Matrix q2c_attention(const Matrix& hc, const Matrix& hq);
Matrix bidaf_merge(const Matrix& hc, const Matrix& c2q_out, const Matrix& q2c_out);

SpanDistribution bilinear_span_distribution(const Matrix& f, const std::vector<double>& q_summary,
                                            const Matrix& ws, const Matrix& we);

// J[i,j] = start[i]*end[j] inside the band i <= j <= i+span_length-1, else 0.
Matrix span_joint(const SpanDistribution& dist, int span_length);

// Argmax over valid band entries outside the pad prefix; ties break to the
// smallest (i, j). answer_text is the original-cased source slice.
SpanPrediction decode_span(const Matrix& joint, int span_length, int pad_offset,
                           const std::vector<OffsetToken>& tokens,
                           const std::string& context_text);

// -log start[s] - log end[e] at the target positions, clamped at 1e-12.
double span_loss(const SpanDistribution& dist, const std::vector<std::uint8_t>& target);

// ---- parameters ----

struct ParamTensor {
    std::string name;
    Matrix value;
};

class ParameterSet {
public:
    int add(std::string name, Matrix value);
    std::size_t count() const { return items_.size(); }
    ParamTensor& at(std::size_t i) { return items_[i]; }
    const ParamTensor& at(std::size_t i) const { return items_[i]; }
    int index_of(const std::string& name) const;  // -1 when absent

private:
    std::vector<ParamTensor> items_;
};

// The assembled network: embedding lookup, context/question encoders,
// configured attention, bilinear start/end scoring. Forward passes are pure;
// parameters are mutated only by the training loop.
class SpanModel {
public:
    SpanModel(ModelConfig config, EmbeddingMatrix embedding);

    const ModelConfig& config() const { return config_; }
    const EmbeddingMatrix& embedding() const { return embedding_; }
    EmbeddingMatrix& embedding() { return embedding_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }

    struct Bindings {
        std::vector<Tape::Ref> param_refs;  // index-aligned with params()
        Tape::Ref embedding_table = -1;     // compact used-row table, trainable only
        std::vector<int> embedding_rows;    // table row -> embedding matrix row
        Tape::Ref start_probs = -1;         // 1 x n
        Tape::Ref end_probs = -1;
        Tape::Ref loss = -1;  // set when target positions were given
    };

    // Builds the forward graph (and loss when target is non-null) on the
    // caller's tape. target = (start, end) in padded coordinates.
    Bindings build_graph(Tape& tape, const std::vector<int>& context_ids, int context_pad,
                         const std::vector<int>& question_ids, int question_pad,
                         const std::pair<int, int>* target) const;

    SpanDistribution forward(const std::vector<int>& context_ids, int context_pad,
                             const std::vector<int>& question_ids, int question_pad) const;

private:
    struct LstmIdx {
        int wx = -1, wh = -1, b = -1;
    };

    LstmIdx add_lstm(const std::string& prefix, int input_dim, Rng& rng);
    graph::LstmRefs lstm_refs(const LstmIdx& idx, const Bindings& b) const;

    ModelConfig config_;
    EmbeddingMatrix embedding_;
    ParameterSet params_;
    std::vector<LstmIdx> ctx_forward_, ctx_backward_, q_forward_, q_backward_;
    int dense_w_ = -1, dense_b_ = -1;
    int ws_ = -1, we_ = -1;
};

// Forward-only loss for one example; the finite-difference harness and the
// training loop both use it.
double example_loss(const SpanModel& model, const std::vector<int>& context_ids, int context_pad,
                    const std::vector<int>& question_ids, int question_pad, int target_start,
                    int target_end);

}  // namespace spanqa
