#include "spanqa/model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "spanqa/errors.hpp"

namespace spanqa {

const char* to_string(EncoderKind kind) {
    switch (kind) {
        case EncoderKind::kVanilla: return "vanilla";
        case EncoderKind::kBilstm: return "bilstm";
        case EncoderKind::kStacked3: return "stacked3";
    }
    return "?";
}

const char* to_string(AttentionKind kind) {
    switch (kind) {
        case AttentionKind::kNone: return "none";
        case AttentionKind::kC2q: return "c2q";
        case AttentionKind::kBidaf: return "bidaf";
    }
    return "?";
}

EncoderKind parse_encoder(const std::string& name) {
    if (name == "vanilla") return EncoderKind::kVanilla;
    if (name == "bilstm") return EncoderKind::kBilstm;
    if (name == "stacked3") return EncoderKind::kStacked3;
    throw ConfigError("model.encoder: unknown value \"" + name +
                      "\" (expected vanilla|bilstm|stacked3)");
}

AttentionKind parse_attention(const std::string& name) {
    if (name == "none") return AttentionKind::kNone;
    if (name == "c2q") return AttentionKind::kC2q;
    if (name == "bidaf") return AttentionKind::kBidaf;
    throw ConfigError("model.attention: unknown value \"" + name + "\" (expected none|c2q|bidaf)");
}

void ModelConfig::validate() const {
    std::vector<std::string> issues;
    if (hidden_size < 1) issues.push_back("model.hidden_size must be >= 1");
    if (span_length < 1) issues.push_back("model.span_length must be >= 1");
    if (attention_dim < 0) issues.push_back("model.attention_dim must be >= 0");
    if (max_context_len < 1) issues.push_back("model.max_context_len must be >= 1");
    if (max_question_len < 1) issues.push_back("model.max_question_len must be >= 1");
    if (max_context_len >= 1 && span_length > max_context_len)
        issues.push_back("model.span_length (" + std::to_string(span_length) +
                         ") exceeds max_context_len (" + std::to_string(max_context_len) + ")");
    if (!issues.empty()) throw ConfigError(std::move(issues));
}

// ---- graph builders ----

namespace graph {

Tape::Ref lstm_sequence(Tape& t, Tape::Ref x, const LstmRefs& p, int hidden, bool reverse,
                        int pad_offset, bool mask) {
    const int n = t.value(x).rows();
    const int skip = mask ? std::min(std::max(pad_offset, 0), n) : 0;

    Tape::Ref h = t.input(Matrix::zeros(1, hidden));
    Tape::Ref c = t.input(Matrix::zeros(1, hidden));
    Tape::Ref zero_row = -1;

    std::vector<Tape::Ref> outputs(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < skip; ++i) {
        if (zero_row < 0) zero_row = t.input(Matrix::zeros(1, hidden));
        outputs[static_cast<std::size_t>(i)] = zero_row;
    }
    for (int step = skip; step < n; ++step) {
        const int pos = reverse ? n - 1 - (step - skip) : step;
        Tape::Ref xt = t.slice_row(x, pos);
        Tape::Ref z = t.add(t.add(t.matmul(xt, p.wx), t.matmul(h, p.wh)), p.b);
        Tape::Ref gi = t.sigmoid_op(t.slice_cols(z, 0, hidden));
        Tape::Ref gf = t.sigmoid_op(t.slice_cols(z, hidden, 2 * hidden));
        Tape::Ref gc = t.tanh_op(t.slice_cols(z, 2 * hidden, 3 * hidden));
        Tape::Ref go = t.sigmoid_op(t.slice_cols(z, 3 * hidden, 4 * hidden));
        c = t.add(t.mul(gf, c), t.mul(gi, gc));
        h = t.mul(go, t.tanh_op(c));
        outputs[static_cast<std::size_t>(pos)] = h;
    }
    return t.concat_rows(outputs);
}

Tape::Ref encoder(Tape& t, Tape::Ref x, const ModelConfig& config, const EncoderRefs& p,
                  int pad_offset) {
    const int h = config.hidden_size;
    const bool mask = config.mask_padding;
    switch (config.encoder) {
        case EncoderKind::kVanilla:
            return lstm_sequence(t, x, p.forward_layers.at(0), h, false, pad_offset, mask);
        case EncoderKind::kBilstm: {
            Tape::Ref fwd = lstm_sequence(t, x, p.forward_layers.at(0), h, false, pad_offset, mask);
            Tape::Ref bwd = lstm_sequence(t, x, p.backward_layers.at(0), h, true, pad_offset, mask);
            return t.concat_cols(fwd, bwd);
        }
        case EncoderKind::kStacked3: {
            Tape::Ref cur = x;
            for (int layer = 0; layer < 3; ++layer)
                cur = lstm_sequence(t, cur, p.forward_layers.at(static_cast<std::size_t>(layer)), h,
                                    false, pad_offset, mask);
            return cur;
        }
    }
    throw ConfigError("unknown encoder variant");
}

Tape::Ref alignment_matrix(Tape& t, Tape::Ref hc, Tape::Ref hq) {
    return t.softmax_rows(t.matmul_nt(hc, hq));
}

Tape::Ref c2q(Tape& t, Tape::Ref hc, Tape::Ref hq, Tape::Ref dense_w, Tape::Ref dense_b) {
    Tape::Ref a = alignment_matrix(t, hc, hq);
    Tape::Ref uq = t.matmul(a, hq);       // question attention vectors
    Tape::Ref g = t.concat_cols(hc, uq);  // context attention vector
    const int n = t.value(hc).rows();
    Tape::Ref bias = t.tile_rows(dense_b, n);
    return t.tanh_op(t.add(t.matmul(g, dense_w), bias));
}

Tape::Ref q2c(Tape& t, Tape::Ref hc, Tape::Ref hq) {
    Tape::Ref w = t.matmul_nt(hc, hq);
    Tape::Ref scores = t.transpose_op(t.row_max(w));  // 1 x n max alignment scores
    Tape::Ref b = t.softmax_rows(scores);
    Tape::Ref summary = t.matmul(b, hc);  // 1 x d
    return t.tile_rows(summary, t.value(hc).rows());
}

Tape::Ref bidaf(Tape& t, Tape::Ref hc, Tape::Ref c2q_out, Tape::Ref q2c_out) {
    return t.concat_cols(t.concat_cols(hc, c2q_out), q2c_out);
}

std::pair<Tape::Ref, Tape::Ref> bilinear_probs(Tape& t, Tape::Ref f, Tape::Ref q_summary,
                                               Tape::Ref ws, Tape::Ref we) {
    Tape::Ref q_col = t.transpose_op(q_summary);  // dq x 1
    Tape::Ref zs = t.matmul(t.matmul(f, ws), q_col);
    Tape::Ref ze = t.matmul(t.matmul(f, we), q_col);
    Tape::Ref ps = t.softmax_rows(t.transpose_op(zs));
    Tape::Ref pe = t.softmax_rows(t.transpose_op(ze));
    return {ps, pe};
}

Tape::Ref nll_loss(Tape& t, Tape::Ref start_probs, Tape::Ref end_probs, int start_pos,
                   int end_pos) {
    Tape::Ref ls = t.neg_log_clamped(t.pick(start_probs, 0, start_pos), 1e-12);
    Tape::Ref le = t.neg_log_clamped(t.pick(end_probs, 0, end_pos), 1e-12);
    return t.add(ls, le);
}

}  // namespace graph

// ---- plain operations ----

Matrix embed(const std::vector<int>& ids, const EmbeddingMatrix& matrix) {
    Matrix out(static_cast<int>(ids.size()), matrix.values.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const int id = ids[i];
        if (id < 0 || id >= matrix.values.rows())
            throw LookupError("embed: id " + std::to_string(id) + " outside vocabulary of " +
                              std::to_string(matrix.values.rows()) + " rows");
        for (int j = 0; j < matrix.values.cols(); ++j)
            out(static_cast<int>(i), j) = matrix.values(id, j);
    }
    return out;
}

namespace {

graph::EncoderRefs register_encoder_params(Tape& t, const EncoderParams& params) {
    graph::EncoderRefs refs;
    for (const LstmParams& p : params.forward_layers)
        refs.forward_layers.push_back({t.input(p.wx), t.input(p.wh), t.input(p.b)});
    for (const LstmParams& p : params.backward_layers)
        refs.backward_layers.push_back({t.input(p.wx), t.input(p.wh), t.input(p.b)});
    return refs;
}

}  // namespace

HiddenStates encode(const Matrix& embedded, const ModelConfig& config, const EncoderParams& params,
                    int pad_offset) {
    Tape t;
    Tape::Ref x = t.input(embedded);
    graph::EncoderRefs refs = register_encoder_params(t, params);
    Tape::Ref out = graph::encoder(t, x, config, refs, pad_offset);
    return HiddenStates{t.value(out)};
}

Matrix alignment_weights(const Matrix& hc, const Matrix& hq) { return matmul_nt(hc, hq); }

Matrix alignment_matrix(const Matrix& hc, const Matrix& hq) {
    Tape t;
    return t.value(graph::alignment_matrix(t, t.input(hc), t.input(hq)));
}

Matrix c2q_attention(const Matrix& hc, const Matrix& hq, const Matrix& dense_w,
                     const Matrix& dense_b) {
    Tape t;
    return t.value(graph::c2q(t, t.input(hc), t.input(hq), t.input(dense_w), t.input(dense_b)));
}

Matrix q2c_attention(const Matrix& hc, const Matrix& hq) {
    Tape t;
    return t.value(graph::q2c(t, t.input(hc), t.input(hq)));
}

Matrix bidaf_merge(const Matrix& hc, const Matrix& c2q_out, const Matrix& q2c_out) {
    if (hc.rows() != c2q_out.rows() || hc.rows() != q2c_out.rows())
        throw ShapeError("bidaf_merge: row counts differ");
    Tape t;
    return t.value(graph::bidaf(t, t.input(hc), t.input(c2q_out), t.input(q2c_out)));
}

SpanDistribution bilinear_span_distribution(const Matrix& f, const std::vector<double>& q_summary,
                                            const Matrix& ws, const Matrix& we) {
    Matrix q(1, static_cast<int>(q_summary.size()));
    for (std::size_t i = 0; i < q_summary.size(); ++i) q(0, static_cast<int>(i)) = q_summary[i];
    Tape t;
    auto [ps, pe] = graph::bilinear_probs(t, t.input(f), t.input(q), t.input(ws), t.input(we));
    SpanDistribution dist;
    const Matrix& vps = t.value(ps);
    const Matrix& vpe = t.value(pe);
    dist.start_probs.assign(vps.data(), vps.data() + vps.size());
    dist.end_probs.assign(vpe.data(), vpe.data() + vpe.size());
    return dist;
}

Matrix span_joint(const SpanDistribution& dist, int span_length) {
    if (span_length < 1) throw ContractError("span_joint: span_length must be >= 1");
    const int n = static_cast<int>(dist.start_probs.size());
    Matrix j(n, n);
    for (int i = 0; i < n; ++i) {
        const int jmax = std::min(n - 1, i + span_length - 1);
        for (int k = i; k <= jmax; ++k) j(i, k) = dist.start_probs[static_cast<std::size_t>(i)] *
                                                  dist.end_probs[static_cast<std::size_t>(k)];
    }
    return j;
}

SpanPrediction decode_span(const Matrix& joint, int span_length, int pad_offset,
                           const std::vector<OffsetToken>& tokens,
                           const std::string& context_text) {
    const int n = joint.rows();
    SpanPrediction pred;
    const int real = n - std::max(pad_offset, 0);
    if (real <= 0 || tokens.empty()) {
        pred.degenerate = true;
        return pred;
    }
    // Positions past the token list never carry real tokens; exclude them.
    const int limit = std::min(n, pad_offset + static_cast<int>(tokens.size()));
    int best_i = -1, best_j = -1;
    double best = -1.0;
    for (int i = std::max(pad_offset, 0); i < limit; ++i) {
        const int jmax = std::min(limit - 1, i + span_length - 1);
        for (int j = i; j <= jmax; ++j) {
            if (joint(i, j) > best) {
                best = joint(i, j);
                best_i = i;
                best_j = j;
            }
        }
    }
    if (best_i < 0) {
        pred.degenerate = true;
        return pred;
    }
    pred.span = TokenSpan{best_i - pad_offset, best_j - pad_offset};
    pred.joint_prob = best;
    const OffsetToken& first = tokens[static_cast<std::size_t>(pred.span.start)];
    const OffsetToken& last = tokens[static_cast<std::size_t>(pred.span.end)];
    pred.answer_text = context_text.substr(static_cast<std::size_t>(first.char_start),
                                           static_cast<std::size_t>(last.char_end - first.char_start));
    return pred;
}

double span_loss(const SpanDistribution& dist, const std::vector<std::uint8_t>& target) {
    const std::size_t n = dist.start_probs.size();
    if (target.size() != 2 * n)
        throw ContractError("span_loss: target length " + std::to_string(target.size()) +
                            " does not match 2n = " + std::to_string(2 * n));
    const auto [s, e] = target_positions(target);
    const double ps = std::max(dist.start_probs[static_cast<std::size_t>(s)], 1e-12);
    const double pe = std::max(dist.end_probs[static_cast<std::size_t>(e)], 1e-12);
    return -std::log(ps) - std::log(pe);
}

// ---- parameters ----

int ParameterSet::add(std::string name, Matrix value) {
    items_.push_back(ParamTensor{std::move(name), std::move(value)});
    return static_cast<int>(items_.size() - 1);
}

int ParameterSet::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < items_.size(); ++i)
        if (items_[i].name == name) return static_cast<int>(i);
    return -1;
}

// ---- SpanModel ----

namespace {

Matrix glorot_uniform(int rows, int cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / (rows + cols));
    return Matrix::uniform(rows, cols, -limit, limit, rng);
}

// Forget-gate bias starts at 1 so early training does not erase state.
Matrix lstm_bias(int hidden) {
    Matrix b(1, 4 * hidden);
    for (int j = hidden; j < 2 * hidden; ++j) b(0, j) = 1.0;
    return b;
}

}  // namespace

SpanModel::LstmIdx SpanModel::add_lstm(const std::string& prefix, int input_dim, Rng& rng) {
    const int h = config_.hidden_size;
    LstmIdx idx;
    idx.wx = params_.add(prefix + ".wx", glorot_uniform(input_dim, 4 * h, rng));
    idx.wh = params_.add(prefix + ".wh", glorot_uniform(h, 4 * h, rng));
    idx.b = params_.add(prefix + ".b", lstm_bias(h));
    return idx;
}

SpanModel::SpanModel(ModelConfig config, EmbeddingMatrix embedding)
    : config_(config), embedding_(std::move(embedding)) {
    Rng rng(config_.seed);
    const int d = config_.encoder_width();
    const int a = config_.resolved_attention_dim();
    const int emb_dim = embedding_.values.cols();

    auto build_encoder = [&](const std::string& side, std::vector<LstmIdx>& fwd,
                             std::vector<LstmIdx>& bwd) {
        switch (config_.encoder) {
            case EncoderKind::kVanilla:
                fwd.push_back(add_lstm(side + ".lstm0", emb_dim, rng));
                break;
            case EncoderKind::kBilstm:
                fwd.push_back(add_lstm(side + ".fwd0", emb_dim, rng));
                bwd.push_back(add_lstm(side + ".bwd0", emb_dim, rng));
                break;
            case EncoderKind::kStacked3:
                fwd.push_back(add_lstm(side + ".lstm0", emb_dim, rng));
                fwd.push_back(add_lstm(side + ".lstm1", config_.hidden_size, rng));
                fwd.push_back(add_lstm(side + ".lstm2", config_.hidden_size, rng));
                break;
        }
    };
    build_encoder("ctx", ctx_forward_, ctx_backward_);
    build_encoder("q", q_forward_, q_backward_);

    if (config_.attention != AttentionKind::kNone) {
        dense_w_ = params_.add("attn.dense.w", glorot_uniform(2 * d, a, rng));
        dense_b_ = params_.add("attn.dense.b", Matrix::zeros(1, a));
    }

    int f_width = d;
    if (config_.attention == AttentionKind::kC2q) f_width = a;
    if (config_.attention == AttentionKind::kBidaf) f_width = 2 * d + a;
    ws_ = params_.add("bilinear.ws", glorot_uniform(f_width, d, rng));
    we_ = params_.add("bilinear.we", glorot_uniform(f_width, d, rng));
}

graph::LstmRefs SpanModel::lstm_refs(const LstmIdx& idx, const Bindings& b) const {
    return graph::LstmRefs{b.param_refs[static_cast<std::size_t>(idx.wx)],
                           b.param_refs[static_cast<std::size_t>(idx.wh)],
                           b.param_refs[static_cast<std::size_t>(idx.b)]};
}

SpanModel::Bindings SpanModel::build_graph(Tape& tape, const std::vector<int>& context_ids,
                                           int context_pad, const std::vector<int>& question_ids,
                                           int question_pad,
                                           const std::pair<int, int>* target) const {
    Bindings b;
    b.param_refs.reserve(params_.count());
    for (std::size_t i = 0; i < params_.count(); ++i)
        b.param_refs.push_back(tape.input(params_.at(i).value));

    Tape::Ref ctx_emb, q_emb;
    if (embedding_.trainable) {
        // Register only the rows this example touches; gradients scatter back
        // through embedding_rows.
        std::vector<int> rows;
        rows.reserve(context_ids.size() + question_ids.size());
        rows.insert(rows.end(), context_ids.begin(), context_ids.end());
        rows.insert(rows.end(), question_ids.begin(), question_ids.end());
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        std::unordered_map<int, int> to_compact;
        Matrix table(static_cast<int>(rows.size()), embedding_.values.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const int id = rows[i];
            if (id < 0 || id >= embedding_.values.rows())
                throw LookupError("embed: id " + std::to_string(id) + " outside vocabulary of " +
                                  std::to_string(embedding_.values.rows()) + " rows");
            to_compact[id] = static_cast<int>(i);
            for (int j = 0; j < embedding_.values.cols(); ++j)
                table(static_cast<int>(i), j) = embedding_.values(id, j);
        }
        b.embedding_rows = rows;
        b.embedding_table = tape.input(std::move(table));
        auto remap = [&to_compact](const std::vector<int>& ids) {
            std::vector<int> out;
            out.reserve(ids.size());
            for (int id : ids) out.push_back(to_compact.at(id));
            return out;
        };
        ctx_emb = tape.gather_rows(b.embedding_table, remap(context_ids));
        q_emb = tape.gather_rows(b.embedding_table, remap(question_ids));
    } else {
        ctx_emb = tape.input(embed(context_ids, embedding_));
        q_emb = tape.input(embed(question_ids, embedding_));
    }

    graph::EncoderRefs ctx_refs, q_refs;
    for (const LstmIdx& idx : ctx_forward_) ctx_refs.forward_layers.push_back(lstm_refs(idx, b));
    for (const LstmIdx& idx : ctx_backward_) ctx_refs.backward_layers.push_back(lstm_refs(idx, b));
    for (const LstmIdx& idx : q_forward_) q_refs.forward_layers.push_back(lstm_refs(idx, b));
    for (const LstmIdx& idx : q_backward_) q_refs.backward_layers.push_back(lstm_refs(idx, b));

    Tape::Ref hc = graph::encoder(tape, ctx_emb, config_, ctx_refs, context_pad);
    Tape::Ref hq = graph::encoder(tape, q_emb, config_, q_refs, question_pad);

    Tape::Ref f = hc;
    if (config_.attention == AttentionKind::kC2q) {
        f = graph::c2q(tape, hc, hq, b.param_refs[static_cast<std::size_t>(dense_w_)],
                       b.param_refs[static_cast<std::size_t>(dense_b_)]);
    } else if (config_.attention == AttentionKind::kBidaf) {
        Tape::Ref c2q_out = graph::c2q(tape, hc, hq, b.param_refs[static_cast<std::size_t>(dense_w_)],
                                       b.param_refs[static_cast<std::size_t>(dense_b_)]);
        Tape::Ref q2c_out = graph::q2c(tape, hc, hq);
        f = graph::bidaf(tape, hc, c2q_out, q2c_out);
    }

    // Pre-padding puts real tokens last, so the final row is the summary state.
    Tape::Ref q_summary = tape.slice_row(hq, tape.value(hq).rows() - 1);
    auto [ps, pe] = graph::bilinear_probs(tape, f, q_summary,
                                          b.param_refs[static_cast<std::size_t>(ws_)],
                                          b.param_refs[static_cast<std::size_t>(we_)]);
    b.start_probs = ps;
    b.end_probs = pe;
    if (target != nullptr)
        b.loss = graph::nll_loss(tape, ps, pe, target->first, target->second);
    return b;
}

SpanDistribution SpanModel::forward(const std::vector<int>& context_ids, int context_pad,
                                    const std::vector<int>& question_ids, int question_pad) const {
    Tape tape;
    Bindings b = build_graph(tape, context_ids, context_pad, question_ids, question_pad, nullptr);
    SpanDistribution dist;
    const Matrix& ps = tape.value(b.start_probs);
    const Matrix& pe = tape.value(b.end_probs);
    dist.start_probs.assign(ps.data(), ps.data() + ps.size());
    dist.end_probs.assign(pe.data(), pe.data() + pe.size());
    return dist;
}

double example_loss(const SpanModel& model, const std::vector<int>& context_ids, int context_pad,
                    const std::vector<int>& question_ids, int question_pad, int target_start,
                    int target_end) {
    Tape tape;
    const std::pair<int, int> target{target_start, target_end};
    SpanModel::Bindings b =
        model.build_graph(tape, context_ids, context_pad, question_ids, question_pad, &target);
    return tape.value(b.loss)(0, 0);
}

}  // namespace spanqa
