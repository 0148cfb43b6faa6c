#include "spanqa/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "spanqa/errors.hpp"
#include "spanqa/evaluation.hpp"
#include "spanqa/rng.hpp"

namespace spanqa {

void TrainConfig::validate() const {
    std::vector<std::string> issues;
    if (epochs < 1) issues.push_back("train.epochs must be >= 1");
    if (batch_size < 1) issues.push_back("train.batch_size must be >= 1");
    if (!(learning_rate > 0.0)) issues.push_back("train.learning_rate must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0) issues.push_back("train.beta1 must be in [0, 1)");
    if (beta2 < 0.0 || beta2 >= 1.0) issues.push_back("train.beta2 must be in [0, 1)");
    if (!(epsilon > 0.0)) issues.push_back("train.epsilon must be > 0");
    if (checkpoint_every < 0) issues.push_back("train.checkpoint_every must be >= 0");
    if (grad_clip < 0.0) issues.push_back("train.grad_clip must be >= 0");
    if (!issues.empty()) throw ConfigError(std::move(issues));
}

std::string EpochRecord::csv_row() const {
    char buf[160];
    if (dev_f1.has_value()) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.3f,%.6f,%.6f", epoch, mean_loss, seconds,
                      *dev_f1, *dev_em);
    } else {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.3f", epoch, mean_loss, seconds);
    }
    return buf;
}

std::string TrainHistory::to_csv() const {
    const bool with_dev = !records.empty() && records.front().dev_f1.has_value();
    std::string out = with_dev ? "epoch,loss,seconds,dev_f1,dev_em\n" : "epoch,loss,seconds\n";
    for (const EpochRecord& r : records) out += r.csv_row() + "\n";
    return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t example_count, int batch_size,
                                                   std::uint64_t seed) {
    if (example_count == 0) throw ConfigError("make_batches: dataset is empty");
    if (batch_size < 1) throw ConfigError("make_batches: batch_size must be >= 1");
    std::vector<std::size_t> order(example_count);
    std::iota(order.begin(), order.end(), 0);
    seeded_shuffle(order, seed);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t at = 0; at < example_count; at += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(example_count, at + static_cast<std::size_t>(batch_size));
        batches.emplace_back(order.begin() + static_cast<long>(at),
                             order.begin() + static_cast<long>(end));
    }
    return batches;
}

std::uint64_t epoch_seed(std::uint64_t base, int epoch) {
    return base + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(epoch + 1);
}

void adamax_step(const std::vector<ParamSlot>& parameters, const std::vector<Matrix>& gradients,
                 AdamaxState& state, const TrainConfig& config) {
    if (parameters.size() != gradients.size())
        throw ContractError("adamax_step: parameter/gradient count mismatch");
    if (!state.initialized()) {
        state.m.reserve(parameters.size());
        state.u.reserve(parameters.size());
        for (const ParamSlot& p : parameters) {
            state.m.push_back(Matrix::zeros(p.value->rows(), p.value->cols()));
            state.u.push_back(Matrix::zeros(p.value->rows(), p.value->cols()));
        }
    }
    if (state.m.size() != parameters.size())
        throw ContractError("adamax_step: state slot count mismatch");

    for (std::size_t i = 0; i < parameters.size(); ++i) {
        if (!all_finite(gradients[i]))
            throw NumericError("non-finite gradient in " + parameters[i].name);
    }

    state.step += 1;
    const double correction =
        config.learning_rate / (1.0 - std::pow(config.beta1, static_cast<double>(state.step)));
    for (std::size_t i = 0; i < parameters.size(); ++i) {
        Matrix& theta = *parameters[i].value;
        Matrix& m = state.m[i];
        Matrix& u = state.u[i];
        const Matrix& g = gradients[i];
        for (std::size_t k = 0; k < theta.size(); ++k) {
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
            u[k] = std::max(config.beta2 * u[k], std::fabs(g[k]));
            theta[k] -= correction * m[k] / (u[k] + config.epsilon);
        }
    }
}

namespace {

std::vector<ParamSlot> collect_slots(SpanModel& model) {
    std::vector<ParamSlot> slots;
    for (std::size_t i = 0; i < model.params().count(); ++i)
        slots.push_back({model.params().at(i).name, &model.params().at(i).value});
    if (model.embedding().trainable)
        slots.push_back({"embedding.values", &model.embedding().values});
    return slots;
}

void clip_gradients(std::vector<Matrix>& grads, double clip) {
    double sq = 0.0;
    for (const Matrix& g : grads)
        for (std::size_t i = 0; i < g.size(); ++i) sq += g[i] * g[i];
    const double norm = std::sqrt(sq);
    if (norm <= clip || norm == 0.0) return;
    const double scale = clip / norm;
    for (Matrix& g : grads)
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= scale;
}

}  // namespace

TrainHistory train(SpanModel& model, const PreparedDataset& train_data, const TrainConfig& config,
                   AdamaxState& state, const TrainOptions& options) {
    config.validate();
    model.config().validate();

    std::vector<std::size_t> trainable;
    for (std::size_t i = 0; i < train_data.examples.size(); ++i)
        if (train_data.examples[i].has_target) trainable.push_back(i);
    if (trainable.empty()) throw ConfigError("training dataset contains no targeted examples");

    std::vector<ParamSlot> slots = collect_slots(model);
    const bool emb_trainable = model.embedding().trainable;
    const std::size_t param_count = model.params().count();

    TrainHistory history;
    Tape tape;
    for (int epoch = options.start_epoch; epoch < config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto batches =
            make_batches(trainable.size(), config.batch_size, epoch_seed(config.shuffle_seed, epoch));

        double loss_sum = 0.0;
        for (const auto& batch : batches) {
            std::vector<Matrix> grads;
            grads.reserve(slots.size());
            for (const ParamSlot& s : slots)
                grads.push_back(Matrix::zeros(s.value->rows(), s.value->cols()));
            const double weight = 1.0 / static_cast<double>(batch.size());

            for (std::size_t pick : batch) {
                const PreparedExample& ex = train_data.examples[trainable[pick]];
                const PreparedContext& ctx =
                    train_data.contexts[static_cast<std::size_t>(ex.context_index)];
                const std::pair<int, int> target{ex.target_start, ex.target_end};

                tape.clear();
                SpanModel::Bindings b =
                    model.build_graph(tape, ctx.padded_ids, ctx.pad_offset, ex.question_ids,
                                      ex.question_pad_offset, &target);
                const double loss = tape.value(b.loss)(0, 0);
                if (!std::isfinite(loss))
                    throw NumericError("loss became non-finite at epoch " +
                                       std::to_string(epoch + 1) + ", example " + ex.qa_id);
                loss_sum += loss;
                tape.backward(b.loss);

                for (std::size_t p = 0; p < param_count; ++p)
                    add_scaled(grads[p], tape.grad(b.param_refs[p]), weight);
                if (emb_trainable) {
                    Matrix& eg = grads[param_count];
                    const Matrix& sub = tape.grad(b.embedding_table);
                    for (std::size_t r = 0; r < b.embedding_rows.size(); ++r)
                        for (int j = 0; j < sub.cols(); ++j)
                            eg(b.embedding_rows[r], j) += weight * sub(static_cast<int>(r), j);
                }
            }

            if (config.grad_clip > 0.0) clip_gradients(grads, config.grad_clip);
            adamax_step(slots, grads, state, config);
            if (emb_trainable) {
                // Pad row stays zero regardless of updates.
                Matrix& emb = model.embedding().values;
                for (int j = 0; j < emb.cols(); ++j) emb(Vocabulary::kPadId, j) = 0.0;
            }
        }

        EpochRecord record;
        record.epoch = epoch + 1;
        record.mean_loss = loss_sum / static_cast<double>(trainable.size());
        if (options.dev != nullptr) {
            const EvalReport dev = score_predictions(predict_all(model, *options.dev), *options.dev);
            record.dev_f1 = dev.f1_ans;
            record.dev_em = dev.em_ans;
        }
        record.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.records.push_back(record);
        if (options.on_epoch) options.on_epoch(record);
        if (config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0 &&
            options.on_checkpoint)
            options.on_checkpoint(epoch + 1);
    }
    return history;
}

double dataset_loss(const SpanModel& model, const PreparedDataset& dataset) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const PreparedExample& ex : dataset.examples) {
        if (!ex.has_target) continue;
        const PreparedContext& ctx = dataset.contexts[static_cast<std::size_t>(ex.context_index)];
        sum += example_loss(model, ctx.padded_ids, ctx.pad_offset, ex.question_ids,
                            ex.question_pad_offset, ex.target_start, ex.target_end);
        ++count;
    }
    if (count == 0) throw ConfigError("dataset_loss: no targeted examples");
    return sum / static_cast<double>(count);
}

}  // namespace spanqa
