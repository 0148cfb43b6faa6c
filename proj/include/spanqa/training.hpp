#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spanqa/corpus.hpp"
#include "spanqa/model.hpp"

namespace spanqa {

struct TrainConfig {
    int epochs = 25;
    int batch_size = 32;
    double learning_rate = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    std::uint64_t shuffle_seed = 0;
    int checkpoint_every = 0;  // 0 = final checkpoint only
    double grad_clip = 0.0;    // global L2 clip, 0 = off

    void validate() const;  // throws ConfigError listing all issues
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double mean_loss = 0.0;
    double seconds = 0.0;
    std::optional<double> dev_f1;
    std::optional<double> dev_em;

    std::string csv_row() const;
};

struct TrainHistory {
    std::vector<EpochRecord> records;
    std::string to_csv() const;  // header + one row per epoch
};

// Seeded shuffle, then contiguous chunks; the final partial batch is kept.
// Every index appears exactly once. Throws ConfigError on an empty dataset.
std::vector<std::vector<std::size_t>> make_batches(std::size_t example_count, int batch_size,
                                                   std::uint64_t seed);

// Shuffle seed for one epoch; depends only on (base, epoch) so resumed runs
// see the same order.
std::uint64_t epoch_seed(std::uint64_t base, int epoch);

// First-moment and infinity-norm accumulators, one slot per updated tensor.
struct AdamaxState {
    std::vector<Matrix> m;
    std::vector<Matrix> u;
    std::uint64_t step = 0;

    bool initialized() const { return !m.empty(); }
};

struct ParamSlot {
    std::string name;
    Matrix* value = nullptr;
};

// One Adamax update: m <- b1*m + (1-b1)*g; u <- max(b2*u, |g|);
// theta <- theta - (lr / (1 - b1^t)) * m / (u + eps).
// Throws NumericError naming the slot when a gradient is non-finite.
void adamax_step(const std::vector<ParamSlot>& parameters, const std::vector<Matrix>& gradients,
                 AdamaxState& state, const TrainConfig& config);

struct TrainOptions {
    const PreparedDataset* dev = nullptr;  // scored once per epoch when given
    int start_epoch = 0;                   // resume point (completed epochs)
    std::function<void(const EpochRecord&)> on_epoch;
    std::function<void(int completed_epochs)> on_checkpoint;  // checkpoint_every hook
};

// Mini-batch Adamax over every example that carries a target. Deterministic
// given seeds; single-threaded parameter updates. Throws NumericError when
// the loss goes non-finite (callers keep the last good checkpoint).
TrainHistory train(SpanModel& model, const PreparedDataset& train_data, const TrainConfig& config,
                   AdamaxState& state, const TrainOptions& options = {});

// Mean span loss over the dataset's targeted examples; forward only.
double dataset_loss(const SpanModel& model, const PreparedDataset& dataset);

}  // namespace spanqa
