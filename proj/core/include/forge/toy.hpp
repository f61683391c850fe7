#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace forge {

// Tied-embedding bag-of-prefix decoder at desk scale: E holds the token
// embeddings (rows double as output weights), W projects a visual feature
// vector into the embedding space. The hidden state at position i is the
// mean of all prefix vectors, where the image slot contributes W * Z_v
// instead of a token embedding.
struct ToyModel {
    Eigen::MatrixXd embeddings; // V x d
    Eigen::MatrixXd projection; // d x m

    size_t vocab_size() const { return static_cast<size_t>(embeddings.rows()); }
    size_t embed_dim() const { return static_cast<size_t>(embeddings.cols()); }
    size_t visual_dim() const { return static_cast<size_t>(projection.cols()); }
};

// Seeded scaled-uniform initialization.
ToyModel init_toy_model(size_t vocab_size, size_t embed_dim, size_t visual_dim, uint64_t seed);

struct ToyExample {
    Eigen::VectorXd visual_feature; // Z_v, length m
    std::vector<int64_t> token_ids;
    std::vector<bool> token_mask;
    size_t image_slot = 0; // position whose vector is W * Z_v
};

void validate_example(const ToyModel& model, const ToyExample& ex);

// H_v = W * Z_v.
Eigen::VectorXd project(const Eigen::MatrixXd& projection, const Eigen::VectorXd& visual_feature);

// Mean negative log-likelihood over masked positions across the batch.
// Throws ComputationError when no position is masked.
double forward_loss(const ToyModel& model, const std::vector<ToyExample>& batch);

enum class TrainStage { stage1, stage2 };

struct Gradients {
    Eigen::MatrixXd d_projection; // always populated
    Eigen::MatrixXd d_embeddings; // zero in stage 1 (E is frozen)
};

// Analytic gradients of forward_loss. Stage 1 treats E as constant.
Gradients backward(const ToyModel& model, const std::vector<ToyExample>& batch,
                   TrainStage stage);

struct TrainTrace {
    std::vector<double> epoch_loss;
};

// Plain full-batch gradient descent. Stage 1 leaves embeddings bitwise
// unchanged. Aborts with ComputationError if the loss goes non-finite.
TrainTrace train(ToyModel& model, const std::vector<ToyExample>& dataset, TrainStage stage,
                 double lr, size_t epochs);

// Checkpoint: one JSON header line (dims, seed, stage) followed by E rows
// then W rows as whitespace-separated text.
void save_checkpoint(const ToyModel& model, uint64_t seed, TrainStage stage,
                     const std::filesystem::path& path);
ToyModel load_checkpoint(const std::filesystem::path& path);

void save_trace_csv(const TrainTrace& trace, const std::filesystem::path& path);

// Deterministic synthetic dataset for toy-train runs without input files.
std::vector<ToyExample> make_synthetic_toy_dataset(const ToyModel& model, size_t n_examples,
                                                   size_t seq_len, uint64_t seed);

} // namespace forge
