#include "forge/toy.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "forge/errors.hpp"
#include "forge/rng.hpp"

namespace forge {

ToyModel init_toy_model(size_t vocab_size, size_t embed_dim, size_t visual_dim, uint64_t seed) {
    if (vocab_size < 1 || embed_dim < 1 || visual_dim < 1)
        throw ValidationError("toy model: all dimensions must be >= 1");
    ToyModel model;
    model.embeddings.resize(static_cast<Eigen::Index>(vocab_size),
                            static_cast<Eigen::Index>(embed_dim));
    model.projection.resize(static_cast<Eigen::Index>(embed_dim),
                            static_cast<Eigen::Index>(visual_dim));
    KeyedRng rng_e(seed, "embeddings");
    const double scale_e = 1.0 / std::sqrt(static_cast<double>(embed_dim));
    for (Eigen::Index r = 0; r < model.embeddings.rows(); ++r)
        for (Eigen::Index c = 0; c < model.embeddings.cols(); ++c)
            model.embeddings(r, c) = (2.0 * rng_e.next_double() - 1.0) * scale_e;
    KeyedRng rng_w(seed, "projection");
    const double scale_w = 1.0 / std::sqrt(static_cast<double>(visual_dim));
    for (Eigen::Index r = 0; r < model.projection.rows(); ++r)
        for (Eigen::Index c = 0; c < model.projection.cols(); ++c)
            model.projection(r, c) = (2.0 * rng_w.next_double() - 1.0) * scale_w;
    return model;
}

void validate_example(const ToyModel& model, const ToyExample& ex) {
    if (ex.token_ids.size() != ex.token_mask.size())
        throw ValidationError("toy example: mask length must equal token count");
    if (ex.token_ids.empty()) throw ValidationError("toy example: empty token sequence");
    if (ex.image_slot >= ex.token_ids.size())
        throw ValidationError("toy example: image slot out of range");
    if (ex.visual_feature.size() != static_cast<Eigen::Index>(model.visual_dim()))
        throw ComputationError("toy example: visual feature length " +
                               std::to_string(ex.visual_feature.size()) + " != visual dim " +
                               std::to_string(model.visual_dim()));
    for (size_t i = 0; i < ex.token_ids.size(); ++i) {
        if (i != ex.image_slot &&
            (ex.token_ids[i] < 0 ||
             ex.token_ids[i] >= static_cast<int64_t>(model.vocab_size())))
            throw ValidationError("toy example: token id out of vocabulary at position " +
                                  std::to_string(i));
        if (ex.token_mask[i] && i == ex.image_slot)
            throw ValidationError("toy example: image slot cannot be a prediction target");
        if (ex.token_mask[i] && i == 0)
            throw ValidationError("toy example: position 0 has no prefix to condition on");
    }
}

Eigen::VectorXd project(const Eigen::MatrixXd& projection,
                        const Eigen::VectorXd& visual_feature) {
    if (projection.cols() != visual_feature.size())
        throw ComputationError("project: dimension mismatch (" +
                               std::to_string(projection.cols()) + " vs " +
                               std::to_string(visual_feature.size()) + ")");
    return projection * visual_feature;
}

namespace {

// Prefix vector at position j: image slot carries H_v, others their row of E.
Eigen::VectorXd position_vector(const ToyModel& model, const ToyExample& ex,
                                const Eigen::VectorXd& h_v, size_t j) {
    if (j == ex.image_slot) return h_v;
    return model.embeddings.row(static_cast<Eigen::Index>(ex.token_ids[j])).transpose();
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
    Eigen::VectorXd exps = shifted.array().exp();
    return exps / exps.sum();
}

} // namespace

double forward_loss(const ToyModel& model, const std::vector<ToyExample>& batch) {
    if (batch.empty()) throw ComputationError("forward_loss: empty batch");
    double total = 0;
    size_t masked = 0;
    for (const auto& ex : batch) {
        validate_example(model, ex);
        Eigen::VectorXd h_v = project(model.projection, ex.visual_feature);
        Eigen::VectorXd prefix_sum = Eigen::VectorXd::Zero(model.embed_dim());
        for (size_t i = 0; i < ex.token_ids.size(); ++i) {
            if (ex.token_mask[i]) {
                Eigen::VectorXd h = prefix_sum / static_cast<double>(i);
                Eigen::VectorXd probs = softmax(model.embeddings * h);
                total -= std::log(probs(static_cast<Eigen::Index>(ex.token_ids[i])));
                ++masked;
            }
            prefix_sum += position_vector(model, ex, h_v, i);
        }
    }
    if (masked == 0) throw ComputationError("forward_loss: no masked tokens in batch");
    return total / static_cast<double>(masked);
}

Gradients backward(const ToyModel& model, const std::vector<ToyExample>& batch,
                   TrainStage stage) {
    if (batch.empty()) throw ComputationError("backward: empty batch");
    Gradients g;
    g.d_projection = Eigen::MatrixXd::Zero(model.projection.rows(), model.projection.cols());
    g.d_embeddings = Eigen::MatrixXd::Zero(model.embeddings.rows(), model.embeddings.cols());

    size_t masked = 0;
    for (const auto& ex : batch) {
        validate_example(model, ex);
        for (bool m : ex.token_mask)
            if (m) ++masked;
    }
    if (masked == 0) throw ComputationError("backward: no masked tokens in batch");
    const double inv_masked = 1.0 / static_cast<double>(masked);

    for (const auto& ex : batch) {
        Eigen::VectorXd h_v = project(model.projection, ex.visual_feature);
        Eigen::VectorXd prefix_sum = Eigen::VectorXd::Zero(model.embed_dim());
        for (size_t i = 0; i < ex.token_ids.size(); ++i) {
            if (ex.token_mask[i]) {
                const double inv_len = 1.0 / static_cast<double>(i);
                Eigen::VectorXd h = prefix_sum * inv_len;
                Eigen::VectorXd probs = softmax(model.embeddings * h);
                Eigen::VectorXd dlogits = probs;
                dlogits(static_cast<Eigen::Index>(ex.token_ids[i])) -= 1.0;
                dlogits *= inv_masked;

                if (stage == TrainStage::stage2)
                    g.d_embeddings += dlogits * h.transpose(); // logits = E h

                Eigen::VectorXd dh = model.embeddings.transpose() * dlogits;
                // distribute dh over the prefix positions
                for (size_t j = 0; j < i; ++j) {
                    if (j == ex.image_slot) {
                        g.d_projection += inv_len * dh * ex.visual_feature.transpose();
                    } else if (stage == TrainStage::stage2) {
                        g.d_embeddings.row(static_cast<Eigen::Index>(ex.token_ids[j])) +=
                            inv_len * dh.transpose();
                    }
                }
            }
            prefix_sum += position_vector(model, ex, h_v, i);
        }
    }
    return g;
}

TrainTrace train(ToyModel& model, const std::vector<ToyExample>& dataset, TrainStage stage,
                 double lr, size_t epochs) {
    if (dataset.empty()) throw ValidationError("train: empty dataset");
    TrainTrace trace;
    for (size_t epoch = 0; epoch < epochs; ++epoch) {
        double loss = forward_loss(model, dataset);
        if (!std::isfinite(loss))
            throw ComputationError("train: non-finite loss at epoch " + std::to_string(epoch));
        trace.epoch_loss.push_back(loss);
        Gradients g = backward(model, dataset, stage);
        model.projection -= lr * g.d_projection;
        if (stage == TrainStage::stage2) model.embeddings -= lr * g.d_embeddings;
    }
    return trace;
}

void save_checkpoint(const ToyModel& model, uint64_t seed, TrainStage stage,
                     const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write checkpoint: " + path.string());
    nlohmann::json header = {{"vocab_size", model.vocab_size()},
                             {"embed_dim", model.embed_dim()},
                             {"visual_dim", model.visual_dim()},
                             {"seed", seed},
                             {"stage", stage == TrainStage::stage1 ? "stage1" : "stage2"}};
    out << header.dump() << '\n';
    out.precision(17);
    for (Eigen::Index r = 0; r < model.embeddings.rows(); ++r) {
        for (Eigen::Index c = 0; c < model.embeddings.cols(); ++c)
            out << (c ? " " : "") << model.embeddings(r, c);
        out << '\n';
    }
    for (Eigen::Index r = 0; r < model.projection.rows(); ++r) {
        for (Eigen::Index c = 0; c < model.projection.cols(); ++c)
            out << (c ? " " : "") << model.projection(r, c);
        out << '\n';
    }
}

ToyModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open checkpoint: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError("checkpoint: missing header");
    auto header = nlohmann::json::parse(line);
    size_t v = header.at("vocab_size").get<size_t>();
    size_t d = header.at("embed_dim").get<size_t>();
    size_t m = header.at("visual_dim").get<size_t>();
    ToyModel model;
    model.embeddings.resize(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(d));
    model.projection.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
    auto read_row = [&](Eigen::MatrixXd& mat, Eigen::Index r) {
        if (!std::getline(in, line)) throw ParseError("checkpoint: truncated matrix data");
        std::istringstream ss(line);
        for (Eigen::Index c = 0; c < mat.cols(); ++c)
            if (!(ss >> mat(r, c))) throw ParseError("checkpoint: short matrix row");
    };
    for (Eigen::Index r = 0; r < model.embeddings.rows(); ++r) read_row(model.embeddings, r);
    for (Eigen::Index r = 0; r < model.projection.rows(); ++r) read_row(model.projection, r);
    return model;
}

void save_trace_csv(const TrainTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write trace: " + path.string());
    out << "epoch,loss\n";
    out.precision(17);
    for (size_t i = 0; i < trace.epoch_loss.size(); ++i)
        out << i << ',' << trace.epoch_loss[i] << '\n';
}

std::vector<ToyExample> make_synthetic_toy_dataset(const ToyModel& model, size_t n_examples,
                                                   size_t seq_len, uint64_t seed) {
    if (seq_len < 3) throw ValidationError("synthetic dataset: seq_len must be >= 3");
    std::vector<ToyExample> out;
    out.reserve(n_examples);
    for (size_t n = 0; n < n_examples; ++n) {
        KeyedRng rng(seed, "toy-example-" + std::to_string(n));
        ToyExample ex;
        ex.visual_feature.resize(static_cast<Eigen::Index>(model.visual_dim()));
        for (Eigen::Index j = 0; j < ex.visual_feature.size(); ++j)
            ex.visual_feature(j) = 2.0 * rng.next_double() - 1.0;
        ex.token_ids.resize(seq_len);
        ex.token_mask.assign(seq_len, false);
        ex.image_slot = 0;
        for (size_t i = 0; i < seq_len; ++i)
            ex.token_ids[i] = static_cast<int64_t>(rng.next_index(model.vocab_size()));
        // mask the second half, mimicking answer tokens after the prompt
        for (size_t i = seq_len / 2; i < seq_len; ++i) ex.token_mask[i] = true;
        out.push_back(std::move(ex));
    }
    return out;
}

} // namespace forge
