#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "masi/cluster.hpp"
#include "masi/dataset.hpp"
#include "masi/nn.hpp"
#include "masi/tape.hpp"

namespace masi::model {

/// Hyperparameters. Defaults follow the experiment setup: symbolic variants
/// train with T_h=10, B=10 over 120 epochs; the metric variant with T_h=5,
/// B=5 over 80 epochs; both use h=256 and lr=0.001.
struct ModelConfig {
    cluster::SampleVariant variant = cluster::SampleVariant::FQtc4;
    std::uint32_t n_star = 0;    // member series count
    std::uint32_t dict_size = 0; // symbolic class count (incl. the impossible index)
    int t_history = 10;
    int t_future = 48;
    int hidden = 256;
    int embed_dim = 64;
    int batch = 10;
    double lr = 1e-3;
    int epochs = 120;
    std::uint64_t seed = 7;
    double clip_norm = 5.0; // 0 disables clipping

    static ModelConfig defaults_for(cluster::SampleVariant variant);
    /// Defaults bound to a dataset's variant, n*, dictionary and horizons.
    static ModelConfig for_dataset(const data::DatasetSplits& dataset);

    std::uint32_t slot_count() const {
        return variant == cluster::SampleVariant::Fts ? n_star + 1 : n_star;
    }
    std::uint32_t out_dim() const {
        return variant == cluster::SampleVariant::Fts ? 2 : dict_size;
    }
    int attn_dim() const { return std::max(8, hidden / 4); }
    int head_dim() const { return std::max(8, hidden / 2); }
    void validate() const;
    void check_dataset(const data::DatasetMeta& meta, std::uint64_t digest_c1,
                       std::uint64_t digest_c2) const;
};

struct ForwardResult {
    /// [slot][step][out_dim]: class probabilities (symbolic) or egocentric
    /// coordinates (metric).
    std::vector<double> outputs;
    std::vector<std::uint32_t> argmax;      // symbolic: [slot][step]
    std::vector<double> input_attention;    // [T_h][slot]
    std::vector<double> temporal_attention; // [T_f][T_h]
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0;
    double val_loss = 0;
};

struct TrainingHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;

    void write_csv(const std::string& path) const;
};

struct Prediction {
    std::vector<std::uint32_t> indices; // symbolic: [slot][T_f]
    std::vector<double> coords;         // metric: world frame [slot][T_f][2]
};

/// Input-attention encoder + temporal-attention decoder over the sample's
/// slot series, with one shared decoder and per-slot output heads.
class Model {
public:
    explicit Model(const ModelConfig& config);
    Model(const Model& o) : config_(o.config_), store_(o.store_), tape_(&store_) {}
    Model(Model&& o) noexcept
        : config_(std::move(o.config_)), store_(std::move(o.store_)), tape_(&store_) {}
    Model& operator=(const Model& o) {
        config_ = o.config_;
        store_ = o.store_;
        tape_ = num::Tape(&store_);
        return *this;
    }

    const ModelConfig& config() const { return config_; }
    num::ParamStore& params() { return store_; }
    const num::ParamStore& params() const { return store_; }

    /// Teacher-forced or autoregressive pass over one sample.
    ForwardResult forward(const cluster::ClusterSample& sample, bool teacher_forcing);

    /// Teacher-forced mean loss of a batch; backpropagates when asked.
    double batch_loss(std::span<const cluster::ClusterSample* const> batch, bool with_grad);

    Prediction predict(const cluster::ClusterSample& sample);

private:
    ModelConfig config_;
    num::ParamStore store_;
    num::Tape tape_;
};

/// Standalone loss of a forward result: mean cross-entropy over every
/// slot/step (symbolic; departed and fake slots carry the impossible class
/// and are included) or masked coordinate RMSE (metric).
double loss_value(const ForwardResult& fr, const cluster::ClusterSample& sample,
                  const ModelConfig& config);

struct FitResult {
    Model model;
    TrainingHistory history;
};

/// Mini-batch Adam training with seeded shuffling; returns the parameters of
/// the best validation epoch.
FitResult fit(const data::DatasetSplits& dataset, const ModelConfig& config);

void save_checkpoint(const Model& model, const data::DatasetMeta& bound_meta,
                     const std::string& path);
/// Loads and verifies the checkpoint against the dataset it will run with.
Model load_checkpoint(const std::string& path, const data::DatasetSplits& dataset);

} // namespace masi::model
