#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gravit/augment.hpp"
#include "gravit/backbones.hpp"
#include "gravit/dataset.hpp"
#include "gravit/tensor.hpp"

namespace gravit {

struct TrainConfig {
    double lr = 1e-4;
    double weight_decay = 1e-2;
    double plateau_factor = 0.1;
    int plateau_patience = 5;
    int early_stop_patience = 20;
    int max_epochs = 100;
    int batch_size = 128;
    double stochastic_depth_rate = 0.1;
    bool mixed_precision = false;
    uint64_t seed = 0;
    // "improvement" means a strict decrease by more than this
    double improvement_threshold = 1e-8;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0, val_loss = 0;
    double train_acc = 0, val_acc = 0;
    double train_auc = 0, val_auc = 0;
    double train_f1 = 0, val_f1 = 0;
    double lr = 0;
};

struct CheckpointRecord {
    double best_val_loss = 0.0;
    int best_epoch = 0;
    std::map<std::string, Tensor> snapshot;  // parameters at the best epoch
    std::vector<EpochStats> history;
    bool early_stopped = false;
};

// Decoupled weight decay: the decay term never touches the moment estimates.
class AdamW {
public:
    AdamW(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // Updates trainable parameters from their accumulated gradients.
    void step(const std::vector<nn::Parameter*>& params, double lr, double weight_decay);

private:
    struct State {
        Tensor m, v;
        long t = 0;
    };
    double beta1_, beta2_, eps_;
    std::map<const nn::Parameter*, State> state_;
};

// Monitors validation loss; reduces lr by `factor` on the (patience+1)-th
// consecutive epoch without improvement, then starts counting afresh.
class PlateauScheduler {
public:
    PlateauScheduler(double lr0, double factor, int patience, double threshold = 1e-8);

    double step(double val_loss);  // returns the lr for the next epoch
    double lr() const { return lr_; }

private:
    double lr_, factor_, threshold_, best_;
    int patience_, stall_ = 0;
};

// Halts once validation loss has not improved for `patience` epochs,
// counting from the best epoch.
class EarlyStopMonitor {
public:
    explicit EarlyStopMonitor(int patience, double threshold = 1e-8);

    bool step(double val_loss);  // true = stop now
    int stalled() const { return stall_; }

private:
    double best_, threshold_;
    int patience_, stall_ = 0;
};

// Residual stochastic depth on a whole batch: per sample, with probability
// `rate` the block is skipped (output = x); survivors get the residual
// scaled by 1/(1-rate). Eval mode is the plain residual, deterministic.
Tensor stochastic_depth_apply(const std::function<Tensor(const Tensor&)>& block_fn,
                              const Tensor& x, double rate, bool training,
                              std::mt19937_64& rng);

// One preprocessed sample stream for the training loop.
class BatchSource {
public:
    virtual ~BatchSource() = default;
    virtual int64_t size() const = 0;
    virtual int side() const = 0;
    // Writes sample `index` as 3 x side x side into `out`, returns the label.
    virtual int fill(int64_t index, bool training, int epoch, double* out) = 0;
};

// Fixed tensors, no transform. X: (N, 3, S, S).
class TensorBatchSource : public BatchSource {
public:
    TensorBatchSource(Tensor x, std::vector<int> labels);
    int64_t size() const override { return int64_t(labels_.size()); }
    int side() const override { return int(x_.dim(2)); }
    int fill(int64_t index, bool training, int epoch, double* out) override;

private:
    Tensor x_;
    std::vector<int> labels_;
};

// FITS-backed samples through the augmentation stack (training role) or the
// resize+normalize transform (eval role). Decoded images are cached.
class DatasetBatchSource : public BatchSource {
public:
    DatasetBatchSource(const DataRoot& data, LabeledDataset dataset, AugmentConfig aug,
                       NormalizationStats stats, bool augment_enabled);

    int64_t size() const override { return int64_t(dataset_.samples.size()); }
    int side() const override { return aug_.target_side; }
    int fill(int64_t index, bool training, int epoch, double* out) override;

    const LabeledDataset& dataset() const { return dataset_; }

private:
    const RgbImage& cached_rgb(const SampleRef& ref);

    DataRoot data_;
    LabeledDataset dataset_;
    AugmentConfig aug_;
    NormalizationStats stats_;
    bool augment_enabled_;
    std::map<std::string, RgbImage> cache_;
};

// Fine-tunes the handle's model: cross-entropy on logits, AdamW on the
// trainable partition, plateau scheduling and early stopping on validation
// loss, best-checkpoint selection. The model ends up holding the best
// parameters.
CheckpointRecord train(BackboneHandle& handle, FinetuneDepth depth,
                       BatchSource& train_src, BatchSource& val_src,
                       const TrainConfig& cfg, std::ostream* history_csv = nullptr);

void write_history_csv(std::ostream& out, const std::vector<EpochStats>& history);

// Eval-mode lens probabilities (softmax class-1), one per sample.
std::vector<double> predict_scores(BackboneHandle& handle, BatchSource& src,
                                   int batch_size = 64);

}  // namespace gravit
