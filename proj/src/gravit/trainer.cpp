#include "gravit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "gravit/errors.hpp"
#include "gravit/metrics.hpp"
#include "gravit/nn/layers.hpp"
#include "gravit/rng.hpp"

namespace gravit {

namespace {

// probability of class 1 from a 2-logit row
double lens_probability(const Tensor& logits, int64_t row) {
    double l0 = logits.at(row, 0), l1 = logits.at(row, 1);
    double m = std::max(l0, l1);
    double z0 = std::exp(l0 - m), z1 = std::exp(l1 - m);
    return z1 / (z0 + z1);
}

struct SplitMetrics {
    double acc = std::numeric_limits<double>::quiet_NaN();
    double auc = std::numeric_limits<double>::quiet_NaN();
    double f1 = std::numeric_limits<double>::quiet_NaN();
};

SplitMetrics split_metrics(const std::vector<double>& scores,
                           const std::vector<int>& labels) {
    SplitMetrics out;
    if (scores.empty()) return out;
    std::vector<PredictionRecord> recs(scores.size());
    bool has_pos = false, has_neg = false;
    for (size_t i = 0; i < scores.size(); ++i) {
        recs[i] = {fmt::format("s{}", i), scores[i], labels[i], ""};
        (labels[i] == 1 ? has_pos : has_neg) = true;
    }
    ConfusionMatrix cm = confusion_at(recs, 0.5);
    out.acc = accuracy_of(cm);
    out.f1 = f1_score(cm);
    if (has_pos && has_neg) out.auc = roc_and_auc(recs).auc;
    return out;
}

struct LossScaler {
    double scale = 1024.0;
    int good_steps = 0;

    // Returns false (and shrinks the scale) when any gradient is non-finite.
    bool unscale(const std::vector<nn::Parameter*>& params) {
        bool finite = true;
        for (auto* p : params) {
            for (double g : p->grad.v) {
                if (!std::isfinite(g)) {
                    finite = false;
                    break;
                }
            }
            if (!finite) break;
        }
        if (!finite) {
            scale = std::max(1.0, scale / 2.0);
            good_steps = 0;
            return false;
        }
        const double inv = 1.0 / scale;
        for (auto* p : params) {
            for (double& g : p->grad.v) g *= inv;
        }
        if (++good_steps >= 2000) {
            scale *= 2.0;
            good_steps = 0;
        }
        return true;
    }
};

}  // namespace

void TrainConfig::validate() const {
    if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) {
        throw Error(fmt::format("TrainConfig: plateau_factor {} not in (0,1)",
                                plateau_factor));
    }
    if (plateau_patience >= early_stop_patience) {
        throw Error(fmt::format("TrainConfig: plateau_patience {} must be < "
                                "early_stop_patience {}",
                                plateau_patience, early_stop_patience));
    }
    if (stochastic_depth_rate < 0.0 || stochastic_depth_rate >= 1.0) {
        throw Error(fmt::format("TrainConfig: stochastic_depth_rate {} not in [0,1)",
                                stochastic_depth_rate));
    }
    if (lr <= 0.0 || max_epochs < 1 || batch_size < 1) {
        throw Error("TrainConfig: lr, max_epochs and batch_size must be positive");
    }
}

void AdamW::step(const std::vector<nn::Parameter*>& params, double lr,
                 double weight_decay) {
    for (auto* p : params) {
        if (!p->trainable) continue;
        State& st = state_[p];
        if (st.t == 0) {
            st.m = Tensor(p->value.shape);
            st.v = Tensor(p->value.shape);
        }
        ++st.t;
        const double b1 = beta1_, b2 = beta2_;
        const double bc1 = 1.0 - std::pow(b1, double(st.t));
        const double bc2 = 1.0 - std::pow(b2, double(st.t));
        for (size_t i = 0; i < p->value.v.size(); ++i) {
            const double g = p->grad.v[i];
            st.m.v[i] = b1 * st.m.v[i] + (1.0 - b1) * g;
            st.v.v[i] = b2 * st.v.v[i] + (1.0 - b2) * g * g;
            const double mhat = st.m.v[i] / bc1;
            const double vhat = st.v.v[i] / bc2;
            // decay applied separately from the adaptive step
            p->value.v[i] -= lr * weight_decay * p->value.v[i];
            p->value.v[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

PlateauScheduler::PlateauScheduler(double lr0, double factor, int patience,
                                   double threshold)
    : lr_(lr0),
      factor_(factor),
      threshold_(threshold),
      best_(std::numeric_limits<double>::infinity()),
      patience_(patience) {}

double PlateauScheduler::step(double val_loss) {
    if (val_loss < best_ - threshold_) {
        best_ = val_loss;
        stall_ = 0;
    } else {
        ++stall_;
        if (stall_ > patience_) {
            lr_ *= factor_;
            stall_ = 0;
        }
    }
    return lr_;
}

EarlyStopMonitor::EarlyStopMonitor(int patience, double threshold)
    : best_(std::numeric_limits<double>::infinity()),
      threshold_(threshold),
      patience_(patience) {}

bool EarlyStopMonitor::step(double val_loss) {
    if (val_loss < best_ - threshold_) {
        best_ = val_loss;
        stall_ = 0;
        return false;
    }
    ++stall_;
    return stall_ >= patience_;
}

Tensor stochastic_depth_apply(const std::function<Tensor(const Tensor&)>& block_fn,
                              const Tensor& x, double rate, bool training,
                              std::mt19937_64& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw Error(fmt::format("stochastic depth rate {} must lie in [0,1)", rate));
    }
    Tensor fx = block_fn(x);
    if (!fx.same_shape(x)) {
        throw Error("stochastic depth: block must preserve shape (residual path)");
    }
    Tensor out = x;
    const int64_t B = x.dim(0);
    const int64_t per = x.numel() / B;
    if (!training || rate == 0.0) {
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += fx.v[i];
        return out;
    }
    const double scale = 1.0 / (1.0 - rate);
    for (int64_t b = 0; b < B; ++b) {
        if (rand_bernoulli(rng, rate)) continue;  // skipped: out row stays x
        double* o = out.v.data() + b * per;
        const double* f = fx.v.data() + b * per;
        for (int64_t i = 0; i < per; ++i) o[i] += scale * f[i];
    }
    return out;
}

TensorBatchSource::TensorBatchSource(Tensor x, std::vector<int> labels)
    : x_(std::move(x)), labels_(std::move(labels)) {
    if (x_.dim(0) != int64_t(labels_.size())) {
        throw Error("TensorBatchSource: sample/label count mismatch");
    }
}

int TensorBatchSource::fill(int64_t index, bool, int, double* out) {
    const int64_t per = x_.numel() / x_.dim(0);
    const double* src = x_.v.data() + index * per;
    std::copy(src, src + per, out);
    return labels_[size_t(index)];
}

DatasetBatchSource::DatasetBatchSource(const DataRoot& data, LabeledDataset dataset,
                                       AugmentConfig aug, NormalizationStats stats,
                                       bool augment_enabled)
    : data_(data),
      dataset_(std::move(dataset)),
      aug_(aug),
      stats_(stats),
      augment_enabled_(augment_enabled) {}

const RgbImage& DatasetBatchSource::cached_rgb(const SampleRef& ref) {
    auto it = cache_.find(ref.path);
    if (it == cache_.end()) {
        it = cache_.emplace(ref.path, load_sample_rgb(data_, ref)).first;
    }
    return it->second;
}

int DatasetBatchSource::fill(int64_t index, bool training, int epoch, double* out) {
    const SampleRef& ref = dataset_.samples[size_t(index)];
    const RgbImage& rgb = cached_rgb(ref);
    Tensor t;
    if (training && augment_enabled_) {
        std::mt19937_64 rng(derive_seed(aug_.seed, hash_str(ref.id), uint64_t(epoch)));
        t = train_transform(rgb, aug_, stats_, rng);
    } else {
        t = eval_transform(rgb, stats_, aug_.target_side, aug_.rescale_input);
    }
    std::copy(t.v.begin(), t.v.end(), out);
    return ref.label;
}

CheckpointRecord train(BackboneHandle& handle, FinetuneDepth depth,
                       BatchSource& train_src, BatchSource& val_src,
                       const TrainConfig& cfg, std::ostream* history_csv) {
    cfg.validate();
    if (!handle.has_model()) throw Error("train: handle has no trainable model");
    if (train_src.size() == 0 || val_src.size() == 0) {
        throw Error("train: empty dataset");
    }

    apply_finetune_policy(handle, depth);
    nn::Model& model = *handle.model;
    auto params = model.parameters();

    AdamW optimizer;
    PlateauScheduler scheduler(cfg.lr, cfg.plateau_factor, cfg.plateau_patience,
                               cfg.improvement_threshold);
    EarlyStopMonitor stopper(cfg.early_stop_patience, cfg.improvement_threshold);
    LossScaler scaler;

    const int side = train_src.side();
    const int64_t sample_len = int64_t(3) * side * side;

    CheckpointRecord record;
    record.best_val_loss = std::numeric_limits<double>::infinity();

    auto run_eval = [&](BatchSource& src, std::vector<double>& scores,
                        std::vector<int>& labels) {
        double loss_sum = 0.0;
        int64_t count = 0;
        for (int64_t start = 0; start < src.size(); start += cfg.batch_size) {
            int64_t bs = std::min<int64_t>(cfg.batch_size, src.size() - start);
            Tensor xb({bs, 3, side, side});
            std::vector<int> yb(size_t(bs));
            for (int64_t i = 0; i < bs; ++i) {
                yb[size_t(i)] = src.fill(start + i, false, 0, xb.v.data() + i * sample_len);
            }
            Tensor logits = model.forward(xb, false, nullptr);
            loss_sum += nn::cross_entropy(logits, yb) * double(bs);
            for (int64_t i = 0; i < bs; ++i) {
                scores.push_back(lens_probability(logits, i));
                labels.push_back(yb[size_t(i)]);
            }
            count += bs;
        }
        return loss_sum / double(count);
    };

    std::vector<int64_t> order(size_t(train_src.size()));
    for (size_t i = 0; i < order.size(); ++i) order[i] = int64_t(i);

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const double lr_epoch = scheduler.lr();

        std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, "shuffle", uint64_t(epoch)));
        deterministic_shuffle(order, shuffle_rng);

        double train_loss_sum = 0.0;
        int64_t seen = 0;
        std::vector<double> train_scores;
        std::vector<int> train_labels;
        int batch_index = 0;
        for (int64_t start = 0; start < train_src.size();
             start += cfg.batch_size, ++batch_index) {
            int64_t bs = std::min<int64_t>(cfg.batch_size, train_src.size() - start);
            Tensor xb({bs, 3, side, side});
            std::vector<int> yb(size_t(bs));
            for (int64_t i = 0; i < bs; ++i) {
                yb[size_t(i)] = train_src.fill(order[size_t(start + i)], true, epoch,
                                               xb.v.data() + i * sample_len);
            }

            std::mt19937_64 sd_rng(
                derive_seed(cfg.seed, "droppath", uint64_t(epoch) * 1000003 + batch_index));
            Tensor logits = model.forward(xb, true, &sd_rng);
            Tensor g_logits;
            double loss = nn::cross_entropy(logits, yb, &g_logits);
            if (!std::isfinite(loss)) {
                throw DivergedError(
                    fmt::format("non-finite loss {} at epoch {}, batch {}, lr {:g}",
                                loss, epoch, batch_index, lr_epoch),
                    epoch, batch_index, lr_epoch);
            }

            model.zero_grad();
            if (cfg.mixed_precision) {
                for (double& g : g_logits.v) g *= scaler.scale;
                model.backward(g_logits);
                if (!scaler.unscale(params)) continue;  // overflow: skip this step
            } else {
                model.backward(g_logits);
            }
            optimizer.step(params, lr_epoch, cfg.weight_decay);

            train_loss_sum += loss * double(bs);
            seen += bs;
            for (int64_t i = 0; i < bs; ++i) {
                train_scores.push_back(lens_probability(logits, i));
                train_labels.push_back(yb[size_t(i)]);
            }
        }

        std::vector<double> val_scores;
        std::vector<int> val_labels;
        const double val_loss = run_eval(val_src, val_scores, val_labels);
        if (!std::isfinite(val_loss)) {
            throw DivergedError(fmt::format("non-finite validation loss at epoch {}, "
                                            "lr {:g}", epoch, lr_epoch),
                                epoch, -1, lr_epoch);
        }

        SplitMetrics tm = split_metrics(train_scores, train_labels);
        SplitMetrics vm = split_metrics(val_scores, val_labels);
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = train_loss_sum / double(seen);
        stats.val_loss = val_loss;
        stats.train_acc = tm.acc;
        stats.val_acc = vm.acc;
        stats.train_auc = tm.auc;
        stats.val_auc = vm.auc;
        stats.train_f1 = tm.f1;
        stats.val_f1 = vm.f1;
        stats.lr = lr_epoch;
        record.history.push_back(stats);

        if (val_loss < record.best_val_loss - cfg.improvement_threshold) {
            record.best_val_loss = val_loss;
            record.best_epoch = epoch;
            record.snapshot.clear();
            for (auto* p : params) record.snapshot[p->name] = p->value;
        }

        scheduler.step(val_loss);
        if (stopper.step(val_loss)) {
            record.early_stopped = true;
            break;
        }
    }

    // leave the model holding the best parameters
    for (auto* p : params) {
        auto it = record.snapshot.find(p->name);
        if (it != record.snapshot.end()) p->value = it->second;
    }

    if (history_csv) write_history_csv(*history_csv, record.history);
    return record;
}

void write_history_csv(std::ostream& out, const std::vector<EpochStats>& history) {
    out << "epoch,split,loss,accuracy,auc,f1,lr\n";
    for (const auto& h : history) {
        out << fmt::format("{},train,{:.6f},{:.6f},{:.6f},{:.6f},{:.6g}\n", h.epoch,
                           h.train_loss, h.train_acc, h.train_auc, h.train_f1, h.lr);
        out << fmt::format("{},val,{:.6f},{:.6f},{:.6f},{:.6f},{:.6g}\n", h.epoch,
                           h.val_loss, h.val_acc, h.val_auc, h.val_f1, h.lr);
    }
}

std::vector<double> predict_scores(BackboneHandle& handle, BatchSource& src,
                                   int batch_size) {
    if (!handle.has_model()) throw Error("predict: handle has no model");
    nn::Model& model = *handle.model;
    const int side = src.side();
    const int64_t sample_len = int64_t(3) * side * side;
    std::vector<double> scores;
    scores.reserve(size_t(src.size()));
    for (int64_t start = 0; start < src.size(); start += batch_size) {
        int64_t bs = std::min<int64_t>(batch_size, src.size() - start);
        Tensor xb({bs, 3, side, side});
        for (int64_t i = 0; i < bs; ++i) {
            src.fill(start + i, false, 0, xb.v.data() + i * sample_len);
        }
        Tensor logits = model.forward(xb, false, nullptr);
        for (int64_t i = 0; i < bs; ++i) scores.push_back(lens_probability(logits, i));
    }
    return scores;
}

}  // namespace gravit
