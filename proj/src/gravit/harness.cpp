#include "gravit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "gravit/ensemble.hpp"
#include "gravit/errors.hpp"
#include "gravit/reference_table.hpp"
#include "gravit/rng.hpp"

namespace gravit {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kVersion = "0.1.0";

std::string depth_tag(FinetuneDepth d) { return to_string(d); }

}  // namespace

std::string GridCell::experiment_tag() const {
    return to_string(experiment) + depth_tag(depth);
}

std::string GridCell::key() const {
    return fmt::format("{}/{}", experiment_tag(), to_string(model));
}

std::vector<GridPlanCell> plan_grid(const GridConfig& cfg) {
    DataRoot data(cfg.data_root);
    std::vector<GridPlanCell> plan;
    for (Experiment exp : cfg.experiments) {
        DatasetSpec spec;
        spec.experiment = exp;
        spec.seed = cfg.seed;
        auto [train_set, val_set] = build_training_set(data, spec);
        for (int d : cfg.depths) {
            for (Arch model : cfg.models) {
                GridPlanCell cell;
                cell.cell = {exp, finetune_depth_from_int(d), model};
                cell.train_total = long(train_set.size());
                cell.train_per_class = train_set.count_label(1);
                cell.val_total = long(val_set.size());
                plan.push_back(std::move(cell));
            }
        }
    }
    return plan;
}

GridOutcome run_grid(const GridConfig& cfg) {
    DataRoot data(cfg.data_root);
    fs::create_directories(fs::path(cfg.out_dir) / "runs");

    GridOutcome outcome;
    std::vector<MetricsRow> metrics_rows;
    std::vector<std::string> failure_lines;

    // training data per experiment, assembled once
    std::map<Experiment, std::pair<LabeledDataset, LabeledDataset>> train_sets;
    for (Experiment exp : cfg.experiments) {
        DatasetSpec spec;
        spec.experiment = exp;
        spec.seed = cfg.seed;
        train_sets.emplace(exp, build_training_set(data, spec));
    }

    // shared eval sources; decoded images are cached inside
    std::map<TestId, std::unique_ptr<DatasetBatchSource>> eval_sources;
    for (TestId id : cfg.test_ids) {
        eval_sources.emplace(id, std::make_unique<DatasetBatchSource>(
                                     data, build_test_set(data, id), cfg.augment,
                                     NormalizationStats{}, false));
    }

    // member predictions per (experiment tag, test, model): (id, score) + labels
    struct TestPredictions {
        std::vector<std::pair<std::string, double>> scores;
        std::vector<int> labels;
    };
    std::map<std::string, std::map<TestId, std::map<std::string, TestPredictions>>> members;

    for (Experiment exp : cfg.experiments) {
        for (int d : cfg.depths) {
            FinetuneDepth depth = finetune_depth_from_int(d);
            for (Arch model : cfg.models) {
                GridCell cell{exp, depth, model};
                const std::string cell_dir =
                    (fs::path(cfg.out_dir) / "runs" / cell.experiment_tag() /
                     to_string(model))
                        .string();
                try {
                    fs::create_directories(cell_dir);
                    const uint64_t cell_seed =
                        derive_seed(cfg.seed, cell.experiment_tag(),
                                    hash_str(to_string(model)));

                    BackboneHandle handle = create_toy_backbone(
                        model, cell_seed, cfg.augment.target_side, 2);

                    const auto& [train_set, val_set] = train_sets.at(exp);
                    AugmentConfig aug = cfg.augment;
                    aug.seed = derive_seed(cell_seed, "augment");
                    DatasetBatchSource train_src(data, train_set, aug,
                                                 NormalizationStats{}, aug.p_apply > 0);
                    DatasetBatchSource val_src(data, val_set, aug, NormalizationStats{},
                                               false);

                    TrainConfig tc = cfg.train;
                    tc.seed = cell_seed;
                    std::ofstream history(fs::path(cell_dir) / "history.csv");
                    CheckpointRecord record =
                        train(handle, depth, train_src, val_src, tc, &history);

                    CheckpointManifest manifest;
                    manifest.arch = to_string(model);
                    manifest.config_note = fmt::format("toy@{}", cfg.augment.target_side);
                    manifest.finetune_depth = d;
                    manifest.dataset_id = to_string(exp);
                    manifest.seed = cell_seed;
                    save_checkpoint((fs::path(cell_dir) / "checkpoint.ckpt").string(),
                                    manifest, handle.model->parameters());

                    std::vector<PredictionRow> pred_rows;
                    for (TestId id : cfg.test_ids) {
                        DatasetBatchSource& src = *eval_sources.at(id);
                        std::vector<double> scores =
                            predict_scores(handle, src, cfg.eval_batch);

                        std::vector<PredictionRecord> records;
                        TestPredictions tp;
                        const auto& samples = src.dataset().samples;
                        for (size_t i = 0; i < scores.size(); ++i) {
                            const auto& ref = samples[i];
                            records.push_back(
                                {ref.id, scores[i], ref.label, ref.pool});
                            pred_rows.push_back({ref.id, to_string(id), to_string(model),
                                                 cell.experiment_tag(), scores[i],
                                                 ref.label});
                            tp.scores.emplace_back(ref.id, scores[i]);
                            tp.labels.push_back(ref.label);
                        }
                        members[cell.experiment_tag()][id][to_string(model)] =
                            std::move(tp);

                        MetricsReport rep = compute_metrics(records, 0.5);
                        metrics_rows.push_back({to_string(id), to_string(model),
                                                cell.experiment_tag(), rep.auc, rep.f1,
                                                rep.precision, rep.recall, rep.accuracy,
                                                0.5});
                        std::ofstream roc(fs::path(cell_dir) /
                                          fmt::format("roc_{}.csv", to_string(id)));
                        write_roc_csv(roc, rep.roc_points);
                    }
                    std::ofstream preds(fs::path(cell_dir) / "predictions.csv");
                    write_predictions_csv(preds, pred_rows);

                    outcome.cells.push_back({cell, false, ""});
                } catch (const std::exception& e) {
                    outcome.cells.push_back({cell, true, e.what()});
                    failure_lines.push_back(
                        fmt::format("{},{}", cell.key(), e.what()));
                }
            }

            // ensemble for this (experiment, depth)
            GridCell ecell{exp, depth, Arch::vit};
            const std::string tag = ecell.experiment_tag();
            auto it = members.find(tag);
            if (it == members.end()) continue;
            std::set<std::string> allowed;
            for (Arch a : kEnsembleArchs) allowed.insert(to_string(a));
            if (cfg.include_resnet_in_ensemble) allowed.insert(to_string(Arch::resnet18));

            const std::string edir =
                (fs::path(cfg.out_dir) / "runs" / tag / "Ensemble").string();
            std::vector<PredictionRow> ens_rows;
            for (TestId id : cfg.test_ids) {
                auto tit = it->second.find(id);
                if (tit == it->second.end()) continue;
                std::vector<std::pair<std::string,
                                      std::vector<std::pair<std::string, double>>>>
                    per_model;
                const std::vector<int>* labels = nullptr;
                for (const auto& [model_name, tp] : tit->second) {
                    if (!allowed.count(model_name)) continue;
                    per_model.emplace_back(model_name, tp.scores);
                    labels = &tp.labels;
                }
                if (per_model.empty()) continue;

                EnsembleInput input = make_ensemble_input(per_model);
                std::vector<double> mean = ensemble_predict(input);

                std::vector<PredictionRecord> records;
                for (size_t i = 0; i < mean.size(); ++i) {
                    records.push_back({input.sample_ids[i], mean[i],
                                       (*labels)[i], ""});
                    ens_rows.push_back({input.sample_ids[i], to_string(id), "Ensemble",
                                        tag, mean[i], (*labels)[i]});
                }
                MetricsReport rep = compute_metrics(records, 0.5);
                metrics_rows.push_back({to_string(id), "Ensemble", tag, rep.auc, rep.f1,
                                        rep.precision, rep.recall, rep.accuracy, 0.5});
                fs::create_directories(edir);
                std::ofstream roc(fs::path(edir) /
                                  fmt::format("roc_{}.csv", to_string(id)));
                write_roc_csv(roc, rep.roc_points);
            }
            if (!ens_rows.empty()) {
                std::ofstream preds(fs::path(edir) / "predictions.csv");
                write_predictions_csv(preds, ens_rows);
            }
        }
    }

    std::sort(metrics_rows.begin(), metrics_rows.end(),
              [](const MetricsRow& a, const MetricsRow& b) {
                  return std::tie(a.test_set, a.experiment, a.model) <
                         std::tie(b.test_set, b.experiment, b.model);
              });
    outcome.metrics = metrics_rows;
    outcome.metrics_csv_path = (fs::path(cfg.out_dir) / "metrics.csv").string();
    {
        std::ofstream out(outcome.metrics_csv_path, std::ios::trunc);
        write_metrics_csv(out, metrics_rows);
    }
    if (!failure_lines.empty()) {
        std::ofstream out(fs::path(cfg.out_dir) / "failures.csv");
        out << "cell,error\n";
        for (const auto& l : failure_lines) out << l << "\n";
    }

    // reproducibility sidecar
    json manifest;
    manifest["version"] = kVersion;
    manifest["seed"] = cfg.seed;
    manifest["data_root"] = cfg.data_root;
    json exps = json::array(), depths = json::array(), models = json::array(),
         tests = json::array();
    for (Experiment e : cfg.experiments) exps.push_back(to_string(e));
    for (int d : cfg.depths) depths.push_back(d);
    for (Arch a : cfg.models) models.push_back(to_string(a));
    for (TestId t : cfg.test_ids) tests.push_back(to_string(t));
    manifest["experiments"] = exps;
    manifest["depths"] = depths;
    manifest["models"] = models;
    manifest["test_sets"] = tests;
    manifest["train"] = {{"lr", cfg.train.lr},
                         {"weight_decay", cfg.train.weight_decay},
                         {"plateau_factor", cfg.train.plateau_factor},
                         {"plateau_patience", cfg.train.plateau_patience},
                         {"early_stop_patience", cfg.train.early_stop_patience},
                         {"max_epochs", cfg.train.max_epochs},
                         {"batch_size", cfg.train.batch_size},
                         {"stochastic_depth_rate", cfg.train.stochastic_depth_rate},
                         {"mixed_precision", cfg.train.mixed_precision}};
    manifest["augment"] = {{"target_side", cfg.augment.target_side},
                           {"p_apply", cfg.augment.p_apply}};
    std::ofstream mani(fs::path(cfg.out_dir) / "run_manifest.json");
    mani << manifest.dump(2) << "\n";

    return outcome;
}

double l2_recall_pct(int detections) {
    return std::round(double(detections) * 10000.0 / double(kL2PoolSize)) / 100.0;
}

L2Result infer_l2_scores(const std::string& model, const std::vector<double>& scores,
                         double threshold) {
    if (int(scores.size()) != kL2PoolSize) {
        throw Error(fmt::format("L2 inference: expected exactly {} lenses, got {}",
                                kL2PoolSize, scores.size()));
    }
    L2Result res;
    res.model = model;
    for (double s : scores) {
        if (s > threshold) ++res.detections;
    }
    res.recall_pct = l2_recall_pct(res.detections);
    return res;
}

std::vector<L2Result> infer_l2(const DataRoot& data,
                               std::vector<std::pair<std::string, BackboneHandle*>> models,
                               const AugmentConfig& aug, const NormalizationStats& stats,
                               double threshold) {
    auto pool = data.load_pool("L2");
    if (long(pool.size()) != kL2PoolSize) {
        throw Error(fmt::format("L2 pool holds {} samples, expected exactly {}",
                                pool.size(), kL2PoolSize));
    }
    LabeledDataset ds;
    ds.samples = pool;
    DatasetBatchSource src(data, ds, aug, stats, false);

    std::vector<L2Result> results;
    for (auto& [name, handle] : models) {
        std::vector<double> scores = predict_scores(*handle, src);
        results.push_back(infer_l2_scores(name, scores, threshold));
    }
    return results;
}

std::vector<ComplexityRow> complexity_report(const std::vector<Arch>& archs,
                                             int input_side,
                                             const std::vector<MetricsRow>* metrics,
                                             const std::string& experiment_tag,
                                             int num_classes) {
    std::vector<ComplexityRow> rows;
    for (Arch a : archs) {
        BackboneHandle handle = create_backbone(a, false, num_classes);
        ComplexityRow row;
        row.model = to_string(a);
        row.params = count_parameters(handle);
        row.macs = estimate_macs(handle, input_side);
        row.flops_2x_macs = 2 * row.macs;
        if (metrics) {
            double sum = 0.0;
            int n = 0;
            for (const auto& m : *metrics) {
                if (m.model == row.model && m.experiment == experiment_tag) {
                    sum += m.auc;
                    ++n;
                }
            }
            if (n > 0) row.mean_auc = sum / n;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_complexity_report(std::ostream& out, const std::vector<ComplexityRow>& rows,
                             int input_side) {
    out << fmt::format(
        "# forward-pass cost at input {0}x{0}; MACs count multiply-accumulates of "
        "matmul/conv ops (norms and activations excluded); FLOPs reported as 2xMACs\n",
        input_side);
    out << "model,params,macs,flops_2x_macs,mean_auc\n";
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{}\n", r.model, r.params, r.macs,
                           r.flops_2x_macs,
                           r.mean_auc ? fmt::format("{:.6f}", *r.mean_auc) : "");
    }
}

CompareReport compare_to_reference(const std::vector<MetricsRow>& metrics,
                                   double display_threshold) {
    const ReferenceTable& ref = ReferenceTable::instance();
    CompareReport report;
    report.display_threshold = display_threshold;

    std::map<std::pair<std::string, std::string>, const MetricsRow*> ours;
    for (const auto& m : metrics) {
        if (m.model == "Ensemble") ours[{m.test_set, m.experiment}] = &m;
    }

    for (const auto& comp : test_table()) {
        const std::string test = to_string(comp.id);
        for (const auto& col : ReferenceTable::experiment_columns()) {
            CompareCell cell;
            cell.test_set = test;
            cell.experiment = col;
            cell.ref_auc = *ref.ensemble_auc(comp.id, col);
            cell.ref_f1 = *ref.ensemble_f1(comp.id, col);
            auto it = ours.find({test, col});
            if (it == ours.end()) {
                report.missing.push_back(fmt::format("{}/{}", test, col));
            } else {
                cell.ours_auc = it->second->auc;
                cell.ours_f1 = it->second->f1;
                cell.flagged = std::abs(*cell.ours_auc - cell.ref_auc) > display_threshold ||
                               std::abs(*cell.ours_f1 - cell.ref_f1) > display_threshold;
            }
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

std::string render_compare(const CompareReport& report) {
    std::string out;
    out += fmt::format("reference comparison (ensemble rows; display threshold {:.2f}; "
                       "informational only)\n",
                       report.display_threshold);
    out += "test exp   auc(ours)  auc(ref)  dAUC     f1(ours)  f1(ref)   dF1\n";
    for (const auto& c : report.cells) {
        if (!c.ours_auc) continue;
        out += fmt::format("{:<4} {:<4}  {:>8.4f}  {:>8.2f}  {:>+6.3f}  {:>8.4f}  "
                           "{:>8.2f}  {:>+6.3f}{}\n",
                           c.test_set, c.experiment, *c.ours_auc, c.ref_auc,
                           *c.ours_auc - c.ref_auc, *c.ours_f1, c.ref_f1,
                           *c.ours_f1 - c.ref_f1, c.flagged ? "  *" : "");
    }
    if (!report.missing.empty()) {
        out += fmt::format("missing cells ({}):", report.missing.size());
        for (const auto& m : report.missing) out += " " + m;
        out += "\n";
    }
    return out;
}

namespace {

const std::array<const char*, 12> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#4c2882", "#000000",
};

}  // namespace

void plot_roc_svg(const std::string& runs_dir, TestId test,
                  const std::string& exp_depth, const std::string& out_path) {
    const fs::path cell_root = fs::path(runs_dir) / "runs" / exp_depth;
    if (!fs::exists(cell_root)) {
        throw Error(fmt::format("plot-roc: no runs under {}", cell_root.string()));
    }

    // AUC labels from the aggregate metrics file
    std::map<std::string, double> auc_by_model;
    {
        std::ifstream in(fs::path(runs_dir) / "metrics.csv");
        if (in) {
            for (const auto& row : read_metrics_csv(in)) {
                if (row.experiment == exp_depth && row.test_set == to_string(test)) {
                    auc_by_model[row.model] = row.auc;
                }
            }
        }
    }

    std::vector<std::pair<std::string, std::vector<RocPoint>>> curves;
    std::vector<std::string> model_dirs;
    for (const auto& entry : fs::directory_iterator(cell_root)) {
        if (entry.is_directory()) model_dirs.push_back(entry.path().filename().string());
    }
    std::sort(model_dirs.begin(), model_dirs.end());
    for (const auto& model : model_dirs) {
        fs::path roc_path = cell_root / model / fmt::format("roc_{}.csv", to_string(test));
        if (!fs::exists(roc_path)) continue;
        std::ifstream in(roc_path);
        curves.emplace_back(model, read_roc_csv(in));
    }
    if (curves.empty()) {
        throw Error(fmt::format("plot-roc: no ROC exports for test '{}' under {}",
                                to_string(test), cell_root.string()));
    }

    const double size = 640.0, margin = 70.0;
    const double span = size - 2 * margin;
    auto px = [&](double fpr) { return margin + fpr * span; };
    auto py = [&](double tpr) { return size - margin - tpr * span; };

    std::string svg;
    svg += fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" "
                       "height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n", size);
    svg += fmt::format("<rect width=\"{0}\" height=\"{0}\" fill=\"white\"/>\n", size);
    svg += fmt::format("<text x=\"{}\" y=\"30\" font-size=\"16\" font-family=\"sans-serif\">"
                       "ROC, test {} / {}</text>\n",
                       margin, to_string(test), exp_depth);
    // axes and grid
    for (int i = 0; i <= 5; ++i) {
        double f = i / 5.0;
        svg += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" "
                           "stroke=\"#dddddd\"/>\n", px(f), py(0), px(f), py(1));
        svg += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" "
                           "stroke=\"#dddddd\"/>\n", px(0), py(f), px(1), py(f));
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"11\" "
                           "font-family=\"sans-serif\">{:.1f}</text>\n",
                           px(f) - 8, py(0) + 18, f);
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"11\" "
                           "font-family=\"sans-serif\">{:.1f}</text>\n",
                           px(0) - 32, py(f) + 4, f);
    }
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"13\" "
                       "font-family=\"sans-serif\">false positive rate</text>\n",
                       px(0.38), size - 20.0);
    svg += fmt::format("<text x=\"18\" y=\"{:.1f}\" font-size=\"13\" "
                       "font-family=\"sans-serif\" transform=\"rotate(-90 18 {:.1f})\">"
                       "true positive rate</text>\n",
                       py(0.35), py(0.35));
    svg += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" "
                       "stroke=\"#888888\" stroke-dasharray=\"6 4\"/>\n",
                       px(0), py(0), px(1), py(1));

    double legend_y = margin + 10.0;
    for (size_t i = 0; i < curves.size(); ++i) {
        const auto& [model, points] = curves[i];
        const char* color = kPalette[i % kPalette.size()];
        std::string path;
        for (const auto& p : points) {
            path += fmt::format("{:.2f},{:.2f} ", px(p.fpr), py(p.tpr));
        }
        svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" "
                           "stroke-width=\"1.6\"/>\n", path, color);
        auto auc_it = auc_by_model.find(model);
        std::string label = auc_it == auc_by_model.end()
                                ? model
                                : fmt::format("{} (AUC {:.4f})", model, auc_it->second);
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"12\" "
                           "font-family=\"sans-serif\" fill=\"{}\">{}</text>\n",
                           px(0.45), legend_y, color, label);
        legend_y += 16.0;
    }
    svg += "</svg>\n";

    fs::create_directories(fs::path(out_path).parent_path());
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw Error(fmt::format("{}: cannot write plot", out_path));
    out << svg;
}

std::vector<PoolSummary> summarize_pools(const DataRoot& data) {
    std::vector<PoolSummary> out;
    const std::vector<std::string> pools = {"c21_train", "c21_val", "j24", "L1", "L2",
                                            "L3", "L4", "N1", "N2", "N3", "N4", "N5"};
    for (const auto& pool : pools) {
        PoolSummary s;
        s.pool = pool;
        try {
            auto refs = data.load_pool(pool);
            s.present = true;
            s.total = long(refs.size());
            for (const auto& r : refs) (r.label == 1 ? s.lenses : s.nonlenses)++;
        } catch (const IngestError&) {
            s.present = false;
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace gravit
