#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gravit/backbones.hpp"
#include "gravit/harness.hpp"
#include "gravit/synth.hpp"

namespace fs = std::filesystem;
using namespace gravit;

namespace {

std::vector<Arch> parse_models(const std::vector<std::string>& names) {
    std::vector<Arch> out;
    if (names.empty() || (names.size() == 1 && names[0] == "all")) {
        out.assign(kAllArchs.begin(), kAllArchs.end());
    } else {
        for (const auto& n : names) out.push_back(arch_from_string(n));
    }
    return out;
}

std::vector<TestId> parse_tests(const std::vector<std::string>& names) {
    std::vector<TestId> out;
    if (names.empty() || (names.size() == 1 && names[0] == "all")) {
        for (const auto& row : test_table()) out.push_back(row.id);
    } else {
        for (const auto& n : names) out.push_back(test_id_from_string(n));
    }
    return out;
}

void add_train_flags(CLI::App* cmd, TrainConfig& tc, AugmentConfig& aug,
                     bool& no_augment) {
    cmd->add_option("--epochs", tc.max_epochs, "maximum training epochs");
    cmd->add_option("--batch-size", tc.batch_size, "minibatch size");
    cmd->add_option("--lr", tc.lr, "initial learning rate");
    cmd->add_option("--seed", tc.seed, "global seed");
    cmd->add_flag("--mixed-precision", tc.mixed_precision,
                  "loss-scaled training updates");
    cmd->add_option("--weight-decay", tc.weight_decay, "decoupled weight decay");
    cmd->add_option("--target-side", aug.target_side, "model input side");
    cmd->add_flag("--no-augment", no_augment, "disable augmentations (p_apply = 0)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transfer-learning pipeline for strong-lens classification"};
    app.set_config("--config", "", "INI config file");
    app.require_subcommand(1);

    std::string data_root;
    app.add_option("--data-root", data_root, "dataset root directory")
        ->envname("GRAVIT_DATA_ROOT");

    // ---- ingest -----------------------------------------------------------
    auto* ingest = app.add_subcommand("ingest", "validate pool manifests");
    bool make_synth = false;
    int synth_train = 24, synth_val = 8, synth_j24 = 10;
    uint64_t synth_seed = 7;
    ingest->add_flag("--make-synthetic", make_synth,
                     "generate a synthetic demo data root first");
    ingest->add_option("--synthetic-train-per-class", synth_train);
    ingest->add_option("--synthetic-val-per-class", synth_val);
    ingest->add_option("--synthetic-j24-per-class", synth_j24);
    ingest->add_option("--synthetic-seed", synth_seed);

    // ---- train ------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "fine-tune one model");
    std::string train_model = "vit", train_exp = "A", train_out = "runs-single";
    int train_depth = 3;
    TrainConfig train_tc;
    AugmentConfig train_aug;
    bool train_noaug = false;
    train_cmd->add_option("--model", train_model, "architecture name");
    train_cmd->add_option("--experiment", train_exp, "A, B, C or S");
    train_cmd->add_option("--depth", train_depth, "fine-tune depth 1..3");
    train_cmd->add_option("--out", train_out, "output directory");
    add_train_flags(train_cmd, train_tc, train_aug, train_noaug);

    // ---- evaluate -----------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on test sets");
    std::string eval_ckpt, eval_out = "eval-out";
    std::vector<std::string> eval_tests;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--test-set", eval_tests, "test ids a..l (or 'all')");
    eval_cmd->add_option("--out", eval_out, "output directory");
    int eval_side = 224;
    eval_cmd->add_option("--target-side", eval_side);

    // ---- ensemble -----------------------------------------------------------
    auto* ens_cmd = app.add_subcommand("ensemble",
                                       "soft-vote predictions of a finished run");
    std::string ens_runs, ens_exp = "A1";
    bool ens_resnet = false;
    std::vector<std::string> ens_tests;
    ens_cmd->add_option("--runs-dir", ens_runs, "run-grid output directory")->required();
    ens_cmd->add_option("--experiment", ens_exp, "experiment tag, e.g. C3");
    ens_cmd->add_option("--test-set", ens_tests, "test ids (default: all found)");
    ens_cmd->add_flag("--include-resnet18", ens_resnet);

    // ---- infer-l2 ------------------------------------------------------------
    auto* l2_cmd = app.add_subcommand("infer-l2", "detection rate on the L2 pool");
    std::vector<std::string> l2_ckpts;
    double l2_threshold = 0.5;
    int l2_side = 224;
    l2_cmd->add_option("--checkpoint", l2_ckpts, "checkpoint files")->required();
    l2_cmd->add_option("--threshold", l2_threshold, "detection threshold");
    l2_cmd->add_option("--target-side", l2_side);

    // ---- complexity ------------------------------------------------------------
    auto* cx_cmd = app.add_subcommand("complexity", "parameter/MAC report");
    int cx_side = 224;
    std::string cx_metrics, cx_exp = "C3", cx_out;
    std::vector<std::string> cx_models;
    cx_cmd->add_option("--input-side", cx_side);
    cx_cmd->add_option("--metrics", cx_metrics, "metrics.csv for mean-AUC markers");
    cx_cmd->add_option("--experiment", cx_exp, "experiment tag for mean AUC");
    cx_cmd->add_option("--models", cx_models, "architectures (default: all)");
    cx_cmd->add_option("--out", cx_out, "write CSV here instead of stdout");

    // ---- compare ------------------------------------------------------------------
    auto* cp_cmd = app.add_subcommand("compare", "side-by-side vs published scores");
    std::string cp_metrics;
    double cp_threshold = 0.05;
    cp_cmd->add_option("--metrics", cp_metrics, "metrics.csv")->required();
    cp_cmd->add_option("--display-threshold", cp_threshold, "flag |delta| above this");

    // ---- plot-roc --------------------------------------------------------------------
    auto* roc_cmd = app.add_subcommand("plot-roc", "render ROC curves as SVG");
    std::string roc_runs, roc_exp = "A1", roc_test = "e", roc_out = "roc.svg";
    roc_cmd->add_option("--runs-dir", roc_runs)->required();
    roc_cmd->add_option("--experiment", roc_exp, "experiment tag, e.g. C3");
    roc_cmd->add_option("--test-set", roc_test, "test id a..l");
    roc_cmd->add_option("--out", roc_out, "output SVG path");

    // ---- run-grid ------------------------------------------------------------------------
    auto* grid_cmd = app.add_subcommand("run-grid", "train and evaluate the grid");
    GridConfig grid;
    std::vector<std::string> grid_exps = {"A"}, grid_models = {"vit", "mlp_mixer"},
                             grid_tests = {"e"};
    bool grid_noaug = false;
    grid_cmd->add_option("--experiments", grid_exps, "A B C S");
    grid_cmd->add_option("--depths", grid.depths, "fine-tune depths");
    grid_cmd->add_option("--models", grid_models, "architectures (or 'all')");
    grid_cmd->add_option("--test-sets", grid_tests, "test ids (or 'all')");
    grid_cmd->add_option("--out", grid.out_dir, "output directory")->required();
    grid_cmd->add_flag("--include-resnet18-in-ensemble", grid.include_resnet_in_ensemble);
    add_train_flags(grid_cmd, grid.train, grid.augment, grid_noaug);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            if (make_synth) {
                SynthConfig sc;
                sc.out_root = data_root;
                sc.seed = synth_seed;
                sc.train_per_class = synth_train;
                sc.val_per_class = synth_val;
                sc.j24_per_class = synth_j24;
                generate_synthetic_root(sc);
                fmt::print("synthetic data root written to {}\n", data_root);
            }
            DataRoot root(data_root);
            fmt::print("{:<10} {:>8} {:>8} {:>9}\n", "pool", "total", "lenses", "nonlens");
            for (const auto& s : summarize_pools(root)) {
                if (s.present) {
                    fmt::print("{:<10} {:>8} {:>8} {:>9}\n", s.pool, s.total, s.lenses,
                               s.nonlenses);
                } else {
                    fmt::print("{:<10} {:>8}\n", s.pool, "absent");
                }
            }
            return 0;
        }

        if (*train_cmd) {
            if (train_noaug) train_aug.p_apply = 0.0;
            DataRoot data(data_root);
            DatasetSpec spec;
            spec.experiment = experiment_from_string(train_exp);
            spec.seed = train_tc.seed;
            auto [train_set, val_set] = build_training_set(data, spec);

            Arch arch = arch_from_string(train_model);
            BackboneHandle handle =
                create_toy_backbone(arch, train_tc.seed, train_aug.target_side, 2);
            train_aug.seed = derive_seed(train_tc.seed, "augment");
            DatasetBatchSource train_src(data, train_set, train_aug,
                                         NormalizationStats{}, train_aug.p_apply > 0);
            DatasetBatchSource val_src(data, val_set, train_aug, NormalizationStats{},
                                       false);

            fs::create_directories(train_out);
            std::ofstream history(fs::path(train_out) / "history.csv");
            CheckpointRecord record =
                train(handle, finetune_depth_from_int(train_depth), train_src, val_src,
                      train_tc, &history);

            CheckpointManifest manifest;
            manifest.arch = train_model;
            manifest.config_note = fmt::format("toy@{}", train_aug.target_side);
            manifest.finetune_depth = train_depth;
            manifest.dataset_id = train_exp;
            manifest.seed = train_tc.seed;
            save_checkpoint((fs::path(train_out) / "checkpoint.ckpt").string(), manifest,
                            handle.model->parameters());
            fmt::print("best val loss {:.6f} at epoch {} ({} epochs run)\n",
                       record.best_val_loss, record.best_epoch, record.history.size());
            return 0;
        }

        if (*eval_cmd) {
            DataRoot data(data_root);
            LoadedCheckpoint ckpt = read_checkpoint(eval_ckpt);
            Arch arch = arch_from_string(ckpt.manifest.arch);
            BackboneHandle handle =
                create_toy_backbone(arch, ckpt.manifest.seed, eval_side, 2);
            load_into_model(ckpt, *handle.model, false);

            AugmentConfig aug;
            aug.target_side = eval_side;
            fs::create_directories(eval_out);
            std::vector<MetricsRow> rows;
            std::vector<PredictionRow> preds;
            for (TestId id : parse_tests(eval_tests)) {
                DatasetBatchSource src(data, build_test_set(data, id), aug,
                                       NormalizationStats{}, false);
                std::vector<double> scores = predict_scores(handle, src);
                std::vector<PredictionRecord> records;
                for (size_t i = 0; i < scores.size(); ++i) {
                    const auto& ref = src.dataset().samples[i];
                    records.push_back({ref.id, scores[i], ref.label, ref.pool});
                    preds.push_back({ref.id, to_string(id), ckpt.manifest.arch,
                                     ckpt.manifest.dataset_id, scores[i], ref.label});
                }
                MetricsReport rep = compute_metrics(records, 0.5);
                rows.push_back({to_string(id), ckpt.manifest.arch,
                                ckpt.manifest.dataset_id, rep.auc, rep.f1, rep.precision,
                                rep.recall, rep.accuracy, 0.5});
                fmt::print("test {}: auc {:.4f} f1 {:.4f}\n", to_string(id), rep.auc,
                           rep.f1);
            }
            std::ofstream mo(fs::path(eval_out) / "metrics.csv");
            write_metrics_csv(mo, rows);
            std::ofstream po(fs::path(eval_out) / "predictions.csv");
            write_predictions_csv(po, preds);
            return 0;
        }

        if (*ens_cmd) {
            std::set<std::string> allowed;
            for (Arch a : kEnsembleArchs) allowed.insert(to_string(a));
            if (ens_resnet) allowed.insert(to_string(Arch::resnet18));

            const fs::path cell_root = fs::path(ens_runs) / "runs" / ens_exp;
            std::vector<std::pair<std::string,
                                  std::vector<std::pair<std::string, double>>>> per_model;
            std::map<std::string, int> label_by_id;
            std::map<std::string, std::map<std::string,
                                           std::vector<std::pair<std::string, double>>>>
                by_test_model;
            for (const auto& entry : fs::directory_iterator(cell_root)) {
                if (!entry.is_directory()) continue;
                std::string model = entry.path().filename().string();
                if (!allowed.count(model)) continue;
                std::ifstream in(entry.path() / "predictions.csv");
                if (!in) continue;
                for (const auto& row : read_predictions_csv(in)) {
                    by_test_model[row.test_set][model].emplace_back(row.sample_id,
                                                                    row.score);
                    label_by_id[row.sample_id] = row.label;
                }
            }
            std::vector<MetricsRow> rows;
            for (auto& [test, models] : by_test_model) {
                std::vector<std::pair<std::string,
                                      std::vector<std::pair<std::string, double>>>> pm(
                    models.begin(), models.end());
                EnsembleInput input = make_ensemble_input(pm);
                std::vector<double> mean = ensemble_predict(input);
                std::vector<PredictionRecord> records;
                for (size_t i = 0; i < mean.size(); ++i) {
                    records.push_back({input.sample_ids[i], mean[i],
                                       label_by_id.at(input.sample_ids[i]), ""});
                }
                MetricsReport rep = compute_metrics(records, 0.5);
                rows.push_back({test, "Ensemble", ens_exp, rep.auc, rep.f1,
                                rep.precision, rep.recall, rep.accuracy, 0.5});
                fmt::print("ensemble ({} members) test {}: auc {:.4f} f1 {:.4f}\n",
                           input.n_members(), test, rep.auc, rep.f1);
            }
            std::ofstream mo(fs::path(ens_runs) / fmt::format("ensemble_{}.csv", ens_exp));
            write_metrics_csv(mo, rows);
            return 0;
        }

        if (*l2_cmd) {
            DataRoot data(data_root);
            AugmentConfig aug;
            aug.target_side = l2_side;
            std::vector<std::pair<std::string, BackboneHandle>> loaded;
            for (const auto& path : l2_ckpts) {
                LoadedCheckpoint ckpt = read_checkpoint(path);
                BackboneHandle handle = create_toy_backbone(
                    arch_from_string(ckpt.manifest.arch), ckpt.manifest.seed, l2_side, 2);
                load_into_model(ckpt, *handle.model, false);
                loaded.emplace_back(ckpt.manifest.arch, std::move(handle));
            }
            std::vector<std::pair<std::string, BackboneHandle*>> views;
            for (auto& [name, handle] : loaded) views.emplace_back(name, &handle);
            for (const auto& r :
                 infer_l2(data, views, aug, NormalizationStats{}, l2_threshold)) {
                fmt::print("{}: {}/{} detections, recall {:.2f}%\n", r.model,
                           r.detections, kL2PoolSize, r.recall_pct);
            }
            return 0;
        }

        if (*cx_cmd) {
            std::vector<MetricsRow> metrics;
            bool have_metrics = false;
            if (!cx_metrics.empty()) {
                std::ifstream in(cx_metrics);
                if (!in) throw Error(fmt::format("{}: cannot open", cx_metrics));
                metrics = read_metrics_csv(in);
                have_metrics = true;
            }
            auto rows = complexity_report(parse_models(cx_models), cx_side,
                                          have_metrics ? &metrics : nullptr, cx_exp);
            if (cx_out.empty()) {
                write_complexity_report(std::cout, rows, cx_side);
            } else {
                std::ofstream out(cx_out);
                write_complexity_report(out, rows, cx_side);
            }
            return 0;
        }

        if (*cp_cmd) {
            std::ifstream in(cp_metrics);
            if (!in) throw Error(fmt::format("{}: cannot open", cp_metrics));
            CompareReport report = compare_to_reference(read_metrics_csv(in), cp_threshold);
            fmt::print("{}", render_compare(report));
            return 0;
        }

        if (*roc_cmd) {
            plot_roc_svg(roc_runs, test_id_from_string(roc_test), roc_exp, roc_out);
            fmt::print("wrote {}\n", roc_out);
            return 0;
        }

        if (*grid_cmd) {
            if (grid_noaug) grid.augment.p_apply = 0.0;
            grid.data_root = data_root;
            grid.experiments.clear();
            for (const auto& e : grid_exps) {
                grid.experiments.push_back(experiment_from_string(e));
            }
            grid.models = parse_models(grid_models);
            grid.test_ids = parse_tests(grid_tests);
            grid.seed = grid.train.seed;

            GridOutcome outcome = run_grid(grid);
            int failed = 0;
            for (const auto& c : outcome.cells) {
                if (c.failed) {
                    ++failed;
                    fmt::print("FAILED {}: {}\n", c.cell.key(), c.error);
                }
            }
            fmt::print("{} cells run, {} failed; metrics at {}\n", outcome.cells.size(),
                       failed, outcome.metrics_csv_path);
            return failed == 0 ? 0 : 2;
        }
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
