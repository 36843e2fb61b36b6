#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gravit/augment.hpp"
#include "gravit/backbones.hpp"
#include "gravit/dataset.hpp"
#include "gravit/metrics.hpp"
#include "gravit/trainer.hpp"

namespace gravit {

struct GridCell {
    Experiment experiment = Experiment::A;
    FinetuneDepth depth = FinetuneDepth::head_only;
    Arch model = Arch::vit;

    // e.g. "A2"
    std::string experiment_tag() const;
    std::string key() const;  // "A2/vit"
};

struct GridConfig {
    std::vector<Experiment> experiments = {Experiment::A};
    std::vector<int> depths = {1, 2, 3};
    std::vector<Arch> models = {Arch::vit, Arch::mlp_mixer};
    std::vector<TestId> test_ids = {TestId::e};
    TrainConfig train;
    AugmentConfig augment;
    std::string data_root;
    std::string out_dir;
    uint64_t seed = 0;
    bool include_resnet_in_ensemble = false;
    int eval_batch = 64;
};

struct GridPlanCell {
    GridCell cell;
    long train_total = 0;
    long train_per_class = 0;
    long val_total = 0;
};

// Dataset bookkeeping for every cell without touching pixel data.
std::vector<GridPlanCell> plan_grid(const GridConfig& cfg);

struct CellResult {
    GridCell cell;
    bool failed = false;
    std::string error;
};

struct GridOutcome {
    std::vector<CellResult> cells;
    std::string metrics_csv_path;
    std::vector<MetricsRow> metrics;
};

// Trains every cell, evaluates on the requested test sets, appends ensemble
// rows per (experiment, depth), writes runs/<exp><depth>/<model>/{checkpoint,
// history.csv, predictions.csv, roc_<t>.csv} plus metrics.csv and a
// run_manifest.json sidecar at the output root. Cell failures are isolated.
GridOutcome run_grid(const GridConfig& cfg);

// --- L2 inference -----------------------------------------------------------

constexpr int kL2PoolSize = 138;

// detections/138 as a percentage, rounded to 2 decimals.
double l2_recall_pct(int detections);

struct L2Result {
    std::string model;
    int detections = 0;
    double recall_pct = 0.0;
};

L2Result infer_l2_scores(const std::string& model, const std::vector<double>& scores,
                         double threshold = 0.5);

// Runs every handle on the L2 pool (must hold exactly 138 lenses).
std::vector<L2Result> infer_l2(const DataRoot& data,
                               std::vector<std::pair<std::string, BackboneHandle*>> models,
                               const AugmentConfig& aug, const NormalizationStats& stats,
                               double threshold = 0.5);

// --- complexity ---------------------------------------------------------------

struct ComplexityRow {
    std::string model;
    int64_t params = 0;
    int64_t macs = 0;
    int64_t flops_2x_macs = 0;
    std::optional<double> mean_auc;
};

// One row per architecture at full catalog scale; mean AUC over the test
// sets present in `metrics` for (model, experiment_tag), when provided.
std::vector<ComplexityRow> complexity_report(const std::vector<Arch>& archs,
                                             int input_side,
                                             const std::vector<MetricsRow>* metrics = nullptr,
                                             const std::string& experiment_tag = "C3",
                                             int num_classes = 2);

void write_complexity_report(std::ostream& out, const std::vector<ComplexityRow>& rows,
                             int input_side);

// --- reference comparison -------------------------------------------------------

struct CompareCell {
    std::string test_set;
    std::string experiment;
    std::optional<double> ours_auc, ours_f1;
    double ref_auc = 0.0, ref_f1 = 0.0;
    bool flagged = false;  // |delta| beyond the display threshold
};

struct CompareReport {
    std::vector<CompareCell> cells;
    std::vector<std::string> missing;
    double display_threshold = 0.05;
};

CompareReport compare_to_reference(const std::vector<MetricsRow>& metrics,
                                   double display_threshold = 0.05);

std::string render_compare(const CompareReport& report);

// --- ROC plotting ------------------------------------------------------------------

// Renders one curve per model directory (plus Ensemble) found under
// runs_dir/<exp_depth>/, labeled with AUC from runs_dir/metrics.csv.
// Deterministic SVG output.
void plot_roc_svg(const std::string& runs_dir, TestId test,
                  const std::string& exp_depth, const std::string& out_path);

// --- pool inspection -----------------------------------------------------------------

struct PoolSummary {
    std::string pool;
    bool present = false;
    long total = 0, lenses = 0, nonlenses = 0;
};

std::vector<PoolSummary> summarize_pools(const DataRoot& data);

}  // namespace gravit
