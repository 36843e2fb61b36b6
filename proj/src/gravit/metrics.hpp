#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gravit {

struct PredictionRecord {
    std::string sample_id;
    double score = 0.0;  // lens probability, in [0, 1]
    int label = 0;       // 0 non-lens, 1 lens
    std::string pool;
};

struct ConfusionMatrix {
    long tp = 0, fp = 0, fn = 0, tn = 0;
    double threshold = 0.5;

    long total() const { return tp + fp + fn + tn; }
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct MetricsReport {
    double auc = 0.0;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double accuracy = 0.0;
    std::vector<RocPoint> roc_points;
};

// Predicted positive iff score > threshold (strict).
ConfusionMatrix confusion_at(const std::vector<PredictionRecord>& records,
                             double threshold);

// Zero-denominator convention: all of these return 0 when undefined.
double precision_of(const ConfusionMatrix& cm);
double recall_of(const ConfusionMatrix& cm);
double accuracy_of(const ConfusionMatrix& cm);
double f1_score(const ConfusionMatrix& cm);

struct RocResult {
    std::vector<RocPoint> points;  // starts (0,0), ends (1,1), non-decreasing
    double auc = 0.0;
};

// Threshold sweep over all distinct scores (with +/-inf sentinels). Ties are
// grouped so the area equals P(s+ > s-) + 0.5 P(s+ = s-) exactly; the
// numerator is accumulated in integers and divided once.
RocResult roc_and_auc(const std::vector<PredictionRecord>& records);

MetricsReport compute_metrics(const std::vector<PredictionRecord>& records,
                              double threshold = 0.5);

// --- CSV schemas ---------------------------------------------------------

struct PredictionRow {
    std::string sample_id;
    std::string test_set;
    std::string model;
    std::string experiment;
    double score = 0.0;
    int label = 0;
};

struct MetricsRow {
    std::string test_set;
    std::string model;
    std::string experiment;
    double auc = 0.0;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double accuracy = 0.0;
    double threshold = 0.5;
};

void write_predictions_csv(std::ostream& out, const std::vector<PredictionRow>& rows);
std::vector<PredictionRow> read_predictions_csv(std::istream& in);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(std::istream& in);

void write_roc_csv(std::ostream& out, const std::vector<RocPoint>& points);
std::vector<RocPoint> read_roc_csv(std::istream& in);

}  // namespace gravit
