#include "gravit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "gravit/errors.hpp"

namespace gravit {

namespace {

void validate_scores(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw Error("metrics: empty record list");
    for (const auto& r : records) {
        if (!std::isfinite(r.score) || r.score < 0.0 || r.score > 1.0) {
            throw Error(fmt::format("metrics: score {} for '{}' outside [0,1]", r.score,
                                    r.sample_id));
        }
        if (r.label != 0 && r.label != 1) {
            throw Error(fmt::format("metrics: label {} for '{}'", r.label, r.sample_id));
        }
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

ConfusionMatrix confusion_at(const std::vector<PredictionRecord>& records,
                             double threshold) {
    validate_scores(records);
    ConfusionMatrix cm;
    cm.threshold = threshold;
    for (const auto& r : records) {
        bool positive = r.score > threshold;
        if (r.label == 1) {
            positive ? ++cm.tp : ++cm.fn;
        } else {
            positive ? ++cm.fp : ++cm.tn;
        }
    }
    return cm;
}

double precision_of(const ConfusionMatrix& cm) {
    long d = cm.tp + cm.fp;
    return d == 0 ? 0.0 : double(cm.tp) / double(d);
}

double recall_of(const ConfusionMatrix& cm) {
    long d = cm.tp + cm.fn;
    return d == 0 ? 0.0 : double(cm.tp) / double(d);
}

double accuracy_of(const ConfusionMatrix& cm) {
    long d = cm.total();
    return d == 0 ? 0.0 : double(cm.tp + cm.tn) / double(d);
}

double f1_score(const ConfusionMatrix& cm) {
    double p = precision_of(cm);
    double r = recall_of(cm);
    return (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

RocResult roc_and_auc(const std::vector<PredictionRecord>& records) {
    validate_scores(records);

    long pos = 0, neg = 0;
    for (const auto& r : records) (r.label == 1 ? pos : neg)++;
    if (pos == 0 || neg == 0) {
        throw UndefinedAucError(
            fmt::format("AUC undefined: {} positives, {} negatives", pos, neg));
    }

    std::vector<std::pair<double, int>> scored;
    scored.reserve(records.size());
    for (const auto& r : records) scored.emplace_back(r.score, r.label);
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    RocResult res;
    res.points.push_back({0.0, 0.0});  // threshold = +inf sentinel

    // 2*area numerator over tie groups: each group of p positives and n
    // negatives contributes n * (2*cum_tp + p).
    unsigned long long num2 = 0;
    long cum_tp = 0, cum_fp = 0;
    size_t i = 0;
    while (i < scored.size()) {
        size_t j = i;
        long p = 0, n = 0;
        while (j < scored.size() && scored[j].first == scored[i].first) {
            (scored[j].second == 1 ? p : n)++;
            ++j;
        }
        num2 += (unsigned long long)(n) * (unsigned long long)(2 * cum_tp + p);
        cum_tp += p;
        cum_fp += n;
        res.points.push_back({double(cum_fp) / double(neg), double(cum_tp) / double(pos)});
        i = j;
    }
    res.auc = double(num2) / (2.0 * double(pos) * double(neg));
    return res;
}

MetricsReport compute_metrics(const std::vector<PredictionRecord>& records,
                              double threshold) {
    MetricsReport rep;
    ConfusionMatrix cm = confusion_at(records, threshold);
    rep.precision = precision_of(cm);
    rep.recall = recall_of(cm);
    rep.accuracy = accuracy_of(cm);
    rep.f1 = f1_score(cm);
    RocResult roc = roc_and_auc(records);
    rep.auc = roc.auc;
    rep.roc_points = std::move(roc.points);
    return rep;
}

void write_predictions_csv(std::ostream& out, const std::vector<PredictionRow>& rows) {
    out << "sample_id,test_set,model,experiment,score,label\n";
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{:.9f},{}\n", r.sample_id, r.test_set, r.model,
                           r.experiment, r.score, r.label);
    }
}

std::vector<PredictionRow> read_predictions_csv(std::istream& in) {
    std::vector<PredictionRow> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first) {
            first = false;
            continue;
        }
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 6) throw Error(fmt::format("predictions csv: bad row '{}'", line));
        rows.push_back({f[0], f[1], f[2], f[3], std::stod(f[4]), std::stoi(f[5])});
    }
    return rows;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
    out << "test_set,model,experiment,auc,f1,precision,recall,accuracy,threshold\n";
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n",
                           r.test_set, r.model, r.experiment, r.auc, r.f1, r.precision,
                           r.recall, r.accuracy, r.threshold);
    }
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
    std::vector<MetricsRow> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first) {
            first = false;
            continue;
        }
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 9) throw Error(fmt::format("metrics csv: bad row '{}'", line));
        rows.push_back({f[0], f[1], f[2], std::stod(f[3]), std::stod(f[4]),
                        std::stod(f[5]), std::stod(f[6]), std::stod(f[7]),
                        std::stod(f[8])});
    }
    return rows;
}

void write_roc_csv(std::ostream& out, const std::vector<RocPoint>& points) {
    out << "fpr,tpr\n";
    for (const auto& p : points) out << fmt::format("{:.9f},{:.9f}\n", p.fpr, p.tpr);
}

std::vector<RocPoint> read_roc_csv(std::istream& in) {
    std::vector<RocPoint> pts;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first) {
            first = false;
            continue;
        }
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 2) throw Error(fmt::format("roc csv: bad row '{}'", line));
        pts.push_back({std::stod(f[0]), std::stod(f[1])});
    }
    return pts;
}

}  // namespace gravit
