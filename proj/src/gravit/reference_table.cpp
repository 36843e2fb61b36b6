#include "gravit/reference_table.hpp"

#include <array>

namespace gravit {

namespace {

// Columns: A1 A2 A3 B1 B2 B3 C1 C2 C3 S1 S2 S3 | C21 S22 J24 I24
constexpr double kAuc[12][16] = {
    {0.94, 0.96, 0.93, 0.64, 0.72, 0.79, 0.91, 0.94, 0.92, 0.94, 0.97, 0.93, 0.97, 0.98, 0.86, 0.80},
    {0.93, 0.96, 0.95, 0.71, 0.76, 0.80, 0.93, 0.96, 0.94, 0.92, 0.97, 0.95, 0.97, 0.91, 0.90, 0.80},
    {0.93, 0.94, 0.89, 0.59, 0.70, 0.80, 0.88, 0.93, 0.90, 0.92, 0.96, 0.90, 0.97, 0.99, 0.88, 0.83},
    {0.99, 1.00, 0.98, 0.66, 0.76, 0.83, 0.97, 0.99, 0.99, 0.98, 1.00, 0.99, 0.94, 0.96, 0.97, 0.87},
    {0.90, 0.93, 0.91, 0.73, 0.81, 0.85, 0.90, 0.96, 0.93, 0.89, 0.95, 0.92, 0.96, 0.90, 0.84, 0.79},
    {0.94, 0.97, 0.94, 0.65, 0.74, 0.81, 0.92, 0.96, 0.94, 0.94, 0.97, 0.94, 0.96, 0.96, 0.90, 0.82},
    {1.00, 1.00, 1.00, 0.66, 0.66, 0.70, 0.99, 1.00, 1.00, 0.99, 1.00, 1.00, 1.00, 0.99, 0.90, 0.71},
    {1.00, 1.00, 1.00, 0.49, 0.54, 0.69, 0.98, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 0.88, 0.76},
    {1.00, 1.00, 1.00, 0.59, 0.65, 0.73, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 0.96, 0.82},
    {0.33, 0.21, 0.36, 0.92, 0.95, 0.97, 0.74, 0.64, 0.78, 0.35, 0.26, 0.25, 0.80, 0.70, 0.98, 0.99},
    {0.54, 0.48, 0.61, 0.93, 0.98, 0.98, 0.85, 0.89, 0.94, 0.52, 0.49, 0.62, 0.65, 0.81, 0.99, 0.99},
    {0.67, 0.62, 0.68, 0.74, 0.79, 0.84, 0.86, 0.83, 0.88, 0.67, 0.64, 0.65, 0.87, 0.91, 0.94, 0.87},
};

constexpr double kF1[12][16] = {
    {0.51, 0.56, 0.63, 0.20, 0.39, 0.45, 0.68, 0.79, 0.54, 0.50, 0.66, 0.57, 0.77, 0.76, 0.55, 0.45},
    {0.45, 0.57, 0.74, 0.20, 0.28, 0.32, 0.51, 0.61, 0.66, 0.43, 0.64, 0.64, 0.74, 0.53, 0.61, 0.47},
    {0.43, 0.40, 0.45, 0.18, 0.45, 0.48, 0.34, 0.49, 0.42, 0.44, 0.50, 0.37, 0.78, 0.77, 0.62, 0.48},
    {0.78, 0.89, 0.83, 0.24, 0.48, 0.48, 0.73, 0.92, 0.88, 0.75, 0.91, 0.88, 0.68, 0.72, 0.74, 0.51},
    {0.67, 0.66, 0.76, 0.45, 0.59, 0.64, 0.64, 0.83, 0.79, 0.67, 0.73, 0.71, 0.77, 0.70, 0.69, 0.52},
    {0.21, 0.23, 0.32, 0.07, 0.17, 0.20, 0.21, 0.34, 0.27, 0.20, 0.31, 0.24, 0.59, 0.47, 0.35, 0.37},
    {0.95, 0.97, 0.99, 0.29, 0.31, 0.34, 0.95, 0.97, 0.98, 0.94, 0.98, 0.98, 0.99, 0.94, 0.70, 0.25},
    {0.94, 0.93, 0.95, 0.28, 0.32, 0.36, 0.91, 0.95, 0.94, 0.94, 0.95, 0.93, 1.00, 0.96, 0.70, 0.25},
    {0.99, 1.00, 1.00, 0.29, 0.33, 0.36, 0.98, 1.00, 1.00, 0.99, 1.00, 1.00, 0.99, 0.96, 0.71, 0.25},
    {0.07, 0.05, 0.08, 0.83, 0.89, 0.91, 0.39, 0.32, 0.48, 0.08, 0.05, 0.08, 0.18, 0.30, 0.95, 0.95},
    {0.07, 0.05, 0.08, 0.85, 0.93, 0.94, 0.41, 0.33, 0.50, 0.08, 0.05, 0.08, 0.17, 0.31, 0.97, 0.96},
    {0.62, 0.62, 0.65, 0.56, 0.65, 0.68, 0.70, 0.71, 0.74, 0.62, 0.64, 0.63, 0.70, 0.70, 0.82, 0.68},
};

const std::array<std::string, 12> kExpCols = {"A1", "A2", "A3", "B1", "B2", "B3",
                                              "C1", "C2", "C3", "S1", "S2", "S3"};
const std::array<std::string, 4> kNetCols = {"C21", "S22", "J24", "I24"};

std::optional<double> lookup(const double (&table)[12][16], TestId id,
                             const std::string& col, bool network) {
    const auto& cols = network ? std::vector<std::string>(kNetCols.begin(), kNetCols.end())
                               : std::vector<std::string>(kExpCols.begin(), kExpCols.end());
    for (size_t c = 0; c < cols.size(); ++c) {
        if (cols[c] == col) {
            return table[size_t(id)][network ? 12 + c : c];
        }
    }
    return std::nullopt;
}

}  // namespace

const ReferenceTable& ReferenceTable::instance() {
    static ReferenceTable table;
    return table;
}

std::optional<double> ReferenceTable::ensemble_auc(TestId id,
                                                   const std::string& exp_depth) const {
    return lookup(kAuc, id, exp_depth, false);
}

std::optional<double> ReferenceTable::ensemble_f1(TestId id,
                                                  const std::string& exp_depth) const {
    return lookup(kF1, id, exp_depth, false);
}

std::optional<double> ReferenceTable::network_auc(TestId id,
                                                  const std::string& network) const {
    return lookup(kAuc, id, network, true);
}

std::optional<double> ReferenceTable::network_f1(TestId id,
                                                 const std::string& network) const {
    return lookup(kF1, id, network, true);
}

const std::array<std::string, 12>& ReferenceTable::experiment_columns() { return kExpCols; }
const std::array<std::string, 4>& ReferenceTable::network_columns() { return kNetCols; }

}  // namespace gravit
