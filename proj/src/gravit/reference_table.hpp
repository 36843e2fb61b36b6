#pragma once

#include <optional>
#include <string>

#include "gravit/dataset.hpp"

namespace gravit {

// Published ensemble scores per test set and experiment (A1..S3), plus the
// four reference-network columns (C21, S22, J24, I24). Display-side
// comparison constants only; nothing here is ever asserted against this
// implementation's outputs.
class ReferenceTable {
public:
    static const ReferenceTable& instance();

    std::optional<double> ensemble_auc(TestId id, const std::string& exp_depth) const;
    std::optional<double> ensemble_f1(TestId id, const std::string& exp_depth) const;
    std::optional<double> network_auc(TestId id, const std::string& network) const;
    std::optional<double> network_f1(TestId id, const std::string& network) const;

    static const std::array<std::string, 12>& experiment_columns();
    static const std::array<std::string, 4>& network_columns();

private:
    ReferenceTable() = default;
};

}  // namespace gravit
