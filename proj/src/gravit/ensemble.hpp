#pragma once

#include <string>
#include <vector>

namespace gravit {

// Per-model probability vectors aligned on a shared sample order. N is the
// number of members actually present; absent models simply do not count
// toward the normalization.
struct EnsembleInput {
    std::vector<std::string> sample_ids;
    std::vector<std::pair<std::string, std::vector<double>>> member_scores;

    int n_members() const { return int(member_scores.size()); }
};

// Builds an aligned EnsembleInput from per-model (sample_id, score) lists.
// Sample order follows the first member; any mismatch in the id sets raises
// an AlignmentError listing the symmetric difference per offending member.
EnsembleInput make_ensemble_input(
    const std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>>&
        per_model);

// Uniform soft voting: per-sample arithmetic mean over present members.
std::vector<double> ensemble_predict(const EnsembleInput& input);

}  // namespace gravit
