#include "gravit/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "gravit/errors.hpp"

namespace gravit {

EnsembleInput make_ensemble_input(
    const std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>>&
        per_model) {
    if (per_model.empty()) throw Error("ensemble: no members");

    EnsembleInput input;
    const auto& reference = per_model.front().second;
    input.sample_ids.reserve(reference.size());
    std::set<std::string> ref_ids;
    for (const auto& [id, _] : reference) {
        input.sample_ids.push_back(id);
        if (!ref_ids.insert(id).second) {
            throw AlignmentError(fmt::format("ensemble: duplicate sample id '{}' in "
                                             "member '{}'", id, per_model.front().first));
        }
    }

    for (const auto& [model, scores] : per_model) {
        std::map<std::string, double> by_id;
        for (const auto& [id, s] : scores) by_id[id] = s;

        std::vector<std::string> missing, extra;
        for (const auto& id : input.sample_ids) {
            if (!by_id.count(id)) missing.push_back(id);
        }
        if (by_id.size() != input.sample_ids.size() || !missing.empty()) {
            for (const auto& [id, _] : by_id) {
                if (!ref_ids.count(id)) extra.push_back(id);
            }
            auto preview = [](const std::vector<std::string>& v) {
                std::string s;
                for (size_t i = 0; i < v.size() && i < 8; ++i) {
                    if (i) s += ", ";
                    s += v[i];
                }
                if (v.size() > 8) s += fmt::format(", ... ({} total)", v.size());
                return s;
            };
            throw AlignmentError(fmt::format(
                "ensemble: member '{}' sample set differs from '{}': missing [{}], "
                "extra [{}]",
                model, per_model.front().first, preview(missing), preview(extra)));
        }

        std::vector<double> aligned;
        aligned.reserve(input.sample_ids.size());
        for (const auto& id : input.sample_ids) aligned.push_back(by_id.at(id));
        input.member_scores.emplace_back(model, std::move(aligned));
    }
    return input;
}

std::vector<double> ensemble_predict(const EnsembleInput& input) {
    if (input.member_scores.empty()) throw Error("ensemble: N must be >= 1");
    const size_t n_samples = input.sample_ids.size();
    for (const auto& [model, scores] : input.member_scores) {
        if (scores.size() != n_samples) {
            throw AlignmentError(fmt::format("ensemble: member '{}' has {} scores for "
                                             "{} samples", model, scores.size(),
                                             n_samples));
        }
        for (double s : scores) {
            if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
                throw Error(fmt::format("ensemble: member '{}' score {} outside [0,1]",
                                        model, s));
            }
        }
    }

    std::vector<double> mean(n_samples, 0.0);
    for (const auto& [_, scores] : input.member_scores) {
        for (size_t i = 0; i < n_samples; ++i) mean[i] += scores[i];
    }
    const double n = double(input.member_scores.size());
    for (double& m : mean) m /= n;
    return mean;
}

}  // namespace gravit
