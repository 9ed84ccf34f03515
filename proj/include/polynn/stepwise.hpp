#pragma once

#include "polynn/dataset.hpp"
#include "polynn/fitcore.hpp"
#include "polynn/polyterms.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace polynn {

struct FSRConfig {
    TermSet candidates;
    double validation_fraction = 0.2;
    // Floor on candidate fits evaluated before the search may stop.
    std::size_t min_models = 200;
    // Relative improvement a step must achieve over the best model so far.
    double improvement_tolerance = 1e-2;
    LogisticOptions logistic;
};

struct FSRTraceEntry {
    std::size_t step = 0;
    std::size_t candidate = 0;  // index into the candidate TermSet
    std::string term;
    double score = 0.0;
    std::size_t models_fit = 0;  // cumulative
    bool improved = false;
};

struct FSRResult {
    PolyModel model;                     // refit on the sub-training rows
    std::vector<std::size_t> selected;   // candidate indices, in order added
    std::vector<FSRTraceEntry> trace;
    double baseline_score = 0.0;         // intercept-only validation score
    double validation_score = 0.0;
    std::size_t models_fit = 0;
    bool higher_is_better = false;       // PCC for classification
};

// Forward stepwise selection over polynomial terms. The training rows are
// split into sub-train and validation; each greedy step refits every
// remaining candidate and keeps the one with the best validation score
// (mean absolute error, or PCC for a class response). The search walks on
// until no step beats the best model by the tolerance and at least
// min_models fits have been made; the best model seen is returned.
[[nodiscard]] FSRResult fsr(const Design& design, const Eigen::VectorXd& response, const Schema& schema,
                            const FSRConfig& config, std::uint64_t seed);
[[nodiscard]] FSRResult fsr(const Dataset& train, const FSRConfig& config, std::uint64_t seed);

// CSV: step,candidate,term,score,models_fit,improved
void write_fsr_trace(std::ostream& out, const FSRResult& result);

}  // namespace polynn
