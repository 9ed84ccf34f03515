#include "polynn/stepwise.hpp"

#include "polynn/error.hpp"
#include "polynn/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace polynn {

namespace {

struct Evaluator {
    const Eigen::MatrixXd& sub_expanded;
    const Eigen::MatrixXd& val_expanded;
    const Eigen::VectorXd& sub_y;
    const Eigen::VectorXd& val_y;
    const TermSet& candidates;
    FitOptions options;
    std::size_t classes;

    Eigen::MatrixXd columns(const Eigen::MatrixXd& src, const std::vector<std::size_t>& idx) const
    {
        Eigen::MatrixXd out(src.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = src.col(static_cast<Eigen::Index>(idx[j]));
        return out;
    }

    FitOutput fit(const std::vector<std::size_t>& idx) const
    {
        std::vector<Monomial> terms;
        for (auto i : idx) terms.push_back(candidates[i]);
        return fit_on_terms(columns(sub_expanded, idx), candidates.with_terms(std::move(terms)), sub_y, options, classes);
    }

    double score(const std::vector<std::size_t>& idx) const
    {
        const auto out = fit(idx);
        const auto& m = out.model;
        Eigen::MatrixXd eta = m.standardization.apply(columns(val_expanded, idx)) * m.coefficients;
        eta.rowwise() += m.intercepts.transpose();
        if (m.is_classifier()) {
            std::vector<std::size_t> actual(static_cast<std::size_t>(val_y.size()));
            for (Eigen::Index i = 0; i < val_y.size(); ++i) actual[static_cast<std::size_t>(i)] = static_cast<std::size_t>(val_y(i));
            return pcc(argmax_rows(eta), actual);  // sigmoid is monotone
        }
        return mean_abs_error(eta.col(0), val_y);
    }
};

}  // namespace

FSRResult fsr(const Design& design, const Eigen::VectorXd& response, const Schema& schema, const FSRConfig& config,
              std::uint64_t seed)
{
    const auto& cands = config.candidates;
    if (cands.size() == 0) throw Error(ErrorCode::Usage, "FSR needs a nonempty candidate set");
    if (!(config.validation_fraction > 0.0 && config.validation_fraction < 1.0))
        throw Error(ErrorCode::Usage, "validation fraction must be in (0, 1)");
    if (config.min_models < 1) throw Error(ErrorCode::Usage, "min_models must be >= 1");
    if (design.x.rows() != response.size()) throw Error(ErrorCode::Data, "design and response row counts differ");

    const auto n = static_cast<std::size_t>(design.x.rows());
    const auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(n)));
    if (n_val < 1) throw Error(ErrorCode::Data, "FSR validation holdout would be empty");
    if (n_val >= n) throw Error(ErrorCode::Data, "FSR sub-training set would be empty");
    const auto parts = split_indices(n, n_val, seed);

    const Eigen::MatrixXd expanded = expand(design.x, cands);
    auto rows_of = [](const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
        for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
        return out;
    };
    auto elems_of = [](const Eigen::VectorXd& v, const std::vector<std::size_t>& idx) {
        Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
        return out;
    };
    const Eigen::MatrixXd sub_x = rows_of(expanded, parts.train);
    const Eigen::MatrixXd val_x = rows_of(expanded, parts.test);
    const Eigen::VectorXd sub_y = elems_of(response, parts.train);
    const Eigen::VectorXd val_y = elems_of(response, parts.test);

    FitOptions options;
    options.method = schema.is_classification() ? FitMethod::Logistic : FitMethod::Ols;
    options.logistic = config.logistic;
    const std::size_t classes = schema.is_classification() ? schema.response().levels.size() : 0;
    const Evaluator eval{sub_x, val_x, sub_y, val_y, cands, options, classes};

    FSRResult result;
    result.higher_is_better = schema.is_classification();
    const bool hib = result.higher_is_better;
    const double tol = config.improvement_tolerance;
    auto beats = [&](double a, double b) {
        return hib ? a > b + tol * std::abs(b) : a < b - tol * std::abs(b);
    };

    std::vector<std::size_t> selected;
    result.baseline_score = eval.score(selected);
    result.models_fit = 1;
    double best_score = result.baseline_score;
    std::vector<std::size_t> best_selected;

    std::vector<std::size_t> remaining(cands.size());
    for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;

    for (std::size_t step = 1; !remaining.empty(); ++step) {
        std::vector<double> scores(remaining.size());
        parallel_for(remaining.size(), [&](std::size_t k) {
            auto trial = selected;
            trial.push_back(remaining[k]);
            scores[k] = eval.score(trial);
        });
        result.models_fit += remaining.size();

        // Lowest candidate index wins ties, keeping the path deterministic.
        std::size_t pick = 0;
        for (std::size_t k = 1; k < remaining.size(); ++k)
            if (hib ? scores[k] > scores[pick] : scores[k] < scores[pick]) pick = k;

        const bool improved = beats(scores[pick], best_score);
        if (!improved && result.models_fit >= config.min_models) break;

        selected.push_back(remaining[pick]);
        result.trace.push_back({step, remaining[pick], cands[remaining[pick]].label(design.names), scores[pick],
                                result.models_fit, improved});
        if (improved) {
            best_score = scores[pick];
            best_selected = selected;
        }
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    }

    result.selected = best_selected;
    result.validation_score = best_score;
    auto final_fit = eval.fit(best_selected);
    result.model = std::move(final_fit.model);
    result.model.schema = schema;
    result.model.design_names = design.names;
    if (schema.is_classification()) result.model.class_levels = schema.response().levels;
    // The refit model is indexed by the full design, so remap its term set.
    std::vector<Monomial> kept;
    for (auto i : best_selected) kept.push_back(cands[i]);
    result.model.terms = cands.with_terms(std::move(kept));
    return result;
}

FSRResult fsr(const Dataset& train, const FSRConfig& config, std::uint64_t seed)
{
    const auto design = encode_design(train);
    return fsr(design, train.response_values(), train.schema(), config, seed);
}

void write_fsr_trace(std::ostream& out, const FSRResult& result)
{
    char buf[64];
    out << "step,candidate,term,score,models_fit,improved\n";
    std::snprintf(buf, sizeof buf, "%.10g", result.baseline_score);
    out << "0,,(intercept)," << buf << ",1,1\n";
    for (const auto& t : result.trace) {
        std::snprintf(buf, sizeof buf, "%.10g", t.score);
        out << t.step << ',' << t.candidate << ',' << t.term << ',' << buf << ',' << t.models_fit << ','
            << (t.improved ? 1 : 0) << '\n';
    }
}

}  // namespace polynn
