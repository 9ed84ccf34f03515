#include "polynn/diagnostics.hpp"

#include "polynn/error.hpp"
#include "polynn/fitcore.hpp"
#include "polynn/parallel.hpp"

#include <cstdio>
#include <ostream>

namespace polynn {

namespace {
// 1 - R^2 below this counts as exact collinearity.
constexpr double kCollinearTol = 1e-12;
}  // namespace

Eigen::VectorXd vif(const Eigen::MatrixXd& x)
{
    const Eigen::Index k = x.cols();
    if (k < 2) throw Error(ErrorCode::Data, "VIF needs at least two columns");
    check_finite(x, "VIF input");

    Eigen::VectorXd out(k);
    parallel_for(static_cast<std::size_t>(k), [&](std::size_t jj) {
        const auto j = static_cast<Eigen::Index>(jj);
        const Eigen::VectorXd target = x.col(j);
        Eigen::MatrixXd others(x.rows(), k - 1);
        others.leftCols(j) = x.leftCols(j);
        others.rightCols(k - 1 - j) = x.rightCols(k - 1 - j);

        const auto fit = fit_ols(others, target);
        if (!(fit.tss > 0.0)) {
            out(j) = kVifCap;
            return;
        }
        const double unexplained = fit.rss / fit.tss;
        out(j) = unexplained < kCollinearTol ? kVifCap : std::min(kVifCap, 1.0 / unexplained);
    });
    return out;
}

VIFSummary vif_summary(const Eigen::VectorXd& vifs, double threshold)
{
    if (vifs.size() == 0) throw Error(ErrorCode::Data, "VIF summary of an empty vector");
    VIFSummary s;
    s.proportion_over = static_cast<double>((vifs.array() > threshold).count()) / static_cast<double>(vifs.size());
    s.mean = vifs.mean();
    return s;
}

VIFReport vif_report(const Eigen::MatrixXd& x, std::string label, double threshold)
{
    VIFReport r;
    r.layer_label = std::move(label);
    r.threshold = threshold;
    if (x.cols() < 2) {
        r.defined = false;
        return r;
    }
    r.vifs = vif(x);
    const auto s = vif_summary(r.vifs, threshold);
    r.proportion_over = s.proportion_over;
    r.mean_vif = s.mean;
    return r;
}

std::vector<VIFReport> probe_layers(const MLP& net, const Eigen::MatrixXd& x, double threshold)
{
    if (x.rows() == 0) throw Error(ErrorCode::Data, "VIF probe needs at least one row");
    const auto acts = net.all_activations(x);
    std::vector<VIFReport> reports;
    reports.reserve(acts.size());
    for (std::size_t i = 0; i < acts.size(); ++i) reports.push_back(vif_report(acts[i], net.layers()[i].label, threshold));
    return reports;
}

void write_vif_csv(std::ostream& out, const std::vector<VIFReport>& reports)
{
    char buf[96];
    out << "layer,defined,proportion_over,mean_vif\n";
    for (const auto& r : reports) {
        if (!r.defined) {
            out << r.layer_label << ",0,,\n";
            continue;
        }
        std::snprintf(buf, sizeof buf, ",1,%.6g,%.10g\n", r.proportion_over, r.mean_vif);
        out << r.layer_label << buf;
    }
}

void write_vif_table(std::ostream& out, const std::vector<VIFReport>& reports)
{
    char buf[160];
    char head[64];
    std::snprintf(head, sizeof head, "Percentage of VIFs that are larger than %g",
                  reports.empty() ? kVifThreshold : reports.front().threshold);
    std::snprintf(buf, sizeof buf, "%-12s  %-44s  %s\n", "Layer", head, "Average VIF");
    out << buf;
    for (const auto& r : reports) {
        if (!r.defined)
            std::snprintf(buf, sizeof buf, "%-12s  %-44s  %s\n", r.layer_label.c_str(), "undefined", "undefined");
        else
            std::snprintf(buf, sizeof buf, "%-12s  %-44.6g  %.6g\n", r.layer_label.c_str(), r.proportion_over, r.mean_vif);
        out << buf;
    }
}

}  // namespace polynn
