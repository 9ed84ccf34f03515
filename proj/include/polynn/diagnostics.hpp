#pragma once

#include "polynn/mlp.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <vector>

namespace polynn {

// Reported in place of an infinite VIF (exact collinearity, aliased or
// constant columns) so degenerate columns still enter the mean.
inline constexpr double kVifCap = 1e15;
inline constexpr double kVifThreshold = 10.0;

// VIF_j = 1 / (1 - R^2_j), where R^2_j comes from regressing column j on all
// other columns plus an intercept. Needs at least two columns.
[[nodiscard]] Eigen::VectorXd vif(const Eigen::MatrixXd& x);

struct VIFSummary {
    double proportion_over = 0.0;  // strictly greater than the threshold
    double mean = 0.0;
};

[[nodiscard]] VIFSummary vif_summary(const Eigen::VectorXd& vifs, double threshold = kVifThreshold);

struct VIFReport {
    std::string layer_label;
    bool defined = true;  // false when the layer has fewer than two units
    Eigen::VectorXd vifs;
    double proportion_over = 0.0;
    double mean_vif = 0.0;
    double threshold = kVifThreshold;
};

[[nodiscard]] VIFReport vif_report(const Eigen::MatrixXd& x, std::string label, double threshold = kVifThreshold);

// One report per layer (dense and dropout alike), computed in inference mode.
[[nodiscard]] std::vector<VIFReport> probe_layers(const MLP& net, const Eigen::MatrixXd& x,
                                                  double threshold = kVifThreshold);

// CSV: layer,defined,proportion_over,mean_vif
void write_vif_csv(std::ostream& out, const std::vector<VIFReport>& reports);
// Aligned text table: Layer | Percentage of VIFs that are larger than 10 | Average VIF
void write_vif_table(std::ostream& out, const std::vector<VIFReport>& reports);

}  // namespace polynn
