#pragma once

#include "polynn/dataset.hpp"
#include "polynn/diagnostics.hpp"
#include "polynn/equivalence.hpp"
#include "polynn/fitcore.hpp"
#include "polynn/mlp.hpp"
#include "polynn/stepwise.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace polynn {

// Settings for one train/test evaluation of a polynomial model.
struct FitRunConfig {
    std::string dataset_name = "data";
    PolySpec spec{1};
    std::optional<FitMethod> method;  // default: ols, or logistic for a class response
    double lambda = 0.0;
    std::optional<double> pca_fraction;
    std::optional<double> keep_fraction;
    bool fsr = false;
    double fsr_validation_fraction = 0.2;
    std::size_t fsr_min_models = 200;
    double fsr_tolerance = 1e-2;
    LogisticOptions logistic;
    ExpandOptions expand;
    std::uint64_t seed = 0;

    void validate() const;
    // Short label such as "PR 2:1 pca0.9" used in the results table.
    [[nodiscard]] std::string setting() const;
};

struct FitRunReport {
    PolyModel model;
    std::string setting;
    std::string metric_name;  // mean_abs_error or pcc
    double metric_value = 0.0;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::size_t terms = 0;
    Prediction fitted;        // on the training rows
    std::vector<std::string> warnings;
    std::optional<FSRResult> fsr;
};

// Split (holdout rule) -> optional PCA -> expand -> fit -> evaluate on test.
[[nodiscard]] FitRunReport run_fit(const Dataset& ds, const FitRunConfig& config);

// One results record: setting,dataset,seed,metric,value
inline constexpr const char* kResultsHeader = "setting,dataset,seed,metric,value";
[[nodiscard]] std::string results_row(const FitRunReport& report, const FitRunConfig& config);
// Appends a row, writing the header first when the file is new or empty.
void append_results(const std::string& path, const std::string& row);

struct PredictReport {
    Prediction prediction;
    std::size_t rows = 0;
    std::size_t unseen_levels = 0;
    std::vector<std::string> warnings;
};

[[nodiscard]] PredictReport run_predict(const PolyModel& model, const std::string& data_path);
[[nodiscard]] PredictReport run_predict(const PolyModel& model, std::istream& data);
// CSV: row,prediction (class level names for classifiers)
void write_predictions(std::ostream& out, const PolyModel& model, const Prediction& prediction);

struct ProbeConfig {
    MLPConfig mlp;
    // Columns are divided by their max |value| before training and probing.
    bool scale_inputs = true;
    // Also report the input design; costly for wide inputs (one regression per column).
    bool probe_input = false;
    std::uint64_t seed = 0;
};

struct ProbeReport {
    std::optional<VIFReport> input;
    std::vector<VIFReport> layers;
    std::size_t train_rows = 0;
    std::size_t probe_rows = 0;
    std::optional<double> train_pcc;
    MLP net;
};

// Trains (unless `net` is given) on the training part of the holdout split
// and computes per-layer VIF reports on the held-out rows.
[[nodiscard]] ProbeReport run_vif_probe(const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets,
                                        const ProbeConfig& config, const std::optional<MLP>& net = std::nullopt);

// The five-layer MNIST network: dense(10) relu, dropout, dense(10) relu,
// dropout, dense(10) softmax.
[[nodiscard]] MLPConfig reference_probe_config(std::uint64_t seed);

struct EquivDemoConfig {
    std::size_t inputs = 2;
    std::size_t layers = 2;
    std::size_t width = 3;
    std::size_t outputs = 1;
    Activation activation = Activation::Square;
    std::size_t points = 100;
    std::uint64_t seed = 0;
};

struct EquivDemoReport {
    MLP net;
    Extraction extraction;
    std::vector<unsigned> degrees;
    double max_deviation = 0.0;
};

// Random network whose dense layers all use the given activation; weights
// and biases uniform on [-1, 1].
[[nodiscard]] MLP random_polynomial_net(const EquivDemoConfig& config);
[[nodiscard]] EquivDemoReport run_equiv_demo(const EquivDemoConfig& config);

}  // namespace polynn
