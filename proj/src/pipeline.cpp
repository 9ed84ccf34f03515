#include "polynn/pipeline.hpp"

#include "polynn/error.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

namespace polynn {

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
    return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<std::size_t>& idx)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
    return out;
}

std::vector<std::size_t> as_classes(const Eigen::VectorXd& v)
{
    std::vector<std::size_t> out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(v(i));
    return out;
}

std::string fmt_g(double v, int digits)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

}  // namespace

// --- fit ----------------------------------------------------------------------

void FitRunConfig::validate() const
{
    if (method == FitMethod::Ridge && !(lambda > 0.0)) throw Error(ErrorCode::Usage, "ridge requires --lambda > 0");
    if (method != FitMethod::Ridge && lambda != 0.0) throw Error(ErrorCode::Usage, "--lambda is only valid with ridge");
    if (pca_fraction && !(*pca_fraction > 0.0 && *pca_fraction <= 1.0))
        throw Error(ErrorCode::Usage, "PCA fraction must be in (0, 1]");
    if (fsr && method == FitMethod::Ridge) throw Error(ErrorCode::Usage, "FSR refits by OLS/logistic; ridge is not supported");
}

std::string FitRunConfig::setting() const
{
    std::string s = "PR " + std::to_string(spec.degree);
    if (spec.max_interact_degree != spec.degree) s += ":" + std::to_string(spec.max_interact_degree);
    if (method == FitMethod::Ridge) s += " ridge" + fmt_g(lambda, 6);
    if (pca_fraction) s += " pca" + fmt_g(*pca_fraction, 6);
    if (keep_fraction) s += " keep" + fmt_g(*keep_fraction, 6);
    if (fsr) s += " fsr";
    return s;
}

FitRunReport run_fit(const Dataset& ds, const FitRunConfig& config)
{
    config.validate();
    const auto& schema = ds.schema();
    const bool classify = schema.is_classification();
    const FitMethod method = config.method.value_or(classify ? FitMethod::Logistic : FitMethod::Ols);

    const Design design = encode_design(ds);
    const Eigen::VectorXd y = ds.response_values();
    if (ds.rows() < 2) throw Error(ErrorCode::Data, "need at least 2 rows to split");
    const auto parts = split_indices(ds.rows(), holdout_size(ds.rows()), config.seed);

    Design train = design;
    train.x = take_rows(design.x, parts.train);
    const Eigen::MatrixXd test_x = take_rows(design.x, parts.test);
    const Eigen::VectorXd train_y = take(y, parts.train);
    const Eigen::VectorXd test_y = take(y, parts.test);

    FitRunReport report;
    report.setting = config.setting();
    report.train_rows = parts.train.size();
    report.test_rows = parts.test.size();

    FitOptions options;
    options.spec = config.spec;
    options.method = method;
    options.lambda = config.lambda;
    options.pca_fraction = config.pca_fraction;
    options.keep_fraction = config.keep_fraction;
    options.seed = config.seed;
    options.logistic = config.logistic;
    options.expand = config.expand;

    if (config.fsr) {
        std::optional<PCABasis> basis;
        Design work = train;
        if (config.pca_fraction) {
            basis = pca_fit(train.x, *config.pca_fraction);
            work.x = pca_transform(*basis, train.x);
            work.groups = {};
            work.names.clear();
            for (Eigen::Index j = 0; j < work.x.cols(); ++j) {
                work.groups.numeric_indices.push_back(static_cast<std::size_t>(j));
                work.names.push_back("PC" + std::to_string(j + 1));
            }
        }
        FSRConfig fc;
        fc.candidates = enumerate_terms(static_cast<std::size_t>(work.x.cols()), work.groups, config.spec);
        if (config.keep_fraction) fc.candidates = drop_random_columns(fc.candidates, *config.keep_fraction, config.seed);
        fc.validation_fraction = config.fsr_validation_fraction;
        fc.min_models = config.fsr_min_models;
        fc.improvement_tolerance = config.fsr_tolerance;
        fc.logistic = config.logistic;
        auto result = fsr(work, train_y, schema, fc, config.seed);
        report.model = result.model;
        report.model.pca = basis;
        report.model.design_names = design.names;
        report.fsr = std::move(result);
        report.fitted = predict(report.model, train.x);
        report.warnings = design.warnings;
    } else {
        auto out = fit_poly_model(train, train_y, schema, options);
        report.model = std::move(out.model);
        report.fitted = std::move(out.fitted);
        report.warnings = std::move(out.warnings);
    }
    report.terms = report.model.terms.size();

    if (report.test_rows == 0) {
        report.warnings.push_back("holdout is empty; test metric not computed");
        report.metric_name = classify ? "pcc" : "mean_abs_error";
        report.metric_value = std::numeric_limits<double>::quiet_NaN();
        return report;
    }
    const auto pred = predict(report.model, test_x);
    if (classify) {
        report.metric_name = "pcc";
        report.metric_value = pcc(pred.classes, as_classes(test_y));
    } else {
        report.metric_name = "mean_abs_error";
        report.metric_value = mean_abs_error(pred.values, test_y);
    }
    return report;
}

std::string results_row(const FitRunReport& report, const FitRunConfig& config)
{
    return report.setting + "," + config.dataset_name + "," + std::to_string(config.seed) + "," + report.metric_name + "," +
           fmt_g(report.metric_value, 10);
}

void append_results(const std::string& path, const std::string& row)
{
    namespace fs = std::filesystem;
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    std::ofstream out(path, std::ios::app);
    if (!out) throw Error(ErrorCode::Io, "cannot append to '" + path + "'");
    if (fresh) out << kResultsHeader << '\n';
    out << row << '\n';
}

// --- predict ------------------------------------------------------------------

PredictReport run_predict(const PolyModel& model, std::istream& data)
{
    LoadOptions opts;
    opts.require_response = false;
    opts.allow_empty = true;
    auto loaded = read_csv(data, model.schema.without_levels(), opts);
    PredictReport report;
    report.warnings = loaded.warnings;
    report.rows = loaded.data.rows();
    if (report.rows == 0) {
        report.warnings.push_back("no input rows; predictions are empty");
        return report;
    }
    const Design design = encode_design(loaded.data, model.schema);
    report.unseen_levels = design.unseen_levels;
    report.warnings.insert(report.warnings.end(), design.warnings.begin(), design.warnings.end());
    report.prediction = predict(model, design.x);
    return report;
}

PredictReport run_predict(const PolyModel& model, const std::string& data_path)
{
    std::ifstream in(data_path);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + data_path + "'");
    return run_predict(model, in);
}

void write_predictions(std::ostream& out, const PolyModel& model, const Prediction& prediction)
{
    out << "row,prediction\n";
    if (model.is_classifier()) {
        for (std::size_t i = 0; i < prediction.classes.size(); ++i)
            out << i << ',' << model.class_levels.at(prediction.classes[i]) << '\n';
    } else {
        for (Eigen::Index i = 0; i < prediction.values.size(); ++i) out << i << ',' << fmt_g(prediction.values(i), 17) << '\n';
    }
}

// --- VIF probe ------------------------------------------------------------------

MLPConfig reference_probe_config(std::uint64_t seed)
{
    MLPConfig c;
    c.layer_widths = {10, 10, 10};
    c.activations = {Activation::Relu, Activation::Relu};
    c.dropout_rates = {0.2, 0.2};
    c.output = OutputKind::Softmax;
    c.epochs = 5;
    c.batch_size = 32;
    c.learning_rate = 0.1;
    c.seed = seed;
    return c;
}

ProbeReport run_vif_probe(const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets, const ProbeConfig& config,
                          const std::optional<MLP>& net)
{
    if (x.rows() < 2) throw Error(ErrorCode::Data, "VIF probe needs at least 2 rows");
    Eigen::MatrixXd xs = x;
    if (config.scale_inputs) {
        for (Eigen::Index j = 0; j < xs.cols(); ++j) {
            const double m = xs.col(j).cwiseAbs().maxCoeff();
            if (m > 0.0) xs.col(j) /= m;
        }
    }
    const auto parts = split_indices(static_cast<std::size_t>(xs.rows()), holdout_size(static_cast<std::size_t>(xs.rows())),
                                     config.seed);
    const Eigen::MatrixXd train_x = take_rows(xs, parts.train);
    const Eigen::MatrixXd probe_x = parts.test.empty() ? train_x : take_rows(xs, parts.test);

    ProbeReport report;
    report.train_rows = parts.train.size();
    report.probe_rows = static_cast<std::size_t>(probe_x.rows());

    MLP model;
    if (net) {
        model = *net;
    } else {
        const Eigen::MatrixXd train_t = take_rows(targets, parts.train);
        model = train_mlp(train_x, train_t, config.mlp).net;
        if (config.mlp.output == OutputKind::Softmax) {
            const auto out = model.forward(train_x);
            report.train_pcc = pcc(argmax_rows(out), argmax_rows(train_t));
        }
    }
    if (config.probe_input) report.input = vif_report(probe_x, "input");
    report.layers = probe_layers(model, probe_x);
    report.net = std::move(model);
    return report;
}

// --- Equivalence demo -------------------------------------------------------------

MLP random_polynomial_net(const EquivDemoConfig& config)
{
    if (config.inputs < 1 || config.layers < 1 || config.width < 1 || config.outputs < 1)
        throw Error(ErrorCode::Usage, "demo network sizes must be >= 1");
    std::mt19937_64 rng(config.seed);
    auto uniform = [&rng] { return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0; };
    std::vector<Layer> layers;
    std::size_t fan_in = config.inputs;
    for (std::size_t d = 0; d < config.layers; ++d) {
        const std::size_t out = d + 1 == config.layers ? config.outputs : config.width;
        Layer L;
        L.label = "dense_" + std::to_string(d + 1);
        L.activation = config.activation;
        L.weights.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(fan_in));
        L.bias.resize(static_cast<Eigen::Index>(out));
        for (Eigen::Index r = 0; r < L.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < L.weights.cols(); ++c) L.weights(r, c) = uniform();
            L.bias(r) = uniform();
        }
        layers.push_back(std::move(L));
        fan_in = out;
    }
    return MLP(config.inputs, std::move(layers));
}

EquivDemoReport run_equiv_demo(const EquivDemoConfig& config)
{
    EquivDemoReport r;
    r.net = random_polynomial_net(config);
    r.extraction = extract_polynomial(r.net);
    r.degrees = degree_growth_report(r.extraction.layers);
    r.max_deviation = equivalence_check(r.net, r.extraction.outputs(), config.points, config.seed + 1);
    return r;
}

}  // namespace polynn
