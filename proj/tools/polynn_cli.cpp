// polynn command-line front end: fit, predict, benchmark, vif-probe, equiv-demo.

#include "polynn/error.hpp"
#include "polynn/mnist.hpp"
#include "polynn/model_io.hpp"
#include "polynn/parallel.hpp"
#include "polynn/pipeline.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace polynn;

namespace {

struct Warnings {
    std::vector<std::string> items;

    void add(const std::vector<std::string>& w) { items.insert(items.end(), w.begin(), w.end()); }
    void flush() const
    {
        for (const auto& w : items) std::cerr << "warning: " << w << '\n';
        if (!items.empty()) std::cerr << items.size() << " warning(s)\n";
    }
};

struct DataArgs {
    std::string data;
    std::string schema;
    std::string response;
    std::size_t categorical_threshold = 12;
    bool classification = false;

    void add_to(CLI::App* app, bool required)
    {
        auto* o = app->add_option("--data", data, "CSV file with a header row");
        if (required) o->required();
        app->add_option("--schema", schema, "Column-type sidecar file");
        app->add_option("--response", response, "Response column (default: last column)");
        app->add_option("--categorical-threshold", categorical_threshold,
                        "Numeric columns with at most this many distinct values are categorical (0 disables)")
            ->capture_default_str();
        app->add_flag("--classification", classification, "Treat the response as class labels");
    }

    [[nodiscard]] LoadResult load() const
    {
        LoadOptions opts;
        if (!response.empty()) opts.response = response;
        opts.categorical_threshold = categorical_threshold;
        opts.classification = classification;
        std::optional<Schema> sc;
        if (!schema.empty()) sc = read_schema_file(schema);
        return load_csv(data, sc, opts);
    }
};

struct FitArgs {
    unsigned degree = 1;
    unsigned interact = 0;  // 0: same as degree
    std::string method;
    double lambda = 0.0;
    double pca = 0.0;
    double keep = 0.0;
    bool fsr = false;
    double fsr_validation = 0.2;
    std::size_t fsr_min_models = 200;
    double fsr_tolerance = 1e-2;
    double max_cells = 2e8;
    std::uint64_t seed = 0;
    std::string name;

    void add_to(CLI::App* app)
    {
        app->add_option("--degree", degree, "Polynomial degree")->capture_default_str()->check(CLI::Range(1u, 64u));
        app->add_option("--interact", interact, "Max total degree of interaction terms (default: degree)");
        app->add_option("--method", method, "ols, ridge or logistic (default: by response type)")
            ->check(CLI::IsMember({"ols", "ridge", "logistic"}));
        app->add_option("--lambda", lambda, "Ridge penalty (ridge only)");
        app->add_option("--pca", pca, "Apply PCA keeping this variance fraction (0 = off)");
        app->add_option("--keep", keep, "Keep a random fraction of the expanded columns (0 = all)");
        app->add_flag("--fsr", fsr, "Forward stepwise selection over the expanded terms");
        app->add_option("--fsr-validation", fsr_validation, "FSR validation fraction")->capture_default_str();
        app->add_option("--fsr-min-models", fsr_min_models, "FSR minimum number of fitted models")->capture_default_str();
        app->add_option("--fsr-tolerance", fsr_tolerance, "FSR relative improvement tolerance")->capture_default_str();
        app->add_option("--max-cells", max_cells, "Expansion memory budget in matrix cells")->capture_default_str();
        app->add_option("--seed", seed, "Random seed")->capture_default_str();
        app->add_option("--name", name, "Dataset name for the results CSV (default: data file stem)");
    }

    [[nodiscard]] FitRunConfig config(unsigned deg, unsigned cap, const std::string& data_path) const
    {
        FitRunConfig c;
        c.dataset_name = name.empty() ? fs::path(data_path).stem().string() : name;
        c.spec = PolySpec(deg, cap == 0 ? deg : cap);
        if (!method.empty()) c.method = parse_fit_method(method);
        c.lambda = lambda;
        if (pca > 0.0) c.pca_fraction = pca;
        if (keep > 0.0) c.keep_fraction = keep;
        c.fsr = fsr;
        c.fsr_validation_fraction = fsr_validation;
        c.fsr_min_models = fsr_min_models;
        c.fsr_tolerance = fsr_tolerance;
        c.expand.max_cells = max_cells;
        c.seed = seed;
        return c;
    }
};

void print_fit_report(std::ostream& out, const FitRunReport& r, const FitRunConfig& c)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", r.metric_value);
    out << "setting      " << r.setting << '\n'
        << "dataset      " << c.dataset_name << '\n'
        << "seed         " << c.seed << '\n'
        << "method       " << to_string(r.model.method) << '\n'
        << "terms        " << r.terms << '\n'
        << "train rows   " << r.train_rows << '\n'
        << "test rows    " << r.test_rows << '\n';
    if (r.model.pca) out << "pca comps    " << r.model.pca->components.cols() << '\n';
    if (r.fsr) out << "fsr models   " << r.fsr->models_fit << ", selected " << r.fsr->selected.size() << '\n';
    out << r.metric_name << (r.metric_name.size() < 13 ? std::string(13 - r.metric_name.size(), ' ') : " ") << buf << '\n';
}

int cmd_fit(const DataArgs& data, const FitArgs& args, const std::string& out_dir, const std::string& results,
            Warnings& warn)
{
    const auto loaded = data.load();
    warn.add(loaded.warnings);
    const auto config = args.config(args.degree, args.interact, data.data);
    const auto report = run_fit(loaded.data, config);
    warn.add(report.warnings);

    fs::create_directories(out_dir);
    save_model((fs::path(out_dir) / "model.txt").string(), report.model);
    if (report.fsr) {
        std::ofstream trace(fs::path(out_dir) / "fsr_trace.csv");
        write_fsr_trace(trace, *report.fsr);
    }
    const std::string results_path = results.empty() ? (fs::path(out_dir) / "results.csv").string() : results;
    append_results(results_path, results_row(report, config));
    print_fit_report(std::cout, report, config);
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& out_path, Warnings& warn)
{
    const auto model = load_model(model_path);
    const auto report = run_predict(model, data_path);
    warn.add(report.warnings);
    if (report.unseen_levels > 0) warn.items.push_back(std::to_string(report.unseen_levels) + " unseen level(s) mapped to reference");
    if (out_path.empty()) {
        write_predictions(std::cout, model, report.prediction);
    } else {
        std::ofstream out(out_path);
        if (!out) throw Error(ErrorCode::Io, "cannot write '" + out_path + "'");
        write_predictions(out, model, report.prediction);
    }
    return 0;
}

// "2" or "2:1" (degree, interaction cap)
std::pair<unsigned, unsigned> parse_setting(const std::string& s)
{
    try {
        const auto colon = s.find(':');
        const unsigned d = static_cast<unsigned>(std::stoul(s.substr(0, colon)));
        const unsigned cap = colon == std::string::npos ? d : static_cast<unsigned>(std::stoul(s.substr(colon + 1)));
        return {d, cap};
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::Usage, "bad setting '" + s + "' (expected degree or degree:cap)");
    }
}

int cmd_benchmark(const DataArgs& data, FitArgs args, const std::vector<std::string>& settings, std::size_t seeds,
                  const std::string& results, Warnings& warn)
{
    const auto loaded = data.load();
    warn.add(loaded.warnings);
    if (!results.empty()) fs::create_directories(fs::absolute(results).parent_path());
    std::cout << kResultsHeader << '\n';
    const std::uint64_t first = args.seed;
    for (const auto& s : settings) {
        const auto [d, cap] = parse_setting(s);
        for (std::size_t k = 0; k < seeds; ++k) {
            args.seed = first + k;
            const auto config = args.config(d, cap, data.data);
            const auto report = run_fit(loaded.data, config);
            warn.add(report.warnings);
            const auto row = results_row(report, config);
            std::cout << row << '\n';
            if (!results.empty()) append_results(results, row);
        }
    }
    return 0;
}

struct ProbeArgs {
    std::string weights;
    std::size_t rows = 10000;
    bool mnist = false;
    bool input_vif = false;
    std::vector<std::size_t> widths;
    std::vector<std::string> activations;
    std::vector<double> dropout;
    std::string output;
    std::size_t epochs = 5;
    std::size_t batch = 32;
    double lr = 0.1;
    double threshold = kVifThreshold;
    std::uint64_t seed = 0;
    std::string csv;
    std::string save_weights;
};

int cmd_vif_probe(const DataArgs& data, const ProbeArgs& a, Warnings& warn)
{
    Eigen::MatrixXd x;
    Eigen::MatrixXd targets;
    bool classes = true;
    if (!data.data.empty()) {
        auto d = data;
        const auto loaded = d.load();
        warn.add(loaded.warnings);
        const auto design = encode_design(loaded.data);
        warn.add(design.warnings);
        x = design.x;
        if (loaded.data.schema().is_classification()) {
            targets = one_hot(loaded.data.response_classes(), loaded.data.class_count());
        } else {
            targets = loaded.data.response_values();
            classes = false;
        }
    } else {
        std::optional<ImageSet> images;
        if (a.mnist) {
            images = find_mnist(a.rows);
            if (!images) warn.items.push_back("MNIST not found under $POLYNN_MNIST_DIR; using the synthetic surrogate");
        }
        if (!images) images = mnist_surrogate(a.rows, a.seed);
        x = images->x;
        targets = one_hot(images->labels, kMnistClasses);
    }

    ProbeConfig pc;
    pc.seed = a.seed;
    pc.probe_input = a.input_vif;
    pc.mlp = reference_probe_config(a.seed);
    if (!a.widths.empty()) pc.mlp.layer_widths = a.widths;
    if (!a.activations.empty()) {
        pc.mlp.activations.clear();
        for (const auto& s : a.activations) pc.mlp.activations.push_back(parse_activation(s));
    }
    if (!a.dropout.empty() || !a.widths.empty()) pc.mlp.dropout_rates = a.dropout;
    if (!a.output.empty()) pc.mlp.output = parse_output_kind(a.output);
    else if (!classes) pc.mlp.output = OutputKind::Linear;
    pc.mlp.epochs = a.epochs;
    pc.mlp.batch_size = a.batch;
    pc.mlp.learning_rate = a.lr;
    if (pc.mlp.layer_widths.back() != static_cast<std::size_t>(targets.cols()) && a.weights.empty())
        throw Error(ErrorCode::Usage, "last layer width must equal the number of targets (" +
                                          std::to_string(targets.cols()) + ")");

    std::optional<MLP> net;
    if (!a.weights.empty()) net = load_mlp(a.weights);
    const auto report = run_vif_probe(x, targets, pc, net);

    std::vector<VIFReport> rows;
    if (report.input) rows.push_back(*report.input);
    rows.insert(rows.end(), report.layers.begin(), report.layers.end());
    for (auto& r : rows) {
        if (a.threshold != kVifThreshold && r.defined) {
            const auto s = vif_summary(r.vifs, a.threshold);
            r.proportion_over = s.proportion_over;
            r.threshold = a.threshold;
        }
    }
    write_vif_table(std::cout, rows);
    if (report.train_pcc) std::cout << "train pcc " << *report.train_pcc << '\n';
    if (!a.csv.empty()) {
        std::ofstream out(a.csv);
        if (!out) throw Error(ErrorCode::Io, "cannot write '" + a.csv + "'");
        write_vif_csv(out, rows);
    }
    if (!a.save_weights.empty()) save_mlp(a.save_weights, report.net);
    return 0;
}

struct DemoArgs {
    EquivDemoConfig config;
    std::string activation = "square";
    std::string poly_out;
    bool print_polys = true;
};

int cmd_equiv_demo(DemoArgs a)
{
    a.config.activation = parse_activation(a.activation);
    const auto r = run_equiv_demo(a.config);
    std::cout << "inputs " << a.config.inputs << ", layers " << a.config.layers << ", width " << a.config.width
              << ", activation " << a.activation << '\n';
    for (std::size_t i = 0; i < r.degrees.size(); ++i)
        std::cout << "dense_" << (i + 1) << " degree " << r.degrees[i] << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", r.max_deviation);
    std::cout << "max relative deviation " << buf << " over " << a.config.points << " points\n";
    const auto outs = r.extraction.outputs();
    if (a.print_polys) {
        for (std::size_t o = 0; o < outs.size(); ++o)
            std::cout << "output " << (o + 1) << " (" << outs[o].size() << " terms): " << outs[o].str({}) << '\n';
    }
    if (!a.poly_out.empty()) {
        std::ofstream out(a.poly_out);
        if (!out) throw Error(ErrorCode::Io, "cannot write '" + a.poly_out + "'");
        for (const auto& p : outs) write_polynomial(out, p);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"polynn: polynomial regression fitting and neural-net diagnostics"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key = value file ([subcommand] sections)");
    std::size_t threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

    DataArgs fit_data;
    FitArgs fit_args;
    std::string fit_out = "polynn_out";
    std::string fit_results;
    auto* fit = app.add_subcommand("fit", "Split, expand, fit and evaluate a polynomial model");
    fit_data.add_to(fit, true);
    fit_args.add_to(fit);
    fit->add_option("--out", fit_out, "Output directory for model.txt")->capture_default_str();
    fit->add_option("--results", fit_results, "Results CSV to append to (default: <out>/results.csv)");

    std::string pred_model, pred_data, pred_out;
    auto* pred = app.add_subcommand("predict", "Predict with a saved model");
    pred->add_option("--model", pred_model, "Model file")->required();
    pred->add_option("--data", pred_data, "CSV with the model's feature columns")->required();
    pred->add_option("--out", pred_out, "Predictions CSV (default: stdout)");

    DataArgs bench_data;
    FitArgs bench_args;
    std::vector<std::string> bench_settings{"1", "2"};
    std::size_t bench_seeds = 1;
    std::string bench_results;
    auto* bench = app.add_subcommand("benchmark", "Run several degree settings over several seeds");
    bench_data.add_to(bench, true);
    bench_args.add_to(bench);
    bench->add_option("--settings", bench_settings, "Settings as degree or degree:cap")->capture_default_str();
    bench->add_option("--seeds", bench_seeds, "Number of seeds, starting at --seed")->capture_default_str();
    bench->add_option("--results", bench_results, "Results CSV to append to");

    DataArgs probe_data;
    ProbeArgs probe;
    auto* vp = app.add_subcommand("vif-probe", "Per-layer VIF summary of a network");
    probe_data.categorical_threshold = 0;
    probe_data.add_to(vp, false);
    vp->add_option("--weights", probe.weights, "Trained network file (skip training)");
    vp->add_option("--rows", probe.rows, "Rows of image data when --data is absent")->capture_default_str();
    vp->add_flag("--mnist", probe.mnist, "Use MNIST from $POLYNN_MNIST_DIR when --data is absent");
    vp->add_option("--widths", probe.widths, "Dense layer widths, output last");
    vp->add_option("--activations", probe.activations, "Hidden activations: identity, relu, tanh, square");
    vp->add_option("--dropout", probe.dropout, "Dropout rate after each hidden layer");
    vp->add_option("--output", probe.output, "linear or softmax");
    vp->add_option("--epochs", probe.epochs, "Training epochs")->capture_default_str();
    vp->add_option("--batch", probe.batch, "Minibatch size")->capture_default_str();
    vp->add_option("--lr", probe.lr, "Learning rate")->capture_default_str();
    vp->add_option("--threshold", probe.threshold, "VIF threshold")->capture_default_str();
    vp->add_option("--seed", probe.seed, "Random seed")->capture_default_str();
    vp->add_flag("--input-vif", probe.input_vif, "Also report the input columns (slow for wide inputs)");
    vp->add_option("--csv", probe.csv, "Also write the table as CSV");
    vp->add_option("--save-weights", probe.save_weights, "Write the probed network to this file");

    DemoArgs demo;
    auto* eq = app.add_subcommand("equiv-demo", "Extract the polynomial computed by a random polynomial-activation net");
    eq->add_option("--inputs", demo.config.inputs, "Input variables")->capture_default_str();
    eq->add_option("--layers", demo.config.layers, "Dense layers")->capture_default_str();
    eq->add_option("--width", demo.config.width, "Hidden layer width")->capture_default_str();
    eq->add_option("--outputs", demo.config.outputs, "Output units")->capture_default_str();
    eq->add_option("--activation", demo.activation, "square or identity")->capture_default_str();
    eq->add_option("--points", demo.config.points, "Random check points")->capture_default_str();
    eq->add_option("--seed", demo.config.seed, "Random seed")->capture_default_str();
    eq->add_option("--poly-out", demo.poly_out, "Write output polynomials in text form");
    eq->add_flag("!--no-print", demo.print_polys, "Do not print the polynomials");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code(ErrorCode::Usage);
    }

    Warnings warn;
    int rc = 0;
    try {
        set_thread_count(threads);
        if (*fit) rc = cmd_fit(fit_data, fit_args, fit_out, fit_results, warn);
        else if (*pred) rc = cmd_predict(pred_model, pred_data, pred_out, warn);
        else if (*bench) rc = cmd_benchmark(bench_data, bench_args, bench_settings, bench_seeds, bench_results, warn);
        else if (*vp) rc = cmd_vif_probe(probe_data, probe, warn);
        else if (*eq) rc = cmd_equiv_demo(demo);
    } catch (const Error& e) {
        warn.flush();
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        warn.flush();
        std::cerr << "error: " << e.what() << '\n';
        return 8;
    }
    warn.flush();
    return rc;
}
