#include "polynn/mlp.hpp"

#include "polynn/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace polynn {

std::string_view to_string(Activation a)
{
    switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Square: return "square";
    }
    return "?";
}

Activation parse_activation(std::string_view text)
{
    if (text == "identity" || text == "linear") return Activation::Identity;
    if (text == "relu") return Activation::Relu;
    if (text == "tanh") return Activation::Tanh;
    if (text == "square") return Activation::Square;
    throw Error(ErrorCode::Usage, "unknown activation '" + std::string(text) + "'");
}

std::string_view to_string(OutputKind k) { return k == OutputKind::Linear ? "linear" : "softmax"; }

OutputKind parse_output_kind(std::string_view text)
{
    if (text == "linear") return OutputKind::Linear;
    if (text == "softmax") return OutputKind::Softmax;
    throw Error(ErrorCode::Usage, "unknown output kind '" + std::string(text) + "'");
}

double activate(Activation a, double t)
{
    switch (a) {
    case Activation::Identity: return t;
    case Activation::Relu: return t > 0.0 ? t : 0.0;
    case Activation::Tanh: return std::tanh(t);
    case Activation::Square: return t * t;
    }
    return t;
}

namespace {

double activate_deriv(Activation a, double pre)
{
    switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::Relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
        const double th = std::tanh(pre);
        return 1.0 - th * th;
    }
    case Activation::Square: return 2.0 * pre;
    }
    return 1.0;
}

void softmax_rows(Eigen::MatrixXd& m)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double mx = m.row(i).maxCoeff();
        m.row(i) = (m.row(i).array() - mx).exp();
        m.row(i) /= m.row(i).sum();
    }
}

// Uniform [0, 1) from the top 53 bits; portable across standard libraries.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Pass {
    std::vector<Eigen::MatrixXd> pre;   // dense pre-activation (empty for dropout)
    std::vector<Eigen::MatrixXd> post;  // layer outputs
    std::vector<Eigen::MatrixXd> mask;  // dropout masks (training only)
};

Pass run_forward(const MLP& net, const Eigen::MatrixXd& x, std::mt19937_64* rng)
{
    Pass p;
    const auto& layers = net.layers();
    p.pre.resize(layers.size());
    p.post.resize(layers.size());
    p.mask.resize(layers.size());
    const Eigen::MatrixXd* in = &x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& L = layers[i];
        if (L.kind == LayerKind::Dense) {
            p.pre[i] = (*in) * L.weights.transpose();
            p.pre[i].rowwise() += L.bias.transpose();
            if (L.softmax) {
                p.post[i] = p.pre[i];
                softmax_rows(p.post[i]);
            } else {
                p.post[i] = p.pre[i].unaryExpr([a = L.activation](double t) { return activate(a, t); });
            }
        } else if (rng != nullptr && L.dropout_rate > 0.0) {
            const double keep = 1.0 - L.dropout_rate;
            p.mask[i].resize(in->rows(), in->cols());
            for (Eigen::Index c = 0; c < in->cols(); ++c)
                for (Eigen::Index r = 0; r < in->rows(); ++r) p.mask[i](r, c) = unit_uniform(*rng) < keep ? 1.0 / keep : 0.0;
            p.post[i] = in->cwiseProduct(p.mask[i]);
        } else {
            p.post[i] = *in;
        }
        in = &p.post[i];
    }
    return p;
}

double loss_of(const Layer& out_layer, const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets)
{
    const double n = static_cast<double>(out.rows());
    if (out_layer.softmax) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            for (Eigen::Index j = 0; j < out.cols(); ++j)
                if (targets(i, j) != 0.0) s -= targets(i, j) * std::log(std::max(out(i, j), 1e-300));
        return s / n;
    }
    return 0.5 * (out - targets).squaredNorm() / n;
}

MLPGradients backward(const MLP& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets, const Pass& p)
{
    const auto& layers = net.layers();
    MLPGradients g;
    g.weights.resize(layers.size());
    g.biases.resize(layers.size());
    const double n = static_cast<double>(x.rows());
    g.loss = loss_of(layers.back(), p.post.back(), targets);

    // delta: gradient of the loss w.r.t. the current layer's output.
    Eigen::MatrixXd delta = (p.post.back() - targets) / n;
    // Softmax with cross-entropy yields the pre-activation gradient directly.
    bool delta_is_pre = layers.back().softmax;
    for (std::size_t k = layers.size(); k-- > 0;) {
        const auto& L = layers[k];
        const Eigen::MatrixXd& in = k == 0 ? x : p.post[k - 1];
        if (L.kind == LayerKind::Dropout) {
            if (p.mask[k].size() != 0) delta = delta.cwiseProduct(p.mask[k]);
            continue;
        }
        if (!delta_is_pre) {
            const auto& pre = p.pre[k];
            for (Eigen::Index c = 0; c < delta.cols(); ++c)
                for (Eigen::Index r = 0; r < delta.rows(); ++r) delta(r, c) *= activate_deriv(L.activation, pre(r, c));
        }
        delta_is_pre = false;
        g.weights[k] = delta.transpose() * in;
        g.biases[k] = delta.colwise().sum().transpose();
        if (k > 0) delta = delta * L.weights;
    }
    return g;
}

void check_targets(const MLP& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets)
{
    if (targets.rows() != x.rows() || static_cast<std::size_t>(targets.cols()) != net.output_width())
        throw Error(ErrorCode::Data, "target matrix shape does not match network output");
}

}  // namespace

void MLPConfig::validate() const
{
    if (layer_widths.empty()) throw Error(ErrorCode::Usage, "MLP needs at least one dense layer");
    for (auto w : layer_widths)
        if (w < 1) throw Error(ErrorCode::Usage, "MLP layer widths must be >= 1");
    if (activations.size() != layer_widths.size() - 1)
        throw Error(ErrorCode::Usage, "need one activation per hidden layer");
    if (!dropout_rates.empty() && dropout_rates.size() != layer_widths.size() - 1)
        throw Error(ErrorCode::Usage, "need one dropout rate per hidden layer (or none)");
    for (auto r : dropout_rates)
        if (!(r >= 0.0 && r < 1.0)) throw Error(ErrorCode::Usage, "dropout rates must be in [0, 1)");
    if (batch_size < 1) throw Error(ErrorCode::Usage, "batch size must be >= 1");
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::Usage, "learning rate must be positive");
}

MLP::MLP(std::size_t input_width, std::vector<Layer> layers) : input_width_(input_width), layers_(std::move(layers))
{
    if (input_width_ < 1) throw Error(ErrorCode::Data, "MLP input width must be >= 1");
    if (layers_.empty()) throw Error(ErrorCode::Data, "MLP has no layers");
    std::size_t width = input_width_;
    std::size_t dense = 0, dropouts = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        auto& L = layers_[i];
        if (L.label.empty())
            L.label = L.kind == LayerKind::Dense ? "dense_" + std::to_string(dense + 1) : "dropout_" + std::to_string(dropouts + 1);
        (L.kind == LayerKind::Dense ? dense : dropouts) += 1;
        if (L.kind == LayerKind::Dense) {
            if (static_cast<std::size_t>(L.weights.cols()) != width || L.bias.size() != L.weights.rows() || L.weights.rows() < 1)
                throw Error(ErrorCode::Data, "layer " + std::to_string(i) + " dimensions do not chain");
            if (L.softmax && i + 1 != layers_.size()) throw Error(ErrorCode::Data, "softmax allowed on the output layer only");
            width = static_cast<std::size_t>(L.weights.rows());
        } else if (!(L.dropout_rate >= 0.0 && L.dropout_rate < 1.0)) {
            throw Error(ErrorCode::Data, "dropout rate out of range");
        }
        L.width = width;
    }
    if (layers_.back().kind != LayerKind::Dense) throw Error(ErrorCode::Data, "last MLP layer must be dense");
}

MLP MLP::initialize(std::size_t input_width, const MLPConfig& config)
{
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::vector<Layer> layers;
    std::size_t fan_in = input_width;
    const std::size_t dense_count = config.layer_widths.size();
    std::size_t dropouts = 0;
    for (std::size_t d = 0; d < dense_count; ++d) {
        Layer L;
        L.kind = LayerKind::Dense;
        L.label = "dense_" + std::to_string(d + 1);
        const auto out = static_cast<Eigen::Index>(config.layer_widths[d]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        L.weights.resize(out, static_cast<Eigen::Index>(fan_in));
        for (Eigen::Index r = 0; r < out; ++r)
            for (Eigen::Index c = 0; c < L.weights.cols(); ++c) L.weights(r, c) = bound * (2.0 * unit_uniform(rng) - 1.0);
        L.bias = Eigen::VectorXd::Zero(out);
        const bool last = d + 1 == dense_count;
        if (last)
            L.softmax = config.output == OutputKind::Softmax;
        else
            L.activation = config.activations[d];
        layers.push_back(std::move(L));
        if (!last && !config.dropout_rates.empty() && config.dropout_rates[d] > 0.0) {
            Layer D;
            D.kind = LayerKind::Dropout;
            D.label = "dropout_" + std::to_string(++dropouts);
            D.dropout_rate = config.dropout_rates[d];
            layers.push_back(std::move(D));
        }
        fan_in = config.layer_widths[d];
    }
    return MLP(input_width, std::move(layers));
}

std::size_t MLP::output_width() const { return layers_.back().width; }

void MLP::check_input(const Eigen::MatrixXd& x) const
{
    if (static_cast<std::size_t>(x.cols()) != input_width_)
        throw Error(ErrorCode::Data, "input width " + std::to_string(x.cols()) + " does not match network input " +
                                         std::to_string(input_width_));
}

Eigen::MatrixXd MLP::forward(const Eigen::MatrixXd& x) const
{
    check_input(x);
    return run_forward(*this, x, nullptr).post.back();
}

std::vector<Eigen::MatrixXd> MLP::all_activations(const Eigen::MatrixXd& x) const
{
    check_input(x);
    return run_forward(*this, x, nullptr).post;
}

Eigen::MatrixXd MLP::layer_activations(const Eigen::MatrixXd& x, std::size_t layer_index) const
{
    if (layer_index >= layers_.size())
        throw Error(ErrorCode::Usage, "layer index " + std::to_string(layer_index) + " out of range");
    check_input(x);
    auto p = run_forward(*this, x, nullptr);
    return std::move(p.post[layer_index]);
}

double mlp_loss(const MLP& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets)
{
    check_targets(net, x, targets);
    return loss_of(net.layers().back(), net.forward(x), targets);
}

MLPGradients mlp_gradients(const MLP& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets)
{
    check_targets(net, x, targets);
    return backward(net, x, targets, run_forward(net, x, nullptr));
}

TrainResult train_mlp(const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets, const MLPConfig& config)
{
    TrainResult result;
    result.net = MLP::initialize(static_cast<std::size_t>(x.cols()), config);
    auto& net = result.net;
    check_targets(net, x, targets);
    result.initial_loss = mlp_loss(net, x, targets);

    // Separate stream from the initializer so weights do not depend on epochs.
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min(n, start + config.batch_size);
            const auto bs = static_cast<Eigen::Index>(end - start);
            Eigen::MatrixXd xb(bs, x.cols());
            Eigen::MatrixXd tb(bs, targets.cols());
            for (Eigen::Index r = 0; r < bs; ++r) {
                const auto src = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(r)]);
                xb.row(r) = x.row(src);
                tb.row(r) = targets.row(src);
            }
            const auto pass = run_forward(net, xb, &rng);
            const auto g = backward(net, xb, tb, pass);
            if (!std::isfinite(g.loss))
                throw Error(ErrorCode::Numerical, "training diverged in epoch " + std::to_string(epoch + 1) +
                                                      " (non-finite loss); lower the learning rate");
            for (std::size_t k = 0; k < net.layers().size(); ++k) {
                auto& L = net.layers()[k];
                if (L.kind != LayerKind::Dense) continue;
                L.weights -= config.learning_rate * g.weights[k];
                L.bias -= config.learning_rate * g.biases[k];
            }
        }
        const double loss = mlp_loss(net, x, targets);
        if (!std::isfinite(loss))
            throw Error(ErrorCode::Numerical, "training diverged after epoch " + std::to_string(epoch + 1) +
                                                  " (non-finite loss); lower the learning rate");
        result.epoch_losses.push_back(loss);
    }
    return result;
}

Eigen::MatrixXd one_hot(const std::vector<std::size_t>& labels, std::size_t classes)
{
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes) throw Error(ErrorCode::Data, "label out of range");
        t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) = 1.0;
    }
    return t;
}

// --- Text container -------------------------------------------------------------

void write_mlp(std::ostream& out, const MLP& net)
{
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, " %.17g", v);
        out << buf;
    };
    out << "mlp v1\ninput " << net.input_width() << '\n';
    for (const auto& L : net.layers()) {
        if (L.kind == LayerKind::Dropout) {
            out << "dropout";
            put(L.dropout_rate);
            out << '\n';
            continue;
        }
        out << "dense " << L.weights.cols() << ' ' << L.weights.rows() << ' '
            << (L.softmax ? std::string_view("softmax") : to_string(L.activation)) << "\nW";
        for (Eigen::Index r = 0; r < L.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < L.weights.cols(); ++c) put(L.weights(r, c));
        out << "\nb";
        for (Eigen::Index r = 0; r < L.bias.size(); ++r) put(L.bias(r));
        out << '\n';
    }
    out << "end\n";
}

MLP read_mlp(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != "mlp v1") throw Error(ErrorCode::ModelFormat, "expected 'mlp v1' header");
    auto next = [&](const std::string& key) {
        if (!std::getline(in, line)) throw Error(ErrorCode::ModelFormat, "weights file truncated");
        std::istringstream ls(line);
        std::string k;
        ls >> k;
        if (!key.empty() && k != key) throw Error(ErrorCode::ModelFormat, "expected '" + key + "', found '" + k + "'");
        return std::make_pair(k, std::move(ls));
    };
    std::size_t input = 0;
    {
        auto [k, ls] = next("input");
        ls >> input;
    }
    std::vector<Layer> layers;
    std::size_t dense = 0, dropouts = 0;
    while (true) {
        auto [k, ls] = next("");
        if (k == "end") break;
        Layer L;
        if (k == "dropout") {
            L.kind = LayerKind::Dropout;
            L.label = "dropout_" + std::to_string(++dropouts);
            ls >> L.dropout_rate;
        } else if (k == "dense") {
            Eigen::Index cols = 0, rows = 0;
            std::string act;
            ls >> cols >> rows >> act;
            if (!ls || rows < 1 || cols < 1) throw Error(ErrorCode::ModelFormat, "malformed dense header '" + line + "'");
            L.label = "dense_" + std::to_string(++dense);
            if (act == "softmax")
                L.softmax = true;
            else
                L.activation = parse_activation(act);
            L.weights.resize(rows, cols);
            L.bias.resize(rows);
            {
                auto [kw, lw] = next("W");
                for (Eigen::Index r = 0; r < rows; ++r)
                    for (Eigen::Index c = 0; c < cols; ++c)
                        if (!(lw >> L.weights(r, c))) throw Error(ErrorCode::ModelFormat, "too few weights");
            }
            {
                auto [kb, lb] = next("b");
                for (Eigen::Index r = 0; r < rows; ++r)
                    if (!(lb >> L.bias(r))) throw Error(ErrorCode::ModelFormat, "too few biases");
            }
        } else {
            throw Error(ErrorCode::ModelFormat, "unknown layer kind '" + k + "'");
        }
        layers.push_back(std::move(L));
    }
    return MLP(input, std::move(layers));
}

void save_mlp(const std::string& path, const MLP& net)
{
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
    write_mlp(out, net);
}

MLP load_mlp(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open weights '" + path + "'");
    return read_mlp(in);
}

}  // namespace polynn
