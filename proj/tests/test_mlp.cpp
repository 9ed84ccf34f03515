#include "doctest.h"

#include "polynn/error.hpp"
#include "polynn/fitcore.hpp"
#include "polynn/mlp.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace polynn;

namespace {

Layer dense(Eigen::MatrixXd w, Eigen::VectorXd b, Activation a, bool softmax = false)
{
    Layer L;
    L.width = static_cast<std::size_t>(w.rows());
    L.weights = std::move(w);
    L.bias = std::move(b);
    L.activation = a;
    L.softmax = softmax;
    return L;
}

Layer dropout(double rate)
{
    Layer L;
    L.kind = LayerKind::Dropout;
    L.dropout_rate = rate;
    return L;
}

Eigen::MatrixXd gaussian(std::size_t n, std::size_t k, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(n, k);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = g(rng);
    return x;
}

// Central differences on every weight and bias.
void check_gradients(MLP net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& t)
{
    const auto g = mlp_gradients(net, x, t);
    const double h = 1e-6;
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        if (net.layers()[k].kind != LayerKind::Dense) continue;
        auto& L = net.layers()[k];
        for (Eigen::Index r = 0; r < L.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < L.weights.cols(); ++c) {
                const double keep = L.weights(r, c);
                L.weights(r, c) = keep + h;
                const double up = mlp_loss(net, x, t);
                L.weights(r, c) = keep - h;
                const double down = mlp_loss(net, x, t);
                L.weights(r, c) = keep;
                const double fd = (up - down) / (2 * h);
                const double an = g.weights[k](r, c);
                CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(fd)));
            }
            const double keep = L.bias(r);
            L.bias(r) = keep + h;
            const double up = mlp_loss(net, x, t);
            L.bias(r) = keep - h;
            const double down = mlp_loss(net, x, t);
            L.bias(r) = keep;
            const double fd = (up - down) / (2 * h);
            CHECK(std::abs(fd - g.biases[k](r)) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

}  // namespace

TEST_CASE("identity layer with identity weights returns its input")
{
    const MLP net(3, {dense(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3), Activation::Identity)});
    const auto x = gaussian(5, 3, 1);
    CHECK(net.layer_activations(x, 0) == x);
}

TEST_CASE("relu with all-negative pre-activations is zero")
{
    const MLP net(2, {dense(Eigen::MatrixXd::Constant(3, 2, -1.0), Eigen::VectorXd::Constant(3, -0.5), Activation::Relu)});
    Eigen::MatrixXd x = gaussian(10, 2, 2).cwiseAbs();
    CHECK(net.layer_activations(x, 0).isZero());
}

TEST_CASE("dropout layer at inference equals the preceding dense layer")
{
    MLPConfig c;
    c.layer_widths = {4, 4, 2};
    c.activations = {Activation::Relu, Activation::Tanh};
    c.dropout_rates = {0.5, 0.2};
    c.output = OutputKind::Softmax;
    const auto net = MLP::initialize(3, c);
    REQUIRE(net.layer_count() == 5);
    CHECK(net.layers()[1].kind == LayerKind::Dropout);
    CHECK(net.layers()[1].label == "dropout_1");
    const auto x = gaussian(7, 3, 3);
    CHECK(net.layer_activations(x, 0) == net.layer_activations(x, 1));
    CHECK(net.layer_activations(x, 2) == net.layer_activations(x, 3));
    CHECK_THROWS_AS((void)net.layer_activations(x, 5), Error);
}

TEST_CASE("softmax rows sum to one")
{
    MLPConfig c;
    c.layer_widths = {5, 3};
    c.activations = {Activation::Tanh};
    c.output = OutputKind::Softmax;
    const auto net = MLP::initialize(4, c);
    const auto out = net.forward(gaussian(20, 4, 4));
    for (Eigen::Index i = 0; i < out.rows(); ++i) CHECK(out.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gradients match central differences")
{
    for (auto act : {Activation::Identity, Activation::Tanh, Activation::Square, Activation::Relu}) {
        CAPTURE(to_string(act));
        MLPConfig c;
        c.layer_widths = {4, 3, 2};
        c.activations = {act, Activation::Tanh};
        c.dropout_rates = {0.3, 0.0};
        c.seed = 5;
        auto net = MLP::initialize(3, c);
        for (auto& L : net.layers())
            if (L.kind == LayerKind::Dense) L.bias.setConstant(0.1);
        const auto x = gaussian(6, 3, 6);
        check_gradients(net, x, gaussian(6, 2, 7));

        c.output = OutputKind::Softmax;
        auto sm = MLP::initialize(3, c);
        std::vector<std::size_t> lab{0, 1, 1, 0, 1, 0};
        check_gradients(sm, x, one_hot(lab, 2));
    }
}

TEST_CASE("gradients with a square output activation")
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1, 1);
    Eigen::MatrixXd w1(3, 2), w2(1, 3);
    for (Eigen::Index i = 0; i < w1.size(); ++i) w1.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < w2.size(); ++i) w2.data()[i] = u(rng);
    const MLP net(2, {dense(w1, Eigen::VectorXd::Constant(3, 0.2), Activation::Square),
                      dense(w2, Eigen::VectorXd::Constant(1, -0.1), Activation::Square)});
    check_gradients(net, gaussian(5, 2, 9), gaussian(5, 1, 10));
}

TEST_CASE("linear target is learned by an identity hidden layer")
{
    Eigen::MatrixXd x(200, 1);
    for (int i = 0; i < 200; ++i) x(i, 0) = -1.0 + 2.0 * i / 199.0;
    const Eigen::MatrixXd y = 3.0 * x;
    MLPConfig c;
    c.layer_widths = {4, 1};
    c.activations = {Activation::Identity};
    c.epochs = 200;
    c.batch_size = 16;
    c.learning_rate = 0.02;
    c.seed = 1;
    const auto r = train_mlp(x, y, c);
    const Eigen::MatrixXd err = r.net.forward(x) - y;
    CHECK(err.squaredNorm() / 200.0 < 1e-3);
    CHECK(r.epoch_losses.size() == 200);
    CHECK(r.epoch_losses.back() < r.initial_loss);
}

TEST_CASE("XOR is learned by a width-4 relu layer for some seed")
{
    Eigen::MatrixXd x(4, 2);
    x << 0, 0, 0, 1, 1, 0, 1, 1;
    const std::vector<std::size_t> lab{0, 1, 1, 0};
    int solved = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        MLPConfig c;
        c.layer_widths = {4, 2};
        c.activations = {Activation::Relu};
        c.output = OutputKind::Softmax;
        c.epochs = 3000;
        c.batch_size = 4;
        c.learning_rate = 0.5;
        c.seed = seed;
        const auto r = train_mlp(x, one_hot(lab, 2), c);
        solved += pcc(argmax_rows(r.net.forward(x)), lab) == 1.0;
    }
    CHECK(solved >= 1);
}

TEST_CASE("zero epochs returns the initialized network")
{
    MLPConfig c;
    c.layer_widths = {3, 1};
    c.activations = {Activation::Tanh};
    c.epochs = 0;
    c.seed = 4;
    const auto x = gaussian(10, 2, 11);
    const auto y = gaussian(10, 1, 12);
    const auto r = train_mlp(x, y, c);
    const auto init = MLP::initialize(2, c);
    CHECK(r.net.forward(x) == init.forward(x));
    CHECK(r.initial_loss == mlp_loss(init, x, y));
    CHECK(r.epoch_losses.empty());
}

TEST_CASE("training is deterministic and inference ignores dropout")
{
    MLPConfig c;
    c.layer_widths = {6, 6, 3};
    c.activations = {Activation::Relu, Activation::Relu};
    c.dropout_rates = {0.2, 0.2};
    c.output = OutputKind::Softmax;
    c.epochs = 3;
    c.seed = 21;
    const auto x = gaussian(100, 4, 13);
    std::vector<std::size_t> lab(100);
    for (int i = 0; i < 100; ++i) lab[i] = static_cast<std::size_t>(i % 3);
    const auto a = train_mlp(x, one_hot(lab, 3), c);
    const auto b = train_mlp(x, one_hot(lab, 3), c);
    CHECK(a.net.forward(x) == b.net.forward(x));
    CHECK(a.net.forward(x) == a.net.forward(x));
}

TEST_CASE("text format round trip")
{
    MLPConfig c;
    c.layer_widths = {5, 4, 2};
    c.activations = {Activation::Square, Activation::Relu};
    c.dropout_rates = {0.25, 0.0};
    c.output = OutputKind::Softmax;
    c.seed = 3;
    const auto net = MLP::initialize(3, c);
    std::stringstream buf;
    write_mlp(buf, net);
    const auto back = read_mlp(buf);
    const auto x = gaussian(10, 3, 14);
    CHECK(back.forward(x) == net.forward(x));
    CHECK(back.layer_count() == net.layer_count());
}

TEST_CASE("invalid networks are rejected")
{
    CHECK_THROWS_AS(MLP(2, {dense(Eigen::MatrixXd::Ones(3, 4), Eigen::VectorXd::Zero(3), Activation::Relu)}), Error);
    CHECK_THROWS_AS(MLP(2, {dense(Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Zero(3), Activation::Relu, true),
                            dense(Eigen::MatrixXd::Ones(1, 3), Eigen::VectorXd::Zero(1), Activation::Identity)}),
                    Error);
    CHECK_THROWS_AS(MLP(2, {dense(Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Zero(3), Activation::Relu), dropout(0.5)}),
                    Error);
    MLPConfig bad;
    bad.layer_widths = {3, 1};
    CHECK_THROWS_AS(bad.validate(), Error);
    const MLP net(2, {dense(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Zero(1), Activation::Identity)});
    CHECK_THROWS_AS((void)net.forward(Eigen::MatrixXd::Ones(2, 3)), Error);
}
