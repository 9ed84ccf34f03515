#include "doctest.h"

#include "polynn/diagnostics.hpp"
#include "polynn/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>

using namespace polynn;

namespace {

Eigen::MatrixXd gaussian(std::size_t n, std::size_t k, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(n, k);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = g(rng);
    return x;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const Eigen::VectorXd ac = a.array() - a.mean();
    const Eigen::VectorXd bc = b.array() - b.mean();
    return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

// Two columns with sample correlation exactly rho: orthogonalize e against a,
// then mix.
Eigen::MatrixXd with_correlation(std::size_t n, double rho, std::uint64_t seed)
{
    const auto g = gaussian(n, 2, seed);
    Eigen::VectorXd a = g.col(0).array() - g.col(0).mean();
    Eigen::VectorXd e = g.col(1).array() - g.col(1).mean();
    e -= (e.dot(a) / a.squaredNorm()) * a;
    a.normalize();
    e.normalize();
    Eigen::MatrixXd x(n, 2);
    x.col(0) = a;
    x.col(1) = rho * a + std::sqrt(1 - rho * rho) * e;
    return x;
}

Layer dense(Eigen::MatrixXd w, Eigen::VectorXd b, Activation a)
{
    Layer L;
    L.width = static_cast<std::size_t>(w.rows());
    L.weights = std::move(w);
    L.bias = std::move(b);
    L.activation = a;
    return L;
}

}  // namespace

TEST_CASE("orthogonal columns have VIF 1")
{
    Eigen::MatrixXd x(4, 2);
    x << 1, 1, 1, -1, -1, 1, -1, -1;
    const auto v = vif(x);
    CHECK(v(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rho^2 = 0.9 gives VIF 10")
{
    const auto x = with_correlation(500, std::sqrt(0.9), 1);
    const auto v = vif(x);
    CHECK(std::abs(v(0) - 10.0) < 1e-6);
    CHECK(std::abs(v(1) - 10.0) < 1e-6);
}

TEST_CASE("two-column VIF equals 1/(1-r^2) for random data")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto x = gaussian(50, 2, seed);
        x.col(1) += 0.7 * x.col(0);
        const double r = pearson(x.col(0), x.col(1));
        const auto v = vif(x);
        CHECK(std::abs(v(0) - 1.0 / (1.0 - r * r)) < 1e-8);
        CHECK(std::abs(v(1) - 1.0 / (1.0 - r * r)) < 1e-8);
    }
}

TEST_CASE("duplicated column is capped")
{
    auto g = gaussian(30, 2, 2);
    Eigen::MatrixXd x(30, 3);
    x << g, g.col(0);
    const auto v = vif(x);
    CHECK(v(0) == kVifCap);
    CHECK(v(2) == kVifCap);
    CHECK(v(1) < 10.0);
}

TEST_CASE("constant column is capped")
{
    Eigen::MatrixXd x = gaussian(30, 3, 3);
    x.col(1).setConstant(2.0);
    CHECK(vif(x)(1) == kVifCap);
}

TEST_CASE("VIF does not change when a column is rescaled")
{
    auto x = gaussian(100, 4, 4);
    x.col(2) += x.col(0) - 0.5 * x.col(1);
    const auto before = vif(x);
    x.col(2) *= 1234.5;
    x.col(0) *= 1e-3;
    const auto after = vif(x);
    for (Eigen::Index j = 0; j < 4; ++j) CHECK(std::abs(after(j) - before(j)) <= 1e-8 * before(j));
}

TEST_CASE("VIF against an explicit regression oracle")
{
    auto x = gaussian(60, 4, 5);
    x.col(3) += 0.5 * x.col(0) + x.col(2);
    const auto v = vif(x);
    for (Eigen::Index j = 0; j < 4; ++j) {
        Eigen::MatrixXd a(60, 4);
        a.col(0).setOnes();
        Eigen::Index c = 1;
        for (Eigen::Index k = 0; k < 4; ++k)
            if (k != j) a.col(c++) = x.col(k);
        const Eigen::VectorXd y = x.col(j);
        const Eigen::VectorXd b = (a.transpose() * a).ldlt().solve(a.transpose() * y);
        const double rss = (y - a * b).squaredNorm();
        const double tss = (y.array() - y.mean()).matrix().squaredNorm();
        CHECK(v(j) == doctest::Approx(tss / rss).epsilon(1e-9));
    }
}

TEST_CASE("vif needs two columns")
{
    CHECK_THROWS_AS((void)vif(Eigen::MatrixXd::Ones(5, 1)), Error);
}

TEST_CASE("vif summary")
{
    auto s = vif_summary(Eigen::Vector3d(1, 1, 1));
    CHECK(s.proportion_over == 0.0);
    CHECK(s.mean == 1.0);
    s = vif_summary(Eigen::Vector4d(5, 15, 40, 2));
    CHECK(s.proportion_over == 0.5);
    CHECK(s.mean == 15.5);
    s = vif_summary(Eigen::VectorXd::Constant(10, kVifCap));
    CHECK(s.proportion_over == 1.0);
    CHECK(s.mean == kVifCap);
}

TEST_CASE("identity network reports equal the input design report")
{
    auto x = gaussian(80, 3, 6);
    x.col(1) += x.col(0);
    const MLP net(3, {dense(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3), Activation::Identity),
                      dense(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3), Activation::Identity)});
    const auto input = vif_report(x, "input");
    const auto reports = probe_layers(net, x);
    REQUIRE(reports.size() == 2);
    for (const auto& r : reports) {
        CHECK(r.mean_vif == doctest::Approx(input.mean_vif).epsilon(1e-12));
        CHECK(r.proportion_over == input.proportion_over);
    }
}

TEST_CASE("width-1 layer is undefined")
{
    const MLP net(2, {dense(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Zero(1), Activation::Identity)});
    const auto reports = probe_layers(net, gaussian(10, 2, 7));
    REQUIRE(reports.size() == 1);
    CHECK_FALSE(reports[0].defined);
    std::ostringstream table, csv;
    write_vif_table(table, reports);
    write_vif_csv(csv, reports);
    CHECK(table.str().find("undefined") != std::string::npos);
    CHECK(csv.str() == "layer,defined,proportion_over,mean_vif\ndense_1,0,,\n");
}

TEST_CASE("untrained random net probes without error")
{
    MLPConfig c;
    c.layer_widths = {10, 10, 10};
    c.activations = {Activation::Relu, Activation::Relu};
    c.dropout_rates = {0.2, 0.2};
    c.output = OutputKind::Softmax;
    const auto net = MLP::initialize(20, c);
    const auto reports = probe_layers(net, gaussian(200, 20, 8));
    REQUIRE(reports.size() == 5);
    CHECK(reports[0].layer_label == "dense_1");
    CHECK(reports[1].layer_label == "dropout_1");
    CHECK(reports[1].mean_vif == reports[0].mean_vif);
    CHECK(reports[4].mean_vif == kVifCap);  // softmax rows sum to one
}

TEST_CASE("square-activation layers grow more collinear in most seeds")
{
    int increasing = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-1, 1);
        auto rand = [&](Eigen::Index r, Eigen::Index c) {
            Eigen::MatrixXd m(r, c);
            for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
            return m;
        };
        Eigen::MatrixXd x(400, 4);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double t = u(rng);
            for (Eigen::Index j = 0; j < 4; ++j) x(i, j) = std::sin((j + 1) * t) + 0.3 * u(rng);
        }
        std::vector<Layer> layers;
        layers.push_back(dense(rand(6, 4), rand(6, 1).col(0), Activation::Square));
        layers.push_back(dense(rand(6, 6), rand(6, 1).col(0), Activation::Square));
        layers.push_back(dense(rand(6, 6), rand(6, 1).col(0), Activation::Square));
        const MLP net(4, std::move(layers));
        const auto r = probe_layers(net, x);
        increasing += r[0].mean_vif <= r[1].mean_vif && r[1].mean_vif <= r[2].mean_vif;
    }
    CHECK(increasing >= 6);
}
