#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "singvolt/errors.hpp"
#include "singvolt/quadrature.hpp"
#include "singvolt/special_functions.hpp"

using namespace singvolt;

namespace {

double integrate_row(const std::vector<double>& row, const Mesh& m, const std::function<double(double)>& phi) {
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * phi(m.nodes[j]);
    return s;
}

double lp_norm(const Mesh& m, const std::vector<double>& v, double p) {
    if (std::isinf(p)) {
        double mx = 0.0;
        for (double x : v) mx = std::max(mx, std::abs(x));
        return mx;
    }
    double acc = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        acc += 0.5 * m.h(i) * (std::pow(std::abs(v[i - 1]), p) + std::pow(std::abs(v[i]), p));
    }
    return std::pow(acc, 1.0 / p);
}

}  // namespace

TEST(GaussJacobi, ExactForPolynomials) {
    const GaussRule g = gauss_jacobi(8, -0.5, 0.3);
    // int_{-1}^1 (1-x)^a (1+x)^b = 2^(a+b+1) B(a+1, b+1)
    double s0 = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) s0 += g.w[i];
    EXPECT_NEAR(s0, std::pow(2.0, 0.8) * beta_fn(0.5, 1.3), 1e-13);
    // int (1+x)^(b+3) (1-x)^a via a moment of degree 3 in (1+x)
    double s3 = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) s3 += g.w[i] * std::pow(1.0 + g.x[i], 3);
    EXPECT_NEAR(s3, std::pow(2.0, 3.8) * beta_fn(0.5, 4.3), 1e-12);
    EXPECT_THROW(gauss_jacobi(0, 0.0, 0.0), UsageError);
    EXPECT_THROW(gauss_jacobi(4, -1.0, 0.0), DomainError);
}

TEST(ProductWeights, RowSumsWithoutWeight) {
    for (double beta : {0.2, 0.5, 0.85}) {
        const auto mesh = testutil::graded_mesh(2.0, 64, 3.0);
        const WeightTable tab = product_weights(mesh, WeightSpec{}, beta);
        for (std::size_t k = 1; k < tab.rows(); ++k) {
            const double t = mesh->nodes[k];
            EXPECT_NEAR(tab.row_sum(k) / (std::pow(t, beta) / beta), 1.0, 1e-10) << beta << " " << k;
        }
        EXPECT_EQ(tab.row_sum(0), 0.0);
    }
}

TEST(ProductWeights, BetaIntegrals) {
    const auto mesh = testutil::graded_mesh(1.0, 32, 2.0);
    const WeightTable w0 = product_weights(mesh, WeightSpec{{0.0}, {0.5}}, 0.5);
    EXPECT_NEAR(w0.row_sum(32), M_PI, 1e-10);
    const WeightTable plain = product_weights(mesh, WeightSpec{}, 0.5);
    std::vector<double> row(plain.row(32), plain.row(32) + 33);
    EXPECT_NEAR(integrate_row(row, *mesh, [](double s) { return s; }), 4.0 / 3.0, 1e-12);
}

TEST(ProductWeights, SquareMomentWithinSchemeOrder) {
    const auto mesh = testutil::graded_mesh(1.0, 256, 4.0);
    const WeightTable plain = product_weights(mesh, WeightSpec{}, 0.5);
    GridFunction phi = sample_scalar(mesh, [](double s) { return s * s; });
    EXPECT_NEAR(apply_convolution(plain, phi, 256).value[0], 16.0 / 15.0, 1e-4);
}

TEST(ProductWeights, ConvergenceOrder) {
    // phi = cos, beta = 1/2, exact value from a high-order Gauss-Jacobi rule.
    const double beta = 0.5;
    const GaussRule g = gauss_jacobi(40, beta - 1.0, 0.0);
    double exact = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) exact += g.w[i] * std::cos(0.5 * (g.x[i] + 1.0));
    exact *= std::pow(0.5, beta);
    std::vector<double> err;
    for (std::size_t N : {32, 64, 128, 256}) {
        const auto mesh = testutil::graded_mesh(1.0, N, 2.0 / beta);
        const auto row = product_weights_row(*mesh, WeightSpec{}, beta, N);
        err.push_back(std::abs(integrate_row(row, *mesh, [](double s) { return std::cos(s); }) - exact));
    }
    for (std::size_t i = 1; i < err.size(); ++i) EXPECT_GE(std::log2(err[i - 1] / err[i]), 1.5) << i;
}

TEST(ProductWeights, InteriorWeightPointRowSum) {
    // int_0^1 |s - 1/2|^(a-1) (1 - s)^(b-1) ds against an independent Gauss-Jacobi split.
    const double a = 0.7, b = 0.6;
    const double right = std::pow(0.5, a + b - 1.0) * beta_fn(a, b);
    const GaussRule g = gauss_jacobi(60, a - 1.0, 0.0);
    double left = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        const double s = 0.25 * (g.x[i] + 1.0);
        left += g.w[i] * std::pow(1.0 - s, b - 1.0);
    }
    left *= std::pow(0.25, a);
    const double exact = left + right;
    auto mesh = std::make_shared<const Mesh>(build_mesh(1.0, 64, {0.0, 0.5}, 2.0));
    const WeightSpec w{{0.5}, {a}};
    for (bool force : {false, true}) {
        QuadratureOptions o;
        o.force_gauss = force;
        const WeightTable tab = product_weights(mesh, w, b, o);
        EXPECT_NEAR(tab.row_sum(tab.rows() - 1) / exact, 1.0, 1e-8) << "force_gauss " << force;
    }
}

TEST(ProductWeights, NodeOnWeightPointRejected) {
    const auto mesh = testutil::uniform_mesh(1.0, 4);
    EXPECT_THROW(product_weights(mesh, WeightSpec{{0.5}, {0.5}}, 0.5), ConstructionError);
}

TEST(ProductWeights, RowMatchesTable) {
    auto mesh = std::make_shared<const Mesh>(build_mesh(2.0, 40, {0.0, 1.0}, 2.0));
    const WeightSpec w{{1.0}, {0.6}};
    const WeightTable tab = product_weights(mesh, w, 0.4);
    for (std::size_t k : {5u, 20u, 39u}) {
        const auto row = product_weights_row(*mesh, w, 0.4, k);
        for (std::size_t j = 0; j <= k; ++j) EXPECT_NEAR(row[j], tab(k, j), 1e-14 * (1 + std::abs(row[j])));
    }
}

TEST(Convolution, ZeroAndConstant) {
    const auto mesh = testutil::graded_mesh(1.0, 16, 2.0);
    const WeightTable tab = product_weights(mesh, WeightSpec{{0.0}, {0.5}}, 0.3);
    GridFunction zero(mesh, 1);
    GridFunction c = sample_scalar(mesh, [](double) { return 2.5; });
    for (std::size_t k = 0; k <= 16; ++k) {
        EXPECT_EQ(apply_convolution(tab, zero, k).value[0], 0.0);
        EXPECT_NEAR(apply_convolution(tab, c, k).value[0], 2.5 * tab.row_sum(k), 1e-14 * (1 + tab.row_sum(k)));
    }
}

TEST(Convolution, CensoredDependency) {
    const auto mesh = testutil::uniform_mesh(1.0, 8);
    const WeightTable tab = product_weights(mesh, WeightSpec{}, 0.5);
    GridFunction phi = sample_scalar(mesh, [](double) { return 1.0; });
    phi.censored[3] = true;
    EXPECT_FALSE(apply_convolution(tab, phi, 2).censored);
    EXPECT_TRUE(apply_convolution(tab, phi, 5).censored);
}

TEST(Convolution, LinearityAndPositivity) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    auto mesh = std::make_shared<const Mesh>(build_mesh(2.0, 96, {0.0, 0.7}, 2.0));
    const WeightTable tab = product_weights(mesh, WeightSpec{{0.0, 0.7}, {0.6, 0.4}}, 0.55);
    for (int trial = 0; trial < 10; ++trial) {
        GridFunction f(mesh, 1), g(mesh, 1), h(mesh, 1);
        const double a = 4.0 * d(rng) - 2.0, b = 4.0 * d(rng) - 2.0;
        double fmax = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) {
            f.values(0, static_cast<Eigen::Index>(k)) = d(rng);
            g.values(0, static_cast<Eigen::Index>(k)) = d(rng) - 0.5;
            h.values(0, static_cast<Eigen::Index>(k)) = a * f(0, k) + b * g(0, k);
            fmax = std::max(fmax, f(0, k));
        }
        for (std::size_t k = 0; k < f.size(); ++k) {
            const double cf = apply_convolution(tab, f, k).value[0];
            const double cg = apply_convolution(tab, g, k).value[0];
            const double ch = apply_convolution(tab, h, k).value[0];
            EXPECT_NEAR(ch, a * cf + b * cg, 1e-12 * (1 + std::abs(cf) + std::abs(cg)));
            EXPECT_GE(cf, -1e-12 * fmax);
        }
    }
}

TEST(Convolution, YoungInequality) {
    // ||theta * phi||_r <= ||phi||_p ||theta||_q with theta(t) = t^(beta-1) and 1/p + 1/q = 1 + 1/r.
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    const double beta = 0.6, q = 2.0;
    const double T = 1.5;
    const double theta_q = std::pow(std::pow(T, (beta - 1.0) * q + 1.0) / ((beta - 1.0) * q + 1.0), 1.0 / q);
    const auto mesh = testutil::graded_mesh(T, 200, 2.0);
    const WeightTable tab = product_weights(mesh, WeightSpec{}, beta);
    struct Pair {
        double p, r;
    };
    for (Pair pr : {Pair{2.0, INFINITY}, Pair{1.0, 2.0}, Pair{1.5, 6.0}}) {
        for (int trial = 0; trial < 10; ++trial) {
            GridFunction phi(mesh, 1);
            std::vector<double> pv(phi.size()), conv(phi.size());
            for (std::size_t k = 0; k < phi.size(); ++k) pv[k] = phi.values(0, static_cast<Eigen::Index>(k)) = d(rng);
            for (std::size_t k = 0; k < phi.size(); ++k) conv[k] = apply_convolution(tab, phi, k).value[0];
            EXPECT_LE(lp_norm(*mesh, conv, pr.r), 1.05 * lp_norm(*mesh, pv, pr.p) * theta_q) << pr.p;
        }
    }
}

TEST(ReverseWeights, MirrorForward) {
    const auto mesh = testutil::uniform_mesh(1.0, 16);
    const ReverseWeights R = reverse_weights(*mesh, 0.5);
    // int_{t_j}^1 (s - t_j)^(-1/2) ds = 2 sqrt(1 - t_j)
    for (std::size_t j = 0; j <= 16; ++j) {
        double s = 0.0;
        for (std::size_t k = j; k <= 16; ++k) s += R(j, k);
        EXPECT_NEAR(s, 2.0 * std::sqrt(1.0 - mesh->nodes[j]), 1e-12);
    }
}

TEST(ProductWeights, OriginExponentMode) {
    // phi(s) = s^(-1/2) represented exactly by the origin basis: int_0^1 s^(-1/2) (1-s)^(-1/2) = pi.
    const auto mesh = testutil::graded_mesh(1.0, 64, 2.0);
    QuadratureOptions o;
    o.origin_exponent = -0.5;
    const WeightTable tab = product_weights(mesh, WeightSpec{}, 0.5, o);
    EXPECT_EQ(tab(64, 0), 0.0);
    GridFunction phi = sample_scalar(mesh, [](double s) { return s > 0 ? 1.0 / std::sqrt(s) : 0.0; });
    phi.censored[0] = true;
    const auto r = apply_convolution(tab, phi, 64);
    EXPECT_FALSE(r.censored);
    EXPECT_NEAR(r.value[0], M_PI, 1e-12);
}
