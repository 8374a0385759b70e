#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "singvolt/errors.hpp"
#include "singvolt/forward_solver.hpp"
#include "singvolt/problem_file.hpp"
#include "singvolt/regularity.hpp"
#include "singvolt/special_functions.hpp"

using namespace singvolt;

namespace {

GridFunction constant(const MeshPtr& mesh, double c) {
    return sample_scalar(mesh, [c](double) { return c; });
}

StateSolution solve_file(const std::string& name, ProblemFile* out = nullptr) {
    ProblemFile pf = load_problem(std::string(SINGVOLT_PROBLEM_DIR) + "/" + name);
    const Discretization disc = discretize(pf.spec, pf.mesh_n, pf.mesh_r);
    StateSolution sol = solve_state(pf.spec, testutil::zero_control(disc.mesh), disc, pf.solve);
    if (out) *out = std::move(pf);
    return sol;
}

}  // namespace

TEST(Gronwall, CutoffIndex) {
    const auto mesh = testutil::uniform_mesh(1.0, 16);
    const GridFunction L = constant(mesh, 1.0);
    EXPECT_EQ(gronwall_constants(0.5, 4.0, L).k, 2u);
    EXPECT_EQ(gronwall_constants(0.9, 10.0, L).k, 1u);
    EXPECT_THROW(gronwall_constants(0.5, 2.0, L), HypothesisError);
    EXPECT_THROW(gronwall_constants(0.5, 1.5, L), HypothesisError);
}

TEST(Gronwall, FirstConstant) {
    const auto mesh = testutil::uniform_mesh(1.0, 64);
    const GronwallBound b = gronwall_constants(0.5, 4.0, constant(mesh, 1.0));
    ASSERT_EQ(b.cs.size(), 3u);
    EXPECT_EQ(b.cs[0], 1.0);
    EXPECT_NEAR(b.L_q_norm, 1.0, 1e-14);
    EXPECT_NEAR(b.cs[1], std::pow(beta_fn(1.0 / 3.0, 1.0 / 3.0), 0.75), 1e-12);
    ASSERT_EQ(b.betas.size(), 2u);
    EXPECT_DOUBLE_EQ(b.betas[0], 0.5);
    EXPECT_DOUBLE_EQ(b.betas[1], 0.75);
    for (double c : b.cs) EXPECT_GT(c, 0.0);
}

TEST(Gronwall, CutoffMonotone) {
    const auto mesh = testutil::uniform_mesh(1.0, 16);
    const GridFunction L = constant(mesh, 1.0);
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> bd(0.05, 0.95), qd(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        double b1 = bd(rng), b2 = bd(rng);
        if (b1 > b2) std::swap(b1, b2);
        const double q = 1.0 / b1 + 0.01 + 20.0 * qd(rng);
        EXPECT_GE(gronwall_constants(b1, q, L).k, gronwall_constants(b2, q, L).k);
        const double q2 = q + 10.0 * qd(rng);
        EXPECT_GE(gronwall_constants(b1, q, L).k, gronwall_constants(b1, q2, L).k);
        for (double bi : gronwall_constants(b1, q, L).betas) {
            EXPECT_GT(bi, 0.0);
            EXPECT_LT(bi, 1.0);
        }
    }
}

TEST(Envelope, TrivialInputs) {
    const auto mesh = testutil::graded_mesh(1.0, 64, 2.0);
    const GronwallBound b = gronwall_constants(0.5, 4.0, constant(mesh, 1.0));
    const GridFunction env0 = gronwall_envelope(b, constant(mesh, 0.0), constant(mesh, 1.0));
    EXPECT_EQ(env0.values.lpNorm<Eigen::Infinity>(), 0.0);
    const GridFunction a = sample_scalar(mesh, [](double t) { return 1.0 + t; });
    const GronwallBound b0 = gronwall_constants(0.5, 4.0, constant(mesh, 0.0));
    const GridFunction env1 = gronwall_envelope(b0, a, constant(mesh, 0.0));
    EXPECT_EQ((env1.values - a.values).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Envelope, UsesFiniteSum) {
    const auto mesh = testutil::graded_mesh(1.0, 64, 2.0);
    for (double q : {4.0, 3.0, 2.5, double(INFINITY)}) {
        const GronwallBound b = gronwall_constants(0.5, q, constant(mesh, 1.0));
        gronwall_envelope(b, constant(mesh, 1.0), constant(mesh, 1.0));
        const auto [singular, regular] = last_envelope_convolutions();
        EXPECT_EQ(singular, b.k);
        EXPECT_EQ(regular, 1u);
    }
}

TEST(Envelope, DominatesScalarLinearSolution) {
    const ProblemSpec spec = testutil::scalar_linear(1.0, 0.5, 1.0);
    const Discretization disc = discretize(spec, 512);
    const StateSolution sol = solve_state(spec, testutil::zero_control(disc.mesh), disc);
    const GronwallBound b = gronwall_constants(0.5, INFINITY, constant(disc.mesh, 1.0));
    const GridFunction env = gronwall_envelope(b, constant(disc.mesh, 1.0), constant(disc.mesh, 1.0));
    for (std::size_t k = 0; k < sol.y.size(); ++k) EXPECT_LE(sol.y(0, k), env(0, k) + 1e-8) << k;
}

TEST(Envelope, DominatesRandomLinearProblems) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double beta = 0.3 + 0.6 * u01(rng);
        const double q = u01(rng) < 0.3 ? double(INFINITY) : 1.0 / beta + 0.2 + 5.0 * u01(rng);
        const double a0 = 0.2 + u01(rng), a1 = u01(rng), a2 = u01(rng);
        const double l0 = 0.1 + u01(rng), l1 = u01(rng);
        auto a = [=](double t) { return a0 + a1 * t + a2 * std::sin(3.0 * t) * std::sin(3.0 * t); };
        auto L = [=](double s) { return l0 + l1 * s * s; };
        ProblemSpec spec = testutil::scalar_linear(0.0, beta, 1.0);
        spec.generator.f0 = [L](double, double s, const Vec& y, const Vec&) { return Vec(L(s) * y); };
        spec.generator.f0_y = [L](double, double s, const Vec&, const Vec&) { return Mat::Constant(1, 1, L(s)); };
        spec.free_term.eta = [a](double t) { return Vec::Constant(1, a(t)); };
        const Discretization disc = discretize(spec, 256);
        const StateSolution sol = solve_state(spec, testutil::zero_control(disc.mesh), disc);
        const GridFunction Lg = sample_scalar(disc.mesh, L);
        const GridFunction ag = sample_scalar(disc.mesh, a);
        const GronwallBound b = gronwall_constants(beta, q, Lg);
        const GridFunction env = gronwall_envelope(b, ag, Lg);
        for (std::size_t k = 0; k < sol.y.size(); ++k) {
            EXPECT_LE(sol.y(0, k), env(0, k) + 1e-8) << "trial " << trial << " node " << k;
        }
    }
}

TEST(Exponents, Examples) {
    const RegularityReport r = predict_exponents(WeightSpec{{1.0}, {0.9}}, 0.5, 10.0);
    ASSERT_EQ(r.points.size(), 1u);
    EXPECT_EQ(r.points[0].exponent, 0.0);
    EXPECT_EQ(r.points[0].verdict, Verdict::Continuous);

    const RegularityReport f = predict_exponents(WeightSpec{{1.0}, {1.0 / 6.0}}, 0.5, INFINITY);
    EXPECT_NEAR(f.points[0].exponent, 1.0 / 3.0, 1e-15);
    EXPECT_EQ(f.points[0].verdict, Verdict::BlowUp);
    EXPECT_EQ(f.global, Verdict::BlowUp);

    const RegularityReport e = predict_exponents(WeightSpec{{1.0}, {0.75}}, 0.5, 4.0);
    EXPECT_EQ(e.points[0].exponent, 0.0);
    EXPECT_EQ(e.points[0].verdict, Verdict::Boundary);
    EXPECT_NE(e.to_text().find("verdict[0]: boundary"), std::string::npos);
}

TEST(Exponents, HypothesisErrors) {
    EXPECT_THROW(predict_exponents(WeightSpec{{1.0}, {0.9}}, 0.5, 2.0), HypothesisError);
    try {
        predict_exponents(WeightSpec{{0.5, 1.0}, {0.9, 0.05}}, 0.5, 10.0);
        FAIL() << "expected HypothesisError";
    } catch (const HypothesisError& e) {
        EXPECT_NE(std::string(e.what()).find("alpha_1"), std::string::npos);
    }
}

TEST(Exponents, NonnegativeAndVerdictMatches) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int i = 0; i < 500; ++i) {
        const double a = u(rng), b = u(rng);
        const double q = std::max(1.0 / a, 1.0 / b) + 0.1 + 10.0 * u(rng);
        const auto rep = predict_exponents(WeightSpec{{0.5}, {a}}, b, q);
        EXPECT_GE(rep.points[0].exponent, 0.0);
        EXPECT_EQ(rep.points[0].verdict == Verdict::Continuous, a + b > 1.0 + 1.0 / q + 1e-12);
    }
}

TEST(Slope, SyntheticPowerLaw) {
    auto mesh = std::make_shared<const Mesh>(build_mesh(2.0, 512, {0.0, 1.0}, 4.0));
    const GridFunction y = sample_scalar(mesh, [](double t) { return std::pow(std::abs(t - 1.0), -1.0 / 3.0); });
    EXPECT_NEAR(measure_blowup_slope(y, 1.0, Side::Left), -1.0 / 3.0, 0.02);
    EXPECT_NEAR(measure_blowup_slope(y, 1.0, Side::Right), -1.0 / 3.0, 0.02);
    const GridFunction c = constant(mesh, 3.0);
    EXPECT_NEAR(measure_blowup_slope(c, 1.0, Side::Left), 0.0, 0.02);
}

TEST(Slope, TooFewNodes) {
    const auto mesh = testutil::uniform_mesh(1.0, 6);
    EXPECT_THROW(measure_blowup_slope(constant(mesh, 1.0), 1.0, Side::Left), FitError);
}

TEST(Slope, Consistency) {
    EXPECT_TRUE(slope_consistent(Verdict::Continuous, 0.0, -0.01));
    EXPECT_FALSE(slope_consistent(Verdict::Continuous, 0.0, -0.2));
    EXPECT_TRUE(slope_consistent(Verdict::BlowUp, 1.0 / 3.0, -0.3));
    EXPECT_FALSE(slope_consistent(Verdict::BlowUp, 1.0 / 3.0, -0.06));
    EXPECT_TRUE(slope_consistent(Verdict::Boundary, 0.0, -0.1));
}

TEST(Slope, BlowupSolutionRespectsEnvelope) {
    ProblemFile pf;
    const StateSolution sol = solve_file("example32.ini", &pf);
    const WeightSpec eff = effective_weight(pf.spec);
    EXPECT_NEAR(eff.exponents[0], 1.0 / 6.0, 1e-9);
    const RegularityReport rep = predict_exponents(eff, pf.spec.kernel.beta, INFINITY);
    EXPECT_NEAR(rep.points[0].exponent, 1.0 / 3.0, 1e-9);
    const double slope = measure_blowup_slope(sol.y, 1.0, Side::Left);
    EXPECT_GE(slope, -1.0 / 3.0 - 0.1);
}

TEST(Slope, ContinuousVerdictMeansBoundedSlope) {
    for (const char* name : {"regularity_continuous.ini", "linear_two_state.ini"}) {
        ProblemFile pf;
        const StateSolution sol = solve_file(name, &pf);
        const WeightSpec eff = effective_weight(pf.spec);
        const double q = pf.spec.generator.bounds ? pf.spec.generator.bounds->q : INFINITY;
        const RegularityReport rep = predict_exponents(eff, pf.spec.kernel.beta, q);
        for (const auto& p : rep.points) {
            if (p.verdict != Verdict::Continuous) continue;
            EXPECT_GE(measure_blowup_slope(sol.y, p.point, Side::Left), -0.05) << name;
            EXPECT_GE(measure_blowup_slope(sol.y, p.point, Side::Right), -0.05) << name;
        }
    }
}

TEST(Report, Text) {
    const RegularityReport r = predict_exponents(WeightSpec{{1.0}, {0.3}}, 0.4, INFINITY);
    const std::string text = r.to_text();
    EXPECT_NE(text.find("global: blow-up"), std::string::npos);
    EXPECT_NE(text.find("exponent[0]: 0.3"), std::string::npos);
}
