#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "singvolt/mesh.hpp"
#include "singvolt/problem.hpp"

namespace singvolt {

/// Constants of the singular Gronwall bound
///   y <= a + sum_{i<k} c_i int L a / (t-s)^(1-beta_i) + C int L a.
struct GronwallBound {
    double beta = 0.5;
    double q = 2.0;
    /// Smallest integer with beta + k (beta - 1/q) >= 1.
    std::size_t k = 1;
    /// beta_i for 0 <= i < k.
    std::vector<double> betas;
    /// c_i for 0 <= i <= k (c_0 = 1).
    std::vector<double> cs;
    double L_q_norm = 0.0;
    double L_1_norm = 0.0;
    double T = 1.0;
    /// Constant C in front of the regular integral.
    double regular_constant = 0.0;
};

/// L holds samples of the numerator of L(s); when `w` is given the bound is
/// for L(s) / w(s). Throws HypothesisError when q <= 1/beta.
GronwallBound gronwall_constants(double beta, double q, const GridFunction& L, const WeightSpec* w = nullptr);

/// Right-hand side of the bound at every node, by product quadrature:
/// exactly k singular convolutions and one regular integral.
GridFunction gronwall_envelope(const GronwallBound& bound, const GridFunction& a, const GridFunction& L,
                               const WeightSpec* w = nullptr);

/// Number of convolutions the last envelope evaluation performed on this
/// thread (singular, regular). For tests.
std::pair<std::size_t, std::size_t> last_envelope_convolutions();

enum class Verdict { Continuous, Boundary, BlowUp };

std::string to_string(Verdict v);

struct PointReport {
    double point = 0.0;
    double alpha = 0.0;
    /// (1 + 1/q - alpha - beta)^+
    double exponent = 0.0;
    Verdict verdict = Verdict::Continuous;
};

struct RegularityReport {
    double beta = 0.5;
    double q = 2.0;
    std::vector<PointReport> points;
    Verdict global = Verdict::Continuous;

    /// key: value lines.
    std::string to_text() const;
};

/// Continuity verdict per weight point. q may be infinity.
/// Throws HypothesisError naming the failing index if q <= 1/beta or q <= 1/alpha_i.
RegularityReport predict_exponents(const WeightSpec& w, double beta, double q);

enum class Side { Left, Right };

/// Least-squares slope of log|y| against log|t - point| over the nearest
/// decade [d, 10 d] of usable nodes on one side. Throws FitError when no
/// decade holds 8 usable nodes.
double measure_blowup_slope(const GridFunction& y, double point, Side side);

/// Whether a measured slope agrees with a predicted verdict:
/// continuous slope >= -0.05, blow-up |slope + e| <= 0.1, boundary slope in [-0.15, 0.02].
bool slope_consistent(Verdict verdict, double exponent, double slope);

/// Weight exponents seen by the solution: alpha_i plus the log-slope of
/// phi_bar (or |f0| along eta) at s_i. Folds generator singularities at the
/// weight points into the weight.
WeightSpec effective_weight(const ProblemSpec& spec);

}  // namespace singvolt
