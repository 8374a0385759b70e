#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "singvolt/mesh.hpp"
#include "singvolt/problem.hpp"

namespace singvolt {

enum class FracKind { RiemannLiouville, Caputo };

struct FracSpec {
    /// Order in (0, 1).
    double alpha = 0.5;
    FracKind kind = FracKind::Caputo;
    /// RL: I^(1-alpha)[y](0). Caputo: y(0).
    Vec init = Vec::Zero(1);
};

/// I^alpha phi = 1/Gamma(alpha) int_0^t phi(s) (t-s)^(alpha-1) ds at every node.
/// With `origin_exponent` set, phi ~ s^gamma near 0 and phi(0) is never read.
GridFunction frac_integral(double alpha, const GridFunction& phi,
                           std::optional<double> origin_exponent = std::nullopt);

struct FracDerivative {
    GridFunction value;
    /// Nodes computed with one-sided differences (lower accuracy).
    std::vector<bool> one_sided;
};

/// d/dt I^(1-alpha) y, differentiated numerically with three-point
/// differences on the (possibly nonuniform) mesh.
FracDerivative frac_derivative_rl(double alpha, const GridFunction& y,
                                  std::optional<double> origin_exponent = std::nullopt);
/// RL derivative of y - y(0).
FracDerivative frac_derivative_caputo(double alpha, const GridFunction& y);

/// Right-hand side of D^alpha y = rhs(t, y, u).
struct FracRhs {
    std::function<Vec(double t, const Vec& y, const Vec& u)> f;
    std::function<Mat(double t, const Vec& y, const Vec& u)> f_y;
    bool depends_on_u = false;
};

/// Equivalent Volterra problem on [0, T]: beta = alpha, w = 1,
/// f0 = rhs(s, y, u) / Gamma(alpha). Caputo: eta = y(0).
/// RL: eta = init t^(alpha-1) / Gamma(alpha), singular at 0.
ProblemSpec to_volterra(const FracSpec& fs, const FracRhs& rhs, double T);

/// Sup-norm residual of I^alpha D^alpha_* y = y - y(0) (Caputo) or
/// I^alpha D^alpha y = y - c t^(alpha-1) / Gamma(alpha) (RL), with
/// c = I^(1-alpha)[y](0). When c is not given it is extrapolated from the
/// first nodes. Non-finite nodes are skipped.
double check_inversion(double alpha, const GridFunction& y, FracKind kind,
                       std::optional<double> origin_exponent = std::nullopt,
                       std::optional<double> c = std::nullopt);

}  // namespace singvolt
