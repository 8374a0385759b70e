#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "singvolt/mesh.hpp"
#include "singvolt/problem.hpp"
#include "singvolt/quadrature.hpp"

namespace singvolt {

struct SolveOptions {
    double picard_tol = 1e-10;
    std::size_t picard_max = 200;
    /// 0 picks windows from the discrete contraction estimate.
    std::size_t window_count = 0;
    double blowup_cap = 1e12;
    /// Called after every Picard sweep with the window [first, last] and the
    /// current iterate. For tests and diagnostics.
    std::function<void(std::size_t first, std::size_t last, const GridFunction& y)> observer;
};

/// Mesh, product weights and trapezoid weights for one problem.
struct Discretization {
    MeshPtr mesh;
    WeightTable table;
    std::vector<double> mu;
    /// Nodes where eta is not evaluated (singular free term at 0).
    std::vector<bool> excluded;
};

/// Anchors at 0, every weight point and every singular point of eta; cost
/// times become nodes. Default grading max(2, 2/beta).
Mesh default_mesh(const ProblemSpec& spec, std::size_t N, std::optional<double> r = std::nullopt);

Discretization discretize(const ProblemSpec& spec, MeshPtr mesh, bool force_gauss = false);
Discretization discretize(const ProblemSpec& spec, std::size_t N, std::optional<double> r = std::nullopt,
                          bool force_gauss = false);

struct StateSolution {
    GridFunction y;
    std::vector<std::size_t> iterations_per_window;
    /// Normalized discrete p-norm of r_k / (1 + |y_k|) over non-censored nodes.
    double residual = 0.0;
    /// max_k |r_k| / (1 + |y_k|).
    double max_node_residual = 0.0;
    std::optional<std::size_t> censored_from;
    /// Windows that needed the node-by-node Newton fallback.
    std::size_t newton_windows = 0;
};

/// Constant control u(t) = v.
GridFunction constant_control(MeshPtr mesh, const Vec& v);
/// Control taking candidate idx[k] at node k.
GridFunction control_from_indices(MeshPtr mesh, const ControlSpace& cs, const std::vector<std::size_t>& idx);

/// Windowed Picard iteration on y_k = eta_k + sum_j W(k,j) f0(t_k, t_j, y_j, u_j).
StateSolution solve_state(const ProblemSpec& spec, const GridFunction& u, const Discretization& disc,
                          const SolveOptions& opts = {});
/// Builds the discretization for `mesh` first.
StateSolution solve_state(const ProblemSpec& spec, const GridFunction& u, MeshPtr mesh,
                          const SolveOptions& opts = {});

/// Per-node fixed-point residual |y_k - eta_k - Q_k| / (1 + |y_k|); NaN at censored nodes.
std::vector<double> node_residuals(const ProblemSpec& spec, const GridFunction& u, const Discretization& disc,
                                   const GridFunction& y);

struct NormResult {
    double value = 0.0;
    std::size_t excluded_cells = 0;
};

/// (int |w phi|^p)^(1/p) by the trapezoid rule on cells; cells touching a
/// censored or non-finite node are skipped and counted. p = infinity gives the max.
NormResult discrete_norm_ex(const GridFunction& phi, double p, const WeightSpec* w = nullptr);
double discrete_norm(const GridFunction& phi, double p, const WeightSpec* w = nullptr);

struct StabilityGap {
    /// ||y1 - y2||_p
    double lhs = 0.0;
    /// ||a||_p with a(t) = |int f(t,s,y2,u1) - f(t,s,y2,u2) ds|
    double rhs = 0.0;
    /// ||envelope(a)||_p / ||a||_p from the singular Gronwall bound (1 if a = 0).
    double K_hat = 1.0;
    bool holds() const { return lhs <= K_hat * rhs * (1.0 + 1e-9) + 1e-14; }
};

/// Throws HypothesisError when no Gronwall exponent fits between 1/beta and the weights.
StabilityGap stability_gap(const ProblemSpec& spec, const GridFunction& u1, const GridFunction& u2,
                           const Discretization& disc, const SolveOptions& opts = {});

/// Lipschitz samples L_j: L_bar(t_j) when bounds are given, otherwise the
/// largest |f0_y| seen along the supplied states.
std::vector<double> lipschitz_samples(const ProblemSpec& spec, const Discretization& disc, const GridFunction& u,
                                      const std::vector<const GridFunction*>& states);

}  // namespace singvolt
