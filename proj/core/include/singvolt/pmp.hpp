#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "singvolt/forward_solver.hpp"
#include "singvolt/mesh.hpp"
#include "singvolt/problem.hpp"

namespace singvolt {

/// J(u) = sum_k mu_k g(t_k, y_k, u_k) + sum_j h^j(y(t_j)). Nodes excluded from
/// the discretization are skipped. Throws CensoredError when any other node is
/// censored and UsageError when there is no cost or a cost time is not a node.
double eval_cost(const ProblemSpec& spec, const GridFunction& y, const GridFunction& u);
double eval_cost(const ProblemSpec& spec, const StateSolution& y, const GridFunction& u);

struct AdjointTrajectory {
    GridFunction psi;
    /// Source term xi of the backward equation.
    GridFunction xi;
};

/// Backward equation psi = xi + M* psi, where M is the frozen-Jacobian
/// operator of the forward scheme and M* its transpose in the mu inner product.
AdjointTrajectory solve_adjoint(const ProblemSpec& spec, const GridFunction& ystar, const GridFunction& ustar,
                                const Discretization& disc);

/// H(s_j, u) at the nodes of one state/adjoint pair:
///   sum_{k>=j} (mu_k W(k,j) / mu_j) psi_k . f0(t_k, s_j, y_j, u)
///   - g(s_j, y_j, u) - sum_J [j <= k_J] (W(k_J,j) / mu_j) h^J_y . f0(t_J, s_j, y_j, u).
/// A spike at node j changes J by -mu_j (H_j(u) - H_j(u*_j)) to first order, so
/// optimal controls maximize H.
class Hamiltonian {
public:
    Hamiltonian(const ProblemSpec& spec, const Discretization& disc, const GridFunction& ystar,
                const GridFunction& psi);

    bool defined(std::size_t j) const;
    double operator()(std::size_t j, const Vec& u) const;

private:
    const ProblemSpec& spec_;
    const Discretization& disc_;
    const GridFunction& y_;
    const GridFunction& psi_;
    std::vector<std::pair<std::size_t, Vec>> terms_;  // (k_J, h^J_y(y(t_J)))
};

struct MaxConditionResult {
    /// max_u H(s_j, u) - H(s_j, u*_j); NaN where H is undefined.
    std::vector<double> residual;
    /// Maximizing candidate per node (lowest index on ties).
    std::vector<std::size_t> best;
    double worst = 0.0;
};

MaxConditionResult max_condition(const ProblemSpec& spec, const Discretization& disc, const GridFunction& ystar,
                                 const GridFunction& ustar, const GridFunction& psi);

struct SweepEntry {
    std::size_t sweep = 0;
    double J = 0.0;
    double worst_residual = 0.0;
    std::size_t nodes_changed = 0;
    bool accepted = false;
};

struct SpikeOutcome {
    double delta = 0.0;
    /// Discrete measure of the spiked nodes.
    double measure = 0.0;
    /// (J(u^delta) - J(u*)) / delta
    double value = 0.0;
};

struct PmpReport {
    std::shared_ptr<const Discretization> disc;
    double J = 0.0;
    StateSolution state;
    GridFunction control;
    std::vector<std::size_t> control_index;
    AdjointTrajectory adjoint;
    MaxConditionResult max_condition;
    std::vector<SpikeOutcome> spikes;
    std::vector<SweepEntry> log;
    bool converged = false;
    bool censored = false;

    /// key: value lines.
    std::string to_text() const;
    /// node, t, u..., residual, psi...
    void write_csv(std::ostream& os) const;
};

/// Report for a fixed control (state, adjoint, residuals), no optimization.
PmpReport analyze_control(const ProblemSpec& spec, std::shared_ptr<const Discretization> disc,
                          const std::vector<std::size_t>& control_index, const SolveOptions& opts = {});

struct SweepOptions {
    std::size_t max_sweeps = 100;
    /// Share of improvable nodes switched per sweep.
    double fraction = 0.2;
    SolveOptions solve;
    /// Starting control (candidate index per node); u0_index everywhere when empty.
    std::vector<std::size_t> initial;
};

/// Forward-backward sweep on the necessary conditions. Each sweep switches the
/// worst-residual share of nodes to their maximizing candidate and keeps the
/// step only if J decreases, otherwise the share is halved. Stops when no
/// node can improve, when no decrease is possible, or after max_sweeps. The
/// best iterate is returned; `converged` tells whether the residual test
/// stopped the loop.
PmpReport fb_sweep(const ProblemSpec& spec, std::shared_ptr<const Discretization> disc,
                   const SweepOptions& opts = {});

/// Union of mesh-aligned intervals [a, b]; nodes inside are spiked.
struct SpikeSet {
    std::vector<std::pair<double, double>> intervals;
    double delta = 0.05;
};

/// Nodes covered by the spike set. Throws MeasureMismatchError when their
/// discrete measure differs from delta T by more than the largest cell per interval.
std::vector<std::size_t> spike_nodes(const SpikeSet& spike, const Mesh& mesh, double* measure = nullptr);

/// Random sets of 1 to 3 node runs with total measure close to delta T.
std::vector<SpikeSet> sample_spikes(const Mesh& mesh, double delta, std::size_t count, std::uint64_t seed);

/// u^delta: u_alt on the spike, u* elsewhere.
GridFunction spiked_control(const GridFunction& ustar, const GridFunction& u_alt, const std::vector<std::size_t>& nodes);

/// (J(u^delta) - J(u*)) / delta for the report's optimum.
SpikeOutcome spike_check(const ProblemSpec& spec, const PmpReport& report, const SpikeSet& spike,
                         const GridFunction& u_alt, const SolveOptions& opts = {});

/// Y = M Y + sum_j W(k,j) [f0(t_k, t_j, y*_j, u_alt_j) - f0(t_k, t_j, y*_j, u*_j)].
GridFunction solve_variational(const ProblemSpec& spec, const GridFunction& ystar, const GridFunction& ustar,
                               const GridFunction& u_alt, const Discretization& disc);

/// First-order change of J for u* -> u_alt computed two ways.
struct FirstOrder {
    /// sum mu (g_y . Y + g(u_alt) - g(u*)) + sum_J h^J_y . Y(t_J)
    double via_state = 0.0;
    /// -sum mu_j (H_j(u_alt) - H_j(u*))
    double via_adjoint = 0.0;
    /// <psi, F> and <xi, Y> in the mu inner product, F the variational forcing.
    double adjoint_pairing = 0.0;
    double state_pairing = 0.0;
    double psi_norm = 0.0;
    double forcing_norm = 0.0;
};

FirstOrder first_order(const ProblemSpec& spec, const PmpReport& report, const GridFunction& u_alt);

struct BruteForceResult {
    double J_min = 0.0;
    /// Candidate index per interval.
    std::vector<std::size_t> best;
    std::size_t evaluated = 0;
};

/// Node k belongs to interval min(floor(t_k / T * m), m - 1).
std::vector<std::size_t> piecewise_indices(const Mesh& mesh, std::size_t intervals, const std::vector<std::size_t>& values);

/// Exhaustive search over piecewise-constant controls, in parallel.
/// Ties go to the lexicographically smallest tuple.
BruteForceResult brute_force(const ProblemSpec& spec, const Discretization& disc, std::size_t intervals,
                             const SolveOptions& opts = {});

}  // namespace singvolt
