#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "singvolt/mesh.hpp"
#include "singvolt/problem.hpp"
#include "singvolt/quadrature.hpp"

namespace singvolt {

/// y(t) = eta(t) + int_0^t A(t,s) y(s) / (w(s) (t-s)^(1-beta)) ds.
struct LinearKernel {
    std::function<Mat(double t, double s)> A;
    /// Optional |A(t,s)| <= L_bar(s).
    ScalarFn bound_L_bar;
    std::size_t dim = 1;
};

/// Discrete operator (M y)_k = sum_{j<=k} M_kj y_j with n x n blocks
/// M_kj = W(k,j) A_kj. Blocks are stored packed lower-triangular.
class LinearSystem {
public:
    using BlockFn = std::function<Mat(std::size_t k, std::size_t j)>;

    /// `skip` marks nodes left out of the system (their solution is censored).
    LinearSystem(const WeightTable& table, std::size_t dim, const BlockFn& A_kj, std::vector<bool> skip = {});

    std::size_t dim() const { return n_; }
    std::size_t nodes() const { return N_ + 1; }
    const MeshPtr& mesh() const { return mesh_; }
    Eigen::Map<const Mat> block(std::size_t k, std::size_t j) const;

    /// Y = rhs + M Y by forward substitution. Throws StepError when I - M_kk is singular.
    GridFunction solve_forward(const GridFunction& rhs) const;
    /// psi = rhs + M* psi, with M* the adjoint of M in <a, b> = sum mu_k a_k . b_k.
    GridFunction solve_transpose(const GridFunction& rhs, const std::vector<double>& mu) const;
    /// M y
    GridFunction apply(const GridFunction& y) const;

private:
    std::size_t offset(std::size_t k, std::size_t j) const { return (k * (k + 1) / 2 + j) * n_ * n_; }

    MeshPtr mesh_;
    std::size_t n_;
    std::size_t N_;
    std::vector<double> data_;
    std::vector<bool> skip_;
};

GridFunction solve_linear(const LinearKernel& kernel, const GridFunction& eta, const WeightTable& table);
/// Builds the product weights for (weight, beta) on `mesh` first.
GridFunction solve_linear(const LinearKernel& kernel, const GridFunction& eta, const WeightSpec& weight,
                          double beta, MeshPtr mesh);

/// Discrete resolvent: Phi(t_k, t_j) ~ R_kj / mu_j where R = M + M R.
class ResolventKernel {
public:
    ResolventKernel(MeshPtr mesh, std::size_t dim);

    const MeshPtr& mesh() const { return mesh_; }
    std::size_t dim() const { return n_; }
    /// R_kj (j <= k), the quadrature-weighted resolvent block.
    Eigen::Map<const Mat> weighted(std::size_t k, std::size_t j) const;
    Eigen::Map<Mat> weighted(std::size_t k, std::size_t j);
    /// Phi(t_k, t_j) for j < k.
    Mat phi(std::size_t k, std::size_t j) const;
    const std::vector<double>& mu() const { return mu_; }

private:
    std::size_t offset(std::size_t k, std::size_t j) const { return (k * (k + 1) / 2 + j) * n_ * n_; }

    MeshPtr mesh_;
    std::size_t n_;
    std::vector<double> mu_;
    std::vector<double> data_;
};

/// Columns are independent and built in parallel.
ResolventKernel build_resolvent(const LinearKernel& kernel, const WeightTable& table);

/// y = eta + int Phi(t, s) eta(s) ds on the resolvent's mesh.
GridFunction variation_of_constants(const ResolventKernel& res, const GridFunction& eta);

/// psi(t) = xi(t) + int_t^T A(s,t)^T psi(s) / (w(t) (s-t)^(1-beta)) ds.
struct BackwardProblem {
    std::function<Vec(double)> xi;
    LinearKernel kernel;
    WeightSpec weight;
    double beta = 0.5;
};

enum class BackwardMode {
    /// Transpose of the forward substitution operator (exact discrete duality).
    Transpose,
    /// Separate discretization with reversed product weights, for cross-checks.
    Independent
};

GridFunction solve_backward(const BackwardProblem& bp, MeshPtr mesh, BackwardMode mode = BackwardMode::Transpose);

/// Whether 1 < p < 1/(1 - beta), the range where the continuous backward
/// equation is known to be well posed. The discrete solver runs regardless.
bool backward_hypothesis_holds(double p, double beta);

}  // namespace singvolt
