#include "singvolt/linear_resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "singvolt/errors.hpp"
#include "singvolt/parallel.hpp"

namespace singvolt {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

Mat local_inverse(const Mat& diag_block, std::size_t k) {
    const Mat I = Mat::Identity(diag_block.rows(), diag_block.cols());
    const Mat B = I - diag_block;
    Eigen::FullPivLU<Mat> lu(B);
    // Full pivoting puts the smallest pivot last; compare it with the block scale.
    const double scale = std::max(1.0, B.cwiseAbs().maxCoeff());
    if (!lu.isInvertible() || lu.matrixLU().diagonal().cwiseAbs().minCoeff() < 1e-12 * scale) {
        throw StepError("linear solve: I - M_kk is singular at node " + std::to_string(k));
    }
    return lu.inverse();
}

}  // namespace

LinearSystem::LinearSystem(const WeightTable& table, std::size_t dim, const BlockFn& A_kj, std::vector<bool> skip)
    : mesh_(table.mesh()), n_(dim), N_(table.rows() - 1), skip_(std::move(skip)) {
    if (skip_.empty()) skip_.assign(N_ + 1, false);
    if (skip_.size() != N_ + 1) throw UsageError("LinearSystem: skip mask has the wrong length");
    data_.assign(offset(N_ + 1, 0), 0.0);
    parallel_for(0, N_ + 1, [&](std::size_t k) {
        if (skip_[k]) return;
        const double* row = table.row(k);
        for (std::size_t j = 0; j <= k; ++j) {
            if (row[j] == 0.0 || skip_[j]) continue;
            const Mat A = A_kj(k, j);
            if (static_cast<std::size_t>(A.rows()) != n_ || static_cast<std::size_t>(A.cols()) != n_) {
                throw UsageError("LinearSystem: block has the wrong shape");
            }
            Eigen::Map<Mat>(data_.data() + offset(k, j), ix(n_), ix(n_)) = row[j] * A;
        }
    });
}

Eigen::Map<const Mat> LinearSystem::block(std::size_t k, std::size_t j) const {
    return Eigen::Map<const Mat>(data_.data() + offset(k, j), ix(n_), ix(n_));
}

GridFunction LinearSystem::solve_forward(const GridFunction& rhs) const {
    if (rhs.size() != N_ + 1 || rhs.dim() != n_) throw UsageError("solve_forward: right-hand side shape mismatch");
    GridFunction y(mesh_, n_);
    for (std::size_t k = 0; k <= N_; ++k) {
        if (skip_[k] || rhs.censored[k]) {
            y.values.col(ix(k)).setConstant(std::numeric_limits<double>::quiet_NaN());
            y.censored[k] = true;
            continue;
        }
        Vec acc = rhs.at(k);
        for (std::size_t j = 0; j < k; ++j) {
            if (y.censored[j]) continue;
            acc += block(k, j) * y.values.col(ix(j));
        }
        y.values.col(ix(k)) = local_inverse(block(k, k), k) * acc;
    }
    return y;
}

GridFunction LinearSystem::solve_transpose(const GridFunction& rhs, const std::vector<double>& mu) const {
    if (rhs.size() != N_ + 1 || rhs.dim() != n_ || mu.size() != N_ + 1) {
        throw UsageError("solve_transpose: shape mismatch");
    }
    GridFunction psi(mesh_, n_);
    for (std::size_t j = N_ + 1; j-- > 0;) {
        if (skip_[j] || rhs.censored[j]) {
            psi.values.col(ix(j)).setConstant(std::numeric_limits<double>::quiet_NaN());
            psi.censored[j] = true;
            continue;
        }
        Vec acc = Vec::Zero(ix(n_));
        for (std::size_t k = j + 1; k <= N_; ++k) {
            if (psi.censored[k]) continue;
            acc += mu[k] * (block(k, j).transpose() * psi.values.col(ix(k)));
        }
        acc = rhs.at(j) + acc / mu[j];
        psi.values.col(ix(j)) = local_inverse(Mat(block(j, j).transpose()), j) * acc;
    }
    return psi;
}

GridFunction LinearSystem::apply(const GridFunction& y) const {
    GridFunction out(mesh_, n_);
    for (std::size_t k = 0; k <= N_; ++k) {
        if (skip_[k]) {
            out.censored[k] = true;
            continue;
        }
        Vec acc = Vec::Zero(ix(n_));
        for (std::size_t j = 0; j <= k; ++j) {
            if (skip_[j] || y.censored[j]) continue;
            acc += block(k, j) * y.values.col(ix(j));
        }
        out.values.col(ix(k)) = acc;
    }
    return out;
}

namespace {

LinearSystem make_system(const LinearKernel& kernel, const WeightTable& table) {
    const auto& nodes = table.mesh()->nodes;
    return LinearSystem(table, kernel.dim, [&](std::size_t k, std::size_t j) { return kernel.A(nodes[k], nodes[j]); });
}

}  // namespace

GridFunction solve_linear(const LinearKernel& kernel, const GridFunction& eta, const WeightTable& table) {
    return make_system(kernel, table).solve_forward(eta);
}

GridFunction solve_linear(const LinearKernel& kernel, const GridFunction& eta, const WeightSpec& weight, double beta,
                          MeshPtr mesh) {
    return solve_linear(kernel, eta, product_weights(mesh, weight, beta));
}

ResolventKernel::ResolventKernel(MeshPtr mesh, std::size_t dim)
    : mesh_(std::move(mesh)), n_(dim), mu_(mesh_->trapezoid_weights()) {
    data_.assign(offset(mesh_->nodes.size(), 0), 0.0);
}

Eigen::Map<const Mat> ResolventKernel::weighted(std::size_t k, std::size_t j) const {
    return Eigen::Map<const Mat>(data_.data() + offset(k, j), ix(n_), ix(n_));
}

Eigen::Map<Mat> ResolventKernel::weighted(std::size_t k, std::size_t j) {
    return Eigen::Map<Mat>(data_.data() + offset(k, j), ix(n_), ix(n_));
}

Mat ResolventKernel::phi(std::size_t k, std::size_t j) const {
    if (j >= k) throw UsageError("ResolventKernel::phi: requires j < k");
    return weighted(k, j) / mu_[j];
}

ResolventKernel build_resolvent(const LinearKernel& kernel, const WeightTable& table) {
    const LinearSystem sys = make_system(kernel, table);
    const std::size_t N = table.rows() - 1;
    const std::size_t n = kernel.dim;
    ResolventKernel res(table.mesh(), n);
    std::vector<Mat> inv(N + 1);
    for (std::size_t k = 0; k <= N; ++k) inv[k] = local_inverse(Mat(sys.block(k, k)), k);
    // Column j: (I - M_kk) R_kj = M_kj + sum_{j <= i < k} M_ki R_ij.
    parallel_for(0, N + 1, [&](std::size_t j) {
        for (std::size_t k = j; k <= N; ++k) {
            Mat acc = sys.block(k, j);
            for (std::size_t i = j; i < k; ++i) acc += sys.block(k, i) * res.weighted(i, j);
            res.weighted(k, j) = inv[k] * acc;
        }
    });
    (void)n;
    return res;
}

GridFunction variation_of_constants(const ResolventKernel& res, const GridFunction& eta) {
    if (eta.mesh != res.mesh() && eta.mesh->nodes != res.mesh()->nodes) {
        throw UsageError("variation_of_constants: mesh mismatch");
    }
    if (eta.dim() != res.dim()) throw UsageError("variation_of_constants: dimension mismatch");
    const std::size_t N = eta.size() - 1;
    GridFunction y = eta;
    for (std::size_t k = 0; k <= N; ++k) {
        if (eta.censored[k]) continue;
        Vec acc = Vec::Zero(ix(res.dim()));
        for (std::size_t j = 0; j <= k; ++j) {
            if (eta.censored[j]) continue;
            acc += res.weighted(k, j) * eta.values.col(ix(j));
        }
        y.values.col(ix(k)) += acc;
    }
    return y;
}

GridFunction solve_backward(const BackwardProblem& bp, MeshPtr mesh, BackwardMode mode) {
    const auto& nodes = mesh->nodes;
    const std::size_t N = nodes.size() - 1;
    const std::size_t n = bp.kernel.dim;
    GridFunction xi = sample(mesh, n, bp.xi);
    if (mode == BackwardMode::Transpose) {
        const WeightTable table = product_weights(mesh, bp.weight, bp.beta);
        return make_system(bp.kernel, table).solve_transpose(xi, mesh->trapezoid_weights());
    }
    const ReverseWeights R = reverse_weights(*mesh, bp.beta);
    GridFunction psi(mesh, n);
    const double T = mesh->T();
    for (std::size_t j = N + 1; j-- > 0;) {
        const double w = eval_weight(bp.weight, nodes[j], T);
        if (w == 0.0) {
            psi.values.col(ix(j)).setConstant(std::numeric_limits<double>::quiet_NaN());
            psi.censored[j] = true;
            continue;
        }
        Vec acc = xi.at(j);
        for (std::size_t k = j + 1; k <= N; ++k) {
            if (psi.censored[k]) continue;
            acc += (R(j, k) / w) * (bp.kernel.A(nodes[k], nodes[j]).transpose() * psi.values.col(ix(k)));
        }
        const Mat diag = (R(j, j) / w) * bp.kernel.A(nodes[j], nodes[j]).transpose();
        psi.values.col(ix(j)) = local_inverse(diag, j) * acc;
    }
    return psi;
}

bool backward_hypothesis_holds(double p, double beta) { return p > 1.0 && p < 1.0 / (1.0 - beta); }

}  // namespace singvolt
