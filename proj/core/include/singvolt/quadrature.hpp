#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <vector>

#include "singvolt/mesh.hpp"
#include "singvolt/problem.hpp"

namespace singvolt {

struct QuadratureOptions {
    /// Use Gauss-Jacobi moments everywhere, even where closed forms exist.
    bool force_gauss = false;
    /// Integrand behaves like s^gamma near 0: phi = s^gamma psi with psi
    /// piecewise linear (constant on the first cell), so node 0 gets no
    /// weight and the mode s^gamma is integrated exactly.
    std::optional<double> origin_exponent;
};

/// Packed lower-triangular product-integration weights. Row k holds W(k, j),
/// j <= k, with int_0^{t_k} phi(s) / (w(s) (t_k - s)^(1 - beta)) ds
/// ~ sum_j W(k, j) phi(t_j) for phi piecewise linear on the mesh.
class WeightTable {
public:
    WeightTable() = default;
    WeightTable(MeshPtr mesh, double beta);

    const MeshPtr& mesh() const { return mesh_; }
    double beta() const { return beta_; }
    std::size_t rows() const { return mesh_ ? mesh_->nodes.size() : 0; }

    double operator()(std::size_t k, std::size_t j) const { return j <= k ? data_[offset(k) + j] : 0.0; }
    const double* row(std::size_t k) const { return data_.data() + offset(k); }
    double* row(std::size_t k) { return data_.data() + offset(k); }
    double row_sum(std::size_t k) const;

private:
    static std::size_t offset(std::size_t k) { return k * (k + 1) / 2; }

    MeshPtr mesh_;
    double beta_ = 0.5;
    std::vector<double> data_;
};

/// Builds every row (in parallel). Throws ConstructionError when a node sits
/// on an interior weight point or an endpoint singularity is not integrable.
WeightTable product_weights(MeshPtr mesh, const WeightSpec& w, double beta, const QuadratureOptions& opts = {});

/// A single row k; used when N is too large for a full table.
std::vector<double> product_weights_row(const Mesh& mesh, const WeightSpec& w, double beta, std::size_t k,
                                        const QuadratureOptions& opts = {});

/// R(j, k), k >= j, with int_{t_j}^T phi(s) (s - t_j)^(beta - 1) ds
/// ~ sum_k R(j, k) phi(t_k). Built from the forward table on the reflected mesh.
class ReverseWeights {
public:
    ReverseWeights() = default;
    ReverseWeights(WeightTable reflected) : reflected_(std::move(reflected)) {}

    double operator()(std::size_t j, std::size_t k) const {
        const std::size_t n = reflected_.rows() - 1;
        return reflected_(n - j, n - k);
    }

private:
    WeightTable reflected_;
};

ReverseWeights reverse_weights(const Mesh& mesh, double beta);

struct ConvolutionResult {
    Eigen::VectorXd value;
    /// A censored node carried nonzero weight.
    bool censored = false;
};

/// sum_{j <= k} W(k, j) phi(t_j).
ConvolutionResult apply_convolution(const WeightTable& table, const GridFunction& phi, std::size_t k);

/// n-point Gauss-Jacobi rule on [-1, 1] for the weight (1 - x)^a (1 + x)^b.
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};
GaussRule gauss_jacobi(std::size_t n, double a, double b);

}  // namespace singvolt
