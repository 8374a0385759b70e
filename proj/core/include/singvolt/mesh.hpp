#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace singvolt {

/// Graded time grid 0 = t_0 < ... < t_N = T.
struct Mesh {
    std::vector<double> nodes;
    /// Points toward which the grid is graded. Interior anchors are never nodes.
    std::vector<double> anchors;
    double grading = 1.0;

    std::size_t cells() const { return nodes.size() - 1; }
    double T() const { return nodes.back(); }
    double h(std::size_t i) const { return nodes[i] - nodes[i - 1]; }
    double max_cell() const;
    /// Trapezoid weights: int phi ~ sum_j mu_j phi(t_j).
    std::vector<double> trapezoid_weights() const;
    /// Index of the node equal to t, or npos.
    std::size_t find_node(double t) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// N cells spread over the segments between {0, T} and the anchors, each
/// segment graded as (i/n)^r toward every anchored end. Interior anchors are
/// removed afterwards so a single cell straddles each of them. Every time in
/// `required` becomes a node.
Mesh build_mesh(double T, std::size_t N, const std::vector<double>& anchors, double r,
                const std::vector<double>& required = {});

/// Vector-valued function sampled at mesh nodes; column k holds y(t_k).
struct GridFunction {
    MeshPtr mesh;
    Eigen::MatrixXd values;
    std::vector<bool> censored;

    GridFunction() = default;
    GridFunction(MeshPtr m, std::size_t dim);

    std::size_t dim() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t size() const { return static_cast<std::size_t>(values.cols()); }
    Eigen::VectorXd at(std::size_t k) const { return values.col(static_cast<Eigen::Index>(k)); }
    double operator()(std::size_t i, std::size_t k) const {
        return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
    bool any_censored() const;
};

/// Samples fn at every node.
GridFunction sample(MeshPtr mesh, std::size_t dim, const std::function<Eigen::VectorXd(double)>& fn);
/// Scalar convenience overload.
GridFunction sample_scalar(MeshPtr mesh, const std::function<double(double)>& fn);

}  // namespace singvolt
