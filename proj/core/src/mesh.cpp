#include "singvolt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "singvolt/errors.hpp"

namespace singvolt {

double Mesh::max_cell() const {
    double m = 0.0;
    for (std::size_t i = 1; i < nodes.size(); ++i) m = std::max(m, h(i));
    return m;
}

std::vector<double> Mesh::trapezoid_weights() const {
    std::vector<double> mu(nodes.size(), 0.0);
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        const double half = 0.5 * h(i);
        mu[i - 1] += half;
        mu[i] += half;
    }
    return mu;
}

std::size_t Mesh::find_node(double t) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), t);
    const double tol = 1e-12 * std::max(1.0, T());
    if (it != nodes.end() && std::abs(*it - t) <= tol) return static_cast<std::size_t>(it - nodes.begin());
    if (it != nodes.begin() && std::abs(*(it - 1) - t) <= tol) return static_cast<std::size_t>(it - nodes.begin() - 1);
    return npos;
}

namespace {

double graded(double xi, bool left, bool right, double r) {
    if (left && right) {
        return xi <= 0.5 ? 0.5 * std::pow(2.0 * xi, r) : 1.0 - 0.5 * std::pow(2.0 * (1.0 - xi), r);
    }
    if (left) return std::pow(xi, r);
    if (right) return 1.0 - std::pow(1.0 - xi, r);
    return xi;
}

}  // namespace

Mesh build_mesh(double T, std::size_t N, const std::vector<double>& anchors, double r,
                const std::vector<double>& required) {
    if (!(T > 0.0)) throw DomainError("build_mesh: T must be positive");
    if (N < 2) throw DomainError("build_mesh: N must be at least 2");
    if (!(r >= 1.0)) throw DomainError("build_mesh: grading exponent must be at least 1");
    std::vector<double> anc;
    for (double a : anchors) {
        if (!(a >= 0.0 && a <= T)) throw DomainError("build_mesh: anchor outside [0, T]");
        anc.push_back(a);
    }
    std::sort(anc.begin(), anc.end());
    anc.erase(std::unique(anc.begin(), anc.end()), anc.end());

    std::vector<double> breaks = anc;
    breaks.push_back(0.0);
    breaks.push_back(T);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    const std::size_t segments = breaks.size() - 1;

    auto is_anchor = [&](double x) { return std::binary_search(anc.begin(), anc.end(), x); };
    std::vector<double> interior;
    for (double a : anc) {
        if (a > 0.0 && a < T) interior.push_back(a);
    }

    // Each interior anchor node is dropped at the end, merging two cells.
    const std::size_t total = N + interior.size();
    if (total < 2 * segments) throw ConstructionError("build_mesh: N too small for the number of anchors");

    // Largest-remainder apportionment, at least 2 cells per segment.
    std::vector<std::size_t> count(segments, 2);
    std::size_t left = total - 2 * segments;
    std::vector<double> share(segments);
    double assigned = 0.0;
    for (std::size_t s = 0; s < segments; ++s) {
        share[s] = static_cast<double>(left) * (breaks[s + 1] - breaks[s]) / T;
        const auto whole = static_cast<std::size_t>(std::floor(share[s]));
        count[s] += whole;
        assigned += static_cast<double>(whole);
    }
    std::size_t remaining = left - static_cast<std::size_t>(assigned);
    std::vector<std::size_t> order(segments);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return share[a] - std::floor(share[a]) > share[b] - std::floor(share[b]);
    });
    for (std::size_t i = 0; i < remaining; ++i) ++count[order[i % segments]];

    Mesh mesh;
    mesh.anchors = anc;
    mesh.grading = r;
    mesh.nodes.push_back(0.0);
    for (std::size_t s = 0; s < segments; ++s) {
        const double a = breaks[s];
        const double b = breaks[s + 1];
        const bool gl = is_anchor(a);
        const bool gr = is_anchor(b);
        const std::size_t n = count[s];
        for (std::size_t i = 1; i <= n; ++i) {
            const double x = i == n ? b : a + (b - a) * graded(static_cast<double>(i) / static_cast<double>(n), gl, gr, r);
            mesh.nodes.push_back(x);
        }
    }
    for (double a : interior) {
        auto it = std::find(mesh.nodes.begin(), mesh.nodes.end(), a);
        if (it != mesh.nodes.end()) mesh.nodes.erase(it);
    }

    const double snap = 1e-9 * T;
    for (double tj : required) {
        if (!(tj >= 0.0 && tj <= T)) throw DomainError("build_mesh: required time outside [0, T]");
        if (std::binary_search(interior.begin(), interior.end(), tj)) {
            throw ConstructionError("build_mesh: required time coincides with an interior anchor");
        }
        auto it = std::lower_bound(mesh.nodes.begin(), mesh.nodes.end(), tj);
        std::size_t nearest = 0;
        if (it == mesh.nodes.end()) {
            nearest = mesh.nodes.size() - 1;
        } else if (it == mesh.nodes.begin()) {
            nearest = 0;
        } else {
            const auto hi = static_cast<std::size_t>(it - mesh.nodes.begin());
            nearest = (*it - tj) < (tj - *(it - 1)) ? hi : hi - 1;
        }
        const double gap = std::abs(mesh.nodes[nearest] - tj);
        if (gap == 0.0) continue;
        const bool endpoint = std::binary_search(breaks.begin(), breaks.end(), mesh.nodes[nearest]);
        if (gap <= snap && !endpoint) {
            mesh.nodes[nearest] = tj;
        } else if (gap > snap) {
            mesh.nodes.insert(std::lower_bound(mesh.nodes.begin(), mesh.nodes.end(), tj), tj);
        }
    }
    for (std::size_t i = 1; i < mesh.nodes.size(); ++i) {
        if (!(mesh.nodes[i] > mesh.nodes[i - 1])) throw ConstructionError("build_mesh: nodes not strictly increasing");
    }
    return mesh;
}

GridFunction::GridFunction(MeshPtr m, std::size_t dim)
    : mesh(std::move(m)),
      values(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(mesh->nodes.size()))),
      censored(mesh->nodes.size(), false) {}

bool GridFunction::any_censored() const {
    return std::find(censored.begin(), censored.end(), true) != censored.end();
}

GridFunction sample(MeshPtr mesh, std::size_t dim, const std::function<Eigen::VectorXd(double)>& fn) {
    GridFunction g(mesh, dim);
    for (std::size_t k = 0; k < mesh->nodes.size(); ++k) g.values.col(static_cast<Eigen::Index>(k)) = fn(mesh->nodes[k]);
    return g;
}

GridFunction sample_scalar(MeshPtr mesh, const std::function<double(double)>& fn) {
    GridFunction g(mesh, 1);
    for (std::size_t k = 0; k < mesh->nodes.size(); ++k) g.values(0, static_cast<Eigen::Index>(k)) = fn(mesh->nodes[k]);
    return g;
}

}  // namespace singvolt
