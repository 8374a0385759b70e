#include "singvolt/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "singvolt/errors.hpp"
#include "singvolt/parallel.hpp"
#include "singvolt/special_functions.hpp"

namespace singvolt {

WeightTable::WeightTable(MeshPtr mesh, double beta)
    : mesh_(std::move(mesh)), beta_(beta), data_(offset(mesh_->nodes.size()), 0.0) {}

double WeightTable::row_sum(std::size_t k) const {
    double s = 0.0;
    const double* r = row(k);
    for (std::size_t j = 0; j <= k; ++j) s += r[j];
    return s;
}

GaussRule gauss_jacobi(std::size_t n, double a, double b) {
    if (n == 0) throw UsageError("gauss_jacobi: need at least one point");
    if (!(a > -1.0) || !(b > -1.0)) throw DomainError("gauss_jacobi: exponents must exceed -1");
    Eigen::VectorXd diag(static_cast<Eigen::Index>(n));
    Eigen::VectorXd off(static_cast<Eigen::Index>(n > 1 ? n - 1 : 1));
    const double ab = a + b;
    for (std::size_t k = 0; k < n; ++k) {
        const double dk = static_cast<double>(k);
        const double s = 2.0 * dk + ab;
        diag[static_cast<Eigen::Index>(k)] = k == 0 ? (b - a) / (ab + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    }
    for (std::size_t k = 1; k < n; ++k) {
        const double dk = static_cast<double>(k);
        const double s = 2.0 * dk + ab;
        double v;
        if (k == 1) {
            v = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
        } else {
            v = 4.0 * dk * (dk + a) * (dk + b) * (dk + ab) / (s * s * (s + 1.0) * (s - 1.0));
        }
        off[static_cast<Eigen::Index>(k - 1)] = std::sqrt(v);
    }
    GaussRule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    const double mu0 = std::exp((ab + 1.0) * std::log(2.0)) * beta_fn(a + 1.0, b + 1.0);
    if (n == 1) {
        rule.x[0] = diag[0];
        rule.w[0] = mu0;
        return rule;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ei = static_cast<Eigen::Index>(i);
        rule.x[i] = solver.eigenvalues()[ei];
        const double v0 = solver.eigenvectors()(0, ei);
        rule.w[i] = mu0 * v0 * v0;
    }
    return rule;
}

namespace {

struct Singularity {
    double point;
    double exponent;
};

struct Moments {
    double m0 = 0.0;
    double m1 = 0.0;
};

const GaussRule& cached_rule(std::size_t n, double a, double b) {
    thread_local std::map<std::tuple<std::size_t, double, double>, GaussRule> cache;
    auto key = std::make_tuple(n, a, b);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, gauss_jacobi(n, a, b)).first;
    return it->second;
}

// Integrates prod |s - p|^e over [c, d] against {1, (s - a) / h}. Singular
// factors sitting on c or d go into the Jacobi weight; the rest is sampled.
void integrate(double c, double d, const std::vector<Singularity>& sings, double a, double h, Moments& out,
               int depth) {
    const double L = d - c;
    if (!(L > 0.0)) return;
    double exp_left = 0.0;
    double exp_right = 0.0;
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& sg : sings) {
        if (sg.exponent == 0.0) continue;
        if (sg.point == c) {
            exp_left += sg.exponent;
        } else if (sg.point == d) {
            exp_right += sg.exponent;
        } else {
            const double dist = sg.point < c ? c - sg.point : sg.point - d;
            nearest = std::min(nearest, dist);
        }
    }
    if (!(exp_left > -1.0) || !(exp_right > -1.0)) {
        throw ConstructionError("product weights: endpoint singularity is not integrable");
    }
    const double delta = 2.0 * nearest / L;
    std::size_t n;
    if (delta >= 8.0) {
        n = 8;
    } else if (delta >= 2.0) {
        n = 16;
    } else if (delta >= 0.5 || depth > 200) {
        n = 24;
    } else {
        const double m = c + 0.5 * L;
        integrate(c, m, sings, a, h, out, depth + 1);
        integrate(m, d, sings, a, h, out, depth + 1);
        return;
    }
    const GaussRule& rule = cached_rule(n, exp_right, exp_left);
    const double scale = std::pow(0.5 * L, exp_left + exp_right + 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = c + 0.5 * L * (1.0 + rule.x[i]);
        double g = 1.0;
        for (const auto& sg : sings) {
            if (sg.exponent == 0.0 || sg.point == c || sg.point == d) continue;
            g *= std::pow(std::abs(s - sg.point), sg.exponent);
        }
        const double wg = scale * rule.w[i] * g;
        out.m0 += wg;
        out.m1 += wg * (s - a) / h;
    }
}

// int_0^{t1} s^e (t - s)^(beta - 1) ds via the incomplete beta function.
double power_moment(double e, double beta, double t, double t1) {
    const IncBetaPair ib = inc_beta_pair(e + 1.0, beta, t1 / t, (t - t1) / t);
    return std::pow(t, e + beta) * beta_fn(e + 1.0, beta) * ib.value;
}

// int_0^rho v (1 - v)^(beta - 1) dv
double first_moment_unit(double rho, double beta) {
    if (rho <= 0.5) {
        double c = 1.0;
        double pw = rho * rho;
        double sum = pw / 2.0;
        for (int m = 1; m < 200; ++m) {
            c *= (static_cast<double>(m) - beta) / static_cast<double>(m);
            pw *= rho;
            const double term = c * pw / (static_cast<double>(m) + 2.0);
            sum += term;
            if (std::abs(term) < 1e-17 * sum) break;
        }
        return sum;
    }
    const double q = 1.0 - rho;
    return (1.0 - std::pow(q, beta)) / beta - (1.0 - std::pow(q, beta + 1.0)) / (beta + 1.0);
}

class RowBuilder {
public:
    RowBuilder(const Mesh& mesh, const WeightSpec& w, double beta, const QuadratureOptions& opts)
        : nodes_(mesh.nodes), w_(w), beta_(beta), opts_(opts) {
        if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("product weights: beta must lie in (0, 1]");
        const double T = nodes_.back();
        for (std::size_t i = 0; i < w.points.size(); ++i) {
            const double p = w.points[i];
            if (p > 0.0 && p < T && std::binary_search(nodes_.begin(), nodes_.end(), p)) {
                throw ConstructionError("product weights: a mesh node coincides with a weight point");
            }
        }
        closed_form_ = w.points.empty() && !opts.force_gauss;
        only_origin_point_ =
            w.points.empty() || (w.points.size() == 1 && w.points.front() == 0.0);
        origin_weight_exp_ = (!w.points.empty() && w.points.front() == 0.0) ? w.exponents.front() - 1.0 : 0.0;
    }

    void fill(std::size_t k, double* row) const {
        std::fill(row, row + k + 1, 0.0);
        if (k == 0) return;
        const double t = nodes_[k];
        std::vector<Singularity> sings;
        if (!closed_form_) {
            for (std::size_t i = 0; i < w_.points.size(); ++i) {
                sings.push_back({w_.points[i], w_.exponents[i] - 1.0});
            }
            sings.push_back({t, beta_ - 1.0});
        }
        const bool origin = opts_.origin_exponent.has_value();
        // Origin mode: phi = s^gamma psi with psi piecewise linear, on every cell.
        std::vector<Singularity> origin_sings;
        if (origin) {
            origin_sings = sings;
            if (closed_form_) origin_sings.push_back({t, beta_ - 1.0});
            origin_sings.push_back({0.0, *opts_.origin_exponent});
        }
        for (std::size_t i = 1; i <= k; ++i) {
            if (i == 1 && first_cell(t, sings, row)) continue;
            const double a = nodes_[i - 1];
            const double b = nodes_[i];
            const double h = b - a;
            Moments mom;
            if (origin) {
                double c = a;
                for (double p : w_.points) {
                    if (p > a && p < b) {
                        integrate(c, p, origin_sings, a, h, mom, 0);
                        c = p;
                    }
                }
                integrate(c, b, origin_sings, a, h, mom, 0);
                const double g = *opts_.origin_exponent;
                row[i - 1] += (mom.m0 - mom.m1) * std::pow(a, -g);
                row[i] += mom.m1 * std::pow(b, -g);
                continue;
            }
            if (closed_form_) {
                const double da = t - a;
                const double rho = h / da;
                const double scale = std::pow(da, beta_);
                mom.m0 = scale * (-std::expm1(beta_ * std::log1p(-rho))) / beta_;
                mom.m1 = scale * first_moment_unit(rho, beta_) / rho;
            } else {
                double c = a;
                for (double p : w_.points) {
                    if (p > a && p < b) {
                        integrate(c, p, sings, a, h, mom, 0);
                        c = p;
                    }
                }
                integrate(c, b, sings, a, h, mom, 0);
            }
            row[i - 1] += mom.m0 - mom.m1;
            row[i] += mom.m1;
        }
    }

private:
    // Handles [0, t_1] when it needs special treatment. Returns false to fall
    // through to the generic cell code.
    bool first_cell(double t, const std::vector<Singularity>& sings, double* row) const {
        const bool origin = opts_.origin_exponent.has_value();
        const double t1 = nodes_[1];
        if (!origin && (closed_form_ || origin_weight_exp_ == 0.0)) return false;
        const double gamma = origin ? *opts_.origin_exponent : 0.0;
        if (only_origin_point_ && !opts_.force_gauss) {
            const double e = origin_weight_exp_;
            if (origin) {
                row[1] += std::pow(t1, -gamma) * power_moment(e + gamma, beta_, t, t1);
            } else {
                const double m0 = power_moment(e, beta_, t, t1);
                const double m1 = power_moment(e + 1.0, beta_, t, t1) / t1;
                row[0] += m0 - m1;
                row[1] += m1;
            }
            return true;
        }
        if (!origin) return false;
        std::vector<Singularity> with_origin = sings;
        if (with_origin.empty()) with_origin.push_back({t, beta_ - 1.0});
        with_origin.push_back({0.0, gamma});
        Moments mom;
        double c = 0.0;
        for (double p : w_.points) {
            if (p > 0.0 && p < t1) {
                integrate(c, p, with_origin, 0.0, t1, mom, 0);
                c = p;
            }
        }
        integrate(c, t1, with_origin, 0.0, t1, mom, 0);
        row[1] += std::pow(t1, -gamma) * mom.m0;
        return true;
    }

    const std::vector<double>& nodes_;
    const WeightSpec& w_;
    double beta_;
    QuadratureOptions opts_;
    bool closed_form_ = false;
    bool only_origin_point_ = false;
    double origin_weight_exp_ = 0.0;
};

}  // namespace

WeightTable product_weights(MeshPtr mesh, const WeightSpec& w, double beta, const QuadratureOptions& opts) {
    WeightTable table(mesh, beta);
    RowBuilder builder(*mesh, w, beta, opts);
    const std::size_t n = mesh->nodes.size();
    parallel_for(0, n, [&](std::size_t k) { builder.fill(k, table.row(k)); });
    return table;
}

std::vector<double> product_weights_row(const Mesh& mesh, const WeightSpec& w, double beta, std::size_t k,
                                        const QuadratureOptions& opts) {
    if (k >= mesh.nodes.size()) throw UsageError("product_weights_row: row index out of range");
    RowBuilder builder(mesh, w, beta, opts);
    std::vector<double> row(k + 1, 0.0);
    builder.fill(k, row.data());
    return row;
}

ReverseWeights reverse_weights(const Mesh& mesh, double beta) {
    auto reflected = std::make_shared<Mesh>();
    const double T = mesh.T();
    reflected->nodes.resize(mesh.nodes.size());
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        reflected->nodes[i] = T - mesh.nodes[mesh.nodes.size() - 1 - i];
    }
    reflected->nodes.front() = 0.0;
    for (double a : mesh.anchors) reflected->anchors.push_back(T - a);
    std::sort(reflected->anchors.begin(), reflected->anchors.end());
    reflected->grading = mesh.grading;
    return ReverseWeights(product_weights(reflected, WeightSpec{}, beta));
}

ConvolutionResult apply_convolution(const WeightTable& table, const GridFunction& phi, std::size_t k) {
    if (table.mesh() != phi.mesh && table.mesh()->nodes != phi.mesh->nodes) {
        throw UsageError("apply_convolution: mesh mismatch");
    }
    if (k >= table.rows()) throw UsageError("apply_convolution: node index out of range");
    ConvolutionResult res;
    res.value = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(phi.dim()));
    const double* row = table.row(k);
    for (std::size_t j = 0; j <= k; ++j) {
        if (row[j] == 0.0) continue;
        if (phi.censored[j]) {
            res.censored = true;
            continue;
        }
        res.value += row[j] * phi.values.col(static_cast<Eigen::Index>(j));
    }
    return res;
}

}  // namespace singvolt
