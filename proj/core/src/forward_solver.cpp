#include "singvolt/forward_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "singvolt/errors.hpp"
#include "singvolt/regularity.hpp"

namespace singvolt {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

bool origin_singular(const ProblemSpec& spec) {
    const auto& sp = spec.free_term.singular_points;
    return spec.free_term.origin_exponent.has_value() || std::find(sp.begin(), sp.end(), 0.0) != sp.end();
}

}  // namespace

Mesh default_mesh(const ProblemSpec& spec, std::size_t N, std::optional<double> r) {
    const double beta = spec.kernel.beta;
    const double grading = r.value_or(std::max(2.0, 2.0 / beta));
    std::vector<double> anchors{0.0};
    for (double p : spec.weight.points) anchors.push_back(p);
    for (double p : spec.free_term.singular_points) anchors.push_back(p);
    std::vector<double> required;
    if (spec.cost) {
        for (const auto& term : spec.cost->terms) required.push_back(term.t);
    }
    return build_mesh(spec.kernel.T, N, anchors, grading, required);
}

Discretization discretize(const ProblemSpec& spec, MeshPtr mesh, bool force_gauss) {
    Discretization d;
    d.mesh = mesh;
    QuadratureOptions qo;
    qo.force_gauss = force_gauss;
    d.excluded.assign(mesh->nodes.size(), false);
    if (origin_singular(spec)) {
        qo.origin_exponent = spec.free_term.origin_exponent.value_or(0.0);
        d.excluded[0] = true;
    }
    d.table = product_weights(mesh, spec.weight, spec.kernel.beta, qo);
    d.mu = mesh->trapezoid_weights();
    return d;
}

Discretization discretize(const ProblemSpec& spec, std::size_t N, std::optional<double> r, bool force_gauss) {
    return discretize(spec, std::make_shared<Mesh>(default_mesh(spec, N, r)), force_gauss);
}

GridFunction constant_control(MeshPtr mesh, const Vec& v) {
    GridFunction u(mesh, static_cast<std::size_t>(v.size()));
    for (Index k = 0; k < u.values.cols(); ++k) u.values.col(k) = v;
    return u;
}

GridFunction control_from_indices(MeshPtr mesh, const ControlSpace& cs, const std::vector<std::size_t>& idx) {
    if (idx.size() != mesh->nodes.size()) throw UsageError("control_from_indices: one index per node required");
    GridFunction u(mesh, cs.dim());
    for (std::size_t k = 0; k < idx.size(); ++k) u.values.col(ix(k)) = cs.candidates.at(idx[k]);
    return u;
}

namespace {

class StateSolver {
public:
    StateSolver(const ProblemSpec& spec, const GridFunction& u, const Discretization& disc, const SolveOptions& opts)
        : spec_(spec), u_(u), disc_(disc), opts_(opts), nodes_(disc.mesh->nodes), n_(spec.state_dim),
          N_(nodes_.size() - 1), y_(disc.mesh, spec.state_dim), eta_(n_, N_ + 1),
          F_(static_cast<Index>(n_), static_cast<Index>(N_ + 1)) {
        if (u.size() != N_ + 1) throw UsageError("solve_state: control not sampled on the solver mesh");
        if (!spec.generator.f0 || !spec.free_term.eta) throw UsageError("solve_state: incomplete problem");
        if (!(opts.picard_tol > 0.0) || opts.picard_max == 0) throw UsageError("solve_state: bad tolerances");
        cache_F_ = !spec.generator.depends_on_t;
        F_.setZero();
    }

    StateSolution run() {
        StateSolution sol;
        std::size_t first = 0;
        for (std::size_t k = 0; k <= N_; ++k) {
            if (disc_.excluded[k]) {
                y_.values.col(ix(k)).setConstant(std::numeric_limits<double>::quiet_NaN());
                y_.censored[k] = true;
                first = k + 1;
                continue;
            }
            eta_.col(ix(k)) = spec_.free_term.eta(nodes_[k]);
        }
        const auto windows = plan_windows(first);
        for (const auto& [s, e] : windows) {
            if (sol.censored_from) break;
            solve_window(s, e, 0, sol);
        }
        sol.y = y_;
        const auto res = node_residuals(spec_, u_, disc_, y_);
        double acc = 0.0;
        double wsum = 0.0;
        const double p = spec_.p_norm;
        for (std::size_t k = 0; k <= N_; ++k) {
            if (y_.censored[k] || std::isnan(res[k])) continue;
            sol.max_node_residual = std::max(sol.max_node_residual, res[k]);
            acc += disc_.mu[k] * std::pow(res[k], p);
            wsum += disc_.mu[k];
        }
        sol.residual = wsum > 0.0 ? std::pow(acc / wsum, 1.0 / p) : 0.0;
        return sol;
    }

private:
    Vec f0_at(std::size_t k, std::size_t j, const Vec& yj) const {
        return spec_.generator.f0(nodes_[k], nodes_[j], yj, u_.at(j));
    }

    // History part sum_{j < s} W(k, j) F(k, j) for k in the window.
    Eigen::MatrixXd history(std::size_t s, std::size_t e) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(ix(n_), ix(e - s + 1));
        for (std::size_t k = s; k <= e; ++k) {
            const double* row = disc_.table.row(k);
            for (std::size_t j = 0; j < s; ++j) {
                if (row[j] == 0.0 || y_.censored[j]) continue;
                if (cache_F_) {
                    h.col(ix(k - s)) += row[j] * F_.col(ix(j));
                } else {
                    h.col(ix(k - s)) += row[j] * f0_at(k, j, y_.at(j));
                }
            }
        }
        return h;
    }

    std::vector<double> lipschitz_estimate(std::size_t first) const {
        std::vector<double> L(N_ + 1, 0.0);
        const auto& bounds = spec_.generator.bounds;
        for (std::size_t j = first; j <= N_; ++j) {
            if (bounds && bounds->L_bar) {
                L[j] = std::abs(bounds->L_bar(nodes_[j]));
            } else if (spec_.generator.f0_y) {
                const Vec e = eta_.col(ix(j));
                if (!e.allFinite()) continue;
                const Mat J = spec_.generator.f0_y(nodes_[j], nodes_[j], e, u_.at(j));
                L[j] = J.allFinite() ? J.lpNorm<Eigen::Infinity>() * static_cast<double>(n_) : 0.0;
            }
        }
        return L;
    }

    std::vector<std::pair<std::size_t, std::size_t>> plan_windows(std::size_t first) const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        if (first > N_) return out;
        const std::size_t count = N_ + 1 - first;
        if (opts_.window_count > 0) {
            const std::size_t w = std::min(opts_.window_count, count);
            for (std::size_t i = 0; i < w; ++i) {
                const std::size_t s = first + i * count / w;
                const std::size_t e = first + (i + 1) * count / w - 1;
                out.emplace_back(s, e);
            }
            return out;
        }
        const auto L = lipschitz_estimate(first);
        std::size_t s = first;
        while (s <= N_) {
            std::size_t e = s;
            while (e < N_) {
                const std::size_t k = e + 1;
                const double* row = disc_.table.row(k);
                double est = 0.0;
                for (std::size_t j = s; j <= k; ++j) est += row[j] * L[j];
                if (!(est < 0.5)) break;
                e = k;
            }
            out.emplace_back(s, e);
            s = e + 1;
        }
        return out;
    }

    bool over_cap(const Vec& v) const { return !v.allFinite() || v.lpNorm<Eigen::Infinity>() > opts_.blowup_cap; }

    void censor_from(std::size_t k, StateSolution& sol) {
        sol.censored_from = k;
        for (std::size_t j = k; j <= N_; ++j) y_.censored[j] = true;
    }

    void commit_F(std::size_t s, std::size_t e) {
        if (!cache_F_) return;
        for (std::size_t j = s; j <= e; ++j) {
            if (!y_.censored[j]) F_.col(ix(j)) = f0_at(j, j, y_.at(j));
        }
    }

    void solve_window(std::size_t s, std::size_t e, int depth, StateSolution& sol) {
        const Eigen::MatrixXd hist = history(s, e);
        const std::size_t m = e - s + 1;
        Eigen::MatrixXd cur(ix(n_), ix(m));
        for (std::size_t k = s; k <= e; ++k) cur.col(ix(k - s)) = eta_.col(ix(k)) + hist.col(ix(k - s));
        for (std::size_t k = s; k <= e; ++k) y_.values.col(ix(k)) = cur.col(ix(k - s));

        Eigen::MatrixXd Fw(ix(n_), ix(m));
        double prev_delta = std::numeric_limits<double>::infinity();
        int growth = 0;
        bool converged = false;
        std::size_t it = 0;
        for (; it < opts_.picard_max; ++it) {
            for (std::size_t j = s; j <= e && cache_F_; ++j) Fw.col(ix(j - s)) = f0_at(j, j, cur.col(ix(j - s)));
            Eigen::MatrixXd next(ix(n_), ix(m));
            for (std::size_t k = s; k <= e; ++k) {
                const double* row = disc_.table.row(k);
                Vec acc = eta_.col(ix(k)) + hist.col(ix(k - s));
                for (std::size_t j = s; j <= k; ++j) {
                    if (row[j] == 0.0) continue;
                    acc += row[j] * (cache_F_ ? Vec(Fw.col(ix(j - s))) : f0_at(k, j, cur.col(ix(j - s))));
                }
                next.col(ix(k - s)) = acc;
            }
            double delta = 0.0;
            bool finite = next.allFinite();
            for (std::size_t c = 0; c < m && finite; ++c) {
                const double diff = (next.col(ix(c)) - cur.col(ix(c))).lpNorm<Eigen::Infinity>();
                delta = std::max(delta, diff / (1.0 + next.col(ix(c)).lpNorm<Eigen::Infinity>()));
            }
            cur = next;
            for (std::size_t k = s; k <= e; ++k) y_.values.col(ix(k)) = cur.col(ix(k - s));
            if (opts_.observer) opts_.observer(s, e, y_);
            if (!finite) break;
            if (delta <= 0.5 * opts_.picard_tol) {
                converged = true;
                ++it;
                break;
            }
            growth = delta > prev_delta ? growth + 1 : 0;
            if (growth >= 3) break;
            prev_delta = delta;
        }

        if (converged) {
            sol.iterations_per_window.push_back(it);
            for (std::size_t k = s; k <= e; ++k) {
                if (over_cap(y_.at(k))) {
                    censor_from(k, sol);
                    return;
                }
            }
            commit_F(s, e);
            return;
        }
        if (depth < 8 && m > 1) {
            const std::size_t mid = s + m / 2 - 1;
            solve_window(s, mid, depth + 1, sol);
            if (!sol.censored_from) solve_window(mid + 1, e, depth + 1, sol);
            return;
        }
        newton_window(s, e, sol);
    }

    // Node-by-node Newton: the discrete system is lower triangular, so each
    // node only needs a local n x n solve.
    void newton_window(std::size_t s, std::size_t e, StateSolution& sol) {
        ++sol.newton_windows;
        std::size_t total_iters = 0;
        for (std::size_t k = s; k <= e; ++k) {
            const double* row = disc_.table.row(k);
            Vec c = eta_.col(ix(k));
            for (std::size_t j = 0; j < k; ++j) {
                if (row[j] == 0.0 || y_.censored[j]) continue;
                c += row[j] * ((cache_F_ && j < s) ? Vec(F_.col(ix(j))) : f0_at(k, j, y_.at(j)));
            }
            const double wkk = row[k];
            Vec y = c;
            auto G = [&](const Vec& v) { return Vec(v - c - wkk * f0_at(k, k, v)); };
            Vec g = G(y);
            bool ok = false;
            for (int iter = 0; iter < 100; ++iter) {
                ++total_iters;
                if (!g.allFinite()) break;
                const Mat J = Mat::Identity(ix(n_), ix(n_)) - wkk * spec_.generator.f0_y(nodes_[k], nodes_[k], y, u_.at(k));
                Eigen::FullPivLU<Mat> lu(J);
                if (!lu.isInvertible()) throw StepError("solve_state: singular local Jacobian at node " + std::to_string(k));
                const Vec step = lu.solve(g);
                double lambda = 1.0;
                Vec trial = y - step;
                Vec gt = G(trial);
                while (!(gt.norm() < g.norm()) && lambda > 1e-8) {
                    lambda *= 0.5;
                    trial = y - lambda * step;
                    gt = G(trial);
                }
                const double change = (trial - y).lpNorm<Eigen::Infinity>();
                y = trial;
                g = gt;
                if (over_cap(y)) break;
                if (change <= 0.1 * opts_.picard_tol * (1.0 + y.lpNorm<Eigen::Infinity>())) {
                    ok = true;
                    break;
                }
            }
            y_.values.col(ix(k)) = y;
            if (over_cap(y)) {
                censor_from(k, sol);
                sol.iterations_per_window.push_back(total_iters);
                return;
            }
            if (!ok) throw IterationError("solve_state: no convergence at node " + std::to_string(k));
            if (cache_F_) F_.col(ix(k)) = f0_at(k, k, y);
        }
        sol.iterations_per_window.push_back(total_iters);
    }

    const ProblemSpec& spec_;
    const GridFunction& u_;
    const Discretization& disc_;
    const SolveOptions& opts_;
    const std::vector<double>& nodes_;
    std::size_t n_;
    std::size_t N_;
    GridFunction y_;
    Eigen::MatrixXd eta_;
    Eigen::MatrixXd F_;
    bool cache_F_ = false;
};

}  // namespace

StateSolution solve_state(const ProblemSpec& spec, const GridFunction& u, const Discretization& disc,
                          const SolveOptions& opts) {
    StateSolver solver(spec, u, disc, opts);
    return solver.run();
}

StateSolution solve_state(const ProblemSpec& spec, const GridFunction& u, MeshPtr mesh, const SolveOptions& opts) {
    const Discretization disc = discretize(spec, std::move(mesh));
    return solve_state(spec, u, disc, opts);
}

std::vector<double> node_residuals(const ProblemSpec& spec, const GridFunction& u, const Discretization& disc,
                                   const GridFunction& y) {
    const auto& nodes = disc.mesh->nodes;
    const std::size_t N = nodes.size() - 1;
    std::vector<double> res(N + 1, std::numeric_limits<double>::quiet_NaN());
    std::vector<Vec> F;
    const bool cache = !spec.generator.depends_on_t;
    if (cache) {
        F.resize(N + 1);
        for (std::size_t j = 0; j <= N; ++j) {
            if (!y.censored[j]) F[j] = spec.generator.f0(nodes[j], nodes[j], y.at(j), u.at(j));
        }
    }
    for (std::size_t k = 0; k <= N; ++k) {
        if (y.censored[k]) continue;
        Vec acc = spec.free_term.eta(nodes[k]);
        const double* row = disc.table.row(k);
        bool dep_censored = false;
        for (std::size_t j = 0; j <= k; ++j) {
            if (row[j] == 0.0) continue;
            if (y.censored[j]) {
                dep_censored = true;
                continue;
            }
            acc += row[j] * (cache ? F[j] : spec.generator.f0(nodes[k], nodes[j], y.at(j), u.at(j)));
        }
        if (dep_censored) continue;
        const Vec yk = y.at(k);
        res[k] = (yk - acc).lpNorm<Eigen::Infinity>() / (1.0 + yk.lpNorm<Eigen::Infinity>());
    }
    return res;
}

NormResult discrete_norm_ex(const GridFunction& phi, double p, const WeightSpec* w) {
    if (!(p >= 1.0)) throw DomainError("discrete_norm: p must be at least 1 or infinity");
    const auto& nodes = phi.mesh->nodes;
    const std::size_t N = nodes.size() - 1;
    std::vector<double> val(N + 1, 0.0);
    std::vector<bool> ok(N + 1, false);
    for (std::size_t k = 0; k <= N; ++k) {
        if (phi.censored[k]) continue;
        const double weight = w ? eval_weight(*w, nodes[k]) : 1.0;
        const double v = weight * phi.at(k).norm();
        if (!std::isfinite(v)) continue;
        val[k] = v;
        ok[k] = true;
    }
    NormResult r;
    const bool inf = std::isinf(p);
    double acc = 0.0;
    bool any = false;
    for (std::size_t i = 1; i <= N; ++i) {
        if (!ok[i - 1] || !ok[i]) {
            ++r.excluded_cells;
            continue;
        }
        any = true;
        if (inf) {
            acc = std::max({acc, val[i - 1], val[i]});
        } else {
            acc += 0.5 * (nodes[i] - nodes[i - 1]) * (std::pow(val[i - 1], p) + std::pow(val[i], p));
        }
    }
    if (!any) throw CensoredError("discrete_norm: every cell is censored");
    r.value = inf ? acc : std::pow(acc, 1.0 / p);
    return r;
}

double discrete_norm(const GridFunction& phi, double p, const WeightSpec* w) {
    return discrete_norm_ex(phi, p, w).value;
}

std::vector<double> lipschitz_samples(const ProblemSpec& spec, const Discretization& disc, const GridFunction& u,
                                      const std::vector<const GridFunction*>& states) {
    const auto& nodes = disc.mesh->nodes;
    const std::size_t N = nodes.size() - 1;
    std::vector<double> L(N + 1, 0.0);
    const auto& bounds = spec.generator.bounds;
    for (std::size_t j = 0; j <= N; ++j) {
        if (disc.excluded[j]) continue;
        if (bounds && bounds->L_bar) {
            L[j] = std::abs(bounds->L_bar(nodes[j]));
            continue;
        }
        double best = 0.0;
        for (const GridFunction* st : states) {
            if (st->censored[j]) continue;
            for (std::size_t k : {j, std::min(j + 1, N), N}) {
                const Mat J = spec.generator.f0_y(nodes[k], nodes[j], st->at(j), u.at(j));
                if (J.allFinite()) best = std::max(best, J.operatorNorm());
            }
        }
        L[j] = best;
    }
    return L;
}

StabilityGap stability_gap(const ProblemSpec& spec, const GridFunction& u1, const GridFunction& u2,
                           const Discretization& disc, const SolveOptions& opts) {
    const StateSolution s1 = solve_state(spec, u1, disc, opts);
    const StateSolution s2 = solve_state(spec, u2, disc, opts);
    if (s1.censored_from || s2.censored_from) throw CensoredError("stability_gap: a solve was censored");
    const auto& nodes = disc.mesh->nodes;
    const std::size_t N = nodes.size() - 1;
    const double p = spec.p_norm;

    GridFunction diff(disc.mesh, spec.state_dim);
    GridFunction a(disc.mesh, 1);
    diff.values = s1.y.values - s2.y.values;
    for (std::size_t k = 0; k <= N; ++k) {
        diff.censored[k] = disc.excluded[k];
        a.censored[k] = disc.excluded[k];
        if (disc.excluded[k]) continue;
        Vec acc = Vec::Zero(static_cast<Index>(spec.state_dim));
        const double* row = disc.table.row(k);
        for (std::size_t j = 0; j <= k; ++j) {
            if (row[j] == 0.0) continue;
            acc += row[j] * (spec.generator.f0(nodes[k], nodes[j], s2.y.at(j), u1.at(j)) -
                             spec.generator.f0(nodes[k], nodes[j], s2.y.at(j), u2.at(j)));
        }
        a.values(0, static_cast<Index>(k)) = acc.norm();
    }

    StabilityGap gap;
    gap.lhs = discrete_norm(diff, p);
    gap.rhs = discrete_norm(a, p);
    if (gap.rhs == 0.0) {
        gap.K_hat = 1.0;
        return gap;
    }
    const auto Lv = lipschitz_samples(spec, disc, u1, {&s1.y, &s2.y});
    GridFunction L(disc.mesh, 1);
    for (std::size_t k = 0; k <= N; ++k) L.values(0, static_cast<Index>(k)) = Lv[k];

    // q must exceed 1/beta and, with weights, stay below every 1/(1 - alpha_i)
    // or the weighted L^q norm of L is infinite.
    double q = spec.generator.bounds ? spec.generator.bounds->q : std::numeric_limits<double>::infinity();
    if (!spec.weight.empty()) {
        double qmax = std::numeric_limits<double>::infinity();
        for (double al : spec.weight.exponents) {
            if (al < 1.0) qmax = std::min(qmax, 1.0 / (1.0 - al));
        }
        if (!(qmax > 1.0 / spec.kernel.beta)) {
            throw HypothesisError("stability_gap: no q with 1/beta < q < 1/(1 - alpha_i)");
        }
        if (q >= qmax) q = 0.5 * (1.0 / spec.kernel.beta + qmax);
    }
    const WeightSpec* w = spec.weight.empty() ? nullptr : &spec.weight;
    const GronwallBound bound = gronwall_constants(spec.kernel.beta, q, L, w);
    const GridFunction env = gronwall_envelope(bound, a, L, w);
    gap.K_hat = discrete_norm(env, p) / gap.rhs;
    return gap;
}

}  // namespace singvolt
