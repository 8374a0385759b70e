#include "singvolt/pmp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "singvolt/csv.hpp"
#include "singvolt/errors.hpp"
#include "singvolt/linear_resolvent.hpp"
#include "singvolt/parallel.hpp"

namespace singvolt {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool origin_singular(const ProblemSpec& spec) {
    const auto& sp = spec.free_term.singular_points;
    return spec.free_term.origin_exponent.has_value() || std::find(sp.begin(), sp.end(), 0.0) != sp.end();
}

const CostSpec& require_cost(const ProblemSpec& spec, const char* who) {
    if (!spec.cost) throw UsageError(std::string(who) + ": problem has no cost");
    return *spec.cost;
}

double fd_step(double x) { return 1e-6 * std::max(1.0, std::abs(x)); }

Mat f0_jacobian(const ProblemSpec& spec, double t, double s, const Vec& y, const Vec& u) {
    if (spec.generator.f0_y) return spec.generator.f0_y(t, s, y, u);
    const Index n = y.size();
    Mat J(n, n);
    for (Index c = 0; c < n; ++c) {
        Vec yp = y, ym = y;
        const double h = fd_step(y(c));
        yp(c) += h;
        ym(c) -= h;
        J.col(c) = (spec.generator.f0(t, s, yp, u) - spec.generator.f0(t, s, ym, u)) / (2.0 * h);
    }
    return J;
}

Vec g_gradient(const CostSpec& cost, double t, const Vec& y, const Vec& u) {
    if (cost.g_y) return cost.g_y(t, y, u);
    Vec out(y.size());
    for (Index c = 0; c < y.size(); ++c) {
        Vec yp = y, ym = y;
        const double h = fd_step(y(c));
        yp(c) += h;
        ym(c) -= h;
        out(c) = (cost.g(t, yp, u) - cost.g(t, ym, u)) / (2.0 * h);
    }
    return out;
}

Vec h_gradient(const CostTerm& term, const Vec& y) {
    if (term.h_y) return term.h_y(y);
    Vec out(y.size());
    for (Index c = 0; c < y.size(); ++c) {
        Vec yp = y, ym = y;
        const double h = fd_step(y(c));
        yp(c) += h;
        ym(c) -= h;
        out(c) = (term.h(yp) - term.h(ym)) / (2.0 * h);
    }
    return out;
}

std::size_t cost_node(const Mesh& mesh, double t) {
    const std::size_t k = mesh.find_node(t);
    if (k == Mesh::npos) throw UsageError("cost time " + format_double(t) + " is not a mesh node");
    return k;
}

// Nodes the linear systems leave out.
std::vector<bool> skip_mask(const Discretization& disc, const GridFunction& y) {
    std::vector<bool> skip = disc.excluded;
    for (std::size_t k = 0; k < skip.size(); ++k) {
        if (y.censored[k] && !skip[k]) throw CensoredError("state is censored at node " + std::to_string(k));
    }
    return skip;
}

double inner_mu(const std::vector<double>& mu, const GridFunction& a, const GridFunction& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (a.censored[k] || b.censored[k]) continue;
        s += mu[k] * a.at(k).dot(b.at(k));
    }
    return s;
}

double norm_mu(const std::vector<double>& mu, const GridFunction& a) { return std::sqrt(inner_mu(mu, a, a)); }

std::vector<std::size_t> initial_indices(const ProblemSpec& spec, std::size_t nodes) {
    return std::vector<std::size_t>(nodes, spec.controls.u0_index);
}

}  // namespace

double eval_cost(const ProblemSpec& spec, const GridFunction& y, const GridFunction& u) {
    const CostSpec& cost = require_cost(spec, "eval_cost");
    const Mesh& mesh = *y.mesh;
    const auto mu = mesh.trapezoid_weights();
    const bool skip0 = origin_singular(spec);
    double J = 0.0;
    if (cost.g) {
        for (std::size_t k = 0; k < y.size(); ++k) {
            if (y.censored[k]) {
                if (k == 0 && skip0) continue;
                throw CensoredError("eval_cost: state censored at node " + std::to_string(k));
            }
            J += mu[k] * cost.g(mesh.nodes[k], y.at(k), u.at(k));
        }
    }
    for (const auto& term : cost.terms) {
        const std::size_t k = cost_node(mesh, term.t);
        if (y.censored[k]) throw CensoredError("eval_cost: state censored at cost time " + format_double(term.t));
        J += term.h(y.at(k));
    }
    return J;
}

double eval_cost(const ProblemSpec& spec, const StateSolution& y, const GridFunction& u) {
    return eval_cost(spec, y.y, u);
}

AdjointTrajectory solve_adjoint(const ProblemSpec& spec, const GridFunction& ystar, const GridFunction& ustar,
                                const Discretization& disc) {
    const CostSpec& cost = require_cost(spec, "solve_adjoint");
    const Mesh& mesh = *disc.mesh;
    const auto& t = mesh.nodes;
    const std::size_t N = t.size() - 1;
    const std::size_t n = spec.state_dim;
    const std::vector<bool> skip = skip_mask(disc, ystar);
    const auto& mu = disc.mu;

    GridFunction xi(disc.mesh, n);
    for (std::size_t j = 0; j <= N; ++j) {
        if (skip[j]) continue;
        if (cost.g) xi.values.col(ix(j)) = -g_gradient(cost, t[j], ystar.at(j), ustar.at(j));
    }
    for (const auto& term : cost.terms) {
        const std::size_t kJ = cost_node(mesh, term.t);
        const Vec hy = h_gradient(term, ystar.at(kJ));
        for (std::size_t j = 0; j <= kJ; ++j) {
            if (skip[j]) continue;
            const double w = disc.table(kJ, j);
            if (w == 0.0) continue;
            xi.values.col(ix(j)) -= (w / mu[j]) * (f0_jacobian(spec, t[kJ], t[j], ystar.at(j), ustar.at(j)).transpose() * hy);
        }
    }
    for (std::size_t j = 0; j <= N; ++j) {
        if (skip[j]) {
            xi.values.col(ix(j)).setConstant(kNaN);
            xi.censored[j] = true;
        }
    }
    const LinearSystem sys(disc.table, n, [&](std::size_t k, std::size_t j) {
        return f0_jacobian(spec, t[k], t[j], ystar.at(j), ustar.at(j));
    }, skip);
    return AdjointTrajectory{sys.solve_transpose(xi, mu), xi};
}

Hamiltonian::Hamiltonian(const ProblemSpec& spec, const Discretization& disc, const GridFunction& ystar,
                         const GridFunction& psi)
    : spec_(spec), disc_(disc), y_(ystar), psi_(psi) {
    const CostSpec& cost = require_cost(spec, "Hamiltonian");
    for (const auto& term : cost.terms) {
        const std::size_t kJ = cost_node(*disc.mesh, term.t);
        terms_.emplace_back(kJ, h_gradient(term, ystar.at(kJ)));
    }
}

bool Hamiltonian::defined(std::size_t j) const { return !disc_.excluded[j] && !y_.censored[j] && !psi_.censored[j]; }

double Hamiltonian::operator()(std::size_t j, const Vec& u) const {
    if (!defined(j)) return kNaN;
    const auto& t = disc_.mesh->nodes;
    const auto& mu = disc_.mu;
    const std::size_t N = t.size() - 1;
    const Vec yj = y_.at(j);
    double H = 0.0;
    if (!spec_.generator.depends_on_t) {
        Vec lam = Vec::Zero(ix(spec_.state_dim));
        for (std::size_t k = j; k <= N; ++k) {
            if (psi_.censored[k]) continue;
            lam += (mu[k] * disc_.table(k, j) / mu[j]) * psi_.values.col(ix(k));
        }
        for (const auto& [kJ, hy] : terms_) {
            if (j <= kJ) lam -= (disc_.table(kJ, j) / mu[j]) * hy;
        }
        H = lam.dot(spec_.generator.f0(t[j], t[j], yj, u));
    } else {
        for (std::size_t k = j; k <= N; ++k) {
            const double c = mu[k] * disc_.table(k, j) / mu[j];
            if (c == 0.0 || psi_.censored[k]) continue;
            H += c * psi_.at(k).dot(spec_.generator.f0(t[k], t[j], yj, u));
        }
        for (const auto& [kJ, hy] : terms_) {
            if (j > kJ) continue;
            const double c = disc_.table(kJ, j) / mu[j];
            if (c != 0.0) H -= c * hy.dot(spec_.generator.f0(t[kJ], t[j], yj, u));
        }
    }
    if (spec_.cost->g) H -= spec_.cost->g(t[j], yj, u);
    return H;
}

MaxConditionResult max_condition(const ProblemSpec& spec, const Discretization& disc, const GridFunction& ystar,
                                 const GridFunction& ustar, const GridFunction& psi) {
    const Hamiltonian H(spec, disc, ystar, psi);
    const std::size_t nodes = disc.mesh->nodes.size();
    const auto& cands = spec.controls.candidates;
    MaxConditionResult out;
    out.residual.assign(nodes, kNaN);
    out.best.assign(nodes, 0);
    parallel_for(0, nodes, [&](std::size_t j) {
        if (!H.defined(j)) return;
        const double here = H(j, ustar.at(j));
        double top = -std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t c = 0; c < cands.size(); ++c) {
            const double v = H(j, cands[c]);
            // Differences at round-off level count as ties.
            if (c == 0 || v > top + 1e-13 * (1.0 + std::abs(top))) {
                top = v;
                arg = c;
            }
        }
        out.best[j] = arg;
        out.residual[j] = std::max(0.0, top - here);
    });
    for (double r : out.residual) {
        if (std::isfinite(r)) out.worst = std::max(out.worst, r);
    }
    return out;
}

std::string PmpReport::to_text() const {
    std::ostringstream os;
    os << "cost: " << format_double(J) << '\n';
    os << "converged: " << (converged ? "yes" : "no") << '\n';
    os << "censored: " << (censored ? "yes" : "no") << '\n';
    os << "worst_residual: " << format_double(max_condition.worst) << '\n';
    os << "sweeps: " << log.size() << '\n';
    for (const auto& e : log) {
        os << "sweep[" << e.sweep << "]: J=" << format_double(e.J) << " worst=" << format_double(e.worst_residual)
           << " changed=" << e.nodes_changed << " accepted=" << (e.accepted ? "yes" : "no") << '\n';
    }
    os << "spikes: " << spikes.size() << '\n';
    double worst_spike = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < spikes.size(); ++i) {
        const auto& s = spikes[i];
        worst_spike = std::min(worst_spike, s.value);
        os << "spike[" << i << "]: delta=" << format_double(s.delta) << " measure=" << format_double(s.measure)
           << " quotient=" << format_double(s.value) << '\n';
    }
    if (!spikes.empty()) os << "min_spike_quotient: " << format_double(worst_spike) << '\n';
    return os.str();
}

void PmpReport::write_csv(std::ostream& os) const {
    const std::size_t m = control.dim();
    const std::size_t n = adjoint.psi.dim();
    std::vector<std::string> header{"node", "t"};
    for (std::size_t i = 0; i < m; ++i) header.push_back("u" + std::to_string(i + 1));
    header.push_back("residual");
    for (std::size_t i = 0; i < n; ++i) header.push_back("psi" + std::to_string(i + 1));
    std::vector<std::vector<double>> rows;
    const auto& t = disc->mesh->nodes;
    for (std::size_t k = 0; k < t.size(); ++k) {
        std::vector<double> r{static_cast<double>(k), t[k]};
        for (std::size_t i = 0; i < m; ++i) r.push_back(control(i, k));
        r.push_back(max_condition.residual.empty() ? kNaN : max_condition.residual[k]);
        for (std::size_t i = 0; i < n; ++i) r.push_back(adjoint.psi(i, k));
        rows.push_back(std::move(r));
    }
    singvolt::write_csv(os, header, rows);
}

PmpReport analyze_control(const ProblemSpec& spec, std::shared_ptr<const Discretization> disc,
                          const std::vector<std::size_t>& control_index, const SolveOptions& opts) {
    PmpReport rep;
    rep.disc = disc;
    rep.control_index = control_index;
    rep.control = control_from_indices(disc->mesh, spec.controls, control_index);
    rep.state = solve_state(spec, rep.control, *disc, opts);
    if (rep.state.censored_from) {
        rep.censored = true;
        return rep;
    }
    rep.J = eval_cost(spec, rep.state, rep.control);
    rep.adjoint = solve_adjoint(spec, rep.state.y, rep.control, *disc);
    rep.max_condition = max_condition(spec, *disc, rep.state.y, rep.control, rep.adjoint.psi);
    return rep;
}

PmpReport fb_sweep(const ProblemSpec& spec, std::shared_ptr<const Discretization> disc, const SweepOptions& opts) {
    require_cost(spec, "fb_sweep");
    if (spec.controls.size() == 0) throw UsageError("fb_sweep: empty control set");
    const std::size_t nodes = disc->mesh->nodes.size();
    std::vector<std::size_t> idx = opts.initial.empty() ? initial_indices(spec, nodes) : opts.initial;
    if (idx.size() != nodes) throw UsageError("fb_sweep: initial control has the wrong length");

    PmpReport best = analyze_control(spec, disc, idx, opts.solve);
    if (best.censored) return best;
    std::vector<SweepEntry> log;
    log.push_back({0, best.J, best.max_condition.worst, 0, true});
    double fraction = opts.fraction;
    bool converged = false;
    for (std::size_t sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
        const auto& mc = best.max_condition;
        std::vector<std::size_t> improvable;
        for (std::size_t j = 0; j < nodes; ++j) {
            if (std::isfinite(mc.residual[j]) && mc.residual[j] > 0.0 && mc.best[j] != best.control_index[j]) {
                improvable.push_back(j);
            }
        }
        if (improvable.empty()) {
            converged = true;
            break;
        }
        std::stable_sort(improvable.begin(), improvable.end(),
                         [&](std::size_t a, std::size_t b) { return mc.residual[a] > mc.residual[b]; });
        const auto take = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(improvable.size()))));
        std::vector<std::size_t> trial = best.control_index;
        for (std::size_t i = 0; i < std::min(take, improvable.size()); ++i) trial[improvable[i]] = mc.best[improvable[i]];
        PmpReport next = analyze_control(spec, disc, trial, opts.solve);
        SweepEntry e{sweep, next.censored ? kNaN : next.J, next.max_condition.worst, std::min(take, improvable.size()),
                     false};
        if (!next.censored && next.J < best.J) {
            e.accepted = true;
            log.push_back(e);
            best = std::move(next);
            continue;
        }
        log.push_back(e);
        if (take == 1) break;  // even a single switch does not decrease J
        fraction *= 0.5;
    }
    best.log = std::move(log);
    best.converged = converged;
    return best;
}

std::vector<std::size_t> spike_nodes(const SpikeSet& spike, const Mesh& mesh, double* measure) {
    if (!(spike.delta > 0.0 && spike.delta < 1.0)) throw DomainError("spike set: delta must lie in (0, 1)");
    const auto mu = mesh.trapezoid_weights();
    std::vector<bool> in(mesh.nodes.size(), false);
    for (const auto& [a, b] : spike.intervals) {
        if (!(a <= b)) throw DomainError("spike set: interval with a > b");
        for (std::size_t k = 0; k < mesh.nodes.size(); ++k) {
            if (mesh.nodes[k] >= a && mesh.nodes[k] <= b) in[k] = true;
        }
    }
    std::vector<std::size_t> out;
    double m = 0.0;
    for (std::size_t k = 0; k < in.size(); ++k) {
        if (in[k]) {
            out.push_back(k);
            m += mu[k];
        }
    }
    const double target = spike.delta * mesh.T();
    const double tol = mesh.max_cell() * static_cast<double>(std::max<std::size_t>(1, spike.intervals.size()));
    if (std::abs(m - target) > tol) {
        throw MeasureMismatchError("spike set covers measure " + format_double(m) + ", expected " +
                                   format_double(target) + " to within " + format_double(tol));
    }
    if (measure) *measure = m;
    return out;
}

std::vector<SpikeSet> sample_spikes(const Mesh& mesh, double delta, std::size_t count, std::uint64_t seed) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("sample_spikes: delta must lie in (0, 1)");
    const auto mu = mesh.trapezoid_weights();
    const std::size_t nodes = mesh.nodes.size();
    std::mt19937_64 rng(seed);
    std::vector<SpikeSet> out;
    std::size_t attempts = 0;
    while (out.size() < count) {
        if (++attempts > 100 * count + 100) throw MeasureMismatchError("sample_spikes: mesh too coarse for delta");
        const std::size_t runs = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
        const double share = delta * mesh.T() / static_cast<double>(runs);
        std::vector<bool> used(nodes, false);
        SpikeSet s;
        s.delta = delta;
        bool ok = true;
        for (std::size_t r = 0; r < runs && ok; ++r) {
            const std::size_t start = std::uniform_int_distribution<std::size_t>(0, nodes - 1)(rng);
            if (used[start]) {
                ok = false;
                break;
            }
            std::size_t lo = start, hi = start;
            double m = mu[start];
            // Grow toward the side with room, keeping clear of other runs.
            while (m < share) {
                const bool can_hi = hi + 1 < nodes && !used[hi + 1] && !(hi + 2 < nodes && used[hi + 2]);
                const bool can_lo = lo > 0 && !used[lo - 1] && !(lo > 1 && used[lo - 2]);
                if (!can_hi && !can_lo) break;
                const double add_hi = can_hi ? mu[hi + 1] : std::numeric_limits<double>::infinity();
                const double add_lo = can_lo ? mu[lo - 1] : std::numeric_limits<double>::infinity();
                const bool go_hi = can_hi && (!can_lo || std::uniform_int_distribution<int>(0, 1)(rng) == 1);
                const double add = go_hi ? add_hi : add_lo;
                if (m + add - share > share - m) break;
                if (go_hi) {
                    ++hi;
                } else {
                    --lo;
                }
                m += add;
            }
            for (std::size_t k = lo; k <= hi; ++k) used[k] = true;
            s.intervals.emplace_back(mesh.nodes[lo], mesh.nodes[hi]);
        }
        if (!ok) continue;
        try {
            spike_nodes(s, mesh);
        } catch (const MeasureMismatchError&) {
            continue;
        }
        out.push_back(std::move(s));
    }
    return out;
}

GridFunction spiked_control(const GridFunction& ustar, const GridFunction& u_alt, const std::vector<std::size_t>& nodes) {
    GridFunction u = ustar;
    for (std::size_t k : nodes) u.values.col(ix(k)) = u_alt.values.col(ix(k));
    return u;
}

SpikeOutcome spike_check(const ProblemSpec& spec, const PmpReport& report, const SpikeSet& spike,
                         const GridFunction& u_alt, const SolveOptions& opts) {
    if (report.censored) throw CensoredError("spike_check: report state is censored");
    SpikeOutcome out;
    out.delta = spike.delta;
    const auto nodes = spike_nodes(spike, *report.disc->mesh, &out.measure);
    const GridFunction u = spiked_control(report.control, u_alt, nodes);
    const StateSolution y = solve_state(spec, u, *report.disc, opts);
    if (y.censored_from) throw CensoredError("spike_check: spiked state is censored");
    out.value = (eval_cost(spec, y, u) - report.J) / spike.delta;
    return out;
}

GridFunction solve_variational(const ProblemSpec& spec, const GridFunction& ystar, const GridFunction& ustar,
                               const GridFunction& u_alt, const Discretization& disc) {
    const auto& t = disc.mesh->nodes;
    const std::size_t N = t.size() - 1;
    const std::size_t n = spec.state_dim;
    const std::vector<bool> skip = skip_mask(disc, ystar);
    GridFunction forcing(disc.mesh, n);
    std::vector<Vec> diff(N + 1);
    const bool cache = !spec.generator.depends_on_t;
    for (std::size_t j = 0; j <= N; ++j) {
        if (skip[j] || cache == false) continue;
        diff[j] = spec.generator.f0(t[j], t[j], ystar.at(j), u_alt.at(j)) -
                  spec.generator.f0(t[j], t[j], ystar.at(j), ustar.at(j));
    }
    for (std::size_t k = 0; k <= N; ++k) {
        if (skip[k]) {
            forcing.values.col(ix(k)).setConstant(kNaN);
            forcing.censored[k] = true;
            continue;
        }
        Vec acc = Vec::Zero(ix(n));
        for (std::size_t j = 0; j <= k; ++j) {
            const double w = disc.table(k, j);
            if (w == 0.0 || skip[j]) continue;
            if ((u_alt.at(j) - ustar.at(j)).isZero(0.0)) continue;
            if (cache) {
                acc += w * diff[j];
            } else {
                acc += w * (spec.generator.f0(t[k], t[j], ystar.at(j), u_alt.at(j)) -
                            spec.generator.f0(t[k], t[j], ystar.at(j), ustar.at(j)));
            }
        }
        forcing.values.col(ix(k)) = acc;
    }
    const LinearSystem sys(disc.table, n, [&](std::size_t k, std::size_t j) {
        return f0_jacobian(spec, t[k], t[j], ystar.at(j), ustar.at(j));
    }, skip);
    return sys.solve_forward(forcing);
}

FirstOrder first_order(const ProblemSpec& spec, const PmpReport& report, const GridFunction& u_alt) {
    if (report.censored) throw CensoredError("first_order: report state is censored");
    const CostSpec& cost = require_cost(spec, "first_order");
    const Discretization& disc = *report.disc;
    const auto& t = disc.mesh->nodes;
    const auto& mu = disc.mu;
    const GridFunction& y = report.state.y;
    const GridFunction& us = report.control;
    const GridFunction Y = solve_variational(spec, y, us, u_alt, disc);
    FirstOrder fo;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (Y.censored[k]) continue;
        if (cost.g) {
            fo.via_state += mu[k] * (g_gradient(cost, t[k], y.at(k), us.at(k)).dot(Y.at(k)) +
                                     cost.g(t[k], y.at(k), u_alt.at(k)) - cost.g(t[k], y.at(k), us.at(k)));
        }
    }
    for (const auto& term : cost.terms) {
        const std::size_t kJ = cost_node(*disc.mesh, term.t);
        fo.via_state += h_gradient(term, y.at(kJ)).dot(Y.at(kJ));
    }
    const Hamiltonian H(spec, disc, y, report.adjoint.psi);
    for (std::size_t j = 0; j < t.size(); ++j) {
        if (!H.defined(j)) continue;
        if ((u_alt.at(j) - us.at(j)).isZero(0.0)) continue;
        fo.via_adjoint -= mu[j] * (H(j, u_alt.at(j)) - H(j, us.at(j)));
    }
    // Forcing F = (I - M) Y recovers the variational source exactly.
    const std::vector<bool> skip = disc.excluded;
    const LinearSystem sys(disc.table, spec.state_dim, [&](std::size_t k, std::size_t j) {
        return f0_jacobian(spec, t[k], t[j], y.at(j), us.at(j));
    }, skip);
    GridFunction F = Y;
    F.values -= sys.apply(Y).values;
    fo.adjoint_pairing = inner_mu(mu, report.adjoint.psi, F);
    fo.state_pairing = inner_mu(mu, report.adjoint.xi, Y);
    fo.psi_norm = norm_mu(mu, report.adjoint.psi);
    fo.forcing_norm = norm_mu(mu, F);
    return fo;
}

std::vector<std::size_t> piecewise_indices(const Mesh& mesh, std::size_t intervals,
                                           const std::vector<std::size_t>& values) {
    if (values.size() != intervals || intervals == 0) throw UsageError("piecewise_indices: one value per interval");
    std::vector<std::size_t> idx(mesh.nodes.size());
    const double T = mesh.T();
    for (std::size_t k = 0; k < idx.size(); ++k) {
        auto i = static_cast<std::size_t>(std::floor(mesh.nodes[k] / T * static_cast<double>(intervals)));
        idx[k] = values[std::min(i, intervals - 1)];
    }
    return idx;
}

BruteForceResult brute_force(const ProblemSpec& spec, const Discretization& disc, std::size_t intervals,
                             const SolveOptions& opts) {
    require_cost(spec, "brute_force");
    const std::size_t C = spec.controls.size();
    if (C == 0 || intervals == 0) throw UsageError("brute_force: empty search space");
    std::size_t total = 1;
    for (std::size_t i = 0; i < intervals; ++i) {
        if (total > std::numeric_limits<std::size_t>::max() / C) throw UsageError("brute_force: search space too large");
        total *= C;
    }
    auto digits = [&](std::size_t code) {
        std::vector<std::size_t> d(intervals);
        for (std::size_t i = intervals; i-- > 0;) {
            d[i] = code % C;
            code /= C;
        }
        return d;
    };
    std::mutex m;
    double best_J = std::numeric_limits<double>::infinity();
    std::size_t best_code = total;
    std::size_t evaluated = 0;
    parallel_for(0, total, [&](std::size_t code) {
        const auto idx = piecewise_indices(*disc.mesh, intervals, digits(code));
        const GridFunction u = control_from_indices(disc.mesh, spec.controls, idx);
        double J = std::numeric_limits<double>::infinity();
        try {
            const StateSolution y = solve_state(spec, u, disc, opts);
            if (!y.censored_from) J = eval_cost(spec, y, u);
        } catch (const IterationError&) {
        } catch (const CensoredError&) {
        }
        std::lock_guard lock(m);
        ++evaluated;
        if (J < best_J || (J == best_J && code < best_code)) {
            best_J = J;
            best_code = code;
        }
    });
    if (best_code == total) throw IterationError("brute_force: no control tuple produced a finite cost");
    return BruteForceResult{best_J, digits(best_code), evaluated};
}

}  // namespace singvolt
