#include "singvolt/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "singvolt/errors.hpp"

namespace singvolt {

ControlSpace ControlSpace::box(const Vec& lower, const Vec& upper, const std::vector<std::size_t>& counts) {
    const auto m = static_cast<std::size_t>(lower.size());
    if (static_cast<std::size_t>(upper.size()) != m || counts.size() != m) {
        throw UsageError("control box: lower, upper and counts must have equal length");
    }
    ControlSpace cs;
    std::size_t total = 1;
    for (std::size_t c : counts) {
        if (c == 0) throw UsageError("control box: every axis needs at least one point");
        total *= c;
    }
    cs.candidates.reserve(total);
    std::vector<std::size_t> idx(m, 0);
    for (std::size_t n = 0; n < total; ++n) {
        Vec v(static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) {
            const auto ei = static_cast<Eigen::Index>(i);
            v[ei] = counts[i] == 1 ? lower[ei]
                                   : lower[ei] + (upper[ei] - lower[ei]) * static_cast<double>(idx[i]) /
                                                     static_cast<double>(counts[i] - 1);
        }
        cs.candidates.push_back(std::move(v));
        for (std::size_t i = m; i-- > 0;) {
            if (++idx[i] < counts[i]) break;
            idx[i] = 0;
        }
    }
    return cs;
}

ControlSpace ControlSpace::none() {
    ControlSpace cs;
    cs.candidates.emplace_back(Vec(0));
    return cs;
}

std::size_t ControlSpace::nearest(const Vec& v) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double d = distance(candidates[i], v);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

double eval_weight(const WeightSpec& w, double s, double T) {
    if (!(s >= 0.0) || !(s <= T)) throw DomainError("eval_weight: s outside [0, T]");
    double prod = 1.0;
    for (std::size_t i = 0; i < w.points.size(); ++i) {
        const double d = std::abs(s - w.points[i]);
        if (d == 0.0) return 0.0;
        prod *= std::pow(d, 1.0 - w.exponents[i]);
    }
    return prod;
}

Vec eval_full_kernel(const ProblemSpec& spec, double t, double s, const Vec& y, const Vec& u) {
    if (!(s < t)) throw DomainError("eval_full_kernel: requires s < t");
    const double w = eval_weight(spec.weight, s, spec.kernel.T);
    if (w == 0.0) throw SingularityError("eval_full_kernel: s is a weight point");
    const double denom = w * std::pow(t - s, 1.0 - spec.kernel.beta);
    return spec.generator.f0(t, s, y, u) / denom;
}

namespace {

std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

std::vector<Diagnostic> validate(const ProblemSpec& spec) {
    std::vector<Diagnostic> out;
    auto error = [&](std::string msg) { out.push_back({Severity::Error, std::move(msg)}); };
    auto warn = [&](std::string msg) { out.push_back({Severity::Warning, std::move(msg)}); };

    const double beta = spec.kernel.beta;
    const double T = spec.kernel.T;
    if (!(beta > 0.0 && beta < 1.0)) error("kernel: beta must lie in (0, 1)");
    if (!(T > 0.0)) error("kernel: T must be positive");
    if (spec.state_dim == 0) error("state dimension must be at least 1");
    if (spec.state_dim > 8) warn("state dimension above 8 is outside the tested range");
    if (!(spec.p_norm >= 1.0)) error("p must be at least 1");

    const auto& w = spec.weight;
    if (w.points.size() != w.exponents.size()) {
        error("weights: points and exponents differ in length");
    } else {
        for (std::size_t i = 0; i < w.points.size(); ++i) {
            if (i > 0 && !(w.points[i] > w.points[i - 1])) error("weights: points must be strictly increasing");
            if (!(w.points[i] >= 0.0 && w.points[i] <= T)) error("weights: point " + fmt_num(w.points[i]) + " outside [0, T]");
            const double a = w.exponents[i];
            if (!(a > 0.0 && a < 1.0)) {
                error("weights: exponent " + fmt_num(a) + " outside (0, 1)");
                continue;
            }
            // (1 - alpha_i) max(1/beta, p') < 1
            const double pprime = spec.p_norm > 1.0 ? spec.p_norm / (spec.p_norm - 1.0)
                                                    : std::numeric_limits<double>::infinity();
            const double lhs = (1.0 - a) * std::max(1.0 / beta, pprime);
            if (!(lhs < 1.0)) {
                warn("weights: 1/w not integrable enough at s = " + fmt_num(w.points[i]) +
                     " ((1 - alpha) max(1/beta, p/(p-1)) = " + fmt_num(lhs) + " >= 1)");
            }
        }
    }

    if (!spec.generator.f0) error("generator: f0 missing");
    if (!spec.generator.f0_y) error("generator: f0_y missing");
    if (!spec.free_term.eta) error("free term: eta missing");
    if (spec.free_term.origin_exponent) {
        const double g = *spec.free_term.origin_exponent;
        if (!(g > -1.0 && g <= 0.0)) error("free term: origin exponent must lie in (-1, 0]");
    }
    for (double p : spec.free_term.singular_points) {
        if (!(p >= 0.0 && p <= T)) error("free term: singular point outside [0, T]");
    }

    const auto& cs = spec.controls;
    if (cs.candidates.empty()) {
        error("controls: control space is empty");
    } else {
        if (cs.u0_index >= cs.candidates.size()) error("controls: u0 index out of range");
        for (const auto& c : cs.candidates) {
            if (c.size() != cs.candidates.front().size()) error("controls: candidates differ in dimension");
        }
        if (spec.generator.depends_on_u && cs.dim() == 0) {
            error("controls: generator depends on u but no controls are given");
        }
    }

    if (spec.cost) {
        const auto& terms = spec.cost->terms;
        if (!spec.cost->g || !spec.cost->g_y) error("cost: running cost g or its gradient missing");
        for (std::size_t j = 0; j < terms.size(); ++j) {
            const double tj = terms[j].t;
            if (!(tj > 0.0 && tj <= T)) error("cost: t_j = " + fmt_num(tj) + " outside (0, T]");
            if (j > 0 && !(tj > terms[j - 1].t)) error("cost: t_j must be strictly increasing");
            if (std::find(w.points.begin(), w.points.end(), tj) != w.points.end()) {
                error("cost: t_j = " + fmt_num(tj) + " coincides with a weight point; cost times must avoid them");
            }
            if (!terms[j].h || !terms[j].h_y) error("cost: point cost or its gradient missing");
        }
    }
    return out;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
    return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

}  // namespace singvolt
