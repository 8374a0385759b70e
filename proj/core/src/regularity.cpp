#include "singvolt/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "singvolt/csv.hpp"
#include "singvolt/errors.hpp"
#include "singvolt/quadrature.hpp"
#include "singvolt/special_functions.hpp"

namespace singvolt {

namespace {

using Index = Eigen::Index;

thread_local std::pair<std::size_t, std::size_t> g_convolutions{0, 0};

constexpr double kTol = 1e-12;

double conj_exponent(double q) { return std::isinf(q) ? 1.0 : q / (q - 1.0); }

// (b q - 1) / (q - 1), with the q -> infinity limit b.
double holder_arg(double b, double q) { return std::isinf(q) ? b : (b * q - 1.0) / (q - 1.0); }

double dot_row(const std::vector<double>& row, const GridFunction& f, std::size_t comp = 0) {
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] == 0.0 || f.censored[j]) continue;
        s += row[j] * f(comp, j);
    }
    return s;
}

}  // namespace

GronwallBound gronwall_constants(double beta, double q, const GridFunction& L, const WeightSpec* w) {
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("gronwall_constants: beta must lie in (0, 1)");
    if (!(q > 1.0 / beta)) throw HypothesisError("gronwall_constants: requires q > 1/beta");
    for (std::size_t j = 0; j < L.size(); ++j) {
        if (!L.censored[j] && L(0, j) < 0.0) throw DomainError("gronwall_constants: L must be nonnegative");
    }
    const Mesh& mesh = *L.mesh;
    const std::size_t N = mesh.nodes.size() - 1;
    GronwallBound b;
    b.beta = beta;
    b.q = q;
    b.T = mesh.T();
    const double gap = beta - (std::isinf(q) ? 0.0 : 1.0 / q);
    b.k = 1;
    while (beta + static_cast<double>(b.k) * gap < 1.0 - kTol) ++b.k;
    for (std::size_t i = 0; i < b.k; ++i) b.betas.push_back(beta + static_cast<double>(i) * gap);
    const double beta_k = beta + static_cast<double>(b.k) * gap;

    const bool weighted = w && !w->empty();
    if (std::isinf(q)) {
        double m = 0.0;
        for (std::size_t j = 0; j <= N; ++j) {
            if (!L.censored[j]) m = std::max(m, L(0, j));
        }
        b.L_q_norm = (weighted && m > 0.0) ? std::numeric_limits<double>::infinity() : m;
    } else if (!weighted) {
        double acc = 0.0;
        for (std::size_t i = 1; i <= N; ++i) {
            acc += 0.5 * mesh.h(i) * (std::pow(L(0, i - 1), q) + std::pow(L(0, i), q));
        }
        b.L_q_norm = std::pow(acc, 1.0 / q);
    } else {
        WeightSpec wq = *w;
        bool finite = true;
        for (auto& a : wq.exponents) {
            a = 1.0 - q * (1.0 - a);
            if (!(a > 0.0)) finite = false;
        }
        if (!finite) {
            b.L_q_norm = std::numeric_limits<double>::infinity();
        } else {
            GridFunction Lq(L.mesh, 1);
            Lq.censored = L.censored;
            for (std::size_t j = 0; j <= N; ++j) Lq.values(0, static_cast<Index>(j)) = std::pow(L(0, j), q);
            b.L_q_norm = std::pow(dot_row(product_weights_row(mesh, wq, 1.0, N), Lq), 1.0 / q);
        }
    }
    if (weighted) {
        b.L_1_norm = dot_row(product_weights_row(mesh, *w, 1.0, N), L);
    } else {
        double acc = 0.0;
        for (std::size_t i = 1; i <= N; ++i) acc += 0.5 * mesh.h(i) * (L(0, i - 1) + L(0, i));
        b.L_1_norm = acc;
    }

    const double qp = conj_exponent(q);
    const double first = holder_arg(beta, q);
    b.cs.push_back(1.0);
    for (std::size_t i = 1; i <= b.k; ++i) {
        const double prev_beta = beta + static_cast<double>(i - 1) * gap;
        const double B = beta_fn(first, holder_arg(prev_beta, q));
        b.cs.push_back(b.cs.back() * b.L_q_norm * std::pow(B, 1.0 / qp));
    }
    const double ck = b.cs.back() * std::pow(b.T, beta_k - 1.0);
    const double E = std::exp(ck * b.L_1_norm);
    double sum = 1.0;
    for (std::size_t i = 0; i < b.k; ++i) {
        const double e = 1.0 - (1.0 - b.betas[i]) * qp;
        const double Mi = std::pow(std::pow(b.T, e) / e, 1.0 / qp);
        sum += b.cs[i] * b.L_q_norm * Mi;
    }
    b.regular_constant = ck * E * sum;
    return b;
}

GridFunction gronwall_envelope(const GronwallBound& bound, const GridFunction& a, const GridFunction& L,
                               const WeightSpec* w) {
    if (a.mesh->nodes != L.mesh->nodes) throw UsageError("gronwall_envelope: mesh mismatch");
    const std::size_t N = a.mesh->nodes.size() - 1;
    GridFunction la(a.mesh, 1);
    for (std::size_t j = 0; j <= N; ++j) {
        la.censored[j] = a.censored[j] || L.censored[j];
        if (!la.censored[j]) la.values(0, static_cast<Index>(j)) = L(0, j) * a(0, j);
    }
    GridFunction env = a;
    const WeightSpec none;
    const WeightSpec& ws = w ? *w : none;
    g_convolutions = {0, 0};
    for (std::size_t i = 0; i < bound.k; ++i) {
        const WeightTable table = product_weights(a.mesh, ws, bound.betas[i]);
        ++g_convolutions.first;
        for (std::size_t k = 0; k <= N; ++k) {
            const ConvolutionResult r = apply_convolution(table, la, k);
            env.values(0, static_cast<Index>(k)) += bound.cs[i] * r.value[0];
            if (r.censored) env.censored[k] = true;
        }
    }
    const WeightTable regular = product_weights(a.mesh, ws, 1.0);
    ++g_convolutions.second;
    for (std::size_t k = 0; k <= N; ++k) {
        const ConvolutionResult r = apply_convolution(regular, la, k);
        env.values(0, static_cast<Index>(k)) += bound.regular_constant * r.value[0];
        if (r.censored) env.censored[k] = true;
    }
    return env;
}

std::pair<std::size_t, std::size_t> last_envelope_convolutions() { return g_convolutions; }

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Continuous: return "continuous";
        case Verdict::Boundary: return "boundary";
        case Verdict::BlowUp: return "blow-up";
    }
    return "unknown";
}

std::string RegularityReport::to_text() const {
    std::ostringstream os;
    os << "beta: " << format_double(beta) << '\n';
    os << "q: " << format_double(q) << '\n';
    os << "points: " << points.size() << '\n';
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        os << "point[" << i << "]: " << format_double(p.point) << '\n';
        os << "alpha[" << i << "]: " << format_double(p.alpha) << '\n';
        os << "exponent[" << i << "]: " << format_double(p.exponent) << '\n';
        os << "verdict[" << i << "]: " << to_string(p.verdict) << '\n';
    }
    os << "global: " << to_string(global) << '\n';
    os << "note: exponents omit the arbitrary epsilon > 0 slack of the weighted continuity bound\n";
    return os.str();
}

RegularityReport predict_exponents(const WeightSpec& w, double beta, double q) {
    if (!(q > 1.0 / beta)) throw HypothesisError("predict_exponents: requires q > 1/beta");
    RegularityReport rep;
    rep.beta = beta;
    rep.q = q;
    const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
    for (std::size_t i = 0; i < w.points.size(); ++i) {
        const double a = w.exponents[i];
        if (!(q > 1.0 / a)) {
            throw HypothesisError("predict_exponents: requires q > 1/alpha_" + std::to_string(i) +
                                  " (alpha = " + format_double(a) + ")");
        }
        PointReport pr;
        pr.point = w.points[i];
        pr.alpha = a;
        const double margin = a + beta - 1.0 - inv_q;
        pr.exponent = std::max(0.0, -margin);
        if (margin > kTol) {
            pr.verdict = Verdict::Continuous;
        } else if (margin >= -kTol) {
            pr.verdict = Verdict::Boundary;
            pr.exponent = 0.0;
        } else {
            pr.verdict = Verdict::BlowUp;
        }
        if (static_cast<int>(pr.verdict) > static_cast<int>(rep.global)) rep.global = pr.verdict;
        rep.points.push_back(pr);
    }
    return rep;
}

double measure_blowup_slope(const GridFunction& y, double point, Side side) {
    const auto& nodes = y.mesh->nodes;
    std::vector<std::pair<double, double>> pts;  // (distance, |y|)
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double d = side == Side::Left ? point - nodes[k] : nodes[k] - point;
        if (!(d > 0.0) || y.censored[k]) continue;
        const double v = y.at(k).norm();
        if (!std::isfinite(v) || v == 0.0) continue;
        pts.emplace_back(d, v);
    }
    std::sort(pts.begin(), pts.end());
    constexpr std::size_t kMinNodes = 8;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double lo = pts[i].first;
        std::size_t end = i;
        while (end < pts.size() && pts[end].first <= 10.0 * lo) ++end;
        if (end - i < kMinNodes) continue;
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        const double n = static_cast<double>(end - i);
        for (std::size_t j = i; j < end; ++j) {
            const double x = std::log(pts[j].first);
            const double v = std::log(pts[j].second);
            sx += x;
            sy += v;
            sxx += x * x;
            sxy += x * v;
        }
        const double denom = n * sxx - sx * sx;
        if (!(denom > 0.0)) continue;
        return (n * sxy - sx * sy) / denom;
    }
    throw FitError("measure_blowup_slope: no decade with 8 usable nodes");
}

bool slope_consistent(Verdict verdict, double exponent, double slope) {
    switch (verdict) {
        case Verdict::Continuous: return slope >= -0.05;
        case Verdict::BlowUp: return std::abs(slope + exponent) <= 0.1;
        case Verdict::Boundary: return slope >= -0.15 && slope <= 0.02;
    }
    return false;
}

WeightSpec effective_weight(const ProblemSpec& spec) {
    WeightSpec out = spec.weight;
    const double T = spec.kernel.T;
    const auto& bounds = spec.generator.bounds;
    const Vec u0 = spec.controls.candidates.empty() ? Vec(0) : spec.controls.candidates[spec.controls.u0_index];
    auto magnitude = [&](double s) {
        if (bounds && bounds->phi_bar) return std::abs(bounds->phi_bar(s));
        return spec.generator.f0(T, s, spec.free_term.eta(s), u0).norm();
    };
    for (std::size_t i = 0; i < out.points.size(); ++i) {
        const double p = out.points[i];
        double slope = 0.0;
        for (int dir : {-1, 1}) {
            const double d1 = 1e-4 * T;
            const double d2 = 1e-6 * T;
            const double s1 = p + dir * d1;
            const double s2 = p + dir * d2;
            if (s1 < 0.0 || s1 >= T) continue;
            const double g1 = magnitude(s1);
            const double g2 = magnitude(s2);
            if (!(g1 > 0.0) || !(g2 > 0.0) || !std::isfinite(g1) || !std::isfinite(g2)) continue;
            slope = std::min(slope, (std::log(g2) - std::log(g1)) / (std::log(d2) - std::log(d1)));
        }
        // Round away sampling noise so exact power laws give exact exponents.
        slope = std::round(slope * 1e4) / 1e4;
        out.exponents[i] = std::max(1e-6, out.exponents[i] + slope);
    }
    return out;
}

}  // namespace singvolt
