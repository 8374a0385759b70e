#include "singvolt/fractional.hpp"

#include <cmath>
#include <limits>

#include "singvolt/errors.hpp"
#include "singvolt/quadrature.hpp"
#include "singvolt/special_functions.hpp"

namespace singvolt {

namespace {

using Index = Eigen::Index;

void check_order(double alpha, const char* who) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError(std::string(who) + ": alpha must lie in (0, 1)");
}

// Derivative at x of the quadratic through (x0,v0), (x1,v1), (x2,v2).
double lagrange3_deriv(double x, const double* xs, const Eigen::VectorXd* vs, Index c) {
    double d = 0.0;
    for (int i = 0; i < 3; ++i) {
        const int a = (i + 1) % 3;
        const int b = (i + 2) % 3;
        const double l = ((x - xs[a]) + (x - xs[b])) / ((xs[i] - xs[a]) * (xs[i] - xs[b]));
        d += l * vs[i](c);
    }
    return d;
}

}  // namespace

GridFunction frac_integral(double alpha, const GridFunction& phi, std::optional<double> origin_exponent) {
    check_order(alpha, "frac_integral");
    const std::size_t first = origin_exponent ? 1 : 0;
    for (std::size_t k = first; k < phi.size(); ++k) {
        if (phi.censored[k]) throw DomainError("frac_integral: censored input at node " + std::to_string(k));
    }
    QuadratureOptions qo;
    qo.origin_exponent = origin_exponent;
    const WeightTable table = product_weights(phi.mesh, WeightSpec{}, alpha, qo);
    const double g = gamma_fn(alpha);
    GridFunction out(phi.mesh, phi.dim());
    for (std::size_t k = 0; k < phi.size(); ++k) {
        const double* row = table.row(k);
        Vec acc = Vec::Zero(static_cast<Index>(phi.dim()));
        for (std::size_t j = first; j <= k; ++j) acc += row[j] * phi.values.col(static_cast<Index>(j));
        out.values.col(static_cast<Index>(k)) = acc / g;
    }
    if (origin_exponent) {
        // I^alpha of s^gamma behaves like t^(alpha + gamma); undefined at 0 when that is negative.
        if (alpha + *origin_exponent < 0.0) {
            out.values.col(0).setConstant(std::numeric_limits<double>::quiet_NaN());
            out.censored[0] = true;
        }
    }
    return out;
}

FracDerivative frac_derivative_rl(double alpha, const GridFunction& y, std::optional<double> origin_exponent) {
    check_order(alpha, "frac_derivative_rl");
    const GridFunction v = frac_integral(1.0 - alpha, y, origin_exponent);
    const auto& t = y.mesh->nodes;
    const std::size_t N = t.size() - 1;
    if (N < 2) throw DomainError("frac_derivative_rl: needs at least 3 nodes");
    FracDerivative out{GridFunction(y.mesh, y.dim()), std::vector<bool>(N + 1, false)};
    // The integral of an origin-singular y need not extend continuously to 0.
    const std::size_t first = origin_exponent ? 1 : 0;
    for (std::size_t k = 0; k < first; ++k) {
        out.value.values.col(static_cast<Index>(k)).setConstant(std::numeric_limits<double>::quiet_NaN());
        out.value.censored[k] = true;
    }
    for (std::size_t k = first; k <= N; ++k) {
        std::size_t lo;
        if (k == first) {
            lo = first;
            out.one_sided[k] = true;
        } else if (k == N) {
            lo = N - 2;
            out.one_sided[k] = true;
        } else {
            lo = k - 1;
        }
        if (lo + 2 > N) throw DomainError("frac_derivative_rl: too few usable nodes");
        const double xs[3] = {t[lo], t[lo + 1], t[lo + 2]};
        const Eigen::VectorXd vs[3] = {v.at(lo), v.at(lo + 1), v.at(lo + 2)};
        for (Index c = 0; c < static_cast<Index>(y.dim()); ++c) {
            out.value.values(c, static_cast<Index>(k)) = lagrange3_deriv(t[k], xs, vs, c);
        }
    }
    return out;
}

FracDerivative frac_derivative_caputo(double alpha, const GridFunction& y) {
    if (y.censored[0]) throw DomainError("frac_derivative_caputo: y(0) is censored");
    GridFunction shifted = y;
    const Vec y0 = y.at(0);
    for (std::size_t k = 0; k < y.size(); ++k) shifted.values.col(static_cast<Index>(k)) -= y0;
    return frac_derivative_rl(alpha, shifted);
}

ProblemSpec to_volterra(const FracSpec& fs, const FracRhs& rhs, double T) {
    check_order(fs.alpha, "to_volterra");
    if (!rhs.f) throw UsageError("to_volterra: missing right-hand side");
    ProblemSpec spec;
    spec.kernel = SingularKernelSpec{fs.alpha, T};
    spec.state_dim = static_cast<std::size_t>(fs.init.size());
    const double g = gamma_fn(fs.alpha);
    auto f = rhs.f;
    spec.generator.f0 = [f, g](double, double s, const Vec& y, const Vec& u) -> Vec { return f(s, y, u) / g; };
    if (rhs.f_y) {
        auto fy = rhs.f_y;
        spec.generator.f0_y = [fy, g](double, double s, const Vec& y, const Vec& u) -> Mat { return fy(s, y, u) / g; };
    }
    spec.generator.depends_on_t = false;
    spec.generator.depends_on_u = rhs.depends_on_u;
    const Vec init = fs.init;
    if (fs.kind == FracKind::Caputo) {
        spec.free_term.eta = [init](double) -> Vec { return init; };
    } else {
        const double a = fs.alpha;
        spec.free_term.eta = [init, a, g](double t) -> Vec { return init * (std::pow(t, a - 1.0) / g); };
        spec.free_term.singular_points = {0.0};
        spec.free_term.origin_exponent = a - 1.0;
    }
    return spec;
}

double check_inversion(double alpha, const GridFunction& y, FracKind kind, std::optional<double> origin_exponent,
                       std::optional<double> c) {
    check_order(alpha, "check_inversion");
    const auto& t = y.mesh->nodes;
    GridFunction expected = y;
    GridFunction composed;
    if (kind == FracKind::Caputo) {
        const Vec y0 = y.at(0);
        for (std::size_t k = 0; k < y.size(); ++k) expected.values.col(static_cast<Index>(k)) -= y0;
        composed = frac_integral(alpha, frac_derivative_caputo(alpha, y).value);
    } else {
        double c0;
        if (c) {
            c0 = *c;
        } else {
            const GridFunction v = frac_integral(1.0 - alpha, y, origin_exponent);
            const double v1 = v(0, 1), v2 = v(0, 2);
            c0 = v1 - t[1] * (v2 - v1) / (t[2] - t[1]);
        }
        const double g = gamma_fn(alpha);
        for (std::size_t k = 0; k < y.size(); ++k) {
            if (t[k] > 0.0) expected.values.col(static_cast<Index>(k)).array() -= c0 * std::pow(t[k], alpha - 1.0) / g;
        }
        FracDerivative d = frac_derivative_rl(alpha, y, origin_exponent);
        // The derivative of the smooth integral is regular at 0 when the singular mode is exact.
        std::optional<double> inner;
        if (d.value.censored[0]) inner = 0.0;
        composed = frac_integral(alpha, d.value, inner);
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (y.censored[k] || composed.censored[k]) continue;
        if (origin_exponent && k == 0) continue;
        const double r = (composed.at(k) - expected.at(k)).cwiseAbs().maxCoeff();
        if (std::isfinite(r)) worst = std::max(worst, r);
    }
    return worst;
}

}  // namespace singvolt
