#include <cmath>
#include <sstream>

#include "singvolt/csv.hpp"
#include "singvolt/errors.hpp"
#include "singvolt/forward_solver.hpp"
#include "singvolt/fractional.hpp"
#include "singvolt/pmp.hpp"
#include "singvolt/regularity.hpp"
#include "singvolt/special_functions.hpp"
#include "singvolt_cli/cli.hpp"

namespace singvolt::cli {

namespace {

std::string detail(const std::string& key, double v) { return key + "=" + format_double(v); }

// rhs(t, y) = lambda y for a scalar uncontrolled problem; returns lambda.
std::optional<double> scalar_linear_rate(const ProblemSpec& spec) {
    if (spec.state_dim != 1 || spec.generator.depends_on_u) return std::nullopt;
    const Vec u = spec.controls.candidates.front();
    const Vec one = Vec::Ones(1);
    const double g = gamma_fn(spec.kernel.beta);
    const double lam = spec.generator.f0(0.3, 0.3, one, u)(0) * g;
    for (double s : {0.1, 0.5, 0.9}) {
        for (double y : {-2.0, 0.5, 3.0}) {
            const double v = spec.generator.f0(s, s, Vec::Constant(1, y), u)(0) * g;
            if (std::abs(v - lam * y) > 1e-12 * (1.0 + std::abs(v))) return std::nullopt;
        }
    }
    return lam;
}

}  // namespace

std::vector<Check> verify_problem(const ProblemFile& pf, const Flags& flags) {
    const ProblemSpec& spec = pf.spec;
    std::vector<Check> out;
    auto guard = [&](const std::string& name, auto&& body) {
        try {
            out.push_back(body());
        } catch (const Error& e) {
            out.push_back({name, false, e.what()});
        }
    };

    {
        Check c{"validate", true, ""};
        for (const auto& d : validate(spec)) {
            if (d.severity == Severity::Error) c.passed = false;
            c.detail += (c.detail.empty() ? "" : "; ") + d.message;
        }
        out.push_back(c);
    }

    const auto disc = std::make_shared<Discretization>(discretize(spec, flags.mesh_n.value_or(pf.mesh_n), pf.mesh_r));
    const auto& cs = spec.controls;
    const GridFunction u0 = constant_control(disc->mesh, cs.candidates.at(cs.u0_index));
    StateSolution sol;
    guard("state_residual", [&] {
        sol = solve_state(spec, u0, *disc, pf.solve);
        return Check{"state_residual", sol.max_node_residual <= 1e-6, detail("max", sol.max_node_residual)};
    });

    if (pf.fractional && sol.y.values.size() > 0) {
        const FracSpec& fr = *pf.fractional;
        const auto& t = disc->mesh->nodes;
        if (fr.kind == FracKind::Caputo) {
            if (const auto lam = scalar_linear_rate(spec)) {
                double err = 0.0;
                MLParams p;
                p.alpha = fr.alpha;
                for (std::size_t k = 0; k < t.size(); ++k) {
                    const double z = *lam * std::pow(t[k], fr.alpha);
                    if (std::abs(z) > 50.0) continue;
                    err = std::max(err, std::abs(sol.y(0, k) - fr.init(0) * mittag_leffler(p, z)));
                }
                out.push_back({"mittag_leffler", err <= 1e-4, detail("max_error", err)});
            }
        } else if (const auto lam = scalar_linear_rate(spec); lam && *lam == 0.0) {
            double err = 0.0;
            const double g = gamma_fn(fr.alpha);
            for (std::size_t k = 1; k < t.size(); ++k) {
                const double exact = fr.init(0) * std::pow(t[k], fr.alpha - 1.0) / g;
                err = std::max(err, std::abs(sol.y(0, k) - exact) / std::abs(exact));
            }
            out.push_back({"rl_free_term", err <= 1e-8, detail("max_rel_error", err)});
        }
    }

    if (spec.cost && cs.size() > 1 && !sol.censored_from && sol.y.values.size() > 0) {
        guard("adjoint_duality", [&] {
            std::vector<std::size_t> idx(disc->mesh->nodes.size(), cs.u0_index);
            const PmpReport rep = analyze_control(spec, disc, idx, pf.solve);
            const std::size_t other = cs.u0_index == 0 ? cs.size() - 1 : 0;
            const GridFunction alt = constant_control(disc->mesh, cs.candidates[other]);
            const FirstOrder fo = first_order(spec, rep, alt);
            const double gap = std::abs(fo.adjoint_pairing - fo.state_pairing);
            const double scale = fo.psi_norm * fo.forcing_norm;
            std::ostringstream d;
            d << detail("gap", gap) << " " << detail("scale", scale) << " "
              << detail("first_order_gap", std::abs(fo.via_state - fo.via_adjoint));
            const bool ok = gap <= 1e-6 * scale + 1e-14 &&
                            std::abs(fo.via_state - fo.via_adjoint) <= 1e-8 * (1.0 + std::abs(fo.via_state));
            return Check{"adjoint_duality", ok, d.str()};
        });
    }

    if (spec.generator.depends_on_u && cs.size() > 1 && !sol.censored_from) {
        guard("stability_gap", [&] {
            const std::size_t other = cs.u0_index == 0 ? cs.size() - 1 : 0;
            const GridFunction alt = constant_control(disc->mesh, cs.candidates[other]);
            const StabilityGap g = stability_gap(spec, u0, alt, *disc, pf.solve);
            std::ostringstream d;
            d << detail("lhs", g.lhs) << " " << detail("K_hat*rhs", g.K_hat * g.rhs);
            return Check{"stability_gap", g.holds(), d.str()};
        });
    }

    if (!spec.weight.empty() && sol.y.values.size() > 0) {
        guard("regularity", [&] {
            const double q = spec.generator.bounds ? spec.generator.bounds->q : std::numeric_limits<double>::infinity();
            const RegularityReport rep = predict_exponents(effective_weight(spec), spec.kernel.beta, q);
            bool ok = true;
            std::ostringstream d;
            for (std::size_t i = 0; i < rep.points.size(); ++i) {
                const auto& p = rep.points[i];
                if (p.point <= 0.0) continue;
                const double slope = measure_blowup_slope(sol.y, p.point, Side::Left);
                const bool c = slope_consistent(p.verdict, p.exponent, slope);
                ok = ok && c;
                d << (i ? " " : "") << "point " << format_double(p.point) << ": " << to_string(p.verdict)
                  << " e=" << format_double(p.exponent) << " slope=" << format_double(slope);
            }
            return Check{"regularity", ok, d.str()};
        });
    }
    return out;
}

}  // namespace singvolt::cli
