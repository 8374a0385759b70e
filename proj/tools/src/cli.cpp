#include "singvolt_cli/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>

#include "singvolt/csv.hpp"
#include "singvolt/errors.hpp"
#include "singvolt/forward_solver.hpp"
#include "singvolt/pmp.hpp"
#include "singvolt/regularity.hpp"

namespace singvolt::cli {

namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const Flags& flags, const std::string& name) {
    fs::create_directories(flags.out_dir);
    const fs::path path = fs::path(flags.out_dir) / name;
    std::ofstream os(path);
    if (!os) throw UsageError("cannot write '" + path.string() + "'");
    return os;
}

std::shared_ptr<const Discretization> make_disc(const ProblemFile& pf, const Flags& flags) {
    return std::make_shared<Discretization>(discretize(pf.spec, flags.mesh_n.value_or(pf.mesh_n), pf.mesh_r));
}

GridFunction default_control(const ProblemFile& pf, const Discretization& disc) {
    const auto& cs = pf.spec.controls;
    return constant_control(disc.mesh, cs.candidates.at(cs.u0_index));
}

void write_grid(std::ostream& os, const GridFunction& g, const std::string& stem) {
    std::vector<std::string> header{"t"};
    for (std::size_t i = 0; i < g.dim(); ++i) header.push_back(stem + std::to_string(i + 1));
    header.push_back("censored");
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < g.size(); ++k) {
        std::vector<double> r{g.mesh->nodes[k]};
        for (std::size_t i = 0; i < g.dim(); ++i) r.push_back(g(i, k));
        r.push_back(g.censored[k] ? 1.0 : 0.0);
        rows.push_back(std::move(r));
    }
    write_csv(os, header, rows);
}

void dump_weights(const Discretization& disc, const Flags& flags) {
    auto os = open_out(flags, "weights.csv");
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < disc.table.rows(); ++k) {
        for (std::size_t j = 0; j <= k; ++j) {
            rows.push_back({static_cast<double>(k), static_cast<double>(j), disc.table(k, j)});
        }
    }
    write_csv(os, {"k", "j", "weight"}, rows);
}

double generator_q(const ProblemSpec& spec) {
    return spec.generator.bounds ? spec.generator.bounds->q : std::numeric_limits<double>::infinity();
}

int cmd_solve(const ProblemFile& pf, const Flags& flags, std::ostream& out) {
    const auto disc = make_disc(pf, flags);
    if (flags.dump_weights) dump_weights(*disc, flags);
    const StateSolution sol = solve_state(pf.spec, default_control(pf, *disc), *disc, pf.solve);
    auto os = open_out(flags, "solution.csv");
    write_grid(os, sol.y, "y");
    out << "nodes: " << disc->mesh->nodes.size() << '\n';
    out << "residual: " << format_double(sol.residual) << '\n';
    out << "censored_from: " << (sol.censored_from ? format_double(disc->mesh->nodes[*sol.censored_from]) : "none")
        << '\n';
    return 0;
}

int cmd_adjoint(const ProblemFile& pf, const Flags& flags, std::ostream& out) {
    const auto disc = make_disc(pf, flags);
    if (flags.dump_weights) dump_weights(*disc, flags);
    const GridFunction u = default_control(pf, *disc);
    const StateSolution sol = solve_state(pf.spec, u, *disc, pf.solve);
    if (sol.censored_from) throw CensoredError("adjoint: state is censored");
    const AdjointTrajectory adj = solve_adjoint(pf.spec, sol.y, u, *disc);
    auto os = open_out(flags, "adjoint.csv");
    write_grid(os, adj.psi, "psi");
    out << "cost: " << format_double(eval_cost(pf.spec, sol, u)) << '\n';
    return 0;
}

int cmd_pmp(const ProblemFile& pf, const Flags& flags, std::ostream& out) {
    const auto disc = make_disc(pf, flags);
    if (flags.dump_weights) dump_weights(*disc, flags);
    SweepOptions so;
    so.solve = pf.solve;
    PmpReport rep = fb_sweep(pf.spec, disc, so);
    if (!rep.censored) {
        std::mt19937_64 rng(flags.seed);
        const auto spikes = sample_spikes(*disc->mesh, 0.05, 50, flags.seed);
        std::uniform_int_distribution<std::size_t> pick(0, pf.spec.controls.size() - 1);
        for (const auto& s : spikes) {
            const GridFunction alt = constant_control(disc->mesh, pf.spec.controls.candidates[pick(rng)]);
            rep.spikes.push_back(spike_check(pf.spec, rep, s, alt, pf.solve));
        }
    }
    auto txt = open_out(flags, "pmp_report.txt");
    txt << rep.to_text();
    if (!rep.censored) {
        auto csv = open_out(flags, "residuals.csv");
        rep.write_csv(csv);
    }
    out << "cost: " << format_double(rep.J) << '\n';
    out << "worst_residual: " << format_double(rep.max_condition.worst) << '\n';
    out << "converged: " << (rep.converged ? "yes" : "no") << '\n';
    return rep.censored ? 1 : 0;
}

int cmd_regularity(const ProblemFile& pf, const Flags& flags, std::ostream& out) {
    const double q = generator_q(pf.spec);
    const RegularityReport rep = predict_exponents(effective_weight(pf.spec), pf.spec.kernel.beta, q);
    std::string text = rep.to_text();
    if (!pf.spec.weight.empty()) {
        const auto disc = make_disc(pf, flags);
        const StateSolution sol = solve_state(pf.spec, default_control(pf, *disc), *disc, pf.solve);
        std::ostringstream extra;
        for (std::size_t i = 0; i < rep.points.size(); ++i) {
            const auto& p = rep.points[i];
            try {
                const double slope = measure_blowup_slope(sol.y, p.point, Side::Left);
                extra << "measured_slope[" << i << "]: " << format_double(slope) << '\n';
                extra << "consistent[" << i << "]: " << (slope_consistent(p.verdict, p.exponent, slope) ? "yes" : "no")
                      << '\n';
            } catch (const FitError& e) {
                extra << "measured_slope[" << i << "]: unavailable (" << e.what() << ")\n";
            }
        }
        text += extra.str();
    }
    auto os = open_out(flags, "regularity.txt");
    os << text;
    out << text;
    return 0;
}

int cmd_verify(const ProblemFile& pf, const Flags& flags, std::ostream& out) {
    const auto checks = verify_problem(pf, flags);
    bool ok = true;
    for (const auto& c : checks) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name;
        if (!c.detail.empty()) out << "  " << c.detail;
        out << '\n';
        ok = ok && c.passed;
    }
    return ok ? 0 : 1;
}

}  // namespace

int run_subcommand(const std::string& cmd, const ProblemFile& pf, const Flags& flags, std::ostream& out) {
    if (cmd == "solve") return cmd_solve(pf, flags, out);
    if (cmd == "adjoint") return cmd_adjoint(pf, flags, out);
    if (cmd == "pmp") return cmd_pmp(pf, flags, out);
    if (cmd == "regularity") return cmd_regularity(pf, flags, out);
    if (cmd == "verify") return cmd_verify(pf, flags, out);
    throw UsageError("unknown subcommand '" + cmd + "'");
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Solver for weakly singular Volterra integral equations and their optimal control"};
    app.require_subcommand(1, 1);
    Flags flags;
    std::string problem;
    std::size_t mesh_n = 0;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"solve", "Solve the state equation, write solution.csv"},
        {"adjoint", "Solve state and adjoint for the default control, write adjoint.csv"},
        {"pmp", "Optimize the control and check the maximum condition"},
        {"regularity", "Predict and measure continuity at the weight points"},
        {"verify", "Run the invariant checks that apply to the problem"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--problem", problem, "Problem file")->required()->check(CLI::ExistingFile);
        sub->add_option("--mesh-n", mesh_n, "Number of mesh cells (overrides [mesh] N)")->check(CLI::PositiveNumber);
        sub->add_option("--out", flags.out_dir, "Output directory");
        sub->add_option("--seed", flags.seed, "Seed for spike sampling");
        sub->add_flag("--dump-weights", flags.dump_weights, "Also write the product weights to weights.csv");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }
    if (mesh_n > 0) flags.mesh_n = mesh_n;
    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        const ProblemFile pf = load_problem(problem);
        return run_subcommand(cmd, pf, flags, out);
    } catch (const ParseError& e) {
        err << problem << ": " << e.what() << '\n';
        return 2;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << cmd << " failed: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace singvolt::cli
