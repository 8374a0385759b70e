#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "singvolt/forward_solver.hpp"
#include "singvolt/fractional.hpp"
#include "singvolt/problem.hpp"

namespace singvolt {

struct ProblemEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

struct ProblemSection {
    std::string name;
    std::size_t line = 0;
    std::vector<ProblemEntry> entries;
};

/// A parsed problem file: the problem plus mesh and solver settings.
struct ProblemFile {
    ProblemSpec spec;
    std::size_t mesh_n = 256;
    std::optional<double> mesh_r;
    SolveOptions solve;
    std::optional<FracSpec> fractional;
    /// Source text of every entry, in file order.
    std::vector<ProblemSection> sections;
};

/// INI-style document with sections weights, kernel, generator, free_term,
/// fractional, controls, cost, mesh, solver. Throws ParseError carrying the
/// offending line for unknown keys, bad expressions and invariant violations.
ProblemFile parse_problem(std::string_view text);
ProblemFile load_problem(const std::string& path);

/// Canonical text that parses back to an equivalent problem.
std::string serialize(const ProblemFile& file);

}  // namespace singvolt
