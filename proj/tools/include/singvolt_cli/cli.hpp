#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "singvolt/problem_file.hpp"

namespace singvolt::cli {

struct Flags {
    std::optional<std::size_t> mesh_n;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    bool dump_weights = false;
};

/// One row of the verify table.
struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Invariant checks that apply to this problem.
std::vector<Check> verify_problem(const ProblemFile& pf, const Flags& flags);

/// Runs solve | adjoint | pmp | regularity | verify and writes its files into
/// flags.out_dir. Returns 0 on success, 1 when a contract fails.
int run_subcommand(const std::string& cmd, const ProblemFile& pf, const Flags& flags, std::ostream& out);

/// Full command line entry point. Parse and usage errors return 2.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace singvolt::cli
