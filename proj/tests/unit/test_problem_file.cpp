#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "singvolt/errors.hpp"
#include "singvolt/problem_file.hpp"

using namespace singvolt;

namespace {

const char* kMinimal = R"(# D^a y = -y
[kernel]
T = 1

[fractional]
kind = caputo
alpha = 0.5
init1 = 1
rhs1 = -y1
)";

std::size_t parse_error_line(const std::string& text) {
    try {
        parse_problem(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    ADD_FAILURE() << "no ParseError for:\n" << text;
    return 0;
}

}  // namespace

TEST(ProblemFile, MinimalCaputoIsValid) {
    const ProblemFile pf = parse_problem(kMinimal);
    ASSERT_TRUE(pf.fractional.has_value());
    EXPECT_DOUBLE_EQ(pf.spec.kernel.beta, 0.5);
    EXPECT_EQ(pf.spec.state_dim, 1u);
    EXPECT_EQ(pf.mesh_n, 256u);
}

TEST(ProblemFile, CostTimeOnWeightPointReportsLine) {
    const std::string text =
        "[weights]\npoints = 0.5\nalpha = 0.8\n"
        "[kernel]\nbeta = 0.5\nT = 1\n"
        "[generator]\nf1 = u1 - y1\n"
        "[free_term]\neta1 = 1\n"
        "[controls]\ncandidates = -1; 1\n"
        "[cost]\ng = y1^2\nterm = 0.5 : y1\n";
    try {
        parse_problem(text);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 15u);
        EXPECT_NE(std::string(e.what()).find("weight point"), std::string::npos);
    }
}

TEST(ProblemFile, ControlDependenceWithoutControlsIsError) {
    const std::string text =
        "[kernel]\nbeta = 0.5\nT = 1\n"
        "[generator]\nf1 = u1 - y1\n"
        "[free_term]\neta1 = 1\n";
    EXPECT_EQ(parse_error_line(text), 5u);
}

TEST(ProblemFile, UnknownKeyGivesLine) {
    const std::string text = std::string(kMinimal) + "[mesh]\nN = 32\nbogus = 1\n";
    EXPECT_EQ(parse_error_line(text), 12u);
}

TEST(ProblemFile, UnknownSectionGivesLine) {
    EXPECT_EQ(parse_error_line(std::string(kMinimal) + "[nonsense]\n"), 10u);
}

TEST(ProblemFile, MalformedExpressionGivesLine) {
    const std::string text =
        "[kernel]\nbeta = 0.5\nT = 1\n"
        "[generator]\nf1 = (y1 + \n"
        "[free_term]\neta1 = 1\n";
    EXPECT_EQ(parse_error_line(text), 5u);
}

TEST(ProblemFile, DuplicateKeyAndSection) {
    EXPECT_EQ(parse_error_line("[kernel]\nT = 1\nT = 2\n[fractional]\nkind = rl\nalpha = 0.5\ninit1 = 1\nrhs1 = 0\n"),
              3u);
    EXPECT_EQ(parse_error_line(std::string(kMinimal) + "[kernel]\n"), 10u);
}

TEST(ProblemFile, FractionalExcludesGenerator) {
    EXPECT_GT(parse_error_line(std::string(kMinimal) + "[generator]\nf1 = y1\n"), 0u);
}

TEST(ProblemFile, RangeChecks) {
    EXPECT_EQ(parse_error_line("[kernel]\nbeta = 1.5\nT = 1\n[free_term]\neta1 = 1\n"), 2u);
    EXPECT_EQ(parse_error_line("[kernel]\nbeta = 0.5\nT = -1\n[free_term]\neta1 = 1\n"), 3u);
    EXPECT_EQ(parse_error_line(
                  "[weights]\npoints = 0.5\nalpha = 1.2\n[kernel]\nbeta = 0.5\nT = 1\n[free_term]\neta1 = 1\n"),
              3u);
}

TEST(ProblemFile, MissingFileIsUsageError) {
    EXPECT_THROW(load_problem("/nonexistent/problem.ini"), UsageError);
}

TEST(ProblemFile, SerializeRoundTrip) {
    for (const auto& entry : std::filesystem::directory_iterator(SINGVOLT_PROBLEM_DIR)) {
        SCOPED_TRACE(entry.path().string());
        const ProblemFile a = load_problem(entry.path().string());
        const std::string text = serialize(a);
        const ProblemFile b = parse_problem(text);
        EXPECT_EQ(serialize(b), text);
        EXPECT_EQ(a.mesh_n, b.mesh_n);
        EXPECT_EQ(a.spec.state_dim, b.spec.state_dim);
        EXPECT_DOUBLE_EQ(a.spec.kernel.beta, b.spec.kernel.beta);
        EXPECT_DOUBLE_EQ(a.spec.kernel.T, b.spec.kernel.T);
        EXPECT_EQ(a.spec.weight.points, b.spec.weight.points);
        EXPECT_EQ(a.spec.controls.size(), b.spec.controls.size());
    }
}

TEST(ProblemFile, BundledProblemsValidate) {
    std::size_t count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(SINGVOLT_PROBLEM_DIR)) {
        SCOPED_TRACE(entry.path().string());
        const ProblemFile pf = load_problem(entry.path().string());
        for (const auto& d : validate(pf.spec)) EXPECT_NE(d.severity, Severity::Error) << d.message;
        ++count;
    }
    EXPECT_GE(count, 8u);
}
