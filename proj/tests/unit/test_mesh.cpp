#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "singvolt/errors.hpp"
#include "singvolt/mesh.hpp"

using namespace singvolt;

TEST(Mesh, GradedTowardOrigin) {
    const Mesh m = build_mesh(1.0, 4, {0.0}, 2.0);
    const std::vector<double> want{0.0, 1.0 / 16, 0.25, 9.0 / 16, 1.0};
    ASSERT_EQ(m.nodes.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(m.nodes[i], want[i], 1e-15);
}

TEST(Mesh, UniformWhenUngraded) {
    const Mesh m = build_mesh(2.0, 8, {0.0}, 1.0);
    for (std::size_t i = 0; i <= 8; ++i) EXPECT_NEAR(m.nodes[i], 0.25 * static_cast<double>(i), 1e-15);
}

TEST(Mesh, SymmetricClustering) {
    const Mesh m = build_mesh(1.0, 8, {0.0, 1.0}, 2.0);
    ASSERT_EQ(m.nodes.size(), 9u);
    EXPECT_NEAR(m.h(1), m.h(8), 1e-15);
    for (std::size_t i = 0; i <= 8; ++i) EXPECT_NEAR(m.nodes[i] + m.nodes[8 - i], 1.0, 1e-15);
}

TEST(Mesh, InteriorAnchorIsNeverANode) {
    const Mesh m = build_mesh(2.0, 64, {0.0, 1.0}, 3.0, {1.5});
    EXPECT_EQ(m.find_node(1.0), Mesh::npos);
    EXPECT_NE(m.find_node(1.5), Mesh::npos);
    EXPECT_EQ(m.nodes.front(), 0.0);
    EXPECT_EQ(m.nodes.back(), 2.0);
    for (std::size_t i = 1; i < m.nodes.size(); ++i) EXPECT_GT(m.nodes[i], m.nodes[i - 1]);
    // Cells shrink toward the anchor from both sides.
    const auto it = std::lower_bound(m.nodes.begin(), m.nodes.end(), 1.0);
    const auto k = static_cast<std::size_t>(it - m.nodes.begin());
    EXPECT_LT(m.h(k - 1), m.h(k - 5));
    EXPECT_LT(m.h(k + 1), m.h(k + 5));
}

TEST(Mesh, RequiredTimesBecomeNodes) {
    const Mesh m = build_mesh(1.0, 10, {0.0}, 2.0, {0.3, 0.77});
    EXPECT_NE(m.find_node(0.3), Mesh::npos);
    EXPECT_NE(m.find_node(0.77), Mesh::npos);
}

TEST(Mesh, Errors) {
    EXPECT_THROW(build_mesh(1.0, 4, {1.5}, 2.0), DomainError);
    EXPECT_THROW(build_mesh(0.0, 4, {}, 2.0), DomainError);
    EXPECT_THROW(build_mesh(1.0, 1, {}, 2.0), DomainError);
    EXPECT_THROW(build_mesh(1.0, 8, {0.0, 0.5}, 2.0, {0.5}), ConstructionError);
}

TEST(Mesh, TrapezoidWeights) {
    const Mesh m = build_mesh(3.0, 17, {0.0}, 2.5);
    const auto mu = m.trapezoid_weights();
    double total = 0.0, first = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        total += mu[i];
        first += mu[i] * m.nodes[i];
    }
    EXPECT_NEAR(total, 3.0, 1e-14);
    EXPECT_NEAR(first, 4.5, 1e-13);
}

TEST(GridFunction, Sampling) {
    const auto mesh = testutil::uniform_mesh(1.0, 4);
    const GridFunction g = sample_scalar(mesh, [](double t) { return t * t; });
    EXPECT_EQ(g.size(), 5u);
    EXPECT_EQ(g.dim(), 1u);
    EXPECT_DOUBLE_EQ(g(0, 2), 0.25);
    EXPECT_FALSE(g.any_censored());
}
