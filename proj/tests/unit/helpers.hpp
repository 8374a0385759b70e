#pragma once

#include <cmath>
#include <memory>
#include <random>

#include "singvolt/mesh.hpp"
#include "singvolt/problem.hpp"

namespace testutil {

using singvolt::Mat;
using singvolt::Vec;

inline singvolt::MeshPtr uniform_mesh(double T, std::size_t N) {
    return std::make_shared<const singvolt::Mesh>(singvolt::build_mesh(T, N, {}, 1.0));
}

inline singvolt::MeshPtr graded_mesh(double T, std::size_t N, double r) {
    return std::make_shared<const singvolt::Mesh>(singvolt::build_mesh(T, N, {0.0}, r));
}

/// y = eta0 + int lambda y(s) / (t - s)^(1 - beta) ds, scalar, uncontrolled.
inline singvolt::ProblemSpec scalar_linear(double lambda, double beta, double T, double eta0 = 1.0) {
    singvolt::ProblemSpec spec;
    spec.kernel = {beta, T};
    spec.generator.f0 = [lambda](double, double, const Vec& y, const Vec&) { return Vec(lambda * y); };
    spec.generator.f0_y = [lambda](double, double, const Vec&, const Vec&) { return Mat::Constant(1, 1, lambda); };
    spec.generator.depends_on_t = false;
    spec.generator.depends_on_u = false;
    spec.free_term.eta = [eta0](double) { return Vec::Constant(1, eta0); };
    return spec;
}

inline singvolt::GridFunction zero_control(const singvolt::MeshPtr& mesh) { return singvolt::GridFunction(mesh, 0); }

}  // namespace testutil
