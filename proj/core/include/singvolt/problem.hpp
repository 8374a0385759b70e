#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace singvolt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// w(s) = prod |s - s_i|^(1 - alpha_i).
struct WeightSpec {
    std::vector<double> points;
    std::vector<double> exponents;

    bool empty() const { return points.empty(); }
};

/// Kernel exponent beta in (0,1) and horizon T.
struct SingularKernelSpec {
    double beta = 0.5;
    double T = 1.0;
};

using GeneratorFn = std::function<Vec(double t, double s, const Vec& y, const Vec& u)>;
using GeneratorJac = std::function<Mat(double t, double s, const Vec& y, const Vec& u)>;
using ScalarFn = std::function<double(double)>;

/// |f0| <= phi_bar(s), |f0(y1) - f0(y2)| <= L_bar(s) |y1 - y2|, with L_bar in L^q.
struct GeneratorBounds {
    ScalarFn phi_bar;
    ScalarFn L_bar;
    double q = std::numeric_limits<double>::infinity();
};

/// Regular part f0 of f = f0 / (w(s) (t - s)^(1 - beta)).
struct Generator {
    GeneratorFn f0;
    GeneratorJac f0_y;
    std::optional<GeneratorBounds> bounds;
    /// False when f0 ignores t; the solver then evaluates it once per node.
    bool depends_on_t = true;
    /// False when f0 ignores u.
    bool depends_on_u = true;
};

struct FreeTerm {
    std::function<Vec(double)> eta;
    /// Points where eta is unbounded; never used as mesh nodes unless at 0.
    std::vector<double> singular_points;
    /// eta ~ t^gamma near 0 (gamma in (-1,0)); node 0 is then excluded and
    /// the first cell uses the basis (s/t1)^gamma.
    std::optional<double> origin_exponent;
};

/// Finite set of control values in R^m, ranked by index for tie-breaking.
struct ControlSpace {
    std::vector<Vec> candidates;
    std::size_t u0_index = 0;

    /// Tensor grid over a box; counts[i] points per axis (>= 1).
    static ControlSpace box(const Vec& lower, const Vec& upper, const std::vector<std::size_t>& counts);
    /// A single empty control, for uncontrolled problems.
    static ControlSpace none();

    std::size_t dim() const { return candidates.empty() ? 0 : static_cast<std::size_t>(candidates.front().size()); }
    std::size_t size() const { return candidates.size(); }
    double distance(const Vec& a, const Vec& b) const { return (a - b).norm(); }
    /// Index of the candidate closest to v (lowest index on ties).
    std::size_t nearest(const Vec& v) const;
};

struct CostTerm {
    double t = 0.0;
    std::function<double(const Vec&)> h;
    std::function<Vec(const Vec&)> h_y;
};

/// J(u) = int_0^T g(t, y, u) dt + sum_j h^j(y(t_j)).
struct CostSpec {
    std::function<double(double, const Vec&, const Vec&)> g;
    std::function<Vec(double, const Vec&, const Vec&)> g_y;
    std::vector<CostTerm> terms;
};

struct ProblemSpec {
    WeightSpec weight;
    SingularKernelSpec kernel;
    Generator generator;
    FreeTerm free_term;
    ControlSpace controls = ControlSpace::none();
    std::optional<CostSpec> cost;
    std::size_t state_dim = 1;
    double p_norm = 2.0;
};

/// w(s). Zero exactly at weight points. Throws DomainError outside [0, T].
double eval_weight(const WeightSpec& w, double s, double T = std::numeric_limits<double>::infinity());

/// f0(t,s,y,u) / (w(s) (t - s)^(1 - beta)).
Vec eval_full_kernel(const ProblemSpec& spec, double t, double s, const Vec& y, const Vec& u);

enum class Severity { Warning, Error };

struct Diagnostic {
    Severity severity;
    std::string message;
};

/// Empty iff every structural invariant and the integrability proxies hold.
std::vector<Diagnostic> validate(const ProblemSpec& spec);

bool has_errors(const std::vector<Diagnostic>& diags);

}  // namespace singvolt
