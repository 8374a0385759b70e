#pragma once

#include <cstddef>

namespace singvolt {

/// Gamma function for x > 0 (Lanczos, g = 7, nine coefficients).
/// Throws DomainError for x <= 0.
double gamma_fn(double x);

/// log Gamma(x) for x > 0, same approximation as gamma_fn.
double log_gamma(double x);

/// Beta function B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b).
/// Symmetric in its arguments bit for bit.
double beta_fn(double a, double b);

/// Regularized incomplete beta I_x(a, b) for x in [0, 1].
double inc_beta_reg(double a, double b, double x);

/// I_x(a, b) together with its complement 1 - I_x(a, b), each computed
/// without cancellation. `xc` must equal 1 - x; passing it separately keeps
/// full relative precision when x is close to 1.
struct IncBetaPair {
    double value;
    double complement;
};
IncBetaPair inc_beta_pair(double a, double b, double x, double xc);

/// Parameters for the Mittag-Leffler series E_{alpha,beta}(z).
struct MLParams {
    double alpha = 1.0;
    std::size_t terms_max = 2000;
    double tol = 1e-16;
    /// Second parameter of the two-parameter function; 1 gives E_alpha.
    double beta = 1.0;
};

/// Mittag-Leffler function by direct power series,
///   E_{alpha,beta}(z) = sum_k z^k / Gamma(alpha k + beta).
/// Valid only for |z| <= 50; large negative arguments lose digits to
/// cancellation well before that bound. Throws AccuracyError when the series
/// has not settled within `terms_max` terms.
double mittag_leffler(const MLParams& params, double z);

}  // namespace singvolt
