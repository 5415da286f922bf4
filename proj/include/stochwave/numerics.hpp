#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stochwave {

/// Thrown when an iterative numerical routine cannot meet its tolerance.
/// Carries whatever partial result was available so callers can report it.
class NumericsError : public std::runtime_error {
public:
    NumericsError(const std::string& what, double best_estimate = 0.0,
                  double error_bound = 0.0)
        : std::runtime_error(what), best_estimate_(best_estimate), error_bound_(error_bound) {}

    double best_estimate() const noexcept { return best_estimate_; }
    double error_bound() const noexcept { return error_bound_; }

private:
    double best_estimate_;
    double error_bound_;
};

namespace numerics {

using Integrand = std::function<double(double)>;

/// Describes how an oscillatory tail integral may be truncated: the integrand
/// is assumed to satisfy |f(rho)| <= envelope_constant * rho^envelope_exponent
/// and to oscillate with angular frequency `frequency` (0 = no oscillation).
struct TailPolicy {
    double envelope_constant = 1.0;
    double envelope_exponent = -2.0;
    double frequency = 0.0;
    double target_tail_bound = 1e-10;
};

struct QuadSpec {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    int max_subdivisions = 2000;
    TailPolicy tail{};

    void validate() const;
};

/// Globally adaptive Gauss-Kronrod (10/21) quadrature on [a, b].
///
/// The interval with the largest local error estimate is bisected until the
/// summed estimate drops below max(abs_tol, rel_tol * |Q|). Abscissae never
/// touch the endpoints, so integrable endpoint singularities are allowed.
/// Throws NumericsError on non-convergence or when f returns NaN.
double integrate_adaptive(const Integrand& f, double a, double b, const QuadSpec& spec);

/// Integral of f over [R, inf) for an integrand with a power-law envelope.
///
/// For frequency > 0 the range is cut into half-period panels aligned to the
/// nodes k*pi/frequency; summation stops once the remainder bound
/// 2 c X^p / frequency (monotone amplitude, second mean value theorem) is
/// below the target. For frequency == 0 panels double in length and the bound
/// is c X^(p+1) / |p+1|.
double integrate_oscillatory_tail(const Integrand& f, double R, const QuadSpec& spec);

/// One term c * rho^p of a power sum.
struct PowerTerm {
    double coef;
    double power;
};

/// Returns the complex integral of sum_j c_j rho^(p_j) * exp(i omega rho) over
/// [X, inf). Every p_j must be < -1, omega >= 0, X > 0.
///
/// Far from the origin (omega X >= 60 + 2 max|p|) the repeated integration-by-parts
/// expansion is summed until its explicit remainder bound is negligible;
/// otherwise the gap up to that point is integrated numerically in log(rho).
std::complex<double> power_trig_tail(std::span<const PowerTerm> terms, double omega, double X);

/// Bessel function of the first kind for the orders needed by the k <= 3
/// radial reductions: -1/2, 0 and 1/2. Throws std::invalid_argument otherwise.
double bessel_j(double order, double x);

/// Coefficients a_n(0) of the Hankel asymptotic expansion of J_0, n = 0..count-1.
std::vector<double> hankel_j0_coefficients(int count);

/// Gamma function.
double gamma_fn(double x);

struct JitterPolicy {
    double initial_relative = 1e-12;
    double growth = 10.0;
    double ceiling_relative = 1e-8;
};

struct PsdFactorization {
    Eigen::MatrixXd lower_factor;
    double applied_jitter = 0.0;
    int dimension = 0;
};

/// Cholesky factorization with a jitter escalation ladder: 0, then
/// initial_relative * max-diag escalated by `growth` up to ceiling_relative.
/// Throws NumericsError("matrix not PSD within tolerance ...") at the ceiling.
PsdFactorization factor_psd(const Eigen::MatrixXd& A, const JitterPolicy& policy = {});

/// Conditional variance of coordinate 0 given coordinates 1..n of a Gaussian
/// vector with covariance C: c00 - c^T C11^{-1} c, clamped at 0.
double schur_conditional_variance(const Eigen::MatrixXd& C, const JitterPolicy& policy = {});

}  // namespace numerics
}  // namespace stochwave
