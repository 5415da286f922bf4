// Spectral covariance engine.
//
// Cov(u(t,x), u(s,y)) = c * int_0^{t^s} dr int dxi |xi|^{beta-k-2}
//                           sin((t-r)|xi|) sin((s-r)|xi|) cos(xi.(x-y)).
//
// The r-integral is done analytically:
//   T(rho) = 1/2 [ m cos(d rho) - (sin(S rho) - sin(D rho)) / (2 rho) ],
// m = min(t,s), d = t - s, D = |d|, S = t + s. The angular integral over the
// sphere of radius rho gives A_k(rho |z|):
//   k=1: 2 cos(u)   k=2: 2 pi J_0(u)   k=3: 4 pi sin(u)/u
// so the covariance is c * int_0^inf rho^{beta-3} T(rho) A_k(rho r) d rho.
//
// [0,1]: adaptive quadrature after rho = v^{1/beta}, which absorbs the
//        rho^{beta-1} endpoint behaviour.
// [1,X]: half-period panels (only when the tail expansion needs X > 1).
// [X,inf): the integrand is expanded into terms c rho^p {cos,sin}(omega rho)
//        (exact for k = 1, 3; Hankel expansion of J_0 for k = 2) and each
//        frequency group is integrated with power_trig_tail.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "stochwave/field.hpp"

namespace stochwave {
namespace {

using numerics::PowerTerm;
using numerics::QuadSpec;

constexpr double kPi = std::numbers::pi;

struct Geometry {
    double m;  // min(t, s)
    double M;  // max(t, s)
    double d;  // t - s
    double S;  // t + s
    double D;  // |t - s|
    double r;  // |x - y|
};

double sinc(double u) {
    if (std::abs(u) < 1e-3) {
        const double u2 = u * u;
        return 1.0 - u2 / 6.0 * (1.0 - u2 / 20.0);
    }
    return std::sin(u) / u;
}

// (x cos x - sin x) / x^3
double cubic_kernel(double x) {
    if (std::abs(x) < 0.5) {
        const double x2 = x * x;
        double term = -1.0 / 3.0;  // n = 1
        double sum = term;
        for (int n = 2; n < 20; ++n) {
            // ratio of consecutive (-1)^n 2n x^{2n-2} / (2n+1)!
            term *= -x2 * n / ((n - 1.0) * (2.0 * n) * (2.0 * n + 1.0));
            sum += term;
            if (std::abs(term) < 1e-18) break;
        }
        return sum;
    }
    return (x * std::cos(x) - std::sin(x)) / (x * x * x);
}

// T(rho) / rho^2, stable down to rho = 0.
double time_kernel_scaled(const Geometry& g, double rho) {
    const double m = g.m;
    return 0.5 * (m * m * m * std::cos(g.M * rho) * cubic_kernel(m * rho) +
                  m * m * g.M * sinc(g.M * rho) * sinc(m * rho));
}

double angular(int k, double u) {
    switch (k) {
        case 1: return 2.0 * std::cos(u);
        case 2: return 2.0 * kPi * numerics::bessel_j(0.0, u);
        default: return 4.0 * kPi * sinc(u);
    }
}

double sphere_area(int k) { return 2.0 * std::pow(kPi, 0.5 * k) / std::tgamma(0.5 * k); }

struct TrigTerm {
    double coef;
    double power;
    double omega;
    bool is_sin;
};

void push_normalized(std::vector<TrigTerm>& out, double coef, double power, double omega, bool is_sin) {
    if (is_sin) {
        if (omega == 0.0) return;
        if (omega < 0.0) {
            coef = -coef;
            omega = -omega;
        }
    } else {
        omega = std::abs(omega);
    }
    if (coef != 0.0) out.push_back({coef, power, omega, is_sin});
}

std::vector<TrigTerm> multiply(const std::vector<TrigTerm>& lhs, const std::vector<TrigTerm>& rhs) {
    std::vector<TrigTerm> out;
    for (const auto& a : lhs) {
        for (const auto& b : rhs) {
            const double c = 0.5 * a.coef * b.coef;
            const double p = a.power + b.power;
            const double diff = a.omega - b.omega;
            const double sum = a.omega + b.omega;
            if (!a.is_sin && !b.is_sin) {
                push_normalized(out, c, p, diff, false);
                push_normalized(out, c, p, sum, false);
            } else if (a.is_sin && b.is_sin) {
                push_normalized(out, c, p, diff, false);
                push_normalized(out, -c, p, sum, false);
            } else if (a.is_sin) {  // sin a cos b
                push_normalized(out, c, p, sum, true);
                push_normalized(out, c, p, diff, true);
            } else {  // cos a sin b
                push_normalized(out, c, p, sum, true);
                push_normalized(out, -c, p, diff, true);
            }
        }
    }
    return out;
}

// A_k(rho r) as trig terms, valid for rho >= X.
std::vector<TrigTerm> angular_terms(int k, double r, double X) {
    if (r == 0.0) return {{sphere_area(k), 0.0, 0.0, false}};
    if (k == 1) return {{2.0, 0.0, r, false}};
    if (k == 3) return {{4.0 * kPi / r, -1.0, r, true}};

    // J_0(u) = sqrt(2/(pi u)) [P(u) cos(u - pi/4) - Q(u) sin(u - pi/4)]
    const double K = 2.0 * kPi * std::sqrt(2.0 / (kPi * r)) / std::numbers::sqrt2;
    const double u0 = r * X;
    const std::vector<double> a = numerics::hankel_j0_coefficients(80);
    std::vector<TrigTerm> out;
    double best = std::abs(a[0]);
    for (int n = 0; n < static_cast<int>(a.size()); ++n) {
        const double size = std::abs(a[n]) / std::pow(u0, n);
        if (n > 0 && (size > best || size < 1e-17)) break;
        best = std::min(best, size);
        const double sign = ((n / 2) % 2 == 0) ? 1.0 : -1.0;
        const double c = K * sign * a[n] / std::pow(r, n);
        const double p = -0.5 - n;
        if (n % 2 == 0) {
            out.push_back({c, p, r, false});
            out.push_back({c, p, r, true});
        } else {
            out.push_back({c, p, r, false});
            out.push_back({-c, p, r, true});
        }
    }
    return out;
}

double analytic_tail(const Geometry& g, int k, double beta, double X) {
    const std::vector<TrigTerm> time_terms{
        {0.5 * g.m, beta - 3.0, g.d, false},
        {-0.25, beta - 4.0, g.S, true},
        {0.25, beta - 4.0, g.D, true},
    };
    const std::vector<TrigTerm> terms = multiply(time_terms, angular_terms(k, g.r, X));

    // Group by (omega, kind); exact omega equality is intended.
    std::map<std::pair<double, bool>, std::vector<PowerTerm>> groups;
    for (const auto& t : terms) groups[{t.omega, t.is_sin}].push_back({t.coef, t.power});
    double total = 0.0;
    for (const auto& [key, powers] : groups) {
        const auto value = numerics::power_trig_tail(powers, key.first, X);
        total += key.second ? value.imag() : value.real();
    }
    return total;
}

QuadSpec engine_spec(double scale) {
    QuadSpec qs;
    qs.abs_tol = 1e-15 * scale;
    qs.rel_tol = 1e-13;
    qs.max_subdivisions = 4000;
    return qs;
}

// int_0^1 rho^{beta-3} T(rho) A_k(rho r) d rho with rho = v^{1/beta}
double low_band(const Geometry& g, int k, double beta, double scale) {
    auto integrand = [&](double v) {
        const double rho = std::pow(v, 1.0 / beta);
        return time_kernel_scaled(g, rho) * angular(k, g.r * rho) / beta;
    };
    return numerics::integrate_adaptive(integrand, 0.0, 1.0, engine_spec(scale));
}

double panel_band(const Geometry& g, int k, double beta, double X, double scale) {
    if (X <= 1.0) return 0.0;
    auto integrand = [&](double rho) {
        return std::pow(rho, beta - 1.0) * time_kernel_scaled(g, rho) * angular(k, g.r * rho);
    };
    const double half_period = kPi / (g.S + g.r);
    const QuadSpec qs = engine_spec(scale * 1e-3);
    double sum = 0.0;
    for (double lo = 1.0; lo < X;) {
        const double hi = std::min(X, lo + half_period);
        sum += numerics::integrate_adaptive(integrand, lo, hi, qs);
        lo = hi;
    }
    return sum;
}

// k = 2 with tiny |z|: J_0(u) = (1/pi) int_0^pi cos(u sin theta) d theta turns the
// radial integral into an average of k = 1 type integrals over theta.
double k2_small_separation(const Geometry& g, double beta, double scale) {
    auto inner = [&](double theta) {
        Geometry h = g;
        h.r = g.r * std::sin(theta);
        return 0.5 * (low_band(h, 1, beta, scale) + analytic_tail(h, 1, beta, 1.0));
    };
    // 2 pi J_0 = 2 int_0^pi cos(...) = 4 int_0^{pi/2} cos(...); inner carries the k=1 factor 2.
    QuadSpec qs = engine_spec(scale);
    qs.rel_tol = 1e-12;
    return 4.0 * numerics::integrate_adaptive(inner, 0.0, 0.5 * kPi, qs);
}

}  // namespace

double covariance_spectral(const FieldSpec& spec, const SpacetimePoint& p, const SpacetimePoint& q) {
    if (p.dim != spec.k() || q.dim != spec.k())
        throw std::invalid_argument("point dimension does not match the field dimension k");
    if (!(p.t >= 0.0) || !(q.t >= 0.0) || !std::isfinite(p.t) || !std::isfinite(q.t))
        throw std::invalid_argument("point time must be finite and >= 0");

    Geometry g{};
    g.m = std::min(p.t, q.t);
    g.M = std::max(p.t, q.t);
    g.d = p.t - q.t;
    g.S = p.t + q.t;
    g.D = std::abs(g.d);
    double r2 = 0.0;
    for (int j = 0; j < spec.k(); ++j) r2 += (p.x[j] - q.x[j]) * (p.x[j] - q.x[j]);
    g.r = std::sqrt(r2);
    if (!std::isfinite(g.r)) throw std::invalid_argument("point coordinates must be finite");
    if (g.m <= 0.0) return 0.0;

    const int k = spec.k();
    const double beta = spec.beta();
    // Rough size of the integral, used to set absolute tolerances.
    const double scale = std::max(g.m * g.m * g.m, 1e-300) * sphere_area(k);

    double X = 1.0;
    if (g.r > 0.0 && k == 3) X = std::max(1.0, std::min(1.0 / g.r, 1e4));
    if (g.r > 0.0 && k == 2) {
        constexpr double kHankelStart = 20.0;
        if (g.r < 1e-3) return spec.norm_const() * k2_small_separation(g, beta, scale);
        X = std::max(1.0, kHankelStart / g.r);
    }

    const double value = low_band(g, k, beta, scale) + panel_band(g, k, beta, X, scale) +
                         analytic_tail(g, k, beta, X);
    return spec.norm_const() * value;
}

}  // namespace stochwave
