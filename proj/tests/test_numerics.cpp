#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "doctest.h"
#include "stochwave/numerics.hpp"
#include "stochwave/random.hpp"

using namespace stochwave;
using namespace stochwave::numerics;

namespace {

// Composite Simpson on [a, b] with n (even) intervals.
double simpson(const Integrand& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Brute-force oracle for oscillatory tails: fixed-resolution Simpson panels of
// length pi on [R, upper]; the truncation beyond `upper` is bounded separately.
double brute_tail(const Integrand& f, double R, double upper) {
    double sum = 0.0;
    for (double lo = R; lo < upper; lo += std::numbers::pi)
        sum += simpson(f, lo, std::min(upper, lo + std::numbers::pi), lo < 100.0 ? 8192 : 64);
    return sum;
}

// Power series of J_0 in long double.
long double j0_series(long double x) {
    long double term = 1.0L, sum = 1.0L;
    const long double q = -(x * x) / 4.0L;
    for (int k = 1; k < 200; ++k) {
        term *= q / (static_cast<long double>(k) * k);
        sum += term;
        if (std::fabs(term) < 1e-22L) break;
    }
    return sum;
}

Eigen::MatrixXd random_psd(int n, int rank, std::mt19937_64& gen) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd B(n, rank);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < rank; ++j) B(i, j) = nd(gen);
    return B * B.transpose();
}

// Residual variance of regressing coordinate 0 on 1..n by the normal equations,
// solved with full-pivot LU.
double regression_residual(const Eigen::MatrixXd& C) {
    const Eigen::Index n = C.rows() - 1;
    if (n == 0) return C(0, 0);
    const Eigen::MatrixXd C11 = C.bottomRightCorner(n, n);
    const Eigen::VectorXd c = C.col(0).tail(n);
    const Eigen::VectorXd alpha = C11.fullPivLu().solve(c);
    return C(0, 0) - 2.0 * alpha.dot(c) + alpha.dot(C11 * alpha);
}

}  // namespace

TEST_CASE("integrate_adaptive closed forms") {
    QuadSpec qs;
    CHECK(integrate_adaptive([](double u) { return u * u; }, 0.0, 1.0, qs) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(integrate_adaptive([](double u) { return std::sin(u); }, 0.0, std::numbers::pi, qs) ==
          doctest::Approx(2.0).epsilon(1e-13));
    qs.abs_tol = 1e-11;
    qs.rel_tol = 1e-11;
    CHECK(std::abs(integrate_adaptive([](double u) { return 1.0 / std::sqrt(u); }, 0.0, 1.0, qs) - 2.0) <
          1e-10);
}

TEST_CASE("integrate_adaptive is exact on polynomials of degree <= 10") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int degree = trial % 11;
        std::vector<double> c(degree + 1);
        for (auto& v : c) v = coef(gen);
        const double a = coef(gen), b = a + 0.1 + std::abs(coef(gen));
        auto f = [&](double u) {
            double s = 0.0;
            for (int i = degree; i >= 0; --i) s = s * u + c[i];
            return s;
        };
        double exact = 0.0;
        for (int i = 0; i <= degree; ++i)
            exact += c[i] * (std::pow(b, i + 1) - std::pow(a, i + 1)) / (i + 1);
        const double q = integrate_adaptive(f, a, b, QuadSpec{});
        double scale = 0.0;
        for (int i = 0; i <= degree; ++i)
            scale += std::abs(c[i]) * (std::pow(std::abs(b), i + 1) + std::pow(std::abs(a), i + 1)) / (i + 1);
        CHECK(std::abs(q - exact) <= 1e-12 * std::max(std::abs(exact), 1e-3 * scale));
    }
}

TEST_CASE("integrate_adaptive error paths") {
    QuadSpec qs;
    try {
        integrate_adaptive([](double u) { return u > 0.5 ? std::nan("") : 1.0; }, 0.0, 1.0, qs);
        FAIL("expected NaN error");
    } catch (const NumericsError& e) {
        CHECK(std::string(e.what()).find("NaN at abscissa") != std::string::npos);
    }

    qs.max_subdivisions = 3;
    try {
        integrate_adaptive([](double u) { return std::sin(200.0 * u); }, 0.0, 10.0, qs);
        FAIL("expected non-convergence");
    } catch (const NumericsError& e) {
        CHECK(e.error_bound() > 0.0);
        CHECK(std::isfinite(e.best_estimate()));
    }

    CHECK_THROWS_AS(integrate_adaptive([](double) { return 1.0; }, 1.0, 1.0, QuadSpec{}),
                    std::invalid_argument);
    QuadSpec bad;
    bad.abs_tol = 0.0;
    CHECK_THROWS_AS(integrate_adaptive([](double) { return 1.0; }, 0.0, 1.0, bad), std::invalid_argument);
}

TEST_CASE("integrate_oscillatory_tail") {
    QuadSpec qs;
    qs.tail = {1.0, -2.0, 0.0, 1e-11};
    qs.max_subdivisions = 100000;
    CHECK(integrate_oscillatory_tail([](double r) { return 1.0 / (r * r); }, 1.0, qs) ==
          doctest::Approx(1.0).epsilon(1e-10));

    SUBCASE("sin(rho)/rho^2 from 1") {
        auto f = [](double r) { return std::sin(r) / (r * r); };
        // Oracle: Simpson panels on [1, 1e6]; truncation |.| <= 2 * 1e-12.
        const double oracle = brute_tail(f, 1.0, 1e6);
        CHECK(oracle == doctest::Approx(0.504067).epsilon(2e-6));
        qs.tail = {1.0, -2.0, 1.0, 1e-10};
        const double value = integrate_oscillatory_tail(f, 1.0, qs);
        CHECK(std::abs(value - oracle) < 2e-9);
        CHECK(value == doctest::Approx(0.504067).epsilon(1e-6));
    }

    SUBCASE("cos(rho) rho^-2.5 from 10") {
        auto f = [](double r) { return std::cos(r) * std::pow(r, -2.5); };
        const double oracle = brute_tail(f, 10.0, 3e5);  // remainder <= 2 (3e5)^-2.5 ~ 4e-14
        qs.tail = {1.0, -2.5, 1.0, 1e-11};
        CHECK(std::abs(integrate_oscillatory_tail(f, 10.0, qs) - oracle) < 1e-8);
    }

    SUBCASE("errors") {
        qs.tail = {1.0, -1.0, 1.0, 1e-10};
        CHECK_THROWS_AS(integrate_oscillatory_tail([](double r) { return 1.0 / r; }, 1.0, qs),
                        std::invalid_argument);
        qs.tail = {1.0, -1.5, 1.0, 1e-14};
        qs.max_subdivisions = 10;
        CHECK_THROWS_AS(
            integrate_oscillatory_tail([](double r) { return std::sin(r) * std::pow(r, -1.5); }, 1.0, qs),
            NumericsError);
    }
}

TEST_CASE("power_trig_tail matches brute force") {
    struct Case {
        double p, omega, X;
    };
    for (const Case c : {Case{-2.0, 1.0, 1.0}, Case{-2.5, 3.0, 1.0}, Case{-1.7, 0.05, 2.0},
                         Case{-3.2, 50.0, 1.0}, Case{-2.0, 1e-9, 1.0}}) {
        CAPTURE(c.p);
        CAPTURE(c.omega);
        const PowerTerm term{1.3, c.p};
        const auto value = power_trig_tail(std::span(&term, 1), c.omega, c.X);
        // Oracle in log variable on [X, X * e^40]; remainder bounded by the envelope.
        auto re = [&](double s) {
            const double rho = std::exp(s);
            return 1.3 * std::pow(rho, c.p + 1.0) * std::cos(c.omega * rho);
        };
        auto im = [&](double s) {
            const double rho = std::exp(s);
            return 1.3 * std::pow(rho, c.p + 1.0) * std::sin(c.omega * rho);
        };
        const double upper = c.omega > 0.01 ? std::log(2e5 / c.omega) : std::log(c.X) + 40.0;
        QuadSpec qs;
        qs.abs_tol = 1e-14;
        qs.rel_tol = 1e-12;
        qs.max_subdivisions = 200000;
        const double lo = std::log(c.X);
        const double envelope = 1.3 * std::exp((c.p + 1.0) * upper) * 2.0 /
                                std::max(c.omega, 1e-300);
        const double tol = 1e-9 + std::min(envelope, 1.3 * std::exp((c.p + 1.0) * upper) / (-c.p - 1.0));
        CHECK(std::abs(value.real() - integrate_adaptive(re, lo, upper, qs)) < tol);
        CHECK(std::abs(value.imag() - integrate_adaptive(im, lo, upper, qs)) < tol);
    }
    const PowerTerm bad{1.0, -1.0};
    CHECK_THROWS_AS(power_trig_tail(std::span(&bad, 1), 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("bessel_j") {
    CHECK(bessel_j(0.0, 0.0) == 1.0);
    CHECK(bessel_j(0.5, std::numbers::pi / 2) == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-15));
    CHECK(bessel_j(-0.5, 1.0) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi) * std::cos(1.0)));
    CHECK_THROWS_AS(bessel_j(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(bessel_j(0.0, -1.0), std::invalid_argument);

    // Oracle: bisection on the long double power series.
    long double lo = 2.0L, hi = 3.0L;
    for (int i = 0; i < 100; ++i) {
        const long double mid = 0.5L * (lo + hi);
        (j0_series(lo) * j0_series(mid) <= 0.0L ? hi : lo) = mid;
    }
    const double oracle_zero = static_cast<double>(lo);
    CHECK(oracle_zero == doctest::Approx(2.404826).epsilon(1e-6));
    CHECK(std::abs(bessel_j(0.0, oracle_zero)) < 1e-15);

    for (double x = 0.05; x < 12.0; x += 0.37)
        CHECK(std::abs(bessel_j(0.0, x) - static_cast<double>(j0_series(x))) < 1e-14);

    // Large arguments against the leading Hankel terms written out by hand.
    for (double x : {345.5, 1e4, 9.9e5}) {
        const double cos_chi = (std::cos(x) + std::sin(x)) / std::sqrt(2.0);
        const double sin_chi = (std::sin(x) - std::cos(x)) / std::sqrt(2.0);
        const double P = 1.0 - 9.0 / (128.0 * x * x) + 3675.0 / (32768.0 * std::pow(x, 4));
        const double Q = -1.0 / (8.0 * x) + 75.0 / (1024.0 * std::pow(x, 3));
        const double hankel = std::sqrt(2.0 / (std::numbers::pi * x)) * (P * cos_chi - Q * sin_chi);
        CHECK(std::abs(bessel_j(0.0, x) - hankel) < 1e-12 * std::sqrt(2.0 / (std::numbers::pi * x)));
    }

    const auto a = hankel_j0_coefficients(4);
    CHECK(a[1] == doctest::Approx(-1.0 / 8.0));
    CHECK(a[2] == doctest::Approx(9.0 / 128.0));
    CHECK(a[3] == doctest::Approx(-9.0 * 25.0 / (6.0 * 512.0)));
}

TEST_CASE("factor_psd examples") {
    const auto id = factor_psd(Eigen::MatrixXd::Identity(3, 3));
    CHECK(id.applied_jitter == 0.0);
    CHECK(id.dimension == 3);
    CHECK((id.lower_factor - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd A(2, 2);
    A << 4, 2, 2, 3;
    const auto f = factor_psd(A);
    CHECK(f.applied_jitter == 0.0);
    CHECK(f.lower_factor(0, 0) == doctest::Approx(2.0));
    CHECK(f.lower_factor(0, 1) == 0.0);
    CHECK(f.lower_factor(1, 0) == doctest::Approx(1.0));
    CHECK(f.lower_factor(1, 1) == doctest::Approx(std::sqrt(2.0)));

    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2);
    const auto g = factor_psd(ones);
    CHECK(g.applied_jitter > 0.0);
    CHECK(g.applied_jitter <= 1e-8);
    const Eigen::MatrixXd rec = g.lower_factor * g.lower_factor.transpose();
    CHECK((rec - ones - g.applied_jitter * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-10);

    Eigen::MatrixXd indefinite(2, 2);
    indefinite << 1, 2, 2, 1;
    try {
        factor_psd(indefinite);
        FAIL("expected failure");
    } catch (const NumericsError& e) {
        CHECK(std::string(e.what()).find("not PSD within tolerance") != std::string::npos);
        CHECK(e.best_estimate() < 0.0);
    }

    Eigen::MatrixXd asym(2, 2);
    asym << 1, 0.5, 0.4, 1;
    CHECK_THROWS_AS(factor_psd(asym), std::invalid_argument);
}

TEST_CASE("factor_psd reconstruction property") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + trial % 19;
        const int rank = 1 + trial % n;
        const Eigen::MatrixXd A = random_psd(n, rank, gen);
        const auto f = factor_psd(A);
        const double max_abs = A.cwiseAbs().maxCoeff();
        CHECK(f.applied_jitter <= 1e-8 * A.diagonal().maxCoeff());
        const Eigen::MatrixXd rec = f.lower_factor * f.lower_factor.transpose();
        CHECK((rec - A).cwiseAbs().maxCoeff() <= 1e-10 * max_abs + f.applied_jitter);
    }
}

TEST_CASE("schur_conditional_variance examples") {
    Eigen::MatrixXd one(1, 1);
    one << 0.25;
    CHECK(schur_conditional_variance(one) == 0.25);

    Eigen::MatrixXd same(2, 2);
    same << 0.25, 0.25, 0.25, 0.25;
    CHECK(schur_conditional_variance(same) == doctest::Approx(0.0).epsilon(1e-12));

    Eigen::MatrixXd reg(2, 2);
    reg << 1.0, 0.6, 0.6, 1.0;
    CHECK(regression_residual(reg) == doctest::Approx(0.64));
    CHECK(schur_conditional_variance(reg) == doctest::Approx(0.64).epsilon(1e-14));
}

TEST_CASE("schur_conditional_variance agrees with normal equations and is monotone") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + trial % 19;
        const Eigen::MatrixXd C = random_psd(n, n + 2, gen);
        const double value = schur_conditional_variance(C);
        CHECK(value == doctest::Approx(regression_residual(C)).epsilon(1e-9).scale(C(0, 0)));

        double previous = C(0, 0);
        for (int size = 1; size <= n; ++size) {
            const double v = schur_conditional_variance(C.topLeftCorner(size, size));
            CHECK(v <= previous + 1e-9 * C(0, 0));
            CHECK(v >= 0.0);
            previous = v;
        }
    }
}

TEST_CASE("normal_quantile") {
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-15));
    CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-14));
    for (double p = 1e-12; p < 1.0; p = p < 0.01 ? p * 10 : p + 0.013) {
        const double z = normal_quantile(p);
        CHECK(0.5 * std::erfc(-z / std::sqrt(2.0)) == doctest::Approx(p).epsilon(1e-13));
        const double upper = 1.0 - p;
        CHECK(normal_quantile(upper) == doctest::Approx(-normal_quantile(1.0 - upper)).epsilon(1e-12));
    }
}

TEST_CASE("counter rng is a pure function of key and counter") {
    CounterRng a(derive_stream(42, 7)), b(derive_stream(42, 7)), c(derive_stream(42, 8));
    for (int i = 0; i < 100; ++i) {
        const double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
    CHECK(a.next_u64() != c.next_u64());
}
