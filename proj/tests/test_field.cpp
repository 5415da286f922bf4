#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "stochwave/field.hpp"
#include "stochwave/random.hpp"

using namespace stochwave;

namespace {

constexpr double kPi = std::numbers::pi;

SpacetimePoint pt(double t, double x) { return SpacetimePoint::make(t, {x}); }

SpacetimePoint random_point(std::mt19937_64& gen, int k, const DomainBox& box) {
    std::uniform_real_distribution<double> ut(box.a, box.a_prime), ux(-box.b, box.b);
    SpacetimePoint p;
    p.dim = k;
    p.t = ut(gen);
    for (int j = 0; j < k; ++j) p.x[j] = ux(gen);
    return p;
}

// Var u(1, 0) for k = 1, beta in (0,1) by Monte Carlo over the light-cone
// square: (1/4) int_0^1 dr int int_{[-L,L]^2} |z - z'|^{-beta}, L = 1 - r.
// With u = z - z' the inner integral is int_{-2L}^{2L} (2L - |u|) |u|^{-beta} du;
// u is drawn with density proportional to |u|^{-beta}.
std::pair<double, double> riesz_variance_mc(double beta, int n, std::uint64_t seed) {
    CounterRng rng(seed);
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double L = 1.0 - rng.uniform();
        const double a = 2.0 * L * std::pow(rng.uniform(), 1.0 / (1.0 - beta));
        // normalizer of |u|^{-beta} on [-2L, 2L]
        const double norm = 2.0 * std::pow(2.0 * L, 1.0 - beta) / (1.0 - beta);
        const double w = 0.25 * (2.0 * L - a) * norm;
        sum += w;
        sum2 += w * w;
    }
    const double mean = sum / n;
    return {mean, std::sqrt((sum2 / n - mean * mean) / n)};
}

}  // namespace

TEST_CASE("FieldSpec admissibility") {
    CHECK_NOTHROW(FieldSpec::make(1, 1.0));
    CHECK_NOTHROW(FieldSpec::make(1, 0.5));
    CHECK_NOTHROW(FieldSpec::make(2, 1.5));
    CHECK_NOTHROW(FieldSpec::make(3, 1.9));
    CHECK_THROWS_AS(FieldSpec::make(1, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(FieldSpec::make(1, 1.2), std::invalid_argument);
    CHECK_THROWS_AS(FieldSpec::make(2, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(FieldSpec::make(2, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(FieldSpec::make(4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(FieldSpec::make(0, 0.5), std::invalid_argument);
    const auto spec = FieldSpec::make(2, 1.5);
    CHECK(spec.norm_const() == riesz_spectral_constant(2, 1.5));
}

TEST_CASE("riesz_spectral_constant") {
    // Plancherel: c * int_0^t dr int sin^2((t-r) xi)/xi^2 dxi = c pi t^2 / 2 must equal t^2 / 4.
    CHECK(riesz_spectral_constant(1, 1.0) == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-15));
    CHECK(riesz_spectral_constant(1, 1.0) == doctest::Approx(0.159155).epsilon(1e-6));
    CHECK(riesz_spectral_constant(1, 0.5) == doctest::Approx(1.0 / std::sqrt(2.0 * kPi)).epsilon(1e-14));
    const double c = riesz_spectral_constant(2, 1.5);
    CHECK(std::isfinite(c));
    CHECK(c > 0.0);
    CHECK_THROWS_AS(riesz_spectral_constant(1, 1.5), std::invalid_argument);
}

TEST_CASE("covariance_direct_k1 examples") {
    const auto white = FieldSpec::make(1, 1.0);
    CHECK(covariance_direct_k1(white, pt(1, 0), pt(1, 0)) == doctest::Approx(0.25).epsilon(1e-15));
    // Nested light cones with a common centre: overlap 2(1 - r), so Cov = 1/4.
    CHECK(covariance_direct_k1(white, pt(1, 0), pt(1.1, 0)) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(covariance_direct_k1(white, pt(1.1, 0), pt(1.1, 0)) == doctest::Approx(0.3025).epsilon(1e-15));
    CHECK(covariance_direct_k1(white, pt(0, 0), pt(1, 0)) == 0.0);

    const auto riesz = FieldSpec::make(1, 0.5);
    const double closed = std::sqrt(2.0) / 1.875;
    CHECK(closed == doctest::Approx(0.754247).epsilon(1e-6));
    CHECK(covariance_direct_k1(riesz, pt(1, 0), pt(1, 0)) == doctest::Approx(closed).epsilon(1e-14));
    const auto [mc, se] = riesz_variance_mc(0.5, 400000, 99);
    CHECK(std::abs(mc - closed) < 3.0 * se);
    CHECK(covariance_direct_k1(riesz, pt(0, 0.3), pt(1, 0)) == 0.0);

    CHECK_THROWS_AS(covariance_direct_k1(FieldSpec::make(2, 1.0), SpacetimePoint::make(1, {0, 0}),
                                         SpacetimePoint::make(1, {0, 0})),
                    std::invalid_argument);
}

TEST_CASE("closed-form and adaptive direct engines agree") {
    std::mt19937_64 gen(5);
    const DomainBox box{1.0, 2.0, 1.0};
    for (double beta : {0.2, 0.5, 0.9, 1.0}) {
        const auto spec = FieldSpec::make(1, beta);
        for (int i = 0; i < 25; ++i) {
            const auto p = random_point(gen, 1, box), q = random_point(gen, 1, box);
            const double closed = covariance_direct_k1(spec, p, q);
            CHECK(covariance_direct_k1_adaptive(spec, p, q) == doctest::Approx(closed).epsilon(1e-10));
        }
    }
}

TEST_CASE("white-noise variance is t^2/4") {
    const auto white = FieldSpec::make(1, 1.0);
    for (double t : {0.5, 1.0, 2.0}) {
        CHECK(covariance(white, pt(t, 0.3), pt(t, 0.3)) == doctest::Approx(t * t / 4).epsilon(1e-15));
        CHECK(std::abs(covariance_spectral(white, pt(t, 0.3), pt(t, 0.3)) - t * t / 4) < 1e-6);
    }
}

TEST_CASE("spectral engine matches the direct engine for k = 1") {
    std::mt19937_64 gen(17);
    const DomainBox box{1.0, 2.0, 1.0};
    for (double beta : {0.3, 0.5, 0.9, 1.0}) {
        const auto spec = FieldSpec::make(1, beta);
        for (int i = 0; i < 50; ++i) {
            const auto p = random_point(gen, 1, box), q = random_point(gen, 1, box);
            const double direct = covariance_direct_k1(spec, p, q);
            CHECK(std::abs(covariance_spectral(spec, p, q) - direct) <= 1e-6 * std::abs(direct) + 1e-12);
        }
    }
}

TEST_CASE("spectral engine: stationarity and the z = 0 branch") {
    const auto spec = FieldSpec::make(3, 1.5);
    const double v0 = covariance_spectral(spec, SpacetimePoint::make(1.3, {0, 0, 0}),
                                          SpacetimePoint::make(1.3, {0, 0, 0}));
    const double v1 = covariance_spectral(spec, SpacetimePoint::make(1.3, {0.4, -0.2, 0.9}),
                                          SpacetimePoint::make(1.3, {0.4, -0.2, 0.9}));
    CHECK(v0 > 0.0);
    CHECK(v1 == doctest::Approx(v0).epsilon(1e-14));

    // Tiny separations approach the z = 0 value continuously.
    for (int k : {2, 3}) {
        const auto s = FieldSpec::make(k, 1.2);
        SpacetimePoint a, b;
        a.dim = b.dim = k;
        a.t = b.t = 1.5;
        const double var = covariance_spectral(s, a, a);
        for (double r : {1e-2, 1e-3, 5e-4, 1e-5}) {
            b.x[0] = r;
            const double c = covariance_spectral(s, a, b);
            CHECK(c < var);
            CHECK(var - c < 5.0 * std::pow(r, 2.0 - 1.2));
        }
    }
}

TEST_CASE("spectral engine k = 2 against Monte Carlo over the xi-plane") {
    const auto spec = FieldSpec::make(2, 1.0);
    const auto p = SpacetimePoint::make(1.0, {0.0, 0.0});
    const auto q = SpacetimePoint::make(1.0, {0.1, 0.0});
    const double value = covariance_spectral(spec, p, q);

    // Integrand c |xi|^{beta-4} T(|xi|) cos(xi.z), T = (1 - sin(2 rho)/(2 rho))/2 for t = s = 1.
    // rho ~ mixture: density prop. to rho^{beta-1} on [0,1] and rho^{beta-3} on [1,inf), theta uniform.
    const double beta = 1.0;
    const double w_in = 1.0 / beta, w_out = 1.0 / (2.0 - beta);
    const double mass = w_in + w_out;
    CounterRng rng(2024);
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double rho;
        if (rng.uniform() < w_in / mass)
            rho = std::pow(rng.uniform(), 1.0 / beta);
        else
            rho = std::pow(rng.uniform(), -1.0 / (2.0 - beta));
        const double theta = rng.uniform(0.0, 2.0 * kPi);
        const double density = (rho <= 1.0 ? std::pow(rho, beta - 1.0) : std::pow(rho, beta - 3.0)) / mass /
                               (2.0 * kPi);
        const double T = 0.5 * (1.0 - std::sin(2.0 * rho) / (2.0 * rho));
        // polar area element rho d rho d theta
        const double f = std::pow(rho, beta - 4.0) * T * std::cos(rho * 0.1 * std::cos(theta)) * rho;
        const double w = spec.norm_const() * f / density;
        sum += w;
        sum2 += w * w;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CAPTURE(value);
    CAPTURE(mean);
    CAPTURE(se);
    CHECK(std::abs(value - mean) < 3.0 * se);
}

TEST_CASE("covariance dispatcher properties") {
    std::mt19937_64 gen(23);
    const DomainBox box{1.0, 2.0, 1.0};
    for (int k : {1, 2, 3}) {
        const auto spec = FieldSpec::make(k, k == 1 ? 0.7 : 1.3);
        const int pairs = k == 1 ? 100 : 15;
        for (int i = 0; i < pairs; ++i) {
            auto p = random_point(gen, k, box), q = random_point(gen, k, box);
            const double c = covariance(spec, p, q);
            CHECK(covariance(spec, q, p) == doctest::Approx(c).epsilon(1e-12));
            for (int j = 0; j < k; ++j) {
                p.x[j] += 0.37;
                q.x[j] += 0.37;
            }
            CHECK(covariance(spec, p, q) == doctest::Approx(c).epsilon(1e-9));
        }
        SpacetimePoint zero;
        zero.dim = k;
        CHECK(covariance(spec, zero, zero) == 0.0);
    }
}

TEST_CASE("covariance matrices are PSD") {
    std::mt19937_64 gen(31);
    const DomainBox box{1.0, 2.0, 1.0};
    for (int k : {1, 2, 3}) {
        const auto spec = FieldSpec::make(k, k == 1 ? 0.5 : 1.5);
        std::vector<SpacetimePoint> pts;
        for (int i = 0; i < 12; ++i) pts.push_back(random_point(gen, k, box));
        Eigen::MatrixXd C(12, 12);
        for (int i = 0; i < 12; ++i)
            for (int j = 0; j <= i; ++j) C(i, j) = C(j, i) = covariance(spec, pts[i], pts[j]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-9 * C.diagonal().maxCoeff());
    }
}

TEST_CASE("sigma_metric and gamma_modulus") {
    const auto white = FieldSpec::make(1, 1.0);
    CHECK(sigma_metric(white, pt(1, 0), pt(1, 0)) == 0.0);
    CHECK(sigma_metric(white, pt(1, 0), pt(1.1, 0)) == doctest::Approx(std::sqrt(0.0525)).epsilon(1e-14));
    CHECK(sigma_metric(white, pt(1, 0), pt(1.1, 0)) == doctest::Approx(0.229129).epsilon(1e-6));

    CHECK(gamma_modulus(0.0) == 0.0);
    CHECK(gamma_modulus(1.0) == doctest::Approx(std::sqrt(std::log(2.0))).epsilon(1e-15));
    CHECK(gamma_modulus(1.0) == doctest::Approx(0.832555).epsilon(1e-6));
    double previous = 0.0;
    for (double s = 1e-6; s <= 0.1; s *= 1.5) {
        CHECK(gamma_modulus(s) > previous);
        previous = gamma_modulus(s);
    }
    CHECK_THROWS_AS(gamma_modulus(-1e-3), std::invalid_argument);
}

TEST_CASE("sandwich constants are positive and finite") {
    const DomainBox box{1.0, 2.0, 1.0};
    for (auto [k, beta] : {std::pair{1, 0.5}, std::pair{1, 1.0}, std::pair{2, 1.0}}) {
        const auto spec = FieldSpec::make(k, beta);
        const auto est = estimate_sandwich(spec, box, k == 1 ? 300 : 60, 0.5, 77);
        CHECK(est.c1 > 0.0);
        CHECK(std::isfinite(est.c2));
        CHECK(est.c1 <= est.c2);
        CHECK(est.max_delta <= 0.5);
    }
}

TEST_CASE("covariance cache") {
    const auto spec = FieldSpec::make(2, 1.0);
    CovarianceCache cache(spec);
    const auto p = SpacetimePoint::make(1.2, {0.1, 0.2});
    const auto q = SpacetimePoint::make(1.7, {-0.3, 0.5});
    const double direct = covariance(spec, p, q);
    CHECK(cache(p, q) == doctest::Approx(direct).epsilon(1e-10));
    CHECK(cache(q, p) == cache(p, q));
    CHECK(cache.size() == 1);
    CHECK(cache.variance(p) == doctest::Approx(covariance(spec, p, p)).epsilon(1e-12));
}
