#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "stochwave/numerics.hpp"

namespace stochwave {

inline constexpr int kMaxSpatialDim = 3;

/// Law of the solution field: spatial dimension k, noise exponent beta and the
/// spectral constant of the Riesz kernel. Only constructible through make().
class FieldSpec {
public:
    /// Validates (k, beta): 0 < beta < min(k, 2) with k in {1,2,3}, or the
    /// white-noise case k = 1 = beta. Throws std::invalid_argument otherwise.
    static FieldSpec make(int k, double beta);

    int k() const noexcept { return k_; }
    double beta() const noexcept { return beta_; }
    double norm_const() const noexcept { return norm_const_; }
    bool white_noise() const noexcept { return k_ == 1 && beta_ == 1.0; }

    bool operator==(const FieldSpec&) const = default;

private:
    FieldSpec(int k, double beta, double c) : k_(k), beta_(beta), norm_const_(c) {}
    int k_;
    double beta_;
    double norm_const_;
};

struct SpacetimePoint {
    double t = 0.0;
    std::array<double, kMaxSpatialDim> x{};
    int dim = 1;

    static SpacetimePoint make(double t, std::initializer_list<double> x);
    static SpacetimePoint make(double t, std::span<const double> x);

    bool operator==(const SpacetimePoint&) const = default;
};

/// l1 distance |t - t'| + sum_j |x_j - x'_j|.
double l1_distance(const SpacetimePoint& p, const SpacetimePoint& q);

/// I = [a, a'] x [-b, b]^k.
struct DomainBox {
    double a = 1.0;
    double a_prime = 2.0;
    double b = 1.0;

    void validate() const;
    bool contains(const SpacetimePoint& p) const;
};

/// Fourier-side constant c_{k,beta} for the convention
/// F f(xi) = int f(x) e^{-i xi.x} dx (Plancherel factor (2 pi)^{-k}).
double riesz_spectral_constant(int k, double beta);

/// Covariance for k = 1 evaluated in physical space. The time integral is done
/// with the antiderivative of the rectangle kernel (closed form).
double covariance_direct_k1(const FieldSpec& spec, const SpacetimePoint& p, const SpacetimePoint& q);

/// Same quantity, with the time integral evaluated by integrate_adaptive.
/// Slower; kept as an independent route for cross-checks.
double covariance_direct_k1_adaptive(const FieldSpec& spec, const SpacetimePoint& p,
                                     const SpacetimePoint& q);

/// Covariance from the spectral representation, any k in {1,2,3}. The time
/// integral is analytic, the xi-integral is reduced to one radial quadrature.
double covariance_spectral(const FieldSpec& spec, const SpacetimePoint& p, const SpacetimePoint& q);

/// Dispatcher: direct engine for k = 1, spectral otherwise.
double covariance(const FieldSpec& spec, const SpacetimePoint& p, const SpacetimePoint& q);

/// Canonical metric sigma[p, q] = E[(u(p) - u(q))^2]^{1/2}.
double sigma_metric(const FieldSpec& spec, const SpacetimePoint& p, const SpacetimePoint& q);

/// gamma(sigma) = sigma * sqrt(log(1 + 1/sigma)), 0 at sigma = 0.
double gamma_modulus(double sigma);

/// Memoizes covariance values within one experiment. The covariance only
/// depends on (min(t,s), max(t,s), |x - y|), so that triple (rounded to 1e-12)
/// is the key and the value is computed from the rounded triple, which makes
/// results independent of evaluation order. Safe for concurrent use.
class CovarianceCache {
public:
    explicit CovarianceCache(FieldSpec spec) : spec_(spec) {}

    double operator()(const SpacetimePoint& p, const SpacetimePoint& q);
    double variance(const SpacetimePoint& p) { return (*this)(p, p); }

    const FieldSpec& spec() const noexcept { return spec_; }
    std::size_t size() const;

private:
    struct Key {
        std::int64_t lo, hi, dist;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept;
    };

    FieldSpec spec_;
    mutable std::mutex mutex_;
    std::unordered_map<Key, double, KeyHash> values_;
};

/// Empirical constants of the two-sided bound
/// C1 D^{2-beta} <= sigma^2 <= C2 D^{2-beta}, D the l1 distance.
struct SandwichEstimate {
    double c1 = 0.0;
    double c2 = 0.0;
    int n_pairs = 0;
    double min_delta = 0.0;
    double max_delta = 0.0;
};

/// Draws n_pairs pairs in the domain: p uniform in I, q uniform in the l1 ball
/// of radius max_delta around p (rejection, restricted to I).
SandwichEstimate estimate_sandwich(const FieldSpec& spec, const DomainBox& domain, int n_pairs,
                                   double max_delta, std::uint64_t seed);

}  // namespace stochwave
