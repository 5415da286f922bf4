#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stochwave/field.hpp"

namespace stochwave {

/// Quadrature on the unit sphere S^{k-1}. k = 1 is the exact two-point measure
/// on {-1, 1}; k = 2 uses `angles` uniform angles; k = 3 a Fibonacci lattice of
/// `nodes` points. Weights are equal and sum to the sphere area.
struct SphereRule {
    int angles = 512;
    int nodes = 1024;

    static constexpr int kMinAngles = 16;
    static constexpr int kMinNodes = 64;
};

struct LndConfig {
    DomainBox domain;
    double delta = 0.0;  // 0 selects a/2
    int n_conditioning = 4;
    SphereRule sphere_rule;
    int trials = 200;
    std::uint64_t seed = 1;

    static constexpr int kMaxConditioning = 8;

    void validate() const;
    double resolved_delta() const { return delta > 0.0 ? delta : 0.5 * domain.a; }
};

struct LndTrial {
    SpacetimePoint target;
    std::vector<SpacetimePoint> conditioning;
    double conditional_variance = 0.0;
    double bound = 0.0;
    double ratio = 0.0;
    bool skipped = false;
};

struct LndReport {
    std::vector<LndTrial> trials;
    double min_ratio = 0.0;
    std::size_t min_trial = 0;
    std::vector<double> quantile_levels;
    std::vector<double> quantiles;
    std::vector<double> min_ratio_by_n;  // entry n-1: smallest ratio among trials with n points
    int skipped = 0;
    int nested_violations = 0;  // prefixes where either quantity increased
    double delta = 0.0;
};

/// Unit-sphere integral of min_j |(t - t^j) + (x - x^j).w|^{2-beta}.
double slnd_integral(const SpacetimePoint& target, std::span<const SpacetimePoint> cond, double beta,
                     const SphereRule& rule = {});

/// k = 1 two-characteristic bound min_j|dt+dx|^{2-beta} + min_j|dt-dx|^{2-beta}.
double sectorial_bound(const SpacetimePoint& target, std::span<const SpacetimePoint> cond, double beta);

/// Var(u(target) | u(cond)). Exact duplicates in cond are dropped; a
/// conditioning point equal to the target gives 0.
double conditional_variance_points(const FieldSpec& spec, const SpacetimePoint& target,
                                   std::span<const SpacetimePoint> cond);

/// Random trials: target uniform in I, 1..n_conditioning points uniform in the
/// l1 ball of radius delta around it (within I). Ratio = conditional variance
/// over the sphere integral.
LndReport slnd_ratio_scan(const FieldSpec& spec, const LndConfig& config);

/// Same scan for k = 1 with the two-term sectorial bound.
LndReport sectorial_check_k1(const FieldSpec& spec, const LndConfig& config);

struct ProofGridLevel {
    int n = 0;
    int n_points = 0;
    double conditional_variance = 0.0;
    double epsilon_sq = 0.0;
    double ratio = 0.0;
};

struct ProofGridReport {
    double delta_prime = 0.0;
    double c2 = 0.0;
    std::vector<ProofGridLevel> levels;
};

/// Diagonal dyadic points t = a + i d' 2^-n, x_j = -b + i d' 2^-n, i = 0..2^n.
/// For each n in [0, n_levels] the last point is conditioned on the others and
/// compared with eps_n^2 = c2 ((1+k) d')^{2-beta} 2^{-(2-beta) n}.
ProofGridReport proof_grid_conditional_check(const FieldSpec& spec, const DomainBox& domain, int n_levels,
                                             double c2);

}  // namespace stochwave
