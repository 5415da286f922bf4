#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stochwave/field.hpp"
#include "stochwave/sampler.hpp"

namespace stochwave {

/// Fine grids for the covering scan only need sigma, not a factorization, so
/// they get a larger allowance than kGridBudget.
inline constexpr std::size_t kEntropyGridBudget = 4000;

/// d' = min{delta / (1 + sqrt k), a' - a, 2b} with delta = a / 2.
double dyadic_delta_prime(int k, const DomainBox& domain);

/// eps_n = [c2 ((1+k) d')^{2-beta} 2^{-(2-beta) n}]^{1/2} for
/// n = first_level, ..., first_level + n_levels - 1.
std::vector<double> epsilon_schedule(const FieldSpec& spec, const DomainBox& domain, int n_levels, double c2,
                                     int first_level = 1);

struct SigmaPair {
    double sigma;
    std::uint32_t i;
    std::uint32_t j;
};

/// All unordered pairs with sigma > 0, ascending in sigma (ties by index).
struct SigmaTable {
    std::size_t n_points = 0;
    std::vector<SigmaPair> pairs;

    static SigmaTable from_covariance(const Eigen::MatrixXd& C);

    /// Number of pairs with sigma <= eps.
    std::size_t count_at_most(double eps) const;
    double min_positive() const { return pairs.empty() ? 0.0 : pairs.front().sigma; }
};

/// J(eps) per realization: max |u(p) - u(q)| / gamma(sigma) over pairs with
/// 0 < sigma <= eps. Throws when no pair qualifies.
std::vector<double> estimate_J(const FieldSample& sample, const SigmaTable& table, double epsilon);

/// J for several eps at once; column l belongs to epsilons[l].
Eigen::MatrixXd estimate_J_levels(const FieldSample& sample, const SigmaTable& table,
                                  std::span<const double> epsilons);

/// (1 + k) / (2 - beta).
double covering_theory_exponent(const FieldSpec& spec);

struct EntropyRecord {
    std::vector<double> epsilons;
    std::vector<std::size_t> covering_numbers;
    double fitted_exponent = 0.0;
    double theory_exponent = 0.0;      // (1+k)/(2-beta)
    double volumetric_exponent = 0.0;  // 2(1+k)/(2-beta), from the two-sided sigma bound
    std::size_t n_points = 0;
};

/// Greedy covering of the grid points by sigma-balls for each eps, then the
/// least-squares slope of log N against log(1/eps). An empty eps list selects 8
/// log-spaced values between 1.5 times the largest nearest-neighbour sigma and
/// half the sigma diameter. Levels with N = 1 or N = all points are
/// dropped; fewer than 3 remaining is an error.
EntropyRecord entropy_scan(const FieldSpec& spec, const DomainBox& domain, const GridSpec& fine_grid,
                           std::span<const double> epsilons = {});

struct ModulusConfig {
    GridSpec grid{DomainBox{}, 40, 40};
    int n_levels = 6;
    int first_level = -1;  // < 0: last level is the finest with >= min_pairs pairs
    int min_pairs = 50;
    int n_samples = 100;
    std::uint64_t seed = 1;
    int sandwich_pairs = 1000;
    double sandwich_max_delta = 0.5;
    bool entropy = false;
    GridSpec entropy_grid{DomainBox{}, 60, 60};

    void validate() const;
};

struct ModulusReport {
    std::vector<int> levels;
    std::vector<double> epsilon_schedule;
    std::vector<std::size_t> qualifying_pairs;
    Eigen::MatrixXd J_values;  // n_samples x n_levels
    double K_estimate = 0.0;
    double K_dispersion = 0.0;
    std::vector<double> median_by_level;
    std::vector<double> dispersion_by_level;
    SandwichEstimate sandwich;
    SandwichEstimate sandwich_check;  // independent pair set
    double applied_jitter = 0.0;
    std::size_t n_points = 0;
    double min_positive_sigma = 0.0;
    std::optional<EntropyRecord> entropy;
};

ModulusReport modulus_experiment(const FieldSpec& spec, const ModulusConfig& config);

}  // namespace stochwave
