#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stochwave/field.hpp"

namespace stochwave {

/// Largest point set the dense sampler factorizes.
inline constexpr std::size_t kGridBudget = 3000;

/// Tensor grid over a DomainBox: time_points equally spaced times in [a, a'],
/// space_points_per_axis equally spaced values in [-b, b] on every axis.
struct GridSpec {
    DomainBox domain;
    int time_points = 2;
    int space_points_per_axis = 2;

    std::size_t size(int k) const;
};

/// Grid points in lexicographic order of (t, x1, ..., xk). A single point on an
/// axis sits at the lower end. Throws std::invalid_argument when the grid
/// exceeds `budget`.
std::vector<SpacetimePoint> build_grid(const GridSpec& grid, int k, std::size_t budget = kGridBudget);

/// Dense covariance matrix of the field on `points`. Each off-diagonal entry is
/// the average of the (i, j) and (j, i) evaluations. A cache, when given, is
/// shared across calls. Quadrature failures are rethrown naming the pair.
Eigen::MatrixXd assemble_covariance_matrix(const FieldSpec& spec, std::span<const SpacetimePoint> points,
                                           CovarianceCache* cache = nullptr);

struct FieldSample {
    std::vector<SpacetimePoint> points;
    Eigen::MatrixXd values;  // n_samples x n_points
    std::uint64_t seed = 0;
    FieldSpec spec;
    double applied_jitter = 0.0;
};

/// Exact Gaussian sampling: the covariance on the distinct points is factored
/// once (with jitter ladder) and row i is L z_i with z_i drawn from the counter
/// stream derive_stream(seed, i). Repeated points share a column value.
FieldSample sample_field(const FieldSpec& spec, std::span<const SpacetimePoint> points, int n_samples,
                         std::uint64_t seed, CovarianceCache* cache = nullptr);

/// Header "t;x1;..." per point, then one realization per row.
void write_sample_csv(const FieldSample& sample, std::ostream& out);

}  // namespace stochwave
