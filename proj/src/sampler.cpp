#include "stochwave/sampler.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "stochwave/format.hpp"
#include "stochwave/parallel.hpp"
#include "stochwave/random.hpp"

namespace stochwave {
namespace {

std::vector<double> axis(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    if (n > 1) v.back() = hi;
    return v;
}

std::string describe(const SpacetimePoint& p) {
    std::string s = "(" + format_double(p.t);
    for (int j = 0; j < p.dim; ++j) s += ", " + format_double(p.x[j]);
    return s + ")";
}

}  // namespace

std::size_t GridSpec::size(int k) const {
    std::size_t n = static_cast<std::size_t>(time_points);
    for (int j = 0; j < k; ++j) n *= static_cast<std::size_t>(space_points_per_axis);
    return n;
}

std::vector<SpacetimePoint> build_grid(const GridSpec& grid, int k, std::size_t budget) {
    grid.domain.validate();
    if (k < 1 || k > kMaxSpatialDim) throw std::invalid_argument("grid dimension k must be 1, 2 or 3");
    if (grid.time_points < 1 || grid.space_points_per_axis < 1)
        throw std::invalid_argument("grid needs at least one point per axis");
    const std::size_t n = grid.size(k);
    if (n > budget) {
        std::ostringstream msg;
        msg << "grid has " << n << " points, above the factorization budget of " << budget;
        throw std::invalid_argument(msg.str());
    }
    const auto times = axis(grid.domain.a, grid.domain.a_prime, grid.time_points);
    const auto space = axis(-grid.domain.b, grid.domain.b, grid.space_points_per_axis);
    const int m = grid.space_points_per_axis;

    std::vector<SpacetimePoint> points;
    points.reserve(n);
    const std::size_t per_time = n / times.size();
    for (double t : times) {
        for (std::size_t idx = 0; idx < per_time; ++idx) {
            SpacetimePoint p;
            p.t = t;
            p.dim = k;
            std::size_t rest = idx;
            for (int j = k - 1; j >= 0; --j) {
                p.x[j] = space[rest % m];
                rest /= m;
            }
            points.push_back(p);
        }
    }
    return points;
}

Eigen::MatrixXd assemble_covariance_matrix(const FieldSpec& spec, std::span<const SpacetimePoint> points,
                                           CovarianceCache* cache) {
    const std::size_t n = points.size();
    Eigen::MatrixXd C(n, n);
    auto eval = [&](std::size_t i, std::size_t j) {
        try {
            return cache ? (*cache)(points[i], points[j]) : covariance(spec, points[i], points[j]);
        } catch (const NumericsError& e) {
            std::ostringstream msg;
            msg << e.what() << " [pair " << i << ", " << j << ": " << describe(points[i]) << ", "
                << describe(points[j]) << "]";
            throw NumericsError(msg.str(), e.best_estimate(), e.error_bound());
        }
    };
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = 0; j < i; ++j) C(i, j) = 0.5 * (eval(i, j) + eval(j, i));
        C(i, i) = eval(i, i);
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) C(i, j) = C(j, i);
    return C;
}

FieldSample sample_field(const FieldSpec& spec, std::span<const SpacetimePoint> points, int n_samples,
                         std::uint64_t seed, CovarianceCache* cache) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    if (points.empty()) throw std::invalid_argument("sample_field needs at least one point");
    for (const auto& p : points)
        if (p.dim != spec.k()) throw std::invalid_argument("point dimension does not match k");

    // Distinct points in first-appearance order; column j reads column_of[j].
    std::vector<SpacetimePoint> distinct;
    std::vector<std::size_t> column_of(points.size());
    auto key = [](const SpacetimePoint& p) { return std::tuple(p.t, p.x[0], p.x[1], p.x[2]); };
    std::map<decltype(key(points[0])), std::size_t> seen;
    for (std::size_t j = 0; j < points.size(); ++j) {
        auto [it, inserted] = seen.try_emplace(key(points[j]), distinct.size());
        if (inserted) distinct.push_back(points[j]);
        column_of[j] = it->second;
    }

    const Eigen::MatrixXd C = assemble_covariance_matrix(spec, distinct, cache);
    const auto factor = numerics::factor_psd(C);
    const Eigen::Index m = static_cast<Eigen::Index>(distinct.size());

    Eigen::MatrixXd Z(m, n_samples);
    parallel_for(static_cast<std::size_t>(n_samples), [&](std::size_t i) {
        CounterRng rng(derive_stream(seed, i));
        for (Eigen::Index r = 0; r < m; ++r) Z(r, static_cast<Eigen::Index>(i)) = rng.normal();
    });
    const Eigen::MatrixXd V = factor.lower_factor.triangularView<Eigen::Lower>() * Z;

    FieldSample out{std::vector<SpacetimePoint>(points.begin(), points.end()),
                    Eigen::MatrixXd(n_samples, points.size()), seed, spec, factor.applied_jitter};
    for (std::size_t j = 0; j < points.size(); ++j)
        out.values.col(j) = V.row(static_cast<Eigen::Index>(column_of[j])).transpose();
    return out;
}

void write_sample_csv(const FieldSample& sample, std::ostream& out) {
    for (std::size_t j = 0; j < sample.points.size(); ++j) {
        const auto& p = sample.points[j];
        if (j) out << ',';
        out << format_double(p.t);
        for (int d = 0; d < p.dim; ++d) out << ';' << format_double(p.x[d]);
    }
    out << '\n';
    for (Eigen::Index i = 0; i < sample.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < sample.values.cols(); ++j) {
            if (j) out << ',';
            out << format_double(sample.values(i, j));
        }
        out << '\n';
    }
}

}  // namespace stochwave
