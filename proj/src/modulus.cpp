#include "stochwave/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "stochwave/parallel.hpp"
#include "stochwave/random.hpp"

namespace stochwave {
namespace {

double sorted_quantile(const std::vector<double>& v, double q) {
    const double pos = q * (v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

// sigma from a covariance matrix, with the same clamp as sigma_metric.
double pair_sigma(const Eigen::MatrixXd& C, Eigen::Index i, Eigen::Index j) {
    const double vp = C(i, i), vq = C(j, j);
    const double r = vp + vq - 2.0 * C(i, j);
    if (r >= 0.0) return std::sqrt(r);
    if (r >= -std::max(1e-12, 1e-10 * (vp + vq))) return 0.0;
    std::ostringstream msg;
    msg << "negative squared distance " << r << " between points " << i << " and " << j;
    throw std::runtime_error(msg.str());
}

}  // namespace

double dyadic_delta_prime(int k, const DomainBox& domain) {
    domain.validate();
    const double delta = 0.5 * domain.a;
    return std::min({delta / (1.0 + std::sqrt(static_cast<double>(k))), domain.a_prime - domain.a, 2.0 * domain.b});
}

std::vector<double> epsilon_schedule(const FieldSpec& spec, const DomainBox& domain, int n_levels, double c2,
                                     int first_level) {
    if (!(c2 > 0.0)) throw std::invalid_argument("C2 must be positive");
    if (n_levels < 1) throw std::invalid_argument("n_levels must be >= 1");
    const int k = spec.k();
    const double expo = 2.0 - spec.beta();
    const double base = c2 * std::pow((1.0 + k) * dyadic_delta_prime(k, domain), expo);
    std::vector<double> eps(n_levels);
    for (int l = 0; l < n_levels; ++l) eps[l] = std::sqrt(base * std::exp2(-expo * (first_level + l)));
    return eps;
}

SigmaTable SigmaTable::from_covariance(const Eigen::MatrixXd& C) {
    SigmaTable table;
    table.n_points = static_cast<std::size_t>(C.rows());
    const auto n = static_cast<Eigen::Index>(table.n_points);
    std::vector<std::vector<SigmaPair>> rows(table.n_points);
    parallel_for(table.n_points, [&](std::size_t i) {
        for (Eigen::Index j = static_cast<Eigen::Index>(i) + 1; j < n; ++j) {
            const double s = pair_sigma(C, static_cast<Eigen::Index>(i), j);
            if (s > 0.0) rows[i].push_back({s, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
        }
    });
    for (auto& r : rows) table.pairs.insert(table.pairs.end(), r.begin(), r.end());
    std::sort(table.pairs.begin(), table.pairs.end(), [](const SigmaPair& l, const SigmaPair& r) {
        if (l.sigma != r.sigma) return l.sigma < r.sigma;
        return l.i != r.i ? l.i < r.i : l.j < r.j;
    });
    return table;
}

std::size_t SigmaTable::count_at_most(double eps) const {
    return static_cast<std::size_t>(
        std::upper_bound(pairs.begin(), pairs.end(), eps, [](double e, const SigmaPair& p) { return e < p.sigma; }) -
        pairs.begin());
}

Eigen::MatrixXd estimate_J_levels(const FieldSample& sample, const SigmaTable& table,
                                  std::span<const double> epsilons) {
    if (static_cast<std::size_t>(sample.values.cols()) != table.n_points)
        throw std::invalid_argument("sigma table and sample have different point counts");
    std::vector<std::size_t> order(epsilons.size());
    std::vector<std::size_t> ends(epsilons.size());
    for (std::size_t l = 0; l < epsilons.size(); ++l) {
        order[l] = l;
        ends[l] = table.count_at_most(epsilons[l]);
        if (ends[l] == 0) {
            std::ostringstream msg;
            msg << "no point pair with 0 < sigma <= " << epsilons[l] << " (smallest positive sigma "
                << table.min_positive() << "); use a denser grid or a larger epsilon";
            throw std::invalid_argument(msg.str());
        }
    }
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return ends[l] < ends[r]; });

    std::vector<double> inv_gamma(ends[order.back()]);
    for (std::size_t p = 0; p < inv_gamma.size(); ++p) inv_gamma[p] = 1.0 / gamma_modulus(table.pairs[p].sigma);

    const auto rows = sample.values.rows();
    Eigen::MatrixXd J(rows, static_cast<Eigen::Index>(epsilons.size()));
    parallel_for(static_cast<std::size_t>(rows), [&](std::size_t r) {
        const auto row = sample.values.row(static_cast<Eigen::Index>(r));
        double best = 0.0;
        std::size_t p = 0;
        for (std::size_t l : order) {
            for (; p < ends[l]; ++p) {
                const auto& pr = table.pairs[p];
                best = std::max(best, std::abs(row(pr.i) - row(pr.j)) * inv_gamma[p]);
            }
            J(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l)) = best;
        }
    });
    return J;
}

std::vector<double> estimate_J(const FieldSample& sample, const SigmaTable& table, double epsilon) {
    const Eigen::MatrixXd J = estimate_J_levels(sample, table, std::span(&epsilon, 1));
    return std::vector<double>(J.data(), J.data() + J.rows());
}

double covering_theory_exponent(const FieldSpec& spec) { return (1.0 + spec.k()) / (2.0 - spec.beta()); }

EntropyRecord entropy_scan(const FieldSpec& spec, const DomainBox& domain, const GridSpec& fine_grid,
                           std::span<const double> epsilons) {
    GridSpec grid = fine_grid;
    grid.domain = domain;
    const auto pts = build_grid(grid, spec.k(), kEntropyGridBudget);
    CovarianceCache cache(spec);
    const Eigen::MatrixXd C = assemble_covariance_matrix(spec, pts, &cache);
    const auto n = static_cast<Eigen::Index>(pts.size());

    std::vector<double> eps(epsilons.begin(), epsilons.end());
    if (eps.empty()) {
        std::vector<double> nearest(pts.size(), std::numeric_limits<double>::infinity());
        std::vector<double> farthest(pts.size(), 0.0);
        parallel_for(pts.size(), [&](std::size_t i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == static_cast<Eigen::Index>(i)) continue;
                const double s = pair_sigma(C, static_cast<Eigen::Index>(i), j);
                if (s > 0.0) nearest[i] = std::min(nearest[i], s);
                farthest[i] = std::max(farthest[i], s);
            }
        });
        const double lo = 1.5 * *std::max_element(nearest.begin(), nearest.end());
        const double hi = 0.5 * *std::max_element(farthest.begin(), farthest.end());
        if (!(lo < hi)) throw std::invalid_argument("fine grid too coarse for a covering scan");
        for (int l = 0; l < 8; ++l) eps.push_back(lo * std::pow(hi / lo, l / 7.0));
    }

    EntropyRecord rec;
    rec.n_points = pts.size();
    rec.theory_exponent = covering_theory_exponent(spec);
    rec.volumetric_exponent = 2.0 * rec.theory_exponent;
    std::vector<double> cover(eps.size(), 0.0);
    parallel_for(eps.size(), [&](std::size_t l) {
        std::vector<char> covered(pts.size(), 0);
        std::size_t centers = 0;
        for (Eigen::Index c = 0; c < n; ++c) {
            if (covered[c]) continue;
            ++centers;
            for (Eigen::Index j = 0; j < n; ++j)
                if (!covered[j] && pair_sigma(C, c, j) <= eps[l]) covered[j] = 1;
        }
        cover[l] = static_cast<double>(centers);
    });

    std::vector<double> xs, ys;
    for (std::size_t l = 0; l < eps.size(); ++l) {
        if (cover[l] <= 1.0 || cover[l] >= static_cast<double>(pts.size())) continue;
        rec.epsilons.push_back(eps[l]);
        rec.covering_numbers.push_back(static_cast<std::size_t>(cover[l]));
        xs.push_back(-std::log(eps[l]));
        ys.push_back(std::log(cover[l]));
    }
    if (xs.size() < 3) throw std::invalid_argument("fewer than 3 usable epsilon levels for the covering fit");
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    rec.fitted_exponent = sxy / sxx;
    return rec;
}

void ModulusConfig::validate() const {
    grid.domain.validate();
    if (n_levels < 1) throw std::invalid_argument("n_levels must be >= 1");
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    if (min_pairs < 1) throw std::invalid_argument("min_pairs must be >= 1");
    if (sandwich_pairs < 2) throw std::invalid_argument("sandwich_pairs must be >= 2");
    if (!(sandwich_max_delta > 0.0)) throw std::invalid_argument("sandwich_max_delta must be positive");
}

ModulusReport modulus_experiment(const FieldSpec& spec, const ModulusConfig& config) {
    config.validate();
    const DomainBox& domain = config.grid.domain;
    const auto pts = build_grid(config.grid, spec.k());
    CovarianceCache cache(spec);
    const Eigen::MatrixXd C = assemble_covariance_matrix(spec, pts, &cache);
    const SigmaTable table = SigmaTable::from_covariance(C);
    if (table.pairs.empty()) throw std::invalid_argument("grid has no pair with positive sigma");

    ModulusReport report;
    report.n_points = pts.size();
    report.min_positive_sigma = table.min_positive();
    report.sandwich = estimate_sandwich(spec, domain, config.sandwich_pairs, config.sandwich_max_delta,
                                        derive_stream(config.seed, 1));
    report.sandwich_check = estimate_sandwich(spec, domain, config.sandwich_pairs, config.sandwich_max_delta,
                                              derive_stream(config.seed, 2));
    const double c2 = report.sandwich.c2;

    int first = config.first_level;
    if (first < 0) {
        // Finest level that still has min_pairs qualifying pairs.
        int last = 0;
        const auto probe = epsilon_schedule(spec, domain, 64, c2, 0);
        for (int n = 0; n < 64 && table.count_at_most(probe[n]) >= static_cast<std::size_t>(config.min_pairs); ++n)
            last = n;
        first = std::max(0, last - config.n_levels + 1);
    }
    for (int l = 0; l < config.n_levels; ++l) report.levels.push_back(first + l);
    report.epsilon_schedule = epsilon_schedule(spec, domain, config.n_levels, c2, first);
    for (double e : report.epsilon_schedule) report.qualifying_pairs.push_back(table.count_at_most(e));

    const FieldSample sample = sample_field(spec, pts, config.n_samples, config.seed, &cache);
    report.applied_jitter = sample.applied_jitter;
    report.J_values = estimate_J_levels(sample, table, report.epsilon_schedule);

    for (Eigen::Index l = 0; l < report.J_values.cols(); ++l) {
        std::vector<double> col(report.J_values.col(l).data(), report.J_values.col(l).data() + report.J_values.rows());
        std::sort(col.begin(), col.end());
        const double med = sorted_quantile(col, 0.5);
        report.median_by_level.push_back(med);
        report.dispersion_by_level.push_back((sorted_quantile(col, 0.75) - sorted_quantile(col, 0.25)) / med);
    }
    report.K_estimate = report.median_by_level.back();
    report.K_dispersion = report.dispersion_by_level.back();

    if (config.entropy) report.entropy = entropy_scan(spec, domain, config.entropy_grid);
    return report;
}

}  // namespace stochwave
