#include "stochwave/lnd.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "stochwave/modulus.hpp"
#include "stochwave/parallel.hpp"
#include "stochwave/random.hpp"
#include "stochwave/sampler.hpp"

namespace stochwave {
namespace {

constexpr double kCoincidence = 1e-9;
constexpr double kDegenerate = 1e-30;

struct Node {
    std::array<double, kMaxSpatialDim> w{};
    double weight = 0.0;
};

std::vector<Node> sphere_nodes(int k, const SphereRule& rule) {
    std::vector<Node> out;
    if (k == 1) {
        out.push_back({{1.0, 0.0, 0.0}, 1.0});
        out.push_back({{-1.0, 0.0, 0.0}, 1.0});
    } else if (k == 2) {
        if (rule.angles < SphereRule::kMinAngles)
            throw std::invalid_argument("sphere rule needs at least 16 angles for k = 2");
        const double weight = 2.0 * std::numbers::pi / rule.angles;
        for (int m = 0; m < rule.angles; ++m) {
            const double th = 2.0 * std::numbers::pi * m / rule.angles;
            out.push_back({{std::cos(th), std::sin(th), 0.0}, weight});
        }
    } else {
        if (rule.nodes < SphereRule::kMinNodes)
            throw std::invalid_argument("sphere rule needs at least 64 nodes for k = 3");
        const double weight = 4.0 * std::numbers::pi / rule.nodes;
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < rule.nodes; ++i) {
            const double z = 1.0 - (2.0 * i + 1.0) / rule.nodes;
            const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = golden * i;
            out.push_back({{rad * std::cos(phi), rad * std::sin(phi), z}, weight});
        }
    }
    return out;
}

void check_dims(const SpacetimePoint& target, std::span<const SpacetimePoint> cond) {
    if (cond.empty()) throw std::invalid_argument("conditioning set must be non-empty");
    if (target.dim < 1 || target.dim > kMaxSpatialDim) throw std::invalid_argument("point dimension must be 1, 2 or 3");
    for (const auto& c : cond)
        if (c.dim != target.dim) throw std::invalid_argument("conditioning point dimension mismatch");
}

double integral_with(const std::vector<Node>& nodes, const SpacetimePoint& target,
                     std::span<const SpacetimePoint> cond, double beta) {
    const int k = target.dim;
    double sum = 0.0;
    for (const auto& node : nodes) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : cond) {
            double v = target.t - c.t;
            for (int j = 0; j < k; ++j) v += (target.x[j] - c.x[j]) * node.w[j];
            best = std::min(best, std::abs(v));
        }
        sum += node.weight * std::pow(best, 2.0 - beta);
    }
    return sum;
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * (v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

using Bound = std::function<double(const SpacetimePoint&, std::span<const SpacetimePoint>)>;

SpacetimePoint uniform_point(CounterRng& rng, const DomainBox& box, int k) {
    SpacetimePoint p;
    p.dim = k;
    p.t = rng.uniform(box.a, box.a_prime);
    for (int j = 0; j < k; ++j) p.x[j] = rng.uniform(-box.b, box.b);
    return p;
}

SpacetimePoint near_point(CounterRng& rng, const SpacetimePoint& target, const DomainBox& box, double delta) {
    for (int attempt = 0; attempt < 1000000; ++attempt) {
        SpacetimePoint q = target;
        q.t += rng.uniform(-delta, delta);
        for (int j = 0; j < target.dim; ++j) q.x[j] += rng.uniform(-delta, delta);
        const double d = l1_distance(q, target);
        if (d <= delta && d >= kCoincidence && box.contains(q)) return q;
    }
    throw std::runtime_error("could not draw a conditioning point inside the domain");
}

LndReport scan(const FieldSpec& spec, const LndConfig& config, const Bound& bound) {
    config.validate();
    const int k = spec.k();
    const double delta = config.resolved_delta();
    std::vector<LndTrial> trials(config.trials);
    std::vector<int> violations(config.trials, 0);

    parallel_for(trials.size(), [&](std::size_t i) {
        CounterRng rng(derive_stream(config.seed, i));
        LndTrial& trial = trials[i];
        trial.target = uniform_point(rng, config.domain, k);
        const int n = rng.uniform_int(1, config.n_conditioning);
        for (int j = 0; j < n; ++j) trial.conditioning.push_back(near_point(rng, trial.target, config.domain, delta));

        // Target first, then conditioning points; prefixes give the nested sets.
        std::vector<SpacetimePoint> all{trial.target};
        all.insert(all.end(), trial.conditioning.begin(), trial.conditioning.end());
        const Eigen::MatrixXd C = assemble_covariance_matrix(spec, all);
        double prev_var = std::numeric_limits<double>::infinity();
        double prev_bound = std::numeric_limits<double>::infinity();
        for (int m = 1; m <= n; ++m) {
            const double var = numerics::schur_conditional_variance(C.topLeftCorner(m + 1, m + 1));
            const double b = bound(trial.target, std::span(trial.conditioning).first(m));
            if (var > prev_var * (1.0 + 1e-9) + 1e-15 * C(0, 0) || b > prev_bound * (1.0 + 1e-12)) ++violations[i];
            prev_var = var;
            prev_bound = b;
        }
        trial.conditional_variance = prev_var;
        trial.bound = prev_bound;
        if (trial.bound < kDegenerate) {
            trial.skipped = true;
        } else {
            trial.ratio = trial.conditional_variance / trial.bound;
        }
    });

    LndReport report;
    report.delta = delta;
    report.trials = std::move(trials);
    report.min_ratio_by_n.assign(config.n_conditioning, std::numeric_limits<double>::infinity());
    std::vector<double> ratios;
    report.min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < report.trials.size(); ++i) {
        report.nested_violations += violations[i];
        const auto& t = report.trials[i];
        if (t.skipped) {
            ++report.skipped;
            continue;
        }
        ratios.push_back(t.ratio);
        auto& by_n = report.min_ratio_by_n[t.conditioning.size() - 1];
        by_n = std::min(by_n, t.ratio);
        if (t.ratio < report.min_ratio) {
            report.min_ratio = t.ratio;
            report.min_trial = i;
        }
    }
    if (ratios.empty()) throw std::runtime_error("every trial was degenerate");
    report.quantile_levels = {0.05, 0.25, 0.5, 0.75, 0.95};
    for (double q : report.quantile_levels) report.quantiles.push_back(quantile(ratios, q));
    return report;
}

}  // namespace

void LndConfig::validate() const {
    domain.validate();
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw std::invalid_argument("delta must be >= 0 (0 selects a/2)");
    if (n_conditioning < 1 || n_conditioning > kMaxConditioning)
        throw std::invalid_argument("n_conditioning must be between 1 and 8");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
}

double slnd_integral(const SpacetimePoint& target, std::span<const SpacetimePoint> cond, double beta,
                     const SphereRule& rule) {
    check_dims(target, cond);
    if (!(beta > 0.0 && beta < 2.0)) throw std::invalid_argument("beta must be in (0, 2)");
    return integral_with(sphere_nodes(target.dim, rule), target, cond, beta);
}

double sectorial_bound(const SpacetimePoint& target, std::span<const SpacetimePoint> cond, double beta) {
    check_dims(target, cond);
    if (target.dim != 1) throw std::invalid_argument("sectorial bound is defined for k = 1 only");
    double plus = std::numeric_limits<double>::infinity();
    double minus = plus;
    for (const auto& c : cond) {
        const double dt = target.t - c.t;
        const double dx = target.x[0] - c.x[0];
        plus = std::min(plus, std::abs(dt + dx));
        minus = std::min(minus, std::abs(dt - dx));
    }
    return std::pow(plus, 2.0 - beta) + std::pow(minus, 2.0 - beta);
}

double conditional_variance_points(const FieldSpec& spec, const SpacetimePoint& target,
                                   std::span<const SpacetimePoint> cond) {
    std::vector<SpacetimePoint> all{target};
    for (const auto& c : cond) {
        if (c == target) return 0.0;
        if (std::find(all.begin(), all.end(), c) == all.end()) all.push_back(c);
    }
    return numerics::schur_conditional_variance(assemble_covariance_matrix(spec, all));
}

LndReport slnd_ratio_scan(const FieldSpec& spec, const LndConfig& config) {
    const auto nodes = sphere_nodes(spec.k(), config.sphere_rule);
    const double beta = spec.beta();
    return scan(spec, config, [&](const SpacetimePoint& target, std::span<const SpacetimePoint> cond) {
        return integral_with(nodes, target, cond, beta);
    });
}

LndReport sectorial_check_k1(const FieldSpec& spec, const LndConfig& config) {
    if (spec.k() != 1) throw std::invalid_argument("sectorial check requires k = 1");
    const double beta = spec.beta();
    return scan(spec, config, [&](const SpacetimePoint& target, std::span<const SpacetimePoint> cond) {
        return sectorial_bound(target, cond, beta);
    });
}

ProofGridReport proof_grid_conditional_check(const FieldSpec& spec, const DomainBox& domain, int n_levels,
                                             double c2) {
    domain.validate();
    if (n_levels < 0) throw std::invalid_argument("n_levels must be >= 0");
    if (!(c2 > 0.0)) throw std::invalid_argument("C2 must be positive");
    if ((std::size_t{1} << std::min(n_levels, 62)) + 1 > kGridBudget)
        throw std::invalid_argument("proof grid exceeds the factorization budget of 3000 points");

    const int k = spec.k();
    ProofGridReport report;
    report.delta_prime = dyadic_delta_prime(k, domain);
    report.c2 = c2;
    const auto eps = epsilon_schedule(spec, domain, n_levels + 1, c2, 0);
    for (int n = 0; n <= n_levels; ++n) {
        const int count = (1 << n) + 1;
        const double step = report.delta_prime / (1 << n);
        std::vector<SpacetimePoint> pts(count);
        for (int i = 0; i < count; ++i) {
            pts[i].dim = k;
            pts[i].t = domain.a + i * step;
            for (int j = 0; j < k; ++j) pts[i].x[j] = -domain.b + i * step;
        }
        const SpacetimePoint target = pts.back();
        pts.pop_back();
        ProofGridLevel level;
        level.n = n;
        level.n_points = count;
        level.conditional_variance = conditional_variance_points(spec, target, pts);
        level.epsilon_sq = eps[n] * eps[n];
        level.ratio = level.conditional_variance / level.epsilon_sq;
        report.levels.push_back(level);
    }
    return report;
}

}  // namespace stochwave
