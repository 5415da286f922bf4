#include "stochwave/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stochwave/parallel.hpp"
#include "stochwave/random.hpp"

namespace stochwave {

namespace {

void check_admissible(int k, double beta) {
    if (k < 1 || k > kMaxSpatialDim) {
        std::ostringstream msg;
        msg << "spatial dimension k must be 1, 2 or 3 (got " << k << ")";
        throw std::invalid_argument(msg.str());
    }
    if (k == 1 && beta == 1.0) return;
    if (!(beta > 0.0 && beta < std::min(static_cast<double>(k), 2.0))) {
        std::ostringstream msg;
        msg << "noise exponent must satisfy 0 < beta < min(k, 2), or k = 1 = beta (got k = " << k
            << ", beta = " << beta << ")";
        throw std::invalid_argument(msg.str());
    }
}

void check_point(const FieldSpec& spec, const SpacetimePoint& p) {
    if (p.dim != spec.k())
        throw std::invalid_argument("point dimension does not match the field dimension k");
    if (!std::isfinite(p.t) || p.t < 0.0) throw std::invalid_argument("point time must be finite and >= 0");
    for (int j = 0; j < p.dim; ++j)
        if (!std::isfinite(p.x[j])) throw std::invalid_argument("point coordinates must be finite");
}

double spatial_distance(const SpacetimePoint& p, const SpacetimePoint& q) {
    double s = 0.0;
    for (int j = 0; j < p.dim; ++j) s += (p.x[j] - q.x[j]) * (p.x[j] - q.x[j]);
    return std::sqrt(s);
}

}  // namespace

FieldSpec FieldSpec::make(int k, double beta) {
    check_admissible(k, beta);
    return FieldSpec(k, beta, riesz_spectral_constant(k, beta));
}

SpacetimePoint SpacetimePoint::make(double t, std::initializer_list<double> x) {
    return make(t, std::span<const double>(x.begin(), x.size()));
}

SpacetimePoint SpacetimePoint::make(double t, std::span<const double> x) {
    if (x.empty() || x.size() > static_cast<std::size_t>(kMaxSpatialDim))
        throw std::invalid_argument("spatial coordinate must have 1 to 3 components");
    SpacetimePoint p;
    p.t = t;
    p.dim = static_cast<int>(x.size());
    std::copy(x.begin(), x.end(), p.x.begin());
    return p;
}

double l1_distance(const SpacetimePoint& p, const SpacetimePoint& q) {
    double d = std::abs(p.t - q.t);
    for (int j = 0; j < p.dim; ++j) d += std::abs(p.x[j] - q.x[j]);
    return d;
}

void DomainBox::validate() const {
    if (!(a > 0.0 && a < a_prime && std::isfinite(a_prime) && b > 0.0 && std::isfinite(b)))
        throw std::invalid_argument("domain requires 0 < a < a' < inf and 0 < b < inf");
}

bool DomainBox::contains(const SpacetimePoint& p) const {
    if (p.t < a || p.t > a_prime) return false;
    for (int j = 0; j < p.dim; ++j)
        if (p.x[j] < -b || p.x[j] > b) return false;
    return true;
}

double riesz_spectral_constant(int k, double beta) {
    check_admissible(k, beta);
    const double two_pi_k = std::pow(2.0 * std::numbers::pi, k);
    if (k == 1 && beta == 1.0) return 1.0 / two_pi_k;
    return std::pow(2.0, k - beta) * std::pow(std::numbers::pi, 0.5 * k) *
           numerics::gamma_fn(0.5 * (k - beta)) / numerics::gamma_fn(0.5 * beta) / two_pi_k;
}

namespace {

// Light-cone intervals (x - (t - r), x + (t - r)) and (y - (s - r), y + (s - r))
// have overlap max(0, L0 - 2r) with L0 = min(x+t, y+s) - max(x-t, y-s).
double white_noise_k1(double t, double x, double s, double y) {
    const double m = std::min(t, s);
    const double L0 = std::min(x + t, y + s) - std::max(x - t, y - s);
    if (L0 <= 0.0 || m <= 0.0) return 0.0;
    const double r_end = std::min(m, 0.5 * L0);
    return 0.25 * (L0 * r_end - r_end * r_end);
}

struct RieszKernel1d {
    double beta;
    double phi_norm;  // 1 / ((1-beta)(2-beta))
    double psi_norm;  // 1 / ((1-beta)(2-beta)(3-beta))

    explicit RieszKernel1d(double b)
        : beta(b), phi_norm(1.0 / ((1.0 - b) * (2.0 - b))), psi_norm(phi_norm / (3.0 - b)) {}

    // Phi'' = |u|^{-beta}
    double phi(double u) const { return std::pow(std::abs(u), 2.0 - beta) * phi_norm; }
    // Psi' = Phi
    double psi(double u) const {
        return std::copysign(std::pow(std::abs(u), 3.0 - beta), u) * psi_norm;
    }
};

}  // namespace

double covariance_direct_k1(const FieldSpec& spec, const SpacetimePoint& p, const SpacetimePoint& q) {
    if (spec.k() != 1) throw std::invalid_argument("covariance_direct_k1 requires k = 1");
    check_point(spec, p);
    check_point(spec, q);
    const double t = p.t, s = q.t;
    const double m = std::min(t, s);
    if (m <= 0.0) return 0.0;
    if (spec.white_noise()) return white_noise_k1(t, p.x[0], s, q.x[0]);

    // (1/4) int_0^m [Phi(z+S-2r) - Phi(z-t+s) - Phi(z+t-s) + Phi(z-S+2r)] dr
    const RieszKernel1d kern(spec.beta());
    const double z = p.x[0] - q.x[0];
    const double S = t + s;
    const double moving = 0.5 * (kern.psi(z + S) - kern.psi(z + S - 2.0 * m)) +
                          0.5 * (kern.psi(z - S + 2.0 * m) - kern.psi(z - S));
    const double fixed = m * (kern.phi(z - t + s) + kern.phi(z + t - s));
    return 0.25 * (moving - fixed);
}

double covariance_direct_k1_adaptive(const FieldSpec& spec, const SpacetimePoint& p,
                                     const SpacetimePoint& q) {
    if (spec.k() != 1) throw std::invalid_argument("covariance_direct_k1_adaptive requires k = 1");
    check_point(spec, p);
    check_point(spec, q);
    const double t = p.t, s = q.t, x = p.x[0], y = q.x[0];
    const double m = std::min(t, s);
    if (m <= 0.0) return 0.0;

    numerics::Integrand integrand;
    std::vector<double> breaks{0.0, m};
    const double z = x - y;
    if (spec.white_noise()) {
        integrand = [=](double r) {
            const double lo = std::max(x - (t - r), y - (s - r));
            const double hi = std::min(x + (t - r), y + (s - r));
            return 0.25 * std::max(0.0, hi - lo);
        };
        breaks.push_back(0.5 * (std::min(x + t, y + s) - std::max(x - t, y - s)));
    } else {
        const RieszKernel1d kern(spec.beta());
        integrand = [=](double r) {
            return 0.25 * (kern.phi(z + t + s - 2.0 * r) - kern.phi(z - t + s) - kern.phi(z + t - s) +
                           kern.phi(z - t - s + 2.0 * r));
        };
        breaks.push_back(0.5 * (z + t + s));
        breaks.push_back(0.5 * (t + s - z));
    }
    std::sort(breaks.begin(), breaks.end());

    numerics::QuadSpec qs;
    qs.abs_tol = 1e-14;
    qs.rel_tol = 1e-12;
    qs.max_subdivisions = 5000;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double lo = std::max(breaks[i], 0.0);
        const double hi = std::min(breaks[i + 1], m);
        if (hi > lo) total += numerics::integrate_adaptive(integrand, lo, hi, qs);
    }
    return total;
}

double covariance(const FieldSpec& spec, const SpacetimePoint& p, const SpacetimePoint& q) {
    if (spec.k() == 1) return covariance_direct_k1(spec, p, q);
    return covariance_spectral(spec, p, q);
}

double sigma_metric(const FieldSpec& spec, const SpacetimePoint& p, const SpacetimePoint& q) {
    if (p == q) {
        check_point(spec, p);
        return 0.0;
    }
    const double vp = covariance(spec, p, p);
    const double vq = covariance(spec, q, q);
    const double radicand = vp + vq - 2.0 * covariance(spec, p, q);
    if (radicand >= 0.0) return std::sqrt(radicand);
    if (radicand >= -std::max(1e-12, 1e-10 * (vp + vq))) return 0.0;
    std::ostringstream msg;
    msg << "sigma_metric: negative squared distance " << radicand;
    throw NumericsError(msg.str(), radicand);
}

double gamma_modulus(double sigma) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("gamma_modulus requires sigma >= 0");
    if (sigma == 0.0) return 0.0;
    return sigma * std::sqrt(std::log1p(1.0 / sigma));
}

std::size_t CovarianceCache::KeyHash::operator()(const Key& k) const noexcept {
    std::uint64_t h = mix64(static_cast<std::uint64_t>(k.lo));
    h = mix64(h ^ static_cast<std::uint64_t>(k.hi));
    h = mix64(h ^ static_cast<std::uint64_t>(k.dist));
    return static_cast<std::size_t>(h);
}

double CovarianceCache::operator()(const SpacetimePoint& p, const SpacetimePoint& q) {
    check_point(spec_, p);
    check_point(spec_, q);
    constexpr double kGrid = 1e12;
    auto quantize = [](double v) { return static_cast<std::int64_t>(std::llround(v * kGrid)); };
    const double lo = std::min(p.t, q.t);
    const double hi = std::max(p.t, q.t);
    const Key key{quantize(lo), quantize(hi), quantize(spatial_distance(p, q))};
    {
        std::lock_guard lock(mutex_);
        if (auto it = values_.find(key); it != values_.end()) return it->second;
    }
    // Evaluate at the canonical representative of the key.
    SpacetimePoint a;
    SpacetimePoint b;
    a.dim = b.dim = spec_.k();
    a.t = static_cast<double>(key.lo) / kGrid;
    b.t = static_cast<double>(key.hi) / kGrid;
    b.x[0] = static_cast<double>(key.dist) / kGrid;
    const double value = covariance(spec_, a, b);
    std::lock_guard lock(mutex_);
    values_.emplace(key, value);
    return value;
}

std::size_t CovarianceCache::size() const {
    std::lock_guard lock(mutex_);
    return values_.size();
}

SandwichEstimate estimate_sandwich(const FieldSpec& spec, const DomainBox& domain, int n_pairs,
                                   double max_delta, std::uint64_t seed) {
    domain.validate();
    if (n_pairs < 1 || !(max_delta > 0.0))
        throw std::invalid_argument("estimate_sandwich requires n_pairs >= 1 and max_delta > 0");
    const int k = spec.k();
    const double exponent = 2.0 - spec.beta();

    std::vector<double> ratio(n_pairs), delta(n_pairs);
    CovarianceCache cache(spec);
    parallel_for(static_cast<std::size_t>(n_pairs), [&](std::size_t i) {
        CounterRng rng(derive_stream(seed, i));
        SpacetimePoint p, q;
        p.dim = q.dim = k;
        p.t = rng.uniform(domain.a, domain.a_prime);
        for (int j = 0; j < k; ++j) p.x[j] = rng.uniform(-domain.b, domain.b);
        double d = 0.0;
        do {
            q.t = p.t + rng.uniform(-max_delta, max_delta);
            for (int j = 0; j < k; ++j) q.x[j] = p.x[j] + rng.uniform(-max_delta, max_delta);
            d = l1_distance(p, q);
        } while (!(d > 0.0 && d <= max_delta && domain.contains(q)));
        const double s2 = cache.variance(p) + cache.variance(q) - 2.0 * cache(p, q);
        ratio[i] = s2 / std::pow(d, exponent);
        delta[i] = d;
    });

    SandwichEstimate est;
    est.n_pairs = n_pairs;
    est.c1 = *std::min_element(ratio.begin(), ratio.end());
    est.c2 = *std::max_element(ratio.begin(), ratio.end());
    est.min_delta = *std::min_element(delta.begin(), delta.end());
    est.max_delta = *std::max_element(delta.begin(), delta.end());
    return est;
}

}  // namespace stochwave
