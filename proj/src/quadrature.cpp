#include "stochwave/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <vector>

namespace stochwave::numerics {
namespace {

// Gauss-Kronrod 10/21 abscissae and weights (QUADPACK qk21).
constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525709714, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
// 10-point Gauss weights for the odd Kronrod abscissae.
constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651146};

struct Panel {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

double checked_eval(const Integrand& f, double x) {
    const double y = f(x);
    if (std::isnan(y)) {
        std::ostringstream msg;
        msg << "integrand returned NaN at abscissa " << x;
        throw NumericsError(msg.str());
    }
    return y;
}

Panel gk21(const Integrand& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = checked_eval(f, center);
    double kronrod = fc * kWgk[10];
    double gauss = 0.0;
    for (int j = 0; j < 10; ++j) {
        const double dx = half * kXgk[j];
        const double f1 = checked_eval(f, center - dx);
        const double f2 = checked_eval(f, center + dx);
        kronrod += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
    }
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

// Falling factorial expansion of int_{x0}^inf y^p e^{iy} dy for x0 >= 60 + 2|p|.
std::complex<double> asymptotic_tail(double p, double x0) {
    using namespace std::complex_literals;
    const std::complex<double> lead = 1i * std::exp(1i * x0) * std::pow(x0, p);
    std::complex<double> sum = 0.0;
    std::complex<double> ipow = 1.0;
    double falling = 1.0;  // p (p-1) ... (p-m+1)
    double scale = 1.0;    // x0^{-m}
    for (int m = 0; m < 200; ++m) {
        sum += ipow * falling * scale;
        falling *= (p - m);
        scale /= x0;
        // |(p)_{m+1}| x0^{p-m} / (m+1-p-1) relative to the leading magnitude x0^p
        const double remainder = std::abs(falling) * scale * x0 / (m + 1 - p - 1);
        if (remainder < 1e-16) return lead * sum;
        ipow *= 1i;
    }
    throw NumericsError("asymptotic tail expansion did not converge", std::abs(lead * sum));
}

}  // namespace

void QuadSpec::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || max_subdivisions < 1)
        throw std::invalid_argument("QuadSpec requires abs_tol > 0, rel_tol > 0, max_subdivisions >= 1");
}

double integrate_adaptive(const Integrand& f, double a, double b, const QuadSpec& spec) {
    spec.validate();
    if (!(a < b)) throw std::invalid_argument("integrate_adaptive requires a < b");

    std::priority_queue<Panel> heap;
    Panel first = gk21(f, a, b);
    double total = first.value;
    double total_error = first.error;
    heap.push(first);

    int subdivisions = 0;
    while (total_error > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
        if (subdivisions >= spec.max_subdivisions) {
            std::ostringstream msg;
            msg << "integrate_adaptive: no convergence within max_subdivisions on [" << a << ", " << b
                << "] (estimate " << total << ", error " << total_error << ")";
            throw NumericsError(msg.str(), total, total_error);
        }
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            throw NumericsError("integrate_adaptive: interval cannot be subdivided further", total,
                                total_error);
        }
        Panel left = gk21(f, worst.a, mid);
        Panel right = gk21(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++subdivisions;

        // Refresh the running sums from the panels to shed accumulated rounding.
        if (subdivisions % 64 == 0) {
            auto copy = heap;
            total = 0.0;
            total_error = 0.0;
            while (!copy.empty()) {
                total += copy.top().value;
                total_error += copy.top().error;
                copy.pop();
            }
        }
    }

    // Final summation in a fixed order for determinism.
    std::vector<Panel> panels;
    panels.reserve(heap.size());
    while (!heap.empty()) {
        panels.push_back(heap.top());
        heap.pop();
    }
    std::sort(panels.begin(), panels.end(), [](const Panel& l, const Panel& r) { return l.a < r.a; });
    double sum = 0.0;
    for (const auto& p : panels) sum += p.value;
    return sum;
}

double integrate_oscillatory_tail(const Integrand& f, double R, const QuadSpec& spec) {
    spec.validate();
    const TailPolicy& tail = spec.tail;
    const double p = tail.envelope_exponent;
    if (!(p < -1.0))
        throw std::invalid_argument("integrate_oscillatory_tail: envelope exponent must be < -1");
    if (!(R > 0.0)) throw std::invalid_argument("integrate_oscillatory_tail: R must be positive");
    if (!(tail.envelope_constant >= 0.0) || !(tail.frequency >= 0.0) || !(tail.target_tail_bound > 0.0))
        throw std::invalid_argument("integrate_oscillatory_tail: invalid tail policy");

    QuadSpec panel_spec = spec;
    panel_spec.abs_tol = std::max(spec.abs_tol * 1e-4, std::numeric_limits<double>::min());

    const double omega = tail.frequency;
    auto remainder_bound = [&](double X) {
        if (omega > 0.0) return 2.0 * tail.envelope_constant * std::pow(X, p) / omega;
        return tail.envelope_constant * std::pow(X, p + 1.0) / std::abs(p + 1.0);
    };

    double sum = 0.0;
    double X = R;
    const double half_period = omega > 0.0 ? std::numbers::pi / omega : 0.0;
    long node = omega > 0.0 ? static_cast<long>(std::floor(R / half_period)) + 1 : 0;
    for (int panels = 0; remainder_bound(X) > tail.target_tail_bound; ++panels) {
        if (panels >= spec.max_subdivisions) {
            throw NumericsError("integrate_oscillatory_tail: tail bound not reached within panel budget",
                                sum, remainder_bound(X));
        }
        double next = omega > 0.0 ? node++ * half_period : 2.0 * X;
        if (next <= X) next = X + half_period;
        sum += integrate_adaptive(f, X, next, panel_spec);
        X = next;
    }
    return sum;
}

std::complex<double> power_trig_tail(std::span<const PowerTerm> terms, double omega, double X) {
    if (!(X > 0.0) || !(omega >= 0.0))
        throw std::invalid_argument("power_trig_tail requires X > 0 and omega >= 0");
    for (const auto& t : terms) {
        if (!(t.power < -1.0))
            throw std::invalid_argument("power_trig_tail: every power must be < -1");
    }
    if (terms.empty()) return 0.0;

    if (omega == 0.0) {
        double sum = 0.0;
        for (const auto& t : terms) sum += t.coef * std::pow(X, t.power + 1.0) / (-t.power - 1.0);
        return sum;
    }

    // The expansion's smallest term shrinks with x0 - |p|; keep a margin of 60.
    double max_power = 0.0;
    for (const auto& t : terms) max_power = std::max(max_power, -t.power);
    const double kSwitch = 60.0 + 2.0 * max_power;
    const double x0 = omega * X;
    auto far_part = [&](double y0) {
        std::complex<double> sum = 0.0;
        for (const auto& t : terms)
            sum += t.coef * std::pow(omega, -t.power - 1.0) * asymptotic_tail(t.power, y0);
        return sum;
    };
    if (x0 >= kSwitch) return far_part(x0);

    // [X, Y] numerically in s = log(rho), then the expansion from Y on.
    const double Y = kSwitch / omega;
    double scale = 0.0;
    for (const auto& t : terms)
        scale += std::abs(t.coef) * std::pow(X, t.power + 1.0) / (-t.power - 1.0);
    // Powers sorted descending so that integer-spaced runs reuse rho^p.
    std::vector<PowerTerm> sorted(terms.begin(), terms.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const PowerTerm& l, const PowerTerm& r) { return l.power > r.power; });
    std::vector<int> steps(sorted.size(), -1);
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const double gap = sorted[i - 1].power - sorted[i].power;
        if (gap == std::round(gap) && gap <= 8.0) steps[i] = static_cast<int>(gap);
    }
    auto amplitude = [&](double s) {
        const double rho = std::exp(s);
        const double inv = 1.0 / rho;
        double g = 0.0;
        double power = 0.0;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (steps[i] < 0) {
                power = std::exp(sorted[i].power * s);
            } else {
                for (int j = 0; j < steps[i]; ++j) power *= inv;
            }
            g += sorted[i].coef * power;
        }
        return g * rho;
    };
    QuadSpec qs;
    qs.abs_tol = std::max(1e-14 * scale, std::numeric_limits<double>::min());
    qs.rel_tol = 1e-13;
    qs.max_subdivisions = 4000;
    const double lo = std::log(X);
    const double hi = std::log(Y);
    const double re = integrate_adaptive(
        [&](double s) { return amplitude(s) * std::cos(omega * std::exp(s)); }, lo, hi, qs);
    const double im = integrate_adaptive(
        [&](double s) { return amplitude(s) * std::sin(omega * std::exp(s)); }, lo, hi, qs);
    return std::complex<double>(re, im) + far_part(kSwitch);
}

}  // namespace stochwave::numerics
