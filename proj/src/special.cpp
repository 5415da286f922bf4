#include "stochwave/numerics.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/bessel.hpp>

namespace stochwave::numerics {

double bessel_j(double order, double x) {
    if (!(x >= 0.0)) throw std::invalid_argument("bessel_j requires x >= 0");
    if (order == 0.0) return boost::math::cyl_bessel_j(0, x);
    if (order == 0.5) {
        if (x == 0.0) return 0.0;
        return std::sqrt(2.0 / (std::numbers::pi * x)) * std::sin(x);
    }
    if (order == -0.5) {
        if (x == 0.0) throw std::domain_error("J_{-1/2} is unbounded at 0");
        return std::sqrt(2.0 / (std::numbers::pi * x)) * std::cos(x);
    }
    throw std::invalid_argument("bessel_j: only orders -1/2, 0, 1/2 are supported (k <= 3)");
}

std::vector<double> hankel_j0_coefficients(int count) {
    std::vector<double> a;
    a.reserve(count);
    double c = 1.0;
    for (int n = 0; n < count; ++n) {
        a.push_back(c);
        const double odd = 2.0 * n + 1.0;
        c *= -odd * odd / ((n + 1.0) * 8.0);
    }
    return a;
}

double gamma_fn(double x) { return std::tgamma(x); }

}  // namespace stochwave::numerics
