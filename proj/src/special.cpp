#include "longgreeks/analytic.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>

namespace longgreeks {

namespace {

constexpr double kSeriesSwitch = 20.0;

double log_bessel_series(double nu, double z) {
    // Sum outward from the largest term so every addend is <= 1 after scaling.
    const double half = 0.5 * z;
    const double log_half = std::log(half);
    const double q = half * half;
    const double k_peak = std::floor(0.5 * (-nu + std::sqrt(nu * nu + z * z)));
    const double log_peak = (2.0 * k_peak + nu) * log_half - log_gamma(k_peak + 1.0) - log_gamma(k_peak + nu + 1.0);

    double sum = 1.0;
    double term = 1.0;
    for (double k = k_peak;; k += 1.0) {
        term *= q / ((k + 1.0) * (k + nu + 1.0));
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    term = 1.0;
    for (double k = k_peak; k > 0.0; k -= 1.0) {
        term *= k * (k + nu) / q;
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return log_peak + std::log(sum);
}

double log_bessel_hankel(double nu, double z) {
    const double mu = 4.0 * nu * nu;
    double sum = 1.0;
    double term = 1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 500; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= -(mu - odd * odd) / (8.0 * k * z);
        if (std::abs(term) >= prev) break;  // asymptotic series started to diverge
        sum += term;
        prev = std::abs(term);
        if (prev < 1e-17 * std::abs(sum)) break;
    }
    return z - 0.5 * std::log(2.0 * M_PI * z) + std::log(sum);
}

}  // namespace

double log_gamma(double x) { return boost::math::lgamma(x); }

double log_bessel_i(double nu, double z) {
    if (!(nu >= 0.0) || !(z >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
    if (z == 0.0) return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (z > kSeriesSwitch && z > nu * nu) return log_bessel_hankel(nu, z);
    return log_bessel_series(nu, z);
}

double bessel_i(double nu, double z) { return std::exp(log_bessel_i(nu, z)); }

}  // namespace longgreeks
