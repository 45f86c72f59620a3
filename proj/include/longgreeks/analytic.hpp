#pragma once

#include "longgreeks/models.hpp"

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace longgreeks {

// ---------------------------------------------------------------------------
// Special functions

// Modified Bessel function of the first kind, nu >= 0, z >= 0.
double bessel_i(double nu, double z);
// log I_nu(z), stable for large z.
double log_bessel_i(double nu, double z);
double log_gamma(double x);

// ---------------------------------------------------------------------------
// Long-horizon sensitivity limits

enum class LimitKind { PerYear, Instant };

struct SensitivityLimit {
    ModelKind model = ModelKind::GBM;
    std::string param;
    LimitKind kind = LimitKind::PerYear;
    double value = 0.0;
};

// Closed-form limit of (1/T) d ln p_T (PerYear) or d ln p_T (Instant, for
// initial-state parameters).
SensitivityLimit sensitivity_limit(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param);

// -(lambda(p + h) - lambda(p - h)) / (2h) through the catalog eigenpair.
double lambda_bump_limit(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param,
                         double h = 1e-6);

double cir_kappa(const CirParams& p);

// ---------------------------------------------------------------------------
// Heston power-utility reduction:
//   E[X_T^alpha] = exp(alpha mu T) x0^alpha E[exp(-int r dt)]
// with r = alpha (1 - alpha) v / 2 a CIR process under an equivalent measure.

struct HestonReduction {
    CirParams cir;
    double r0 = 0.0;
    double alpha = 0.0;
    double mu = 0.0;
    double x0 = 0.0;
    // d(theta, a, sigma, r0) / d(gamma, beta, delta, rho, v0).
    Eigen::Matrix<double, 4, 5> jacobian;

    double log_wrapper(double T) const;  // alpha mu T + alpha log x0
};

HestonReduction heston_reduction(const HestonParams& params, double alpha, const Vector& xi);

// The seven Heston limits assembled from CIR limits by the chain rule, keyed
// by parameter name.
std::map<std::string, double> heston_limits_chain_rule(const HestonParams& params, double alpha, const Vector& xi);

// Same limits written out in the original parameters.
std::map<std::string, double> heston_limits_closed_form(const HestonParams& params, double alpha, const Vector& xi);

// ---------------------------------------------------------------------------
// CIR transition law

struct CirDensity {
    CirParams params;
    Measure measure = Measure::Q;  // P uses mean reversion sqrt(a^2 + 2 sigma^2)
    double t = 1.0;                // horizon; infinity selects the invariant law
    double r0 = 0.0;

    double reversion() const;
    double h_t() const;  // 2 b / (sigma^2 (1 - exp(-b t)))
    double q() const;    // 2 theta / sigma^2 - 1
    double mean() const;
};

double cir_log_density(const CirDensity& d, double r);
double cir_density(const CirDensity& d, double r);
// Gamma density with shape 2 theta / sigma^2 and rate 2 b / sigma^2.
double cir_invariant_density(double theta, double reversion, double sigma, double r);

// Adaptive Gauss-Kronrod quadrature of int_0^inf f(r) g(r) dr after mapping
// (0, inf) to (0, 1). Throws TailDivergence if the declared growth is not
// integrable against the density tail.
double cir_expectation(const std::function<double(double)>& f, const Growth& growth, const CirDensity& d);

// Zero-coupon bond price E[exp(-int_0^T r dt)] under the CIR dynamics.
double cir_bond_price(const CirParams& p, double r0, double T);

// ---------------------------------------------------------------------------
// Leveraged fund value on a 3/2 path sampled on a uniform grid:
//   L_T / L_0 = (X_T / X_0)^L exp(-r (L - 1) T - L (L - 1) sigma^2 / 2 int X du).
double letf_terminal(const std::vector<double>& x_path, double dt, const ThreeHalvesParams& params);

}  // namespace longgreeks
