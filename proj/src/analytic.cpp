#include "longgreeks/analytic.hpp"

#include "longgreeks/errors.hpp"
#include "longgreeks/extraction.hpp"
#include "longgreeks/riccati.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>

namespace longgreeks {

namespace {

struct CirLimits {
    double theta, a, sigma, r0;
};

CirLimits cir_limits(const CirParams& p) {
    const double b = std::sqrt(p.a * p.a + 2.0 * p.sigma * p.sigma);
    const double s2 = p.sigma * p.sigma;
    const double kappa = (b - p.a) / s2;
    return {-kappa, p.theta * (b - p.a) / (s2 * b), p.theta * (b - p.a) * (b - p.a) / (s2 * p.sigma * b), -kappa};
}

// Exponent of the 3/2 eigenfunction x^{-ell} and its partials in a and sigma.
struct ThreeHalvesEll {
    double ell, d_a, d_sigma;
};

ThreeHalvesEll three_halves_ell(const ThreeHalvesParams& p) {
    const double s2 = p.sigma * p.sigma;
    const double k = 0.5 + p.a / s2;
    const double c = p.alpha * p.leverage * (p.leverage - 1.0);
    const double s = std::sqrt(k * k + c);
    const double dl_dk = k / s - 1.0;
    return {s - k, dl_dk / s2, dl_dk * (-2.0 * p.a / (s2 * p.sigma))};
}

double payoff_power(const ValidatedModel& model, const PayoffSpec& payoff) {
    return eigenpair(model, payoff).power();
}

}  // namespace

double cir_kappa(const CirParams& p) {
    return (std::sqrt(p.a * p.a + 2.0 * p.sigma * p.sigma) - p.a) / (p.sigma * p.sigma);
}

// ---------------------------------------------------------------------------
// Heston

double HestonReduction::log_wrapper(double T) const { return alpha * mu * T + alpha * std::log(x0); }

HestonReduction heston_reduction(const HestonParams& p, double alpha, const Vector& xi) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        raise(ErrorKind::InvalidParameter, "Heston power utility needs 0 < alpha < 1");
    }
    const double c = 0.5 * alpha * (1.0 - alpha);
    HestonReduction out;
    out.alpha = alpha;
    out.mu = p.mu;
    out.x0 = xi(0);
    out.cir = {c * p.gamma, p.beta - p.rho * alpha * p.delta, p.delta * std::sqrt(c)};
    out.r0 = c * xi(1);
    if (!(2.0 * out.cir.theta > out.cir.sigma * out.cir.sigma)) {
        raise(ErrorKind::FellerViolation, "reduced CIR violates 2 theta > sigma^2");
    }
    out.jacobian.setZero();
    out.jacobian(0, 0) = c;
    out.jacobian(1, 1) = 1.0;
    out.jacobian(1, 2) = -p.rho * alpha;
    out.jacobian(1, 3) = -alpha * p.delta;
    out.jacobian(2, 2) = std::sqrt(c);
    out.jacobian(3, 4) = c;
    return out;
}

std::map<std::string, double> heston_limits_chain_rule(const HestonParams& p, double alpha, const Vector& xi) {
    const HestonReduction red = heston_reduction(p, alpha, xi);
    const CirLimits L = cir_limits(red.cir);
    const auto& J = red.jacobian;
    return {
        {"mu", alpha},
        {"gamma", J(0, 0) * L.theta},
        {"beta", J(1, 1) * L.a},
        {"delta", J(1, 2) * L.a + J(2, 2) * L.sigma},
        {"rho", J(1, 3) * L.a},
        {"x0", alpha / xi(0)},
        {"v0", J(3, 4) * L.r0},
    };
}

std::map<std::string, double> heston_limits_closed_form(const HestonParams& p, double alpha, const Vector& xi) {
    const double A = p.beta - p.rho * alpha * p.delta;
    const double d2 = p.delta * p.delta;
    const double S = std::sqrt(A * A + d2 * alpha * (1.0 - alpha));
    const double g = p.gamma;
    return {
        {"mu", alpha},
        {"gamma", -(S - A) / d2},
        {"beta", g * (S - A) / (d2 * S)},
        {"delta", -p.rho * alpha * g * (S - A) / (d2 * S) + g * (S - A) * (S - A) / (d2 * p.delta * S)},
        {"rho", -alpha * g * (S - A) / (p.delta * S)},
        {"x0", alpha / xi(0)},
        {"v0", -(S - A) / d2},
    };
}

// ---------------------------------------------------------------------------
// Limits

SensitivityLimit sensitivity_limit(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param) {
    SensitivityLimit out{model.kind(), std::string(param), LimitKind::PerYear, 0.0};
    const int state_index = state_param_index(model.spec(), param);
    if (state_index >= 0) out.kind = LimitKind::Instant;
    auto not_in_catalog = [&]() -> SensitivityLimit {
        raise(ErrorKind::NotInCatalog, "no closed-form limit for parameter '" + std::string(param) + "' of " +
                                           std::string(model_kind_name(model.kind())));
    };

    switch (model.kind()) {
        case ModelKind::GBM: {
            const auto& p = model.params<GbmParams>();
            const double alpha = payoff_power(model, payoff);
            if (param == "mu") out.value = alpha;
            else if (param == "sigma") out.value = p.sigma * alpha * (alpha - 1.0);
            else if (param == "r") out.value = -1.0;
            else if (state_index == 0) out.value = alpha / model.initial_state()(0);
            else return not_in_catalog();
            return out;
        }
        case ModelKind::CIR: {
            const CirLimits L = cir_limits(model.params<CirParams>());
            if (param == "theta") out.value = L.theta;
            else if (param == "a") out.value = L.a;
            else if (param == "sigma") out.value = L.sigma;
            else if (state_index == 0) out.value = L.r0;
            else return not_in_catalog();
            return out;
        }
        case ModelKind::QTSM: {
            if (state_index >= 0) {
                const auto in = qtsm_extraction_inputs(model.params<QtsmParams>());
                const Vector g = -in.u - 2.0 * in.V * model.initial_state();
                out.value = g(state_index);
                return out;
            }
            if (param.rfind("xi", 0) == 0) return not_in_catalog();
            out.value = -lambda_prime_numeric(model.spec(), param).refined;
            return out;
        }
        case ModelKind::Heston: {
            if (payoff.kind != PayoffKind::Power) {
                raise(ErrorKind::NotInCatalog, "Heston limits are catalogued for power payoffs only");
            }
            const auto limits = heston_limits_chain_rule(model.params<HestonParams>(), payoff.alpha, model.initial_state());
            auto it = limits.find(std::string(param));
            if (it == limits.end()) return not_in_catalog();
            out.value = it->second;
            return out;
        }
        case ModelKind::ThreeHalves: {
            const auto& p = model.params<ThreeHalvesParams>();
            if (!(p.a / (p.sigma * p.sigma) + 1.0 - p.alpha * p.leverage > 0.0)) {
                raise(ErrorKind::GuardViolated, "3/2 limits need a / sigma^2 + 1 - alpha * leverage > 0");
            }
            const ThreeHalvesEll e = three_halves_ell(p);
            if (param == "theta") out.value = -e.ell;
            else if (param == "a") out.value = -p.theta * e.d_a;
            else if (param == "sigma") out.value = -p.theta * e.d_sigma;
            else if (param == "r") out.value = -p.alpha * (p.leverage - 1.0);
            else if (state_index == 0) out.value = -e.ell / model.initial_state()(0);
            else return not_in_catalog();
            return out;
        }
    }
    return not_in_catalog();
}

double lambda_bump_limit(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param, double h) {
    const double x = get_param(model.spec(), param);
    const int state_index = state_param_index(model.spec(), param);
    if (state_index >= 0) {
        const Extraction ext = eigenpair(model, payoff);
        Vector up = model.initial_state(), dn = model.initial_state();
        up(state_index) += h;
        dn(state_index) -= h;
        return (ext.log_phi(up) - ext.log_phi(dn)) / (2.0 * h);
    }
    auto lam = [&](double v) { return eigenpair(validate(with_param(model.spec(), param, v)), payoff).lambda(); };
    return -(lam(x + h) - lam(x - h)) / (2.0 * h);
}

// ---------------------------------------------------------------------------
// CIR transition law

double CirDensity::reversion() const {
    return measure == Measure::P ? std::sqrt(params.a * params.a + 2.0 * params.sigma * params.sigma) : params.a;
}

double CirDensity::h_t() const {
    const double b = reversion();
    if (std::isinf(t)) return 2.0 * b / (params.sigma * params.sigma);
    return 2.0 * b / (params.sigma * params.sigma * -std::expm1(-b * t));
}

double CirDensity::q() const { return 2.0 * params.theta / (params.sigma * params.sigma) - 1.0; }

double CirDensity::mean() const {
    const double b = reversion();
    const double m = params.theta / b;
    if (std::isinf(t)) return m;
    return m + (r0 - m) * std::exp(-b * t);
}

double cir_invariant_density(double theta, double reversion, double sigma, double r) {
    if (!(r > 0.0)) return 0.0;
    const double shape = 2.0 * theta / (sigma * sigma);
    const double rate = 2.0 * reversion / (sigma * sigma);
    return std::exp(shape * std::log(rate) - log_gamma(shape) + (shape - 1.0) * std::log(r) - rate * r);
}

double cir_log_density(const CirDensity& d, double r) {
    if (!(r > 0.0)) return -std::numeric_limits<double>::infinity();
    const double b = d.reversion();
    if (std::isinf(d.t)) {
        const double shape = 2.0 * d.params.theta / (d.params.sigma * d.params.sigma);
        const double rate = 2.0 * b / (d.params.sigma * d.params.sigma);
        return shape * std::log(rate) - log_gamma(shape) + (shape - 1.0) * std::log(r) - rate * r;
    }
    const double h = d.h_t();
    const double q = d.q();
    const double u = h * d.r0 * std::exp(-b * d.t);
    const double v = h * r;
    return std::log(h) - u - v + 0.5 * q * (std::log(v) - std::log(u)) + log_bessel_i(q, 2.0 * std::sqrt(u * v));
}

double cir_density(const CirDensity& d, double r) {
    const double lg = cir_log_density(d, r);
    return lg < -745.0 ? 0.0 : std::exp(lg);
}

double cir_expectation(const std::function<double(double)>& f, const Growth& growth, const CirDensity& d) {
    const double tail_rate = 2.0 * d.reversion() / (d.params.sigma * d.params.sigma);
    if (growth.kind == GrowthKind::Exponential && !(growth.exponent < tail_rate)) {
        raise(ErrorKind::TailDivergence, "declared exponential growth " + std::to_string(growth.exponent) +
                                             " is not below the density tail rate " + std::to_string(tail_rate));
    }
    // r = c s / (1 - s) puts the mean at s = 1/2.
    const double c = std::max(d.mean(), 1e-8);
    auto integrand = [&](double s) {
        if (s <= 0.0 || s >= 1.0) return 0.0;
        const double r = c * s / (1.0 - s);
        const double lg = cir_log_density(d, r);
        if (lg < -745.0) return 0.0;
        return f(r) * std::exp(lg) * c / ((1.0 - s) * (1.0 - s));
    };
    using boost::math::quadrature::gauss_kronrod;
    double err = 0.0;
    const double left = gauss_kronrod<double, 31>::integrate(integrand, 0.0, 0.5, 25, 1e-12, &err);
    double err2 = 0.0;
    const double right = gauss_kronrod<double, 31>::integrate(integrand, 0.5, 1.0, 25, 1e-12, &err2);
    return left + right;
}

double cir_bond_price(const CirParams& p, double r0, double T) {
    const double g = std::sqrt(p.a * p.a + 2.0 * p.sigma * p.sigma);
    const double e = std::exp(-g * T);
    const double denom = (g + p.a) * (1.0 - e) + 2.0 * g * e;
    const double B = 2.0 * (1.0 - e) / denom;
    const double logA = 2.0 * p.theta / (p.sigma * p.sigma) * (std::log(2.0 * g) + 0.5 * (p.a - g) * T - std::log(denom));
    return std::exp(logA - B * r0);
}

// ---------------------------------------------------------------------------

double letf_terminal(const std::vector<double>& x, double dt, const ThreeHalvesParams& p) {
    if (x.size() < 2) raise(ErrorKind::InvalidParameter, "LETF path needs at least two points");
    for (double v : x) {
        if (!(v > 0.0)) raise(ErrorKind::NonPositivePath, "LETF path must stay positive");
    }
    const double T = dt * static_cast<double>(x.size() - 1);
    double integral = 0.5 * (x.front() + x.back());
    for (std::size_t i = 1; i + 1 < x.size(); ++i) integral += x[i];
    integral *= dt;
    const double L = p.leverage;
    return std::exp(L * std::log(x.back() / x.front()) - p.r * (L - 1.0) * T -
                    0.5 * L * (L - 1.0) * p.sigma * p.sigma * integral);
}

}  // namespace longgreeks
