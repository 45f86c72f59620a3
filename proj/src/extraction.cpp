#include "longgreeks/extraction.hpp"

#include "longgreeks/analytic.hpp"
#include "longgreeks/errors.hpp"
#include "longgreeks/riccati.hpp"

#include <atomic>
#include <cmath>

namespace longgreeks {

namespace {

std::atomic<double> g_lambda_bump{0.0};

[[noreturn]] void unavailable(const ValidatedModel& model, const PayoffSpec& payoff, const std::string& why) {
    raise(ErrorKind::StabilizationUnavailable, std::string(payoff_kind_name(payoff.kind)) + " payoff under " +
                                                   std::string(model_kind_name(model.kind())) + ": " + why);
}

}  // namespace

void set_debug_lambda_bump(double bump) { g_lambda_bump.store(bump); }
double debug_lambda_bump() { return g_lambda_bump.load(); }

Extraction::Extraction(ValidatedModel model, double lambda, double power, Vector linear, Matrix quadratic)
    : model_(std::move(model)),
      lambda_(lambda),
      power_(power),
      linear_(std::move(linear)),
      quadratic_(std::move(quadratic)) {}

double Extraction::log_phi(const Vector& x) const {
    double out = -linear_.dot(x) - x.dot(quadratic_ * x);
    if (power_ != 0.0) out += power_ * std::log(x(0));
    return out;
}

double Extraction::phi(const Vector& x) const { return std::exp(log_phi(x)); }

Vector Extraction::log_phi_gradient(const Vector& x) const {
    Vector g = -linear_ - 2.0 * quadratic_ * x;
    if (power_ != 0.0) g(0) += power_ / x(0);
    return g;
}

Matrix Extraction::hessian_over_phi(const Vector& x) const {
    const Vector g = log_phi_gradient(x);
    Matrix h = -2.0 * quadratic_ + g * g.transpose();
    if (power_ != 0.0) h(0, 0) -= power_ / (x(0) * x(0));
    return h;
}

Vector Extraction::martingale_exponent(const Vector& x) const {
    return diffusion(model_, x).transpose() * log_phi_gradient(x);
}

Vector Extraction::p_drift(const Vector& x) const {
    return drift(model_, x) + diffusion(model_, x) * martingale_exponent(x);
}

Extraction eigenpair(const ValidatedModel& model, const PayoffSpec& payoff) {
    validate_payoff(payoff);
    if (model.measure() != Measure::Q) {
        raise(ErrorKind::InvalidParameter, "eigenpair expects the pricing-measure model");
    }
    const int d = model.dim();
    const double bump = debug_lambda_bump();
    switch (model.kind()) {
        case ModelKind::GBM: {
            if (payoff.growth.kind != GrowthKind::PowerLaw) {
                unavailable(model, payoff, "needs power-law growth s^alpha");
            }
            const auto& p = model.params<GbmParams>();
            const double alpha = payoff.growth.exponent;
            const double lambda = p.r - p.mu * alpha - 0.5 * p.sigma * p.sigma * alpha * (alpha - 1.0);
            return Extraction(model, lambda + bump, alpha, Vector::Zero(1), Matrix::Zero(1, 1));
        }
        case ModelKind::CIR: {
            const auto& p = model.params<CirParams>();
            if (payoff.growth.kind == GrowthKind::Exponential && !(payoff.growth.exponent < p.a / (p.sigma * p.sigma))) {
                unavailable(model, payoff, "exponential growth must be below a / sigma^2");
            }
            const double kappa = cir_kappa(p);
            return Extraction(model, p.theta * kappa + bump, 0.0, Vector::Constant(1, kappa), Matrix::Zero(1, 1));
        }
        case ModelKind::QTSM: {
            if (payoff.growth.kind != GrowthKind::Bounded ||
                (payoff.kind != PayoffKind::Indicator && payoff.kind != PayoffKind::BoundedBump)) {
                unavailable(model, payoff, "needs a bounded payoff with bounded support");
            }
            if (payoff.center.size() != d) unavailable(model, payoff, "payoff center dimension differs from the model");
            const auto in = qtsm_extraction_inputs(model.params<QtsmParams>());
            if (!in.care.stable) raise(ErrorKind::ImaginaryAxisEigenvalue, "Riccati solution is not stabilizing");
            return Extraction(model, in.lambda + bump, 0.0, in.u, in.V);
        }
        case ModelKind::Heston: {
            if (payoff.kind != PayoffKind::Power || !(payoff.alpha > 0.0 && payoff.alpha < 1.0)) {
                unavailable(model, payoff, "needs a power payoff x^alpha with 0 < alpha < 1");
            }
            const auto& p = model.params<HestonParams>();
            const HestonReduction red = heston_reduction(p, payoff.alpha, model.initial_state());
            const double kappa = cir_kappa(red.cir);
            const double c = 0.5 * payoff.alpha * (1.0 - payoff.alpha);
            Vector linear(2);
            linear << 0.0, c * kappa;
            const double lambda = red.cir.theta * kappa - payoff.alpha * p.mu;
            return Extraction(model, lambda + bump, payoff.alpha, linear, Matrix::Zero(2, 2));
        }
        case ModelKind::ThreeHalves: {
            const auto& p = model.params<ThreeHalvesParams>();
            if (payoff.kind != PayoffKind::LETFUtility) unavailable(model, payoff, "needs the LETF utility payoff");
            if (payoff.alpha != p.alpha || payoff.leverage != p.leverage) {
                unavailable(model, payoff, "payoff alpha and leverage must match the model");
            }
            const double s2 = p.sigma * p.sigma;
            if (!(p.a / s2 + 1.0 - p.alpha * p.leverage > 0.0)) {
                unavailable(model, payoff, "needs a / sigma^2 + 1 - alpha * leverage > 0");
            }
            const double k = 0.5 + p.a / s2;
            const double ell = std::sqrt(k * k + p.alpha * p.leverage * (p.leverage - 1.0)) - k;
            const double lambda = p.theta * ell + p.r * p.alpha * (p.leverage - 1.0);
            return Extraction(model, lambda + bump, -ell, Vector::Zero(1), Matrix::Zero(1, 1));
        }
    }
    raise(ErrorKind::UnsupportedModel, "unknown model");
}

ValidatedModel transformed_dynamics(const Extraction& ext) {
    ModelSpec spec = ext.model().spec();
    spec.measure = Measure::P;
    switch (spec.kind()) {
        case ModelKind::GBM: {
            auto& p = std::get<GbmParams>(spec.params);
            p.mu += p.sigma * p.sigma * ext.power();
            break;
        }
        case ModelKind::CIR: {
            auto& p = std::get<CirParams>(spec.params);
            p.a += p.sigma * p.sigma * ext.linear()(0);
            break;
        }
        case ModelKind::QTSM: {
            auto& p = std::get<QtsmParams>(spec.params);
            const Matrix a = p.sigma * p.sigma.transpose();
            p.b = p.b - a * ext.linear();
            p.B = p.B - 2.0 * a * ext.quadratic();
            break;
        }
        case ModelKind::Heston: {
            auto& p = std::get<HestonParams>(spec.params);
            const double kv = ext.linear()(1);
            p.variance_loading += ext.power() - p.rho * p.delta * kv;
            p.beta += -p.rho * p.delta * ext.power() + p.delta * p.delta * kv;
            break;
        }
        case ModelKind::ThreeHalves: {
            auto& p = std::get<ThreeHalvesParams>(spec.params);
            p.a += p.sigma * p.sigma * (-ext.power());
            break;
        }
    }
    return validate(spec);
}

double generator_residual(const Extraction& ext, const ValidatedModel& model, const Vector& x) {
    const Matrix s = diffusion(model, x);
    const Matrix a = s * s.transpose();
    const double second = 0.5 * (a.cwiseProduct(ext.hessian_over_phi(x))).sum();
    const double first = drift(model, x).dot(ext.log_phi_gradient(x));
    return second + first - short_rate(model, x) + ext.lambda();
}

double decompose_price(const Extraction& ext, double p_expectation, double T) {
    return std::exp(ext.log_phi(ext.model().initial_state()) - ext.lambda() * T) * p_expectation;
}

std::string_view stabilization_method_name(StabilizationMethod method) {
    switch (method) {
        case StabilizationMethod::BoundedRecurrent: return "BoundedRecurrent";
        case StabilizationMethod::L2Ergodic: return "L2Ergodic";
        case StabilizationMethod::Lyapunov: return "Lyapunov";
    }
    return "?";
}

}  // namespace longgreeks
