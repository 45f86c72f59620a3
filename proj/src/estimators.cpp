#include "longgreeks/estimators.hpp"

#include "longgreeks/errors.hpp"
#include "longgreeks/riccati.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace longgreeks {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Antithetic pairs are averaged so that the samples are independent.
std::vector<double> independent_samples(std::vector<double> v, bool antithetic) {
    if (!antithetic) return v;
    std::vector<double> out;
    out.reserve((v.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < v.size(); i += 2) out.push_back(0.5 * (v[i] + v[i + 1]));
    if (v.size() % 2 == 1) out.push_back(v.back());
    return out;
}

struct Stats {
    double mean = 0.0;
    double std_error = 0.0;
};

Stats stats(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double var = n > 1.0 ? ss / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

// mean(num) / mean(den) with the delta-method standard error.
Stats ratio(const std::vector<double>& num, const std::vector<double>& den) {
    const Stats sn = stats(num), sd = stats(den);
    const double r = sn.mean / sd.mean;
    std::vector<double> resid(num.size());
    for (std::size_t i = 0; i < num.size(); ++i) resid[i] = (num[i] - r * den[i]) / sd.mean;
    return {r, stats(resid).std_error};
}

bool is_state_param(const ModelSpec& spec, std::string_view param) { return state_param_index(spec, param) >= 0; }

std::string state_param_name(const ModelSpec& spec, int coordinate) {
    for (const auto& name : param_names(spec)) {
        if (state_param_index(spec, name) == coordinate) return name;
    }
    raise(ErrorKind::InvalidParameter, "no initial-state coordinate " + std::to_string(coordinate));
}

[[noreturn]] void missing_score(const ModelSpec& spec, std::string_view param) {
    raise(ErrorKind::MissingScoreFunction, "no pathwise representation for '" + std::string(param) + "' of " +
                                               std::string(model_kind_name(spec.kind())));
}

double default_step(double x) { return 1e-5 * (1.0 + std::abs(x)); }

// d log phi_eps(x) / d eps at fixed x through central differences of the
// catalog eigenfunction.
StateFunction eigenfunction_shift(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param) {
    const double x = get_param(model.spec(), param);
    const double h = default_step(x);
    const Extraction up = eigenpair(validate(with_param(model.spec(), param, x + h)), payoff);
    const Extraction dn = eigenpair(validate(with_param(model.spec(), param, x - h)), payoff);
    const double d_power = (up.power() - dn.power()) / (2.0 * h);
    const Vector d_linear = (up.linear() - dn.linear()) / (2.0 * h);
    const Matrix d_quad = (up.quadratic() - dn.quadratic()) / (2.0 * h);
    if (d_power == 0.0 && d_linear.isZero(0.0) && d_quad.isZero(0.0)) return {};
    return [d_power, d_linear, d_quad](const Vector& s) {
        double out = -d_linear.dot(s) - s.dot(d_quad * s);
        if (d_power != 0.0) out += d_power * std::log(s(0));
        return out;
    };
}

Channels base_channels(const ValidatedModel& model, const PayoffSpec& payoff) {
    Extraction ext = eigenpair(model, payoff);
    ValidatedModel p_model = transformed_dynamics(ext);
    return Channels{std::move(p_model), std::move(ext), payoff};
}

// Derivative of 3/2's ell = sqrt(k^2 + c) - k, k = 1/2 + a / sigma^2, in k.
double three_halves_ell_dk(const ThreeHalvesParams& p) {
    const double k = 0.5 + p.a / (p.sigma * p.sigma);
    const double c = p.alpha * p.leverage * (p.leverage - 1.0);
    return k / std::sqrt(k * k + c) - 1.0;
}

Channels scalar_channels(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param) {
    const ModelSpec& spec = model.spec();
    Channels ch = base_channels(model, payoff);
    const int state = state_param_index(spec, param);
    if (state >= 0) {
        ch.kind = LimitKind::Instant;
        ch.bel = Vector::Zero(model.dim());
        ch.bel(state) = 1.0;
        ch.log_phi_xi = ch.extraction.log_phi_gradient(model.initial_state())(state);
        return ch;
    }
    ch.lambda_prime = -sensitivity_limit(model, payoff, param).value;
    ch.log_phi_shift = eigenfunction_shift(model, payoff, param);
    if (ch.log_phi_shift) ch.log_phi_xi = ch.log_phi_shift(model.initial_state());

    const bool vol = param == "sigma";
    LampertiMap map;
    if (vol) {
        map = lamperti(ch.p_model, 1.0);
        ch.bel = Vector::Constant(1, map.initial_shift);
        ch.inverse_shift = [map](const Vector& x) { return Vector::Constant(1, map.inverse_sensitivity(x(0))); };
    }
    const double s = map.orientation;

    switch (model.kind()) {
        case ModelKind::GBM: {
            const auto& q = model.params<GbmParams>();
            if (param == "mu") {
                const double k = 1.0 / q.sigma;
                ch.score = [k](const Vector&) { return Vector::Constant(1, k); };
            } else if (param == "r") {
                // The transformed drift does not depend on the rate.
            } else if (vol) {
                const double k = -q.mu / (q.sigma * q.sigma) + ch.extraction.power() - 0.5;
                ch.score = [k, s](const Vector&) { return Vector::Constant(1, s * k); };
            } else {
                missing_score(spec, param);
            }
            break;
        }
        case ModelKind::CIR: {
            const auto& q = model.params<CirParams>();
            const double b = std::sqrt(q.a * q.a + 2.0 * q.sigma * q.sigma);
            if (param == "theta") {
                const double sig = q.sigma;
                ch.score = [sig](const Vector& x) { return Vector::Constant(1, 1.0 / (sig * std::sqrt(x(0)))); };
            } else if (param == "a") {
                const double k = -q.a / (q.sigma * b);
                ch.score = [k](const Vector& x) { return Vector::Constant(1, k * std::sqrt(x(0))); };
            } else if (vol) {
                const double c1 = -4.0 * q.theta / (q.sigma * q.sigma * q.sigma);
                const double c2 = -q.sigma / b;
                ch.score = [map, c1, c2, s](const Vector& x) {
                    const double u = map.to_u(x(0));
                    return Vector::Constant(1, s * (c1 / u + c2 * u));
                };
            } else {
                missing_score(spec, param);
            }
            break;
        }
        case ModelKind::ThreeHalves: {
            const auto& q = model.params<ThreeHalvesParams>();
            const double s2 = q.sigma * q.sigma;
            const double ell_k = three_halves_ell_dk(q);
            if (param == "theta") {
                const double sig = q.sigma;
                ch.score = [sig](const Vector& x) { return Vector::Constant(1, 1.0 / (sig * std::sqrt(x(0)))); };
            } else if (param == "a") {
                const double ell_a = ell_k / s2;
                const double k = -(1.0 / q.sigma + q.sigma * ell_a);
                ch.score = [k](const Vector& x) { return Vector::Constant(1, k * std::sqrt(x(0))); };
            } else if (param == "r") {
                // Only the constant part of the short rate moves.
            } else if (vol) {
                const double ell_s = ell_k * (-2.0 * q.a / (s2 * q.sigma));
                const double c = -4.0 * q.a / (s2 * q.sigma) + 2.0 * ell_s;
                ch.score = [map, c, s](const Vector& x) { return Vector::Constant(1, s * c / map.to_u(x(0))); };
            } else {
                missing_score(spec, param);
            }
            break;
        }
        default: missing_score(spec, param);
    }
    return ch;
}

Channels qtsm_channels(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param) {
    const ModelSpec& spec = model.spec();
    Channels ch = base_channels(model, payoff);
    const int state = state_param_index(spec, param);
    if (state >= 0) {
        ch.kind = LimitKind::Instant;
        ch.bel = Vector::Zero(model.dim());
        ch.bel(state) = 1.0;
        ch.log_phi_xi = ch.extraction.log_phi_gradient(model.initial_state())(state);
        return ch;
    }
    const auto& q = model.params<QtsmParams>();
    const double x = get_param(spec, param);
    const double h = default_step(x);
    const ModelSpec up_spec = with_param(spec, param, x + h), dn_spec = with_param(spec, param, x - h);
    const auto& qu = std::get<QtsmParams>(up_spec.params);
    const auto& qd = std::get<QtsmParams>(dn_spec.params);
    const auto in = qtsm_extraction_inputs(q);
    const auto in_u = qtsm_extraction_inputs(qu);
    const auto in_d = qtsm_extraction_inputs(qd);
    const Vector du = (in_u.u - in_d.u) / (2.0 * h);
    const Matrix dV = (in_u.V - in_d.V) / (2.0 * h);
    const Vector db = (qu.b - qd.b) / (2.0 * h);
    const Matrix dB = (qu.B - qd.B) / (2.0 * h);
    const Matrix dsig = (qu.sigma - qd.sigma) / (2.0 * h);
    const Matrix a = q.sigma * q.sigma.transpose();
    const Matrix da = dsig * q.sigma.transpose() + q.sigma * dsig.transpose();

    ch.lambda_prime = -sensitivity_limit(model, payoff, param).value;
    ch.log_phi_shift = [du, dV](const Vector& s) { return -du.dot(s) - s.dot(dV * s); };
    ch.log_phi_xi = ch.log_phi_shift(model.initial_state());

    // Derivative of the transformed drift b - a u + (B - 2 a V) x.
    const Vector c0 = db - da * in.u - a * du;
    const Matrix c1 = dB - 2.0 * (da * in.V + a * dV);
    const Matrix sigma_inv = q.sigma.inverse();
    if (!c0.isZero(0.0) || !c1.isZero(0.0)) {
        ch.score = [sigma_inv, c0, c1](const Vector& s) -> Vector { return sigma_inv * (c0 + c1 * s); };
    }
    if (!dsig.isZero(0.0)) ch.vega_direction = dsig;
    return ch;
}

Channels heston_channels(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param) {
    if (payoff.kind != PayoffKind::Power) missing_score(model.spec(), param);
    const auto& p = model.params<HestonParams>();
    const HestonReduction red = heston_reduction(p, payoff.alpha, model.initial_state());
    ModelSpec cir_spec{red.cir, Vector::Constant(1, red.r0), Measure::Q};
    const ValidatedModel cir = validate(cir_spec);
    const PayoffSpec bond = PayoffSpec::bond();

    Channels out = base_channels(cir, bond);
    if (param == "mu") {
        out.lambda_prime = -payoff.alpha;
        return out;
    }
    if (param == "x0") {
        out.kind = LimitKind::Instant;
        out.log_phi_xi = payoff.alpha / model.initial_state()(0);
        return out;
    }
    static const char* columns[] = {"gamma", "beta", "delta", "rho", "v0"};
    int col = -1;
    for (int j = 0; j < 5; ++j) {
        if (param == columns[j]) col = j;
    }
    if (col < 0) missing_score(model.spec(), param);
    out.kind = param == "v0" ? LimitKind::Instant : LimitKind::PerYear;
    out.bel = Vector::Zero(1);

    static const char* cir_names[] = {"theta", "a", "sigma", "r0"};
    std::vector<VectorFunction> scores, inverses;
    std::vector<StateFunction> shifts;
    std::vector<double> weights_score, weights_inverse, weights_shift;
    for (int k = 0; k < 4; ++k) {
        const double w = red.jacobian(k, col);
        if (w == 0.0) continue;
        const Channels c = scalar_channels(cir, bond, cir_names[k]);
        out.lambda_prime += w * c.lambda_prime;
        out.log_phi_xi += w * c.log_phi_xi;
        if (c.bel.size()) out.bel += w * c.bel;
        if (c.score) {
            scores.push_back(c.score);
            weights_score.push_back(w);
        }
        if (c.inverse_shift) {
            inverses.push_back(c.inverse_shift);
            weights_inverse.push_back(w);
        }
        if (c.log_phi_shift) {
            shifts.push_back(c.log_phi_shift);
            weights_shift.push_back(w);
        }
    }
    if (!scores.empty()) {
        out.score = [scores, weights_score](const Vector& x) {
            Vector v = Vector::Zero(1);
            for (std::size_t i = 0; i < scores.size(); ++i) v += weights_score[i] * scores[i](x);
            return v;
        };
    }
    if (!inverses.empty()) {
        out.inverse_shift = [inverses, weights_inverse](const Vector& x) {
            Vector v = Vector::Zero(1);
            for (std::size_t i = 0; i < inverses.size(); ++i) v += weights_inverse[i] * inverses[i](x);
            return v;
        };
    }
    if (!shifts.empty()) {
        out.log_phi_shift = [shifts, weights_shift](const Vector& x) {
            double v = 0.0;
            for (std::size_t i = 0; i < shifts.size(); ++i) v += weights_shift[i] * shifts[i](x);
            return v;
        };
    }
    if (out.bel.isZero(0.0)) out.bel.resize(0);
    return out;
}

Estimate derivative_estimate(const SlopeTerms& t) {
    return {t.mean_derivative, t.derivative_std_error, t.n_paths, t.scheme, t.wall_time};
}

}  // namespace

std::string_view method_name(Method method) {
    switch (method) {
        case Method::LR: return "LR";
        case Method::FD: return "FD";
        case Method::BEL: return "BEL";
        case Method::Lamperti: return "Lamperti";
        case Method::Variation: return "Variation";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (Method m : {Method::LR, Method::FD, Method::BEL, Method::Lamperti, Method::Variation}) {
        if (method_name(m) == name) return m;
    }
    raise(ErrorKind::ConfigError, "unknown method '" + std::string(name) + "'");
}

Method default_method(const ModelSpec& model, std::string_view param) {
    if (is_state_param(model, param)) return Method::BEL;
    switch (model.kind()) {
        case ModelKind::GBM:
        case ModelKind::CIR:
        case ModelKind::ThreeHalves: return param == "sigma" ? Method::Lamperti : Method::LR;
        case ModelKind::Heston: return param == "delta" ? Method::Lamperti : Method::LR;
        case ModelKind::QTSM: return param.rfind("sigma", 0) == 0 ? Method::Variation : Method::LR;
    }
    return Method::LR;
}

Estimate price_q(const ValidatedModel& model, const PayoffSpec& payoff, const GridSpec& grid, const McConfig& mc) {
    validate_payoff(payoff);
    const auto start = Clock::now();
    Accumulators acc;
    acc.discount = true;
    const PathEnsemble ens = simulate(model, grid, mc, acc);
    std::vector<double> y(ens.n_paths);
    for (std::size_t i = 0; i < ens.n_paths; ++i) {
        y[i] = std::exp(-ens.discount[i]) * payoff_eval(payoff, ens.terminal_state(i));
    }
    const Stats s = stats(independent_samples(std::move(y), mc.antithetic));
    return {s.mean, s.std_error, ens.n_paths, ens.scheme, seconds_since(start)};
}

Estimate price_p(const ValidatedModel& model, const PayoffSpec& payoff, const GridSpec& grid, const McConfig& mc) {
    const auto start = Clock::now();
    const Extraction ext = eigenpair(model, payoff);
    const ValidatedModel p_model = transformed_dynamics(ext);
    const PathEnsemble ens = simulate(p_model, grid, mc);
    std::vector<double> h(ens.n_paths);
    for (std::size_t i = 0; i < ens.n_paths; ++i) {
        const Vector x = ens.terminal_state(i);
        h[i] = payoff_eval(payoff, x) / ext.phi(x);
    }
    const Stats s = stats(independent_samples(std::move(h), mc.antithetic));
    const double prefactor = std::exp(ext.log_phi(model.initial_state()) - ext.lambda() * grid.T);
    return {prefactor * s.mean, prefactor * s.std_error, ens.n_paths, ens.scheme, seconds_since(start)};
}

Channels channels(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param) {
    if (model.measure() != Measure::Q) raise(ErrorKind::InvalidParameter, "sensitivities expect the pricing model");
    switch (model.kind()) {
        case ModelKind::GBM:
        case ModelKind::CIR:
        case ModelKind::ThreeHalves: return scalar_channels(model, payoff, param);
        case ModelKind::QTSM: return qtsm_channels(model, payoff, param);
        case ModelKind::Heston: return heston_channels(model, payoff, param);
    }
    missing_score(model.spec(), param);
}

SlopeTerms evaluate_channels(const Channels& ch, const GridSpec& grid, const McConfig& mc) {
    const auto start = Clock::now();
    const double T = grid.T;
    Accumulators acc;
    acc.score = ch.score;
    acc.bel = ch.bel.size() > 0;
    acc.vega_direction = ch.vega_direction;
    const PathEnsemble ens = simulate(ch.p_model, grid, mc, acc);
    const bool gradient = static_cast<bool>(ch.inverse_shift) || ch.vega_direction.has_value();

    std::vector<double> h(ens.n_paths), num(ens.n_paths);
    for (std::size_t i = 0; i < ens.n_paths; ++i) {
        const Vector x = ens.terminal_state(i);
        const double f = payoff_eval(ch.payoff, x);
        const double phi = ch.extraction.phi(x);
        const double hi = f / phi;
        double n = 0.0;
        if (acc.score) n += hi * ens.score[i];
        if (acc.bel) n += hi * ch.bel.dot(ens.bel_weight(i)) / T;
        if (ch.log_phi_shift) n -= hi * ch.log_phi_shift(x);
        if (gradient) {
            const Vector gh = (payoff_gradient(ch.payoff, x) - f * ch.extraction.log_phi_gradient(x)) / phi;
            if (ch.inverse_shift) n += gh.dot(ch.inverse_shift(x));
            if (ch.vega_direction) n += gh.dot(ens.vega_state(i));
        }
        if (!std::isfinite(n)) raise(ErrorKind::NumericalBlowup, "non-finite estimator weight on path " + std::to_string(i));
        h[i] = hi;
        num[i] = n;
    }
    const std::vector<double> hs = independent_samples(std::move(h), mc.antithetic);
    const std::vector<double> ns = independent_samples(std::move(num), mc.antithetic);
    const Stats r = ratio(ns, hs);
    const Stats sn = stats(ns), sh = stats(hs);

    SlopeTerms out;
    out.T = T;
    out.kind = ch.kind;
    out.n_paths = ens.n_paths;
    out.scheme = ens.scheme;
    out.mean_h = sh.mean;
    out.mean_derivative = sn.mean;
    out.derivative_std_error = sn.std_error;
    const double scale = ch.kind == LimitKind::PerYear ? 1.0 / T : 1.0;
    out.lambda_term = ch.kind == LimitKind::PerYear ? -ch.lambda_prime : -ch.lambda_prime * T;
    out.phi_term = ch.log_phi_xi * scale;
    out.expectation_term = r.mean * scale;
    out.value = out.lambda_term + out.phi_term + out.expectation_term;
    out.std_error = r.std_error * scale;
    out.wall_time = seconds_since(start);
    return out;
}

SlopeTerms slope_at(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param,
                    const GridSpec& grid, const McConfig& mc) {
    return evaluate_channels(channels(model, payoff, param), grid, mc);
}

Estimate rho_lr(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param, const GridSpec& grid,
                const McConfig& mc) {
    if (default_method(model.spec(), param) != Method::LR) {
        raise(ErrorKind::MissingScoreFunction, "'" + std::string(param) + "' is not a drift parameter");
    }
    return derivative_estimate(slope_at(model, payoff, param, grid, mc));
}

Estimate delta_bel(const ValidatedModel& model, const PayoffSpec& payoff, int coordinate, const GridSpec& grid,
                   const McConfig& mc) {
    const std::string name = state_param_name(model.spec(), coordinate);
    return derivative_estimate(slope_at(model, payoff, name, grid, mc));
}

Estimate vega_lamperti(const ValidatedModel& model, const PayoffSpec& payoff, const GridSpec& grid,
                       const McConfig& mc) {
    if (model.dim() != 1 || model.kind() == ModelKind::QTSM) {
        raise(ErrorKind::UnsupportedModel, "the unit-diffusion vega needs a one-dimensional model");
    }
    return derivative_estimate(slope_at(model, payoff, "sigma", grid, mc));
}

namespace {

struct LogPriceSamples {
    double log_prefix = 0.0;
    std::vector<double> samples;
};

LogPriceSamples log_price_samples(const ValidatedModel& model, const PayoffSpec& payoff, const GridSpec& grid,
                                  const McConfig& mc, Pricer pricer) {
    LogPriceSamples out;
    if (pricer == Pricer::Q) {
        Accumulators acc;
        acc.discount = true;
        const PathEnsemble ens = simulate(model, grid, mc, acc);
        out.samples.resize(ens.n_paths);
        for (std::size_t i = 0; i < ens.n_paths; ++i) {
            out.samples[i] = std::exp(-ens.discount[i]) * payoff_eval(payoff, ens.terminal_state(i));
        }
    } else {
        const Extraction ext = eigenpair(model, payoff);
        out.log_prefix = ext.log_phi(model.initial_state()) - ext.lambda() * grid.T;
        const PathEnsemble ens = simulate(transformed_dynamics(ext), grid, mc);
        out.samples.resize(ens.n_paths);
        for (std::size_t i = 0; i < ens.n_paths; ++i) {
            const Vector x = ens.terminal_state(i);
            out.samples[i] = payoff_eval(payoff, x) / ext.phi(x);
        }
    }
    out.samples = independent_samples(std::move(out.samples), mc.antithetic);
    return out;
}

struct CentralDifference {
    double value = 0.0;
    double std_error = 0.0;
    std::vector<double> per_path;  // paired contributions, empty without common numbers
    double roundoff = 0.0;         // floating-point bound on value
};

CentralDifference central_difference(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param,
                                     double h, const GridSpec& grid, const McConfig& mc, const FdOptions& opt) {
    const double x = get_param(model.spec(), param);
    const ValidatedModel up = validate(with_param(model.spec(), param, x + h));
    const ValidatedModel dn = validate(with_param(model.spec(), param, x - h));
    McConfig mc_dn = mc;
    if (!opt.crn) mc_dn.seed = mc.seed ^ 0xA5A5A5A5DEADBEEFULL;
    const LogPriceSamples a = log_price_samples(up, payoff, grid, mc, opt.pricer);
    const LogPriceSamples b = log_price_samples(dn, payoff, grid, mc_dn, opt.pricer);
    const Stats sa = stats(a.samples), sb = stats(b.samples);
    CentralDifference out;
    out.value = (a.log_prefix - b.log_prefix + std::log(sa.mean) - std::log(sb.mean)) / (2.0 * h);
    // A few ulps on each term of the numerator (and on each mean), magnified by 1 / 2h.
    const double scale = std::abs(a.log_prefix) + std::abs(b.log_prefix) + std::abs(std::log(sa.mean)) +
                         std::abs(std::log(sb.mean)) + 2.0;
    out.roundoff = 8.0 * std::numeric_limits<double>::epsilon() * scale / (2.0 * h);
    if (opt.crn) {
        out.per_path.resize(a.samples.size());
        for (std::size_t i = 0; i < a.samples.size(); ++i) {
            out.per_path[i] = (a.samples[i] / sa.mean - b.samples[i] / sb.mean) / (2.0 * h);
        }
        out.std_error = stats(out.per_path).std_error;
    } else {
        out.std_error = std::hypot(sa.std_error / sa.mean, sb.std_error / sb.mean) / (2.0 * h);
    }
    return out;
}

}  // namespace

Estimate fd_sensitivity(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param,
                        const GridSpec& grid, const McConfig& mc_in, const FdOptions& opt) {
    const auto start = Clock::now();
    const double x = get_param(model.spec(), param);
    const double h = opt.h.value_or(1e-4 * (1.0 + std::abs(x)));
    if (!(h > 0.0)) raise(ErrorKind::InvalidParameter, "finite-difference step must be positive");
    McConfig mc = mc_in;
    // Increment-driven schemes keep the paths smooth in the parameter.
    const ModelKind kind = model.kind();
    mc.scheme = resolve_scheme(mc_in, kind, true);

    const CentralDifference d1 = central_difference(model, payoff, param, h, grid, mc, opt);
    double truncation = 0.0;
    if (opt.richardson) {
        const CentralDifference d2 = central_difference(model, payoff, param, 0.5 * h, grid, mc, opt);
        double noise = std::hypot(d1.std_error, d2.std_error);
        if (opt.crn) {
            std::vector<double> gap(d1.per_path.size());
            for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = d1.per_path[i] - d2.per_path[i];
            noise = stats(gap).std_error;
        }
        const double gap = std::abs(d1.value - d2.value);
        truncation = 4.0 / 3.0 * gap;
        if (gap > 10.0 * (3.0 * noise + 1e-7 * (1.0 + std::abs(d1.value)))) {
            raise(ErrorKind::StepTooLarge, "finite differences at h and h/2 disagree by " + std::to_string(gap));
        }
    }
    std::size_t n = mc.n_paths;
    return {d1.value, d1.std_error, n, *mc.scheme, seconds_since(start), truncation, d1.roundoff};
}

SlopeSeries longterm_slope(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param,
                           const std::vector<double>& horizons, std::optional<Method> method, double steps_per_year,
                           const McConfig& mc) {
    if (horizons.empty()) raise(ErrorKind::InvalidParameter, "horizon grid is empty");
    for (std::size_t i = 1; i < horizons.size(); ++i) {
        if (!(horizons[i] > horizons[i - 1])) raise(ErrorKind::InvalidParameter, "horizons must increase");
    }
    const Method natural = default_method(model.spec(), param);
    const Method m = method.value_or(natural);
    if (m != Method::FD && m != natural) {
        raise(ErrorKind::InvalidParameter, std::string(method_name(m)) + " does not apply to '" + std::string(param) +
                                               "'; use " + std::string(method_name(natural)) + " or FD");
    }
    const SensitivityLimit limit = sensitivity_limit(model, payoff, param);
    SlopeSeries out;
    out.method = m;
    out.kind = limit.kind;
    out.param = std::string(param);
    for (double T : horizons) {
        const GridSpec grid = GridSpec::with_policy(T, steps_per_year);
        SlopeRow row;
        row.T = T;
        row.limit = limit.value;
        if (m == Method::FD) {
            const Estimate e = fd_sensitivity(model, payoff, param, grid, mc);
            const double scale = limit.kind == LimitKind::PerYear ? 1.0 / T : 1.0;
            row.slope = e.value * scale;
            row.std_error = e.std_error * scale;
        } else {
            const SlopeTerms t = slope_at(model, payoff, param, grid, mc);
            row.slope = t.value;
            row.std_error = t.std_error;
        }
        row.abs_gap = std::abs(row.slope - row.limit);
        out.rows.push_back(row);
    }
    return out;
}

}  // namespace longgreeks
