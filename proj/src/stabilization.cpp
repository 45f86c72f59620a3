#include "longgreeks/analytic.hpp"
#include "longgreeks/errors.hpp"
#include "longgreeks/extraction.hpp"
#include "longgreeks/sim.hpp"

#include <cmath>
#include <sstream>

namespace longgreeks {

namespace {

struct Level {
    double value = 0.0;
    double std_error = 0.0;
};

// Monte Carlo mean of (phi^{-1} f)(X_T) under the transformed dynamics.
Level mc_level(const Extraction& ext, const ValidatedModel& p_model, const PayoffSpec& payoff, double T,
               const McConfig& mc, int steps_per_year) {
    McConfig cfg = mc;
    cfg.scheme = resolve_scheme(mc, p_model.kind(), false);
    if (cfg.scheme == Scheme::ExactCIR) cfg.antithetic = false;
    const PathEnsemble ens = simulate(p_model, GridSpec::with_policy(T, steps_per_year), cfg);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < ens.n_paths; ++i) {
        const Vector x = ens.terminal_state(i);
        const double v = payoff_eval(payoff, x) / ext.phi(x);
        sum += v;
        sum2 += v * v;
    }
    const double n = static_cast<double>(ens.n_paths);
    const double mean = sum / n;
    const double var = n > 1.0 ? std::max(sum2 / n - mean * mean, 0.0) * n / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

}  // namespace

StabilizationDiagnostic stabilization_check(const Extraction& ext, const PayoffSpec& payoff,
                                            const std::vector<double>& horizons, const McConfig& mc,
                                            int steps_per_year) {
    if (horizons.size() < 2) raise(ErrorKind::InvalidParameter, "stabilization check needs at least two horizons");
    for (std::size_t i = 1; i < horizons.size(); ++i) {
        if (!(horizons[i] > horizons[i - 1])) raise(ErrorKind::InvalidParameter, "horizons must increase");
    }
    const ValidatedModel& model = ext.model();
    const ValidatedModel p_model = transformed_dynamics(ext);
    StabilizationDiagnostic out;
    out.horizons = horizons;
    std::ostringstream witness;

    auto push = [&](Level l) {
        out.values.push_back(l.value);
        out.std_errors.push_back(l.std_error);
    };

    switch (model.kind()) {
        case ModelKind::GBM: {
            out.method = StabilizationMethod::BoundedRecurrent;
            if (payoff.kind == PayoffKind::Power && payoff.alpha == ext.power()) {
                witness << "phi^-1 f is identically 1";
                for (std::size_t i = 0; i < horizons.size(); ++i) push({1.0, 0.0});
            } else {
                witness << "Monte Carlo under the transformed lognormal dynamics";
                for (double T : horizons) push(mc_level(ext, p_model, payoff, T, mc, steps_per_year));
            }
            break;
        }
        case ModelKind::CIR: {
            out.method = StabilizationMethod::L2Ergodic;
            const auto& p = model.params<CirParams>();
            const double kappa = ext.linear()(0);
            const double tail = 2.0 * std::sqrt(p.a * p.a + 2.0 * p.sigma * p.sigma) / (p.sigma * p.sigma);
            witness << "invariant gamma law; e^{kappa r} f integrable since kappa = " << kappa << " < " << tail;
            for (double T : horizons) {
                CirDensity d{p, Measure::P, T, model.initial_state()(0)};
                auto f = [&](double r) { return std::exp(kappa * r) * payoff_eval(payoff, Vector::Constant(1, r)); };
                Growth g = payoff.growth;
                if (g.kind == GrowthKind::Exponential) {
                    g.exponent += kappa;
                } else {
                    g = {GrowthKind::Exponential, kappa};
                }
                push({cir_expectation(f, g, d), 0.0});
            }
            break;
        }
        case ModelKind::Heston: {
            out.method = StabilizationMethod::L2Ergodic;
            const auto& q = p_model.params<HestonParams>();
            const double k = ext.linear()(1);
            const CirParams v{q.gamma, q.beta, q.delta};
            witness << "variance is CIR with reversion " << q.beta << "; phi^-1 f = e^{" << k << " v}";
            for (double T : horizons) {
                CirDensity d{v, Measure::Q, T, model.initial_state()(1)};
                auto f = [&](double x) { return std::exp(k * x); };
                push({cir_expectation(f, {GrowthKind::Exponential, k}, d), 0.0});
            }
            break;
        }
        case ModelKind::ThreeHalves: {
            out.method = StabilizationMethod::Lyapunov;
            const auto& q = p_model.params<ThreeHalvesParams>();
            const double ell = -ext.power();
            const double pw = ell + q.alpha * q.leverage;
            const CirParams recip{q.a + q.sigma * q.sigma, q.theta, q.sigma};
            const double margin = 2.0 * recip.theta / (q.sigma * q.sigma) - pw;
            witness << "reciprocal is CIR; R^{-" << pw << "} integrable near 0 with margin " << margin;
            if (!(margin > 0.0)) {
                raise(ErrorKind::StabilizationUnavailable, "negative moment of the reciprocal diverges");
            }
            for (double T : horizons) {
                CirDensity d{recip, Measure::Q, T, 1.0 / model.initial_state()(0)};
                auto f = [&](double r) { return std::pow(r, -pw); };
                push({cir_expectation(f, {GrowthKind::Bounded, 0.0}, d), 0.0});
            }
            break;
        }
        case ModelKind::QTSM: {
            out.method = StabilizationMethod::BoundedRecurrent;
            witness << "bounded compactly supported payoff; closed loop B - 2aV is stable";
            for (double T : horizons) push(mc_level(ext, p_model, payoff, T, mc, steps_per_year));
            break;
        }
    }
    out.witness = witness.str();

    const std::size_t m = out.values.size();
    const double last = out.values[m - 1], prev = out.values[m - 2];
    const double se_last = out.std_errors[m - 1], se_prev = out.std_errors[m - 2];
    if (3.0 * se_last >= std::abs(last)) {
        raise(ErrorKind::InconclusiveDiagnostic, "standard error dominates the final level");
    }
    const double diff = std::abs(last - prev);
    out.measured = diff / std::abs(last);
    out.pass = diff <= 3.0 * std::hypot(se_last, se_prev) + 1e-2 * std::abs(last);
    return out;
}

}  // namespace longgreeks
