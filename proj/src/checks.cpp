#include "longgreeks/checks.hpp"

#include "longgreeks/analytic.hpp"
#include "longgreeks/errors.hpp"
#include "longgreeks/estimators.hpp"
#include "longgreeks/extraction.hpp"
#include "longgreeks/presets.hpp"
#include "longgreeks/riccati.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace longgreeks::checks {

CheckResult eigenpair_defect() {
    CheckResult out;
    std::ostringstream detail;
    for (const auto& c : presets::catalog()) {
        const ValidatedModel model = validate(c.model);
        const Extraction ext = eigenpair(model, c.payoff);
        double worst = 0.0;
        for (const Vector& x : presets::state_grid(c.model)) {
            worst = std::max(worst, std::abs(generator_residual(ext, model, x)));
        }
        out.measured = std::max(out.measured, worst);
        detail << c.name << ": " << worst << "; ";
    }
    out.pass = out.measured < 1e-8;
    out.detail = detail.str();
    return out;
}

CheckResult riccati_suite(std::uint64_t seed, int instances) {
    CheckResult out;
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n01;
    std::uniform_int_distribution<int> dims(1, 5);
    auto random = [&](int d) {
        Matrix m(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = n01(gen);
        return m;
    };
    int unstable = 0;
    for (int k = 0; k < instances; ++k) {
        const int d = dims(gen);
        const Matrix m = random(d), g = random(d);
        const Matrix identity = Matrix::Identity(d, d);
        CareProblem prob{m * m.transpose() + 0.1 * identity, random(d), g * g.transpose() + 0.1 * identity};
        const CareSolution s = solve_care(prob);
        const double normalized = s.residual_norm / (1.0 + prob.gamma.norm());
        out.measured = std::max(out.measured, normalized);
        if (!s.stable) ++unstable;
    }
    // Scalar closed form: 2 a V^2 - 2 B V - Gamma = 0, stabilizing root.
    double scalar_err = 0.0;
    for (double a : {0.5, 1.0, 2.0}) {
        for (double b : {-1.0, 0.0, 0.7}) {
            for (double g : {0.3, 1.0}) {
                CareProblem prob{Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), Matrix::Constant(1, 1, g)};
                const double exact = (b + std::sqrt(b * b + 2.0 * a * g)) / (2.0 * a);
                const double got = solve_care(prob).V(0, 0);
                scalar_err = std::max(scalar_err, std::abs(got - exact) / std::max(1.0, std::abs(exact)));
            }
        }
    }
    out.pass = out.measured < 1e-10 && unstable == 0 && scalar_err <= 1e-14;
    std::ostringstream detail;
    detail << instances << " instances, worst normalized residual " << out.measured << ", unstable " << unstable
           << ", scalar error " << scalar_err;
    out.detail = detail.str();
    return out;
}

CheckResult density_normalization() {
    CheckResult out;
    const ValidatedModel model = validate(presets::cir());
    const auto& p = model.params<CirParams>();
    auto one = [](double) { return 1.0; };
    std::ostringstream detail;
    for (Measure m : {Measure::Q, Measure::P}) {
        for (double t : {0.1, 1.0, 5.0, std::numeric_limits<double>::infinity()}) {
            const double mass = cir_expectation(one, {GrowthKind::Bounded, 0.0}, CirDensity{p, m, t, 0.04});
            out.measured = std::max(out.measured, std::abs(mass - 1.0));
        }
    }
    out.pass = out.measured < 1e-8;
    detail << "worst |mass - 1| " << out.measured;
    out.detail = detail.str();
    return out;
}

CheckResult martingale_mean(std::size_t n_paths, std::uint64_t seed, const std::vector<double>& horizons,
                            int threads) {
    CheckResult out;
    out.pass = true;
    std::ostringstream detail;
    for (const auto& c : presets::catalog()) {
        const ValidatedModel model = validate(c.model);
        const Extraction ext = eigenpair(model, c.payoff);
        const double log_phi0 = ext.log_phi(model.initial_state());
        for (double T : horizons) {
            McConfig mc{n_paths, seed, std::nullopt, false, threads};
            Accumulators acc;
            acc.discount = true;
            const PathEnsemble ens = simulate(model, GridSpec::with_policy(T), mc, acc);
            double sum = 0.0, sum2 = 0.0;
            for (std::size_t i = 0; i < ens.n_paths; ++i) {
                const double m =
                    std::exp(ext.lambda() * T - ens.discount[i] + ext.log_phi(ens.terminal_state(i)) - log_phi0);
                sum += m;
                sum2 += m * m;
            }
            const double n = static_cast<double>(ens.n_paths);
            const double mean = sum / n;
            const double se = std::sqrt(std::max(sum2 / n - mean * mean, 0.0) / (n - 1.0));
            const double z = std::abs(mean - 1.0) / std::max(se, 1e-300);
            out.measured = std::max(out.measured, z);
            if (std::abs(mean - 1.0) > 3.0 * se) out.pass = false;
            detail << c.name << " T=" << T << ": " << mean << " +- " << se << "; ";
        }
    }
    out.detail = detail.str();
    return out;
}

CheckResult decomposition(std::size_t n_paths, std::uint64_t seed, const std::vector<double>& horizons, int threads) {
    CheckResult out;
    out.pass = true;
    std::ostringstream detail;
    for (const auto& c : presets::catalog()) {
        if (c.model.kind() == ModelKind::Heston) continue;
        const ValidatedModel model = validate(c.model);
        for (double T : horizons) {
            const GridSpec grid = GridSpec::with_policy(T);
            const McConfig mc{n_paths, seed, std::nullopt, false, threads};
            const Estimate q = price_q(model, c.payoff, grid, mc);
            const Estimate p = price_p(model, c.payoff, grid, mc);
            const double se = std::hypot(q.std_error, p.std_error);
            const double diff = std::abs(q.value - p.value);
            out.measured = std::max(out.measured, diff / std::max(se, 1e-300));
            if (diff >= 3.0 * se) out.pass = false;
            detail << c.name << " T=" << T << ": " << q.value << " vs " << p.value << " (se " << se << "); ";
        }
    }
    out.detail = detail.str();
    return out;
}

CheckResult exponential_moment_inequality(int p, double T, std::size_t n_paths, std::uint64_t seed, int threads) {
    if (p < 1) raise(ErrorKind::InvalidParameter, "p must be a positive integer");
    const ValidatedModel model = validate(presets::cir());
    Accumulators acc;
    acc.time_integrand = [](const Vector& x) { return x(0); };
    const McConfig mc{n_paths, seed, std::nullopt, false, threads};
    const PathEnsemble ens = simulate(model, GridSpec::with_policy(T), mc, acc);
    const double n = static_cast<double>(ens.n_paths);
    double m1 = 0.0, m2 = 0.0;
    for (double y : ens.time_integral) {
        m1 += std::pow(y, p);
        m2 += std::exp(y);
    }
    m1 /= n;
    m2 /= n;
    // Delta method on D = m1^{1/p} - ln m2.
    const double g1 = std::pow(m1, 1.0 / p - 1.0) / p, g2 = -1.0 / m2;
    double var = 0.0;
    for (double y : ens.time_integral) {
        const double z = g1 * (std::pow(y, p) - m1) + g2 * (std::exp(y) - m2);
        var += z * z;
    }
    const double se = std::sqrt(var / (n - 1.0) / n);
    const double lhs = std::pow(m1, 1.0 / p), rhs = std::log(m2);
    CheckResult out;
    out.measured = (lhs - rhs) / std::max(se, 1e-300);
    out.pass = lhs <= rhs + 3.0 * se;
    std::ostringstream detail;
    detail << "p=" << p << " T=" << T << ": " << lhs << " <= " << rhs << " (se " << se << ")";
    out.detail = detail.str();
    return out;
}

}  // namespace longgreeks::checks
