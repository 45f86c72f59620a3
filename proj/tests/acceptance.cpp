// Acceptance gates. Each criterion prints one line:
//   criterion N: PASS|FAIL measured=<value> tolerance=<value> runtime=<s> | <detail>
// and the process exits 0 only if every requested criterion passes.

#include "longgreeks/analytic.hpp"
#include "longgreeks/checks.hpp"
#include "longgreeks/cli.hpp"
#include "longgreeks/errors.hpp"
#include "longgreeks/estimators.hpp"
#include "longgreeks/presets.hpp"
#include "longgreeks/riccati.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

using namespace longgreeks;

namespace {

struct Outcome {
    bool pass = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct Settings {
    std::uint64_t seed = 20240601;
    int threads = 0;
};

McConfig mc(const Settings& s, std::size_t n) {
    McConfig c;
    c.n_paths = n;
    c.seed = s.seed;
    c.threads = s.threads;
    return c;
}

std::string fmt(double v) { return cli::format_double(v); }

// 1. Eigenpair defect below 1e-8 on every catalog extraction, under a second.
Outcome c1(const Settings&) {
    const auto start = std::chrono::steady_clock::now();
    const checks::CheckResult r = checks::eigenpair_defect();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {r.pass && secs < 1.0, r.measured, 1e-8, r.detail + " runtime " + fmt(secs) + " s (limit 1 s)"};
}

// 2. E^Q[M_T] = 1 within 3 SE, N = 1e5, T in {1, 5}, under 60 s.
Outcome c2(const Settings& s) {
    const auto start = std::chrono::steady_clock::now();
    const checks::CheckResult r = checks::martingale_mean(100000, s.seed, {1.0, 5.0}, s.threads);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {r.pass && secs < 60.0, r.measured, 3.0, r.detail + "runtime " + fmt(secs) + " s (limit 60 s)"};
}

// 3. |price_q - price_p| < 3 combined SE, N = 1e5, T in {1, 5}.
Outcome c3(const Settings& s) {
    const checks::CheckResult r = checks::decomposition(100000, s.seed, {1.0, 5.0}, s.threads);
    return {r.pass, r.measured, 3.0, r.detail};
}

// 4. GBM forward within 3 SE of S0 e^{(mu - r) T}.
Outcome c4(const Settings& s) {
    const Estimate e = price_q(validate(presets::gbm()), PayoffSpec::power(1.0), GridSpec::with_policy(5.0),
                               mc(s, 100000));
    const double target = 100.0 * std::exp(0.03 * 5.0);
    const double z = std::abs(e.value - target) / e.std_error;
    return {z < 3.0, z, 3.0, "estimate " + fmt(e.value) + " +- " + fmt(e.std_error) + " target " + fmt(target)};
}

// 5. P-measure Monte Carlo of phi^{-1} f at T = 5 against quadrature; the
// quadrature normalizes to 1 within 1e-8.
Outcome c5(const Settings& s) {
    const ValidatedModel m = validate(presets::cir());
    const Extraction ext = eigenpair(m, PayoffSpec::bond());
    const double kappa = ext.linear()(0);
    const double T = 5.0;
    const CirDensity d{m.params<CirParams>(), Measure::P, T, m.initial_state()(0)};
    const double exact = cir_expectation([&](double r) { return std::exp(kappa * r); },
                                         {GrowthKind::Exponential, kappa}, d);
    const double mass = cir_expectation([](double) { return 1.0; }, {GrowthKind::Bounded, 0.0}, d);
    const PathEnsemble ens = simulate(transformed_dynamics(ext), GridSpec::with_policy(T), mc(s, 100000));
    double sum = 0.0, sum2 = 0.0;
    for (double r : ens.terminal) {
        const double v = std::exp(kappa * r);
        sum += v;
        sum2 += v * v;
    }
    const double n = static_cast<double>(ens.n_paths), mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / (n - 1.0));
    const double z = std::abs(mean - exact) / se;
    const bool pass = z < 3.0 && std::abs(mass - 1.0) < 1e-8;
    return {pass, z, 3.0,
            "MC " + fmt(mean) + " +- " + fmt(se) + " quadrature " + fmt(exact) + " mass-1 " + fmt(mass - 1.0)};
}

// Pathwise slope series with combined-SE tracking.
SlopeSeries series(const Settings& s, const ModelSpec& spec, const PayoffSpec& payoff, const std::string& param,
                   const std::vector<double>& horizons, std::size_t n) {
    return longterm_slope(validate(spec), payoff, param, horizons, std::nullopt, 32.0, mc(s, n));
}

std::string describe(const SlopeSeries& ser) {
    std::ostringstream os;
    for (const auto& r : ser.rows) {
        os << "T=" << r.T << " slope " << r.slope << " +- " << r.std_error << " gap " << r.abs_gap << "; ";
    }
    return os.str();
}

// 6. CIR theta slope with LR at T in {5, 10, 25}, N = 2e5: gaps non-increasing
// within 2 combined SE and final gap < max(0.02 kappa, 3 SE), under 5 minutes.
Outcome c6(const Settings& s) {
    const auto start = std::chrono::steady_clock::now();
    const SlopeSeries ser = series(s, presets::cir(), PayoffSpec::bond(), "theta", {5.0, 10.0, 25.0}, 200000);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool monotone = true;
    for (std::size_t i = 1; i < ser.rows.size(); ++i) {
        const double slack = 2.0 * std::hypot(ser.rows[i].std_error, ser.rows[i - 1].std_error);
        if (ser.rows[i].abs_gap > ser.rows[i - 1].abs_gap + slack) monotone = false;
    }
    const auto& last = ser.rows.back();
    const double kappa = -last.limit;
    const double tol = std::max(0.02 * kappa, 3.0 * last.std_error);
    const bool pass = monotone && last.abs_gap < tol && secs < 300.0;
    return {pass, last.abs_gap, tol,
            describe(ser) + (monotone ? "monotone" : "not monotone") + ", runtime " + fmt(secs) + " s (limit 300 s)"};
}

// 7. GBM call-type delta at T = 40 within max(5%, 3 SE) of alpha / S0.
Outcome c7(const Settings& s) {
    const SlopeSeries ser = series(s, presets::gbm(), presets::gbm_call(), "s0", {40.0}, 100000);
    const auto& r = ser.rows.back();
    const double tol = std::max(0.05 * std::abs(r.limit), 3.0 * r.std_error);
    return {r.abs_gap < tol, r.abs_gap, tol, describe(ser) + "limit " + fmt(r.limit)};
}

// 8. Riccati suite, QTSM delta limit at T = 20, lambda' for beta equal to 1.
Outcome c8(const Settings& s) {
    const checks::CheckResult a = checks::riccati_suite(s.seed);
    const ValidatedModel m = validate(presets::qtsm());
    std::ostringstream detail;
    detail << "(a) " << a.detail << "; (b) ";
    bool b_pass = true;
    double worst_z = 0.0;
    for (const char* name : {"xi[0]", "xi[1]"}) {
        const SlopeTerms t = slope_at(m, presets::qtsm_bump(), name, GridSpec::with_policy(20.0), mc(s, 100000));
        const double limit = sensitivity_limit(m, presets::qtsm_bump(), name).value;
        const double z = std::abs(t.value - limit) / t.std_error;
        worst_z = std::max(worst_z, z);
        if (!(std::abs(t.value - limit) < 3.0 * t.std_error)) b_pass = false;
        detail << name << " " << t.value << " +- " << t.std_error << " vs " << limit << "; ";
    }
    const double c = lambda_prime_numeric(presets::qtsm(), "beta").refined;
    const bool c_pass = std::abs(c - 1.0) < 1e-10;
    detail << "(c) lambda'(beta) - 1 = " << c - 1.0;
    return {a.pass && b_pass && c_pass, worst_z, 3.0, detail.str()};
}

// 9. Heston Monte Carlo against the reduced CIR representation at T = 2 and
// the seven limits by chain rule against closed form to 1e-10.
Outcome c9(const Settings& s) {
    const ValidatedModel m = validate(presets::heston());
    const PayoffSpec f = presets::heston_power();
    const double T = 2.0;
    const Estimate q = price_q(m, f, GridSpec::with_policy(T), mc(s, 100000));
    const auto& p = m.params<HestonParams>();
    const HestonReduction red = heston_reduction(p, f.alpha, m.initial_state());
    const double reduced = std::exp(red.log_wrapper(T)) * cir_bond_price(red.cir, red.r0, T);
    const double z = std::abs(q.value - reduced) / q.std_error;
    const auto chain = heston_limits_chain_rule(p, f.alpha, m.initial_state());
    const auto closed = heston_limits_closed_form(p, f.alpha, m.initial_state());
    double worst = 0.0;
    for (const auto& [name, v] : chain) worst = std::max(worst, std::abs(v - closed.at(name)));
    const bool pass = z < 3.0 && chain.size() == 7 && worst < 1e-10;
    return {pass, z, 3.0,
            "MC " + fmt(q.value) + " +- " + fmt(q.std_error) + " reduced " + fmt(reduced) + "; limit mismatch " +
                fmt(worst)};
}

// 10. 3/2 LETF: ell and lambda, then the theta slope at T = 25 within
// max(5%, 3 SE) of -ell.
Outcome c10(const Settings& s) {
    const ValidatedModel m = validate(presets::three_halves());
    const Extraction e = eigenpair(m, presets::letf_utility());
    const double ell = -e.power();
    const bool pair_ok = std::abs(ell - 0.10977) < 1e-5 && std::abs(e.lambda() - 0.21954) < 1e-5;
    const SlopeSeries ser = series(s, presets::three_halves(), presets::letf_utility(), "theta", {25.0}, 100000);
    const auto& r = ser.rows.back();
    const double tol = std::max(0.05 * std::abs(r.limit), 3.0 * r.std_error);
    return {pair_ok && r.abs_gap < tol, r.abs_gap, tol,
            "ell " + fmt(ell) + " lambda " + fmt(e.lambda()) + "; " + describe(ser) + "limit " + fmt(r.limit)};
}

// 11. Pathwise estimator against FD with common random numbers on every
// catalog (model, parameter) pair at T = 5: |diff| - FD bias bound < 3 combined SE.
Outcome c11(const Settings& s) {
    const double T = 5.0;
    const GridSpec g = GridSpec::with_policy(T);
    std::vector<presets::Case> cases = presets::catalog();
    cases[0].payoff = presets::gbm_call();  // power payoffs make every estimator exact
    Outcome out;
    out.pass = true;
    out.tolerance = 3.0;
    std::ostringstream failures;
    int pairs = 0;
    for (const auto& c : cases) {
        const ValidatedModel m = validate(c.model);
        for (const auto& name : param_names(c.model)) {
            try {
                sensitivity_limit(m, c.payoff, name);
            } catch (const longgreeks::Error&) {
                continue;  // not a catalog pair
            }
            const SlopeTerms t = slope_at(m, c.payoff, name, g, mc(s, 50000));
            const Estimate fd = fd_sensitivity(m, c.payoff, name, g, mc(s, 50000));
            const double scale = t.kind == LimitKind::PerYear ? 1.0 / T : 1.0;
            // FD also carries deterministic truncation and roundoff errors, which
            // dominate on pairs where both estimators are exact path by path.
            const double se = std::hypot(t.std_error, fd.std_error * scale);
            const double bias = (fd.truncation_error + fd.roundoff_error) * scale;
            const double diff = std::abs(t.value - fd.value * scale);
            const double z = diff <= bias ? 0.0 : (diff - bias) / se;
            out.measured = std::max(out.measured, z);
            ++pairs;
            if (!(z < 3.0)) {
                out.pass = false;
                failures << c.name << " " << name << ": " << t.value << " vs " << fd.value * scale << " (se " << se
                         << ", FD bias bound " << bias << "); ";
            }
        }
    }
    out.detail = std::to_string(pairs) + " pairs; " + (out.pass ? "all agree" : failures.str());
    return out;
}

// 12. (mean Y^p)^{1/p} <= ln(mean e^Y) + 3 SE for p in {1, 2}.
Outcome c12(const Settings& s) {
    Outcome out;
    out.pass = true;
    out.measured = -INFINITY;
    out.tolerance = 3.0;
    for (int p : {1, 2}) {
        const checks::CheckResult r = checks::exponential_moment_inequality(p, 10.0, 100000, s.seed, s.threads);
        out.pass = out.pass && r.pass;
        out.measured = std::max(out.measured, r.measured);
        out.detail += r.detail + "; ";
    }
    return out;
}

// 13. Byte-identical CSV from the same config and seed at different thread counts.
Outcome c13(const Settings& s) {
    const auto dir = std::filesystem::temp_directory_path() / "longgreeks_acceptance_13";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const cli::Json doc = {
        {"model", {{"kind", "CIR"}, {"params", {{"theta", 0.1}, {"a", 0.5}, {"sigma", 0.2}}}, {"initial_state", {0.04}}}},
        {"payoff", {{"kind", "Bond"}}},
        {"mc", {{"n_paths", 20000}, {"seed", s.seed}}},
        {"grid", {{"T_grid", {1.0, 2.0, 5.0}}}},
        {"task", {{"param", "theta"}}}};
    const auto cfg = dir / "config.json";
    std::ofstream(cfg) << doc.dump(2);
    std::vector<std::string> outputs;
    for (int threads : {1, 2, 5}) {
        cli::RunOptions o;
        o.command = "convergence";
        o.config_path = cfg.string();
        o.threads = threads;
        o.out_dir = dir.string();
        o.overrides = {"output.csv_path=run" + std::to_string(threads) + ".csv"};
        std::ostringstream out, err;
        if (cli::run(o, out, err) != cli::Ok) return {false, 0.0, 0.0, "run failed: " + err.str()};
        std::ifstream f(dir / ("run" + std::to_string(threads) + ".csv"), std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        outputs.push_back(ss.str());
    }
    int mismatches = 0;
    for (const auto& o : outputs) mismatches += o != outputs.front();
    return {mismatches == 0, static_cast<double>(mismatches), 0.0,
            "threads 1, 2, 5; " + std::to_string(outputs.front().size()) + " bytes each"};
}

const std::function<Outcome(const Settings&)> kCriteria[] = {c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12, c13};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance gates"};
    std::vector<int> which;
    Settings settings;
    app.add_option("--criterion", which, "Criterion numbers (default: all)")->check(CLI::Range(1, 13));
    app.add_option("--seed", settings.seed, "Monte Carlo seed");
    app.add_option("--threads", settings.threads, "Worker threads (0 = machine parallelism)");
    CLI11_PARSE(app, argc, argv);
    if (which.empty()) {
        for (int i = 1; i <= 13; ++i) which.push_back(i);
    }

    bool all = true;
    for (int n : which) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = kCriteria[n - 1](settings);
        } catch (const std::exception& e) {
            o = {false, NAN, NAN, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %d: %s measured=%s tolerance=%s runtime=%.1fs | %s\n", n, o.pass ? "PASS" : "FAIL",
                    fmt(o.measured).c_str(), fmt(o.tolerance).c_str(), secs, o.detail.c_str());
        std::fflush(stdout);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
