#include "longgreeks/analytic.hpp"
#include "longgreeks/estimators.hpp"
#include "longgreeks/presets.hpp"
#include "reference_values.hpp"
#include "test_util.hpp"

using namespace longgreeks;

namespace {

McConfig mc(std::size_t n, std::uint64_t seed) {
    McConfig c;
    c.n_paths = n;
    c.seed = seed;
    c.threads = 1;
    return c;
}

// Pathwise slope against the finite difference of ln p_T on the same scale.
void expect_agrees_with_fd(const ModelSpec& spec, const PayoffSpec& payoff, const std::string& param, double T,
                           std::size_t n, std::uint64_t seed) {
    const ValidatedModel m = validate(spec);
    const GridSpec g = GridSpec::with_policy(T);
    const SlopeTerms s = slope_at(m, payoff, param, g, mc(n, seed));
    const Estimate fd = fd_sensitivity(m, payoff, param, g, mc(n, seed));
    const double scale = s.kind == LimitKind::PerYear ? 1.0 / T : 1.0;
    EXPECT_LT(std::abs(s.value - fd.value * scale), 3.0 * combined_se(s.std_error, fd.std_error * scale) + 1e-9)
        << model_kind_name(spec.kind()) << " " << param << ": " << s.value << " +- " << s.std_error << " vs "
        << fd.value * scale << " +- " << fd.std_error * scale;
}

}  // namespace

TEST(Methods, Routing) {
    EXPECT_EQ(default_method(presets::cir(), "theta"), Method::LR);
    EXPECT_EQ(default_method(presets::cir(), "r0"), Method::BEL);
    EXPECT_EQ(default_method(presets::cir(), "sigma"), Method::Lamperti);
    EXPECT_EQ(default_method(presets::qtsm(), "sigma[0][0]"), Method::Variation);
    EXPECT_EQ(default_method(presets::qtsm(), "xi[1]"), Method::BEL);
    EXPECT_EQ(default_method(presets::heston(), "delta"), Method::Lamperti);
    for (Method k : {Method::LR, Method::FD, Method::BEL, Method::Lamperti, Method::Variation}) {
        EXPECT_EQ(parse_method(method_name(k)), k);
    }
}

TEST(Methods, NonApplicableMethodRejected) {
    const ValidatedModel m = validate(presets::cir());
    EXPECT_LG_ERROR(ErrorKind::InvalidParameter,
                    longterm_slope(m, PayoffSpec::bond(), "theta", {1.0}, Method::BEL, 32.0, mc(100, 1)));
    EXPECT_LG_ERROR(ErrorKind::MissingScoreFunction,
                    rho_lr(m, PayoffSpec::bond(), "sigma", GridSpec::with_policy(1.0), mc(100, 1)));
}

TEST(Prices, GbmForward) {
    const Estimate e = price_q(validate(presets::gbm()), PayoffSpec::power(1.0), GridSpec::with_policy(5.0), mc(20000, 2));
    EXPECT_LT(std::abs(e.value - refs::kGbmForward), 3.0 * e.std_error);
    EXPECT_EQ(e.scheme, Scheme::ExactGBM);
}

TEST(Prices, CirBondUnderBothMeasures) {
    const ValidatedModel m = validate(presets::cir());
    const GridSpec g = GridSpec::with_policy(5.0);
    const Estimate q = price_q(m, PayoffSpec::bond(), g, mc(20000, 3));
    const Estimate p = price_p(m, PayoffSpec::bond(), g, mc(20000, 3));
    EXPECT_LT(std::abs(q.value - refs::kCirBondT5), 3.0 * q.std_error + 2e-4);
    EXPECT_LT(std::abs(p.value - refs::kCirBondT5), 3.0 * p.std_error + 2e-4);
}

TEST(Prices, HestonMatchesReduction) {
    const ValidatedModel m = validate(presets::heston());
    const double T = 2.0;
    const Estimate q = price_q(m, presets::heston_power(), GridSpec::with_policy(T), mc(20000, 4));
    const HestonReduction r = heston_reduction(m.params<HestonParams>(), 0.5, m.initial_state());
    const double reduced = std::exp(r.log_wrapper(T)) * cir_bond_price(r.cir, r.r0, T);
    EXPECT_LT(std::abs(q.value - reduced), 3.0 * q.std_error + 1e-4);
}

TEST(Prices, Deterministic) {
    const ValidatedModel m = validate(presets::three_halves());
    const GridSpec g = GridSpec::with_policy(1.0);
    EXPECT_EQ(price_q(m, presets::letf_utility(), g, mc(2000, 5)).value,
              price_q(m, presets::letf_utility(), g, mc(2000, 5)).value);
}

TEST(Slopes, GbmDrift) { expect_agrees_with_fd(presets::gbm(), presets::gbm_call(), "mu", 2.0, 20000, 6); }

TEST(Slopes, GbmVolatility) { expect_agrees_with_fd(presets::gbm(), presets::gbm_call(), "sigma", 2.0, 20000, 7); }

TEST(Slopes, GbmDelta) { expect_agrees_with_fd(presets::gbm(), presets::gbm_call(), "s0", 2.0, 20000, 8); }

TEST(Slopes, CirDrift) { expect_agrees_with_fd(presets::cir(), PayoffSpec::bond(), "a", 2.0, 20000, 9); }

TEST(Slopes, CirDelta) { expect_agrees_with_fd(presets::cir(), PayoffSpec::bond(), "r0", 2.0, 20000, 10); }

TEST(Slopes, QtsmDrift) { expect_agrees_with_fd(presets::qtsm(), presets::qtsm_bump(), "b[0]", 2.0, 20000, 11); }

TEST(Slopes, QtsmVolatility) {
    expect_agrees_with_fd(presets::qtsm(), presets::qtsm_bump(), "sigma[1][1]", 2.0, 20000, 12);
}

TEST(Slopes, ThreeHalvesVolatility) {
    expect_agrees_with_fd(presets::three_halves(), presets::letf_utility(), "sigma", 2.0, 20000, 13);
}

TEST(Slopes, TermsAddUp) {
    const ValidatedModel m = validate(presets::cir());
    const SlopeTerms s = slope_at(m, PayoffSpec::bond(), "theta", GridSpec::with_policy(2.0), mc(5000, 14));
    EXPECT_NEAR(s.value, s.lambda_term + s.phi_term + s.expectation_term, 1e-14);
    EXPECT_NEAR(s.lambda_term, -refs::kCirKappa, 1e-12);
}

TEST(Slopes, ExactChannelsForGbmPower) {
    // phi^{-1} f = 1: the deterministic terms equal the limit and the score
    // term is a centred average.
    const ValidatedModel m = validate(presets::gbm());
    const SlopeTerms s = slope_at(m, PayoffSpec::power(1.0), "mu", GridSpec::with_policy(3.0), mc(1000, 15));
    EXPECT_NEAR(s.lambda_term + s.phi_term, 1.0, 1e-12);
    EXPECT_EQ(s.mean_h, 1.0);
    EXPECT_LT(std::abs(s.expectation_term), 4.0 * s.std_error);
}

TEST(Slopes, SeriesCarriesLimit) {
    const ValidatedModel m = validate(presets::cir());
    const SlopeSeries s = longterm_slope(m, PayoffSpec::bond(), "theta", {1.0, 2.0}, std::nullopt, 32.0, mc(2000, 16));
    ASSERT_EQ(s.rows.size(), 2u);
    EXPECT_EQ(s.method, Method::LR);
    for (const auto& r : s.rows) {
        EXPECT_NEAR(r.limit, -refs::kCirKappa, 1e-12);
        EXPECT_NEAR(r.abs_gap, std::abs(r.slope - r.limit), 1e-15);
    }
}

TEST(Fd, RichardsonAndCrnOptions) {
    // The increment schemes carry an O(dt) weak bias in the derivative, so the
    // comparison with the exact bond uses a fine grid.
    const ValidatedModel m = validate(presets::cir());
    const GridSpec g{1.0, 1024};
    const double h = 1e-6;
    const double exact = (std::log(cir_bond_price({0.1 + h, 0.5, 0.2}, 0.04, 1.0)) -
                          std::log(cir_bond_price({0.1 - h, 0.5, 0.2}, 0.04, 1.0))) /
                         (2 * h);
    FdOptions o;
    o.richardson = false;
    const Estimate a = fd_sensitivity(m, PayoffSpec::bond(), "theta", g, mc(5000, 17), o);
    o.pricer = Pricer::Q;
    const Estimate b = fd_sensitivity(m, PayoffSpec::bond(), "theta", g, mc(5000, 17), o);
    EXPECT_LT(std::abs(a.value - exact), 4.0 * a.std_error + 2e-3);
    EXPECT_LT(std::abs(b.value - exact), 4.0 * b.std_error + 2e-3);
    o.crn = false;
    const Estimate c = fd_sensitivity(m, PayoffSpec::bond(), "theta", g, mc(5000, 17), o);
    EXPECT_GT(c.std_error, b.std_error);
}

TEST(Fd, TruncationEstimateCoversDeterministicCurvature) {
    // ln p_T is linear in mu and alpha ln x0 in x0 for the Heston power payoff,
    // so the only FD error is the O(h^2) term in x0.
    const ValidatedModel m = validate(presets::heston());
    const GridSpec g = GridSpec::with_policy(1.0);
    const Estimate e = fd_sensitivity(m, presets::heston_power(), "x0", g, mc(200, 18));
    EXPECT_LE(std::abs(e.value - 0.5), 1.01 * e.truncation_error + 1e-12);
    FdOptions o;
    o.richardson = false;
    EXPECT_EQ(fd_sensitivity(m, presets::heston_power(), "x0", g, mc(200, 18), o).truncation_error, 0.0);
}
