#include "longgreeks/presets.hpp"

#include <cmath>

namespace longgreeks::presets {

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

}  // namespace

ModelSpec gbm() { return {GbmParams{0.08, 0.2, 0.05}, vec({100.0}), Measure::Q}; }

ModelSpec cir() { return {CirParams{0.1, 0.5, 0.2}, vec({0.04}), Measure::Q}; }

ModelSpec qtsm() {
    QtsmParams p;
    p.b = vec({0.01, 0.02});
    p.B.resize(2, 2);
    p.B << -1.0, 0.2, 0.0, -0.5;
    p.sigma.resize(2, 2);
    p.sigma << 0.2, 0.0, 0.05, 0.3;
    p.beta = 0.01;
    p.alpha = vec({0.1, 0.1});
    p.gamma.resize(2, 2);
    p.gamma << 1.0, 0.2, 0.2, 0.5;
    return {p, vec({0.1, 0.2}), Measure::Q};
}

ModelSpec heston() { return {HestonParams{0.08, 0.09, 2.0, 0.3, -0.5, 0.0}, vec({1.0, 0.04}), Measure::Q}; }

ModelSpec three_halves() { return {ThreeHalvesParams{2.0, 1.0, 0.5, 0.0, 2.0, 0.5}, vec({1.0}), Measure::Q}; }

PayoffSpec gbm_power() { return PayoffSpec::power(1.0); }
PayoffSpec gbm_call() { return PayoffSpec::power_call(0.5, 5.0); }
PayoffSpec cir_bond() { return PayoffSpec::bond(); }
PayoffSpec qtsm_bump() { return PayoffSpec::bump(qtsm().initial_state, 0.5, 1.0); }
PayoffSpec heston_power() { return PayoffSpec::power(0.5); }
PayoffSpec letf_utility() { return PayoffSpec::letf_utility(0.5, 2.0); }

std::vector<Case> catalog() {
    return {{"GBM power", gbm(), gbm_power()},
            {"CIR bond", cir(), cir_bond()},
            {"QTSM bump", qtsm(), qtsm_bump()},
            {"Heston power", heston(), heston_power()},
            {"3/2 LETF utility", three_halves(), letf_utility()}};
}

std::vector<Vector> state_grid(const ModelSpec& model) {
    std::vector<Vector> out;
    out.reserve(100);
    const Vector& xi = model.initial_state;
    if (model.dim() == 1) {
        // Log-spaced around the initial state for positive models, linear for QTSM.
        for (int i = 0; i < 100; ++i) {
            const double s = -1.0 + 2.0 * i / 99.0;
            out.push_back(model.kind() == ModelKind::QTSM ? Vector::Constant(1, xi(0) + s)
                                                          : Vector::Constant(1, xi(0) * std::pow(10.0, 1.5 * s)));
        }
        return out;
    }
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            const double s = -1.0 + 2.0 * i / 9.0, t = -1.0 + 2.0 * j / 9.0;
            Vector x = xi;
            if (model.kind() == ModelKind::QTSM) {
                x(0) += s;
                x(1) += t;
            } else {
                x(0) *= std::pow(10.0, s);
                x(1) *= std::pow(10.0, 1.5 * t);
            }
            out.push_back(x);
        }
    }
    return out;
}

}  // namespace longgreeks::presets
