#pragma once

#include "longgreeks/models.hpp"

#include <string>
#include <vector>

namespace longgreeks::presets {

// Reference parameter sets used by the self-test, the acceptance gates and
// the examples. All are pricing-measure models.
ModelSpec gbm();           // mu 0.08, sigma 0.2, r 0.05, s0 100
ModelSpec cir();           // theta 0.1, a 0.5, sigma 0.2, r0 0.04
ModelSpec qtsm();          // two factors, stable drift, SPD Gamma
ModelSpec heston();        // mu 0.08, gamma 0.09, beta 2, delta 0.3, rho -0.5, x0 1, v0 0.04
ModelSpec three_halves();  // theta 2, a 1, sigma 0.5, leverage 2, alpha 0.5, x0 1

PayoffSpec gbm_power();     // f(s) = s
PayoffSpec gbm_call();      // (s^0.5 - 5)_+
PayoffSpec cir_bond();
PayoffSpec qtsm_bump();     // bump centred at the initial state
PayoffSpec heston_power();  // x^0.5
PayoffSpec letf_utility();  // alpha 0.5, leverage 2

struct Case {
    std::string name;
    ModelSpec model;
    PayoffSpec payoff;
};

// One (model, payoff) pair per catalog entry.
std::vector<Case> catalog();

// 100 states spread over the bulk of each model's state space.
std::vector<Vector> state_grid(const ModelSpec& model);

}  // namespace longgreeks::presets
