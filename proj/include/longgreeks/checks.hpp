#pragma once

#include "longgreeks/sim.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace longgreeks::checks {

struct CheckResult {
    bool pass = false;
    double measured = 0.0;
    std::string detail;
};

// max |L phi + lambda phi| / phi over the preset state grids of all five
// catalog extractions. Passes below 1e-8.
CheckResult eigenpair_defect();

// 100 random SPD instances with d <= 5: residual below 1e-10 (1 + |Gamma|_F),
// a stable closed loop, and the scalar closed form to 1e-14. measured is the
// worst normalized residual.
CheckResult riccati_suite(std::uint64_t seed, int instances = 100);

// CIR transition and invariant laws integrate to one within 1e-8.
CheckResult density_normalization();

// E^Q[M_T] = 1 within 3 SE for every preset. measured is the worst z-score.
CheckResult martingale_mean(std::size_t n_paths, std::uint64_t seed, const std::vector<double>& horizons,
                            int threads);

// price_q and price_p agree within 3 combined SE for GBM power, CIR bond,
// QTSM bump and 3/2 LETF utility. measured is the worst z-score.
CheckResult decomposition(std::size_t n_paths, std::uint64_t seed, const std::vector<double>& horizons,
                          int threads);

// (mean Y^p)^{1/p} <= ln(mean e^Y) + 3 SE for Y = int_0^T r_t dt on the CIR
// preset. measured is the gap divided by its delta-method SE (negative when
// the inequality holds).
CheckResult exponential_moment_inequality(int p, double T, std::size_t n_paths, std::uint64_t seed, int threads);

}  // namespace longgreeks::checks
