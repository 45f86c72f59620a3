#pragma once

#include "longgreeks/analytic.hpp"
#include "longgreeks/extraction.hpp"
#include "longgreeks/models.hpp"
#include "longgreeks/sim.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace longgreeks {

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    Scheme scheme = Scheme::EulerMaruyama;
    double wall_time = 0.0;  // seconds
    // Finite differences: Richardson estimate of the O(h^2) error, 4/3 |D(h) - D(h/2)|.
    double truncation_error = 0.0;
    double roundoff_error = 0.0;  // floating-point bound on a finite-difference value
};

// Likelihood ratio for drift parameters, Bismut-Elworthy-Li for initial
// states, Lamperti for one-dimensional volatilities, first variation for
// QTSM volatilities, and finite differences for anything.
enum class Method { LR, FD, BEL, Lamperti, Variation };

std::string_view method_name(Method method);
Method parse_method(std::string_view name);

// The pathwise method that applies to a parameter.
Method default_method(const ModelSpec& model, std::string_view param);

// E^Q[exp(-int r dt) f(X_T)] with T = grid.T.
Estimate price_q(const ValidatedModel& model, const PayoffSpec& payoff, const GridSpec& grid, const McConfig& mc);

// phi(xi) exp(-lambda T) E^P[(phi^{-1} f)(X_T)], model given under Q.
Estimate price_p(const ValidatedModel& model, const PayoffSpec& payoff, const GridSpec& grid, const McConfig& mc);

// Per-path representation of d/d eps of E^{P_eps}[h_eps(X_T)] with h = phi^{-1} f.
struct Channels {
    Channels(ValidatedModel p, Extraction e, PayoffSpec f)
        : p_model(std::move(p)), extraction(std::move(e)), payoff(std::move(f)) {}

    ValidatedModel p_model;       // transformed dynamics that are simulated
    Extraction extraction;        // pair defining h
    PayoffSpec payoff;
    LimitKind kind = LimitKind::PerYear;
    double lambda_prime = 0.0;    // d lambda / d eps
    double log_phi_xi = 0.0;      // d log phi_eps(xi) / d eps, including any start shift
    VectorFunction score;         // kbar(x), paired with dB
    Vector bel;                   // coefficient of the delta weight (1/T) int (sigma^{-1} Y)^T dB
    StateFunction log_phi_shift;  // d log phi_eps(x) / d eps at fixed x
    VectorFunction inverse_shift; // d X_T / d eps at a fixed unit-diffusion path
    std::optional<Matrix> vega_direction;  // sigma_bar driving Z
};

// Channels of a catalog parameter. Heston parameters are routed through the
// reduced CIR bond. Throws MissingScoreFunction for unsupported pairs.
Channels channels(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param);

// The terms of d ln p_T / d eps = -lambda' T + d log phi(xi) + dE / E, divided
// by T for per-year parameters.
struct SlopeTerms {
    double T = 0.0;
    LimitKind kind = LimitKind::PerYear;
    double lambda_term = 0.0;       // -lambda' (per year) or 0
    double phi_term = 0.0;          // d log phi(xi), over T for per-year parameters
    double expectation_term = 0.0;  // (dE / E), over T for per-year parameters
    double value = 0.0;             // sum of the three terms
    double std_error = 0.0;
    std::size_t n_paths = 0;
    Scheme scheme = Scheme::EulerMaruyama;
    double wall_time = 0.0;
    // Raw ingredients: mean of h and mean of the derivative numerator.
    double mean_h = 0.0;
    double mean_derivative = 0.0;
    double derivative_std_error = 0.0;
};

SlopeTerms evaluate_channels(const Channels& ch, const GridSpec& grid, const McConfig& mc);

// Pathwise slope of a parameter at one horizon using the method that applies.
SlopeTerms slope_at(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param,
                    const GridSpec& grid, const McConfig& mc);

// d/d eps E^{P_eps}[h_eps(X_T)] for a drift parameter: the score term plus the
// change of h through phi.
Estimate rho_lr(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param, const GridSpec& grid,
                const McConfig& mc);

// d/d xi_i E^P[h(X_T)] = (1/T) E[h(X_T) int (sigma^{-1} Y)^T dB]_i.
Estimate delta_bel(const ValidatedModel& model, const PayoffSpec& payoff, int coordinate, const GridSpec& grid,
                   const McConfig& mc);

// d/d sigma E^{P_sigma}[h_sigma(X_T)] for GBM, CIR and 3/2 through the unit-diffusion coordinate.
Estimate vega_lamperti(const ValidatedModel& model, const PayoffSpec& payoff, const GridSpec& grid,
                       const McConfig& mc);

enum class Pricer { Q, P };

struct FdOptions {
    std::optional<double> h;  // default 1e-4 (1 + |param|)
    bool crn = true;
    Pricer pricer = Pricer::P;
    bool richardson = true;
};

// Central difference of ln p_T in one parameter, with per-path paired errors.
Estimate fd_sensitivity(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param,
                        const GridSpec& grid, const McConfig& mc, const FdOptions& options = {});

struct SlopeRow {
    double T = 0.0;
    double slope = 0.0;
    double std_error = 0.0;
    double limit = 0.0;
    double abs_gap = 0.0;
};

struct SlopeSeries {
    Method method = Method::LR;
    LimitKind kind = LimitKind::PerYear;
    std::string param;
    std::vector<SlopeRow> rows;
};

// (1/T) d ln p_T per horizon (d ln p_T for initial-state parameters) next to
// the closed-form limit.
SlopeSeries longterm_slope(const ValidatedModel& model, const PayoffSpec& payoff, std::string_view param,
                           const std::vector<double>& horizons, std::optional<Method> method, double steps_per_year,
                           const McConfig& mc);

}  // namespace longgreeks
