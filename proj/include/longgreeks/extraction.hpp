#pragma once

#include "longgreeks/models.hpp"

#include <string>
#include <vector>

namespace longgreeks {

struct McConfig;

// Positive eigenfunction of the discounted generator in the catalog form
//   log phi(x) = power * log x_0 - <linear, x> - <x, quadratic x>.
// GBM uses power only, CIR and Heston the linear part (Heston adds the power
// on the price), QTSM linear plus quadratic, 3/2 a negative power.
class Extraction {
public:
    Extraction(ValidatedModel model, double lambda, double power, Vector linear, Matrix quadratic);

    const ValidatedModel& model() const { return model_; }
    double lambda() const { return lambda_; }
    double power() const { return power_; }
    const Vector& linear() const { return linear_; }
    const Matrix& quadratic() const { return quadratic_; }

    double phi(const Vector& x) const;
    double log_phi(const Vector& x) const;
    Vector log_phi_gradient(const Vector& x) const;
    // Hessian of phi divided by phi.
    Matrix hessian_over_phi(const Vector& x) const;
    // sigma(x)^T grad phi / phi.
    Vector martingale_exponent(const Vector& x) const;
    // b(x) + sigma(x) * martingale_exponent(x).
    Vector p_drift(const Vector& x) const;

private:
    ValidatedModel model_;
    double lambda_;
    double power_;
    Vector linear_;
    Matrix quadratic_;
};

// Catalog eigenpair for a pricing-measure model and an admissible payoff.
Extraction eigenpair(const ValidatedModel& model, const PayoffSpec& payoff);

// Same model with drift b + sigma * martingale_exponent, tagged Measure::P.
ValidatedModel transformed_dynamics(const Extraction& ext);

// (L phi + lambda phi)(x) / phi(x) with closed-form derivatives.
double generator_residual(const Extraction& ext, const ValidatedModel& model, const Vector& x);

// phi(xi) exp(-lambda T) E.
double decompose_price(const Extraction& ext, double p_expectation, double T);

// Adds a constant to every catalog eigenvalue. Fault injection for the self-test.
void set_debug_lambda_bump(double bump);
double debug_lambda_bump();

enum class StabilizationMethod { BoundedRecurrent, L2Ergodic, Lyapunov };

std::string_view stabilization_method_name(StabilizationMethod method);

struct StabilizationDiagnostic {
    StabilizationMethod method = StabilizationMethod::BoundedRecurrent;
    std::string witness;
    bool pass = false;
    double measured = 0.0;  // relative change between the last two horizons
    std::vector<double> horizons;
    std::vector<double> values;
    std::vector<double> std_errors;
};

// Estimates E^P[(phi^{-1} f)(X_T)] along the horizon grid, exactly where a
// transition density is available and by Monte Carlo otherwise.
StabilizationDiagnostic stabilization_check(const Extraction& ext, const PayoffSpec& payoff,
                                            const std::vector<double>& horizons, const McConfig& mc,
                                            int steps_per_year = 32);

}  // namespace longgreeks
