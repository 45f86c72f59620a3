#pragma once

#include "longgreeks/models.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace longgreeks {

enum class Scheme {
    EulerMaruyama,
    ExactGBM,
    ExactCIR,
    FullTruncationEuler,
    ExactOU,        // exact Gaussian transitions for QTSM, increments sampled jointly
    LampertiImplicit,  // drift-implicit Euler on the unit-diffusion coordinate of 1-d models
};

std::string_view scheme_name(Scheme scheme);
Scheme parse_scheme(std::string_view name);

// Whether the scheme exposes the Brownian increments that drive the state.
bool scheme_has_increments(Scheme scheme);

// Default scheme for plain pricing and for estimators that need increments.
Scheme default_scheme(ModelKind kind);
Scheme default_increment_scheme(ModelKind kind);

struct GridSpec {
    double T = 1.0;
    int n_steps = 64;

    double dt() const { return T / n_steps; }

    // n_steps = max(64, ceil(steps_per_year * T)).
    static GridSpec with_policy(double T, double steps_per_year = 32.0);
};

struct McConfig {
    std::size_t n_paths = 10000;
    std::uint64_t seed = 0;
    std::optional<Scheme> scheme;  // unset picks a default from the model and accumulators
    bool antithetic = false;
    int threads = 0;  // 0 selects the hardware concurrency
};

// mc.scheme if set, otherwise the default for the model, preferring schemes
// that expose Brownian increments when they are needed.
Scheme resolve_scheme(const McConfig& mc, ModelKind kind, bool need_increments);

// Counter-based generator: each (seed, stream) pair owns an independent
// stream, so paths can be simulated in any order on any thread.
class PathRng {
public:
    using result_type = std::uint64_t;

    PathRng(std::uint64_t seed, std::uint64_t stream, bool negate_normals = false);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    double uniform();  // in (0, 1)
    double normal();

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool negate_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// N(0, dt) increments for one path, n_steps x dim, row-major.
std::vector<double> increments(std::uint64_t seed, std::uint64_t path_id, int n_steps, int dim, double dt);

using StateFunction = std::function<double(const Vector&)>;
using VectorFunction = std::function<Vector(const Vector&)>;

struct Accumulators {
    bool discount = false;           // int r(X_t) dt, trapezoid
    VectorFunction score;            // sum kbar(X_{t_i}) . dB_i, left point
    bool bel = false;                // sum (sigma^{-1}(X_{t_i}) Y_{t_i})^T dB_i
    bool variation = false;          // Y_T
    std::optional<Matrix> vega_direction;  // Z_T driven by sigma_bar dB
    StateFunction time_integrand;    // int g(X_t) dt, trapezoid
    bool record_paths = false;
};

struct PathEnsemble {
    std::size_t n_paths = 0;
    int dim = 0;
    int n_steps = 0;
    double dt = 0.0;
    Scheme scheme = Scheme::EulerMaruyama;
    bool antithetic = false;

    std::vector<double> terminal;       // n_paths x dim
    std::vector<double> discount;       // n_paths
    std::vector<double> score;          // n_paths
    std::vector<double> bel;            // n_paths x dim
    std::vector<double> variation;      // n_paths x dim x dim, row-major per path
    std::vector<double> vega;           // n_paths x dim
    std::vector<double> time_integral;  // n_paths
    std::vector<double> paths;          // n_paths x (n_steps + 1) x dim

    Vector terminal_state(std::size_t i) const;
    Vector bel_weight(std::size_t i) const;
    Vector vega_state(std::size_t i) const;
};

PathEnsemble simulate(const ValidatedModel& model, const GridSpec& grid, const McConfig& mc,
                      const Accumulators& acc = {});

// Samples of Z_T for dZ = (B - 2 a V) Z dt + sigma_bar dB, Z_0 = 0, n_paths x dim.
std::vector<double> first_variation_vega(const ValidatedModel& model_under_p, const Matrix& sigma_bar,
                                         const GridSpec& grid, const McConfig& mc);

// Unit-diffusion coordinate U = u(X) of a one-dimensional model, with
// dU = drift(U) dt + orientation dB. A volatility bump sigma -> sigma + eps
// moves the starting point U_0 = u_eps(xi) at rate q_prime.
struct LampertiMap {
    ModelKind kind = ModelKind::GBM;
    double orientation = 1.0;  // sign of dB in dU
    double direction = 1.0;    // scale of the volatility bump
    double xi = 0.0;
    double q0 = 0.0;
    double q_prime = 0.0;
    double initial_shift = 0.0;  // dX_0 / d eps seen through the unperturbed inverse map

    double to_u(double x) const;
    double from_u(double u) const;
    double drift(double u) const;
    double drift_derivative(double u) const;
    // Drift-implicit step u' = u + drift(u') h + w; positive for the
    // square-root families, whose drift is c / u - k u.
    double implicit_step(double u, double w, double h) const;
    // d/d eps of the inverse map at fixed u, written in terms of x = from_u(u).
    double inverse_sensitivity(double x) const;
    // sigma(x) of the underlying model.
    double diffusion(double x) const;

    // Parameters of the model the map was built from.
    double sigma = 0.0, p1 = 0.0, p2 = 0.0;
};

// direction scales the volatility bump; zero gives a map with no sensitivity.
LampertiMap lamperti(const ValidatedModel& model_1d, double direction = 1.0);

}  // namespace longgreeks
