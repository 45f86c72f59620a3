#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace longgreeks {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ModelKind { GBM, CIR, QTSM, Heston, ThreeHalves };

enum class Measure { Q, P };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// dS = mu S dt + sigma S dW, constant short rate r.
struct GbmParams {
    double mu = 0.0;
    double sigma = 0.0;
    double r = 0.0;
};

// dr = (theta - a r) dt + sigma sqrt(r) dW, short rate equal to the state.
struct CirParams {
    double theta = 0.0;
    double a = 0.0;
    double sigma = 0.0;
};

// dX = (b + B X) dt + sigma dW, r(x) = beta + <alpha, x> + <Gamma x, x>.
struct QtsmParams {
    Vector b;
    Matrix B;
    Matrix sigma;
    double beta = 0.0;
    Vector alpha;
    Matrix gamma;
};

// dX = (mu + variance_loading v) X dt + sqrt(v) X dW,
// dv = (gamma - beta v) dt + delta sqrt(v) dZ, d<W, Z> = rho dt, zero short rate.
// variance_loading is zero for the pricing model; transformed dynamics set it.
struct HestonParams {
    double mu = 0.0;
    double gamma = 0.0;
    double beta = 0.0;
    double delta = 0.0;
    double rho = 0.0;
    double variance_loading = 0.0;
};

// dX = (theta - a X) X dt + sigma X^{3/2} dW, with the leveraged-fund rate
// r(x) = r alpha (L - 1) + alpha L (L - 1) sigma^2 x / 2 and utility power alpha.
struct ThreeHalvesParams {
    double theta = 0.0;
    double a = 0.0;
    double sigma = 0.0;
    double r = 0.0;
    double leverage = 1.0;
    double alpha = 1.0;
};

using ParamVector = std::variant<GbmParams, CirParams, QtsmParams, HestonParams, ThreeHalvesParams>;

struct ModelSpec {
    ParamVector params;
    Vector initial_state;
    Measure measure = Measure::Q;

    ModelKind kind() const;
    int dim() const;
};

class ValidatedModel {
public:
    const ModelSpec& spec() const { return spec_; }
    ModelKind kind() const { return spec_.kind(); }
    int dim() const { return spec_.dim(); }
    const Vector& initial_state() const { return spec_.initial_state; }
    Measure measure() const { return spec_.measure; }

    template <class P>
    const P& params() const {
        return std::get<P>(spec_.params);
    }

private:
    explicit ValidatedModel(ModelSpec spec) : spec_(std::move(spec)) {}
    friend ValidatedModel validate(const ModelSpec& model);

    ModelSpec spec_;
};

ValidatedModel validate(const ModelSpec& model);
inline ValidatedModel validate(const ValidatedModel& model) { return model; }

bool in_state_space(const ValidatedModel& model, const Vector& x);

Vector drift(const ValidatedModel& model, const Vector& x);
Matrix diffusion(const ValidatedModel& model, const Vector& x);
double short_rate(const ValidatedModel& model, const Vector& x);

// Named scalar access used by bumps and finite differences. Names are
// "theta", "mu", ... for scalar models, "b[i]", "B[i][j]", "sigma[i][j]",
// "alpha[i]", "Gamma[i][j]" (symmetric bump) for QTSM, and "x0"/"v0"/"xi[i]"
// for initial-state coordinates.
double get_param(const ModelSpec& model, std::string_view name);
ModelSpec with_param(const ModelSpec& model, std::string_view name, double value);
std::vector<std::string> param_names(const ModelSpec& model);

// Index of the initial-state coordinate a name refers to, or -1.
int state_param_index(const ModelSpec& model, std::string_view name);

enum class PayoffKind { Power, PowerCall, Indicator, BoundedBump, Bond, LETFUtility };

enum class GrowthKind { PowerLaw, Exponential, Bounded };

struct Growth {
    GrowthKind kind = GrowthKind::Bounded;
    double exponent = 0.0;
};

struct PayoffSpec {
    PayoffKind kind = PayoffKind::Bond;
    double alpha = 1.0;
    double strike = 0.0;
    Vector center;
    double width = 1.0;
    double height = 1.0;
    double leverage = 1.0;
    Growth growth;

    static PayoffSpec power(double alpha);
    static PayoffSpec power_call(double alpha, double strike);
    static PayoffSpec bond();
    static PayoffSpec indicator(Vector center, double width, double height = 1.0);
    static PayoffSpec bump(Vector center, double width, double height = 1.0);
    static PayoffSpec letf_utility(double alpha, double leverage);
};

std::string_view payoff_kind_name(PayoffKind kind);
PayoffKind parse_payoff_kind(std::string_view name);

// Rejects payoffs that are negative or identically zero.
void validate_payoff(const PayoffSpec& payoff);

double payoff_eval(const PayoffSpec& payoff, const Vector& x);

// Gradient where it exists; one-sided at kinks, zero on indicator plateaus.
Vector payoff_gradient(const PayoffSpec& payoff, const Vector& x);

}  // namespace longgreeks
