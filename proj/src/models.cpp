#include "longgreeks/models.hpp"

#include "longgreeks/errors.hpp"

#include <cmath>
#include <optional>
#include <sstream>

namespace longgreeks {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

void require_finite(double v, std::string_view name) {
    if (!std::isfinite(v)) raise(ErrorKind::InvalidParameter, std::string(name) + " must be finite");
}

void require_positive(double v, std::string_view name) {
    require_finite(v, name);
    if (!(v > 0.0)) raise(ErrorKind::InvalidParameter, std::string(name) + " must be > 0, got " + fmt(v));
}

template <class Derived>
void require_all_finite(const Eigen::DenseBase<Derived>& m, std::string_view name) {
    if (!m.allFinite()) raise(ErrorKind::InvalidParameter, std::string(name) + " must be finite");
}

// Parses "base[i]" or "base[i][j]"; returns indices or nullopt if the base differs.
std::optional<std::vector<int>> parse_indexed(std::string_view name, std::string_view base) {
    if (name.size() <= base.size() || name.substr(0, base.size()) != base || name[base.size()] != '[') {
        return std::nullopt;
    }
    std::vector<int> idx;
    std::size_t pos = base.size();
    while (pos < name.size()) {
        if (name[pos] != '[') return std::nullopt;
        auto close = name.find(']', pos);
        if (close == std::string_view::npos) return std::nullopt;
        auto token = std::string(name.substr(pos + 1, close - pos - 1));
        if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
        idx.push_back(std::stoi(token));
        pos = close + 1;
    }
    return idx;
}

[[noreturn]] void unknown_param(const ModelSpec& model, std::string_view name) {
    raise(ErrorKind::InvalidParameter,
          "unknown parameter '" + std::string(name) + "' for model " + std::string(model_kind_name(model.kind())));
}

double* scalar_slot(ModelSpec& m, std::string_view name) {
    return std::visit(
        overloaded{
            [&](GbmParams& p) -> double* {
                if (name == "mu") return &p.mu;
                if (name == "sigma") return &p.sigma;
                if (name == "r") return &p.r;
                return nullptr;
            },
            [&](CirParams& p) -> double* {
                if (name == "theta") return &p.theta;
                if (name == "a") return &p.a;
                if (name == "sigma") return &p.sigma;
                return nullptr;
            },
            [&](QtsmParams& p) -> double* {
                if (name == "beta") return &p.beta;
                auto in_range = [&](const std::vector<int>& i, long rows, long cols) {
                    return i.size() == (cols < 0 ? 1u : 2u) && i[0] < rows && (cols < 0 || i[1] < cols);
                };
                if (auto i = parse_indexed(name, "b"); i && in_range(*i, p.b.size(), -1)) return &p.b((*i)[0]);
                if (auto i = parse_indexed(name, "alpha"); i && in_range(*i, p.alpha.size(), -1))
                    return &p.alpha((*i)[0]);
                if (auto i = parse_indexed(name, "B"); i && in_range(*i, p.B.rows(), p.B.cols()))
                    return &p.B((*i)[0], (*i)[1]);
                if (auto i = parse_indexed(name, "sigma"); i && in_range(*i, p.sigma.rows(), p.sigma.cols()))
                    return &p.sigma((*i)[0], (*i)[1]);
                return nullptr;
            },
            [&](HestonParams& p) -> double* {
                if (name == "mu") return &p.mu;
                if (name == "gamma") return &p.gamma;
                if (name == "beta") return &p.beta;
                if (name == "delta") return &p.delta;
                if (name == "rho") return &p.rho;
                return nullptr;
            },
            [&](ThreeHalvesParams& p) -> double* {
                if (name == "theta") return &p.theta;
                if (name == "a") return &p.a;
                if (name == "sigma") return &p.sigma;
                if (name == "r") return &p.r;
                if (name == "leverage") return &p.leverage;
                if (name == "alpha") return &p.alpha;
                return nullptr;
            },
        },
        m.params);
}

void validate_qtsm(const QtsmParams& p, const Vector& xi) {
    const long d = p.B.rows();
    if (d < 1 || d > 16) raise(ErrorKind::InvalidParameter, "QTSM dimension must be in 1..16");
    if (p.B.cols() != d || p.sigma.rows() != d || p.sigma.cols() != d || p.gamma.rows() != d ||
        p.gamma.cols() != d || p.b.size() != d || p.alpha.size() != d || xi.size() != d) {
        raise(ErrorKind::InvalidParameter, "QTSM shapes disagree: b, alpha, xi need length d and B, sigma, Gamma d x d");
    }
    require_all_finite(p.b, "b");
    require_all_finite(p.B, "B");
    require_all_finite(p.sigma, "sigma");
    require_all_finite(p.alpha, "alpha");
    require_all_finite(p.gamma, "Gamma");
    require_finite(p.beta, "beta");
    require_all_finite(xi, "xi");

    Eigen::JacobiSVD<Matrix> svd(p.sigma);
    const auto& s = svd.singularValues();
    if (!(s(d - 1) > 1e-12 * s(0))) {
        raise(ErrorKind::SingularSigma, "sigma is singular (smallest singular value " + fmt(s(d - 1)) + ")");
    }
    const double asym = (p.gamma - p.gamma.transpose()).norm();
    if (asym > 1e-12 * (1.0 + p.gamma.norm())) {
        raise(ErrorKind::NonSPDGamma, "Gamma is not symmetric (asymmetry " + fmt(asym) + ")");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (p.gamma + p.gamma.transpose()));
    if (!(eig.eigenvalues()(0) > 0.0)) {
        raise(ErrorKind::NonSPDGamma, "Gamma is not positive definite (smallest eigenvalue " +
                                          fmt(eig.eigenvalues()(0)) + ")");
    }
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::GBM: return "GBM";
        case ModelKind::CIR: return "CIR";
        case ModelKind::QTSM: return "QTSM";
        case ModelKind::Heston: return "Heston";
        case ModelKind::ThreeHalves: return "ThreeHalves";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name) {
    if (name == "GBM") return ModelKind::GBM;
    if (name == "CIR") return ModelKind::CIR;
    if (name == "QTSM") return ModelKind::QTSM;
    if (name == "Heston") return ModelKind::Heston;
    if (name == "ThreeHalves" || name == "Model32LETF" || name == "3/2") return ModelKind::ThreeHalves;
    raise(ErrorKind::ConfigError, "unknown model kind '" + std::string(name) + "'");
}

ModelKind ModelSpec::kind() const { return static_cast<ModelKind>(params.index()); }

int ModelSpec::dim() const {
    switch (kind()) {
        case ModelKind::QTSM: return static_cast<int>(std::get<QtsmParams>(params).B.rows());
        case ModelKind::Heston: return 2;
        default: return 1;
    }
}

ValidatedModel validate(const ModelSpec& model) {
    const Vector& xi = model.initial_state;
    const auto need_dim = [&](long d) {
        if (xi.size() != d) {
            raise(ErrorKind::InvalidParameter, "initial_state must have " + std::to_string(d) + " coordinate(s)");
        }
    };
    switch (model.kind()) {
        case ModelKind::GBM: {
            const auto& p = std::get<GbmParams>(model.params);
            need_dim(1);
            require_finite(p.mu, "mu");
            require_finite(p.r, "r");
            require_positive(p.sigma, "sigma");
            require_positive(xi(0), "s0");
            break;
        }
        case ModelKind::CIR: {
            const auto& p = std::get<CirParams>(model.params);
            need_dim(1);
            require_positive(p.theta, "theta");
            require_finite(p.a, "a");
            require_positive(p.sigma, "sigma");
            if (!(2.0 * p.theta > p.sigma * p.sigma)) {
                raise(ErrorKind::FellerViolation, "need 2*theta > sigma^2 (theta=" + fmt(p.theta) +
                                                      ", sigma=" + fmt(p.sigma) + ")");
            }
            require_positive(xi(0), "r0");
            break;
        }
        case ModelKind::QTSM:
            validate_qtsm(std::get<QtsmParams>(model.params), xi);
            break;
        case ModelKind::Heston: {
            const auto& p = std::get<HestonParams>(model.params);
            need_dim(2);
            require_finite(p.mu, "mu");
            require_finite(p.variance_loading, "variance_loading");
            require_positive(p.gamma, "gamma");
            require_positive(p.beta, "beta");
            require_positive(p.delta, "delta");
            require_finite(p.rho, "rho");
            if (std::abs(p.rho) > 1.0) raise(ErrorKind::InvalidParameter, "rho must lie in [-1, 1], got " + fmt(p.rho));
            if (!(2.0 * p.gamma > p.delta * p.delta)) {
                raise(ErrorKind::FellerViolation, "need 2*gamma > delta^2 (gamma=" + fmt(p.gamma) +
                                                      ", delta=" + fmt(p.delta) + ")");
            }
            require_positive(xi(0), "x0");
            require_positive(xi(1), "v0");
            break;
        }
        case ModelKind::ThreeHalves: {
            const auto& p = std::get<ThreeHalvesParams>(model.params);
            need_dim(1);
            require_positive(p.theta, "theta");
            require_positive(p.a, "a");
            require_positive(p.sigma, "sigma");
            require_finite(p.r, "r");
            require_finite(p.leverage, "leverage");
            if (std::abs(p.leverage) > 3.0) {
                raise(ErrorKind::LeverageOutOfRange, "need |leverage| <= 3, got " + fmt(p.leverage));
            }
            if (!(p.alpha > 0.0 && p.alpha <= 1.0)) {
                raise(ErrorKind::InvalidParameter, "alpha must lie in (0, 1], got " + fmt(p.alpha));
            }
            require_positive(xi(0), "x0");
            break;
        }
    }
    return ValidatedModel(model);
}

bool in_state_space(const ValidatedModel& model, const Vector& x) {
    if (x.size() != model.dim() || !x.allFinite()) return false;
    switch (model.kind()) {
        case ModelKind::GBM:
        case ModelKind::CIR:
        case ModelKind::ThreeHalves: return x(0) > 0.0;
        case ModelKind::Heston: return x(0) > 0.0 && x(1) > 0.0;
        case ModelKind::QTSM: return true;
    }
    return false;
}

namespace {
void require_state(const ValidatedModel& model, const Vector& x) {
    if (!in_state_space(model, x)) raise(ErrorKind::DomainError, "state outside the model's state space");
}
}  // namespace

Vector drift(const ValidatedModel& model, const Vector& x) {
    require_state(model, x);
    Vector out(model.dim());
    switch (model.kind()) {
        case ModelKind::GBM: out(0) = model.params<GbmParams>().mu * x(0); break;
        case ModelKind::CIR: {
            const auto& p = model.params<CirParams>();
            out(0) = p.theta - p.a * x(0);
            break;
        }
        case ModelKind::QTSM: {
            const auto& p = model.params<QtsmParams>();
            out = p.b + p.B * x;
            break;
        }
        case ModelKind::Heston: {
            const auto& p = model.params<HestonParams>();
            out(0) = (p.mu + p.variance_loading * x(1)) * x(0);
            out(1) = p.gamma - p.beta * x(1);
            break;
        }
        case ModelKind::ThreeHalves: {
            const auto& p = model.params<ThreeHalvesParams>();
            out(0) = (p.theta - p.a * x(0)) * x(0);
            break;
        }
    }
    return out;
}

Matrix diffusion(const ValidatedModel& model, const Vector& x) {
    require_state(model, x);
    const int d = model.dim();
    Matrix out = Matrix::Zero(d, d);
    switch (model.kind()) {
        case ModelKind::GBM: out(0, 0) = model.params<GbmParams>().sigma * x(0); break;
        case ModelKind::CIR: out(0, 0) = model.params<CirParams>().sigma * std::sqrt(x(0)); break;
        case ModelKind::QTSM: out = model.params<QtsmParams>().sigma; break;
        case ModelKind::Heston: {
            const auto& p = model.params<HestonParams>();
            const double sv = std::sqrt(x(1));
            out(0, 0) = x(0) * sv;
            out(1, 0) = p.rho * p.delta * sv;
            out(1, 1) = std::sqrt(1.0 - p.rho * p.rho) * p.delta * sv;
            break;
        }
        case ModelKind::ThreeHalves: {
            const auto& p = model.params<ThreeHalvesParams>();
            out(0, 0) = p.sigma * std::pow(x(0), 1.5);
            break;
        }
    }
    return out;
}

double short_rate(const ValidatedModel& model, const Vector& x) {
    require_state(model, x);
    switch (model.kind()) {
        case ModelKind::GBM: return model.params<GbmParams>().r;
        case ModelKind::CIR: return x(0);
        case ModelKind::QTSM: {
            const auto& p = model.params<QtsmParams>();
            return p.beta + p.alpha.dot(x) + x.dot(p.gamma * x);
        }
        case ModelKind::Heston: return 0.0;
        case ModelKind::ThreeHalves: {
            const auto& p = model.params<ThreeHalvesParams>();
            const double L = p.leverage;
            return p.r * p.alpha * (L - 1.0) + 0.5 * p.alpha * L * (L - 1.0) * p.sigma * p.sigma * x(0);
        }
    }
    return 0.0;
}

int state_param_index(const ModelSpec& model, std::string_view name) {
    switch (model.kind()) {
        case ModelKind::GBM:
            if (name == "s0" || name == "x0") return 0;
            break;
        case ModelKind::CIR:
            if (name == "r0" || name == "x0") return 0;
            break;
        case ModelKind::ThreeHalves:
            if (name == "x0") return 0;
            break;
        case ModelKind::Heston:
            if (name == "x0") return 0;
            if (name == "v0") return 1;
            break;
        case ModelKind::QTSM:
            break;
    }
    if (auto i = parse_indexed(name, "xi"); i && i->size() == 1 && (*i)[0] < model.initial_state.size()) {
        return (*i)[0];
    }
    return -1;
}

double get_param(const ModelSpec& model, std::string_view name) {
    if (int i = state_param_index(model, name); i >= 0) return model.initial_state(i);
    if (auto g = parse_indexed(name, "Gamma"); g && model.kind() == ModelKind::QTSM && g->size() == 2) {
        const auto& p = std::get<QtsmParams>(model.params);
        if ((*g)[0] < p.gamma.rows() && (*g)[1] < p.gamma.cols()) return p.gamma((*g)[0], (*g)[1]);
    }
    ModelSpec copy = model;
    if (double* slot = scalar_slot(copy, name)) return *slot;
    unknown_param(model, name);
}

ModelSpec with_param(const ModelSpec& model, std::string_view name, double value) {
    ModelSpec out = model;
    if (int i = state_param_index(model, name); i >= 0) {
        out.initial_state(i) = value;
        return out;
    }
    if (auto g = parse_indexed(name, "Gamma"); g && model.kind() == ModelKind::QTSM && g->size() == 2) {
        auto& p = std::get<QtsmParams>(out.params);
        const int i = (*g)[0], j = (*g)[1];
        if (i < p.gamma.rows() && j < p.gamma.cols()) {
            p.gamma(i, j) = value;
            p.gamma(j, i) = value;
            return out;
        }
    }
    if (double* slot = scalar_slot(out, name)) {
        *slot = value;
        return out;
    }
    unknown_param(model, name);
}

std::vector<std::string> param_names(const ModelSpec& model) {
    switch (model.kind()) {
        case ModelKind::GBM: return {"mu", "sigma", "r", "s0"};
        case ModelKind::CIR: return {"theta", "a", "sigma", "r0"};
        case ModelKind::Heston: return {"mu", "gamma", "beta", "delta", "rho", "x0", "v0"};
        case ModelKind::ThreeHalves: return {"theta", "a", "sigma", "r", "leverage", "alpha", "x0"};
        case ModelKind::QTSM: {
            const int d = model.dim();
            std::vector<std::string> names;
            auto idx = [](int i) { return "[" + std::to_string(i) + "]"; };
            for (int i = 0; i < d; ++i) names.push_back("b" + idx(i));
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) names.push_back("B" + idx(i) + idx(j));
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) names.push_back("sigma" + idx(i) + idx(j));
            names.push_back("beta");
            for (int i = 0; i < d; ++i) names.push_back("alpha" + idx(i));
            for (int i = 0; i < d; ++i)
                for (int j = i; j < d; ++j) names.push_back("Gamma" + idx(i) + idx(j));
            for (int i = 0; i < d; ++i) names.push_back("xi" + idx(i));
            return names;
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Payoffs

PayoffSpec PayoffSpec::power(double alpha) {
    PayoffSpec p;
    p.kind = PayoffKind::Power;
    p.alpha = alpha;
    p.growth = {GrowthKind::PowerLaw, alpha};
    return p;
}

PayoffSpec PayoffSpec::power_call(double alpha, double strike) {
    PayoffSpec p;
    p.kind = PayoffKind::PowerCall;
    p.alpha = alpha;
    p.strike = strike;
    p.growth = {GrowthKind::PowerLaw, alpha};
    return p;
}

PayoffSpec PayoffSpec::bond() {
    PayoffSpec p;
    p.kind = PayoffKind::Bond;
    p.alpha = 0.0;
    p.growth = {GrowthKind::PowerLaw, 0.0};
    return p;
}

PayoffSpec PayoffSpec::indicator(Vector center, double width, double height) {
    PayoffSpec p;
    p.kind = PayoffKind::Indicator;
    p.center = std::move(center);
    p.width = width;
    p.height = height;
    p.growth = {GrowthKind::Bounded, 0.0};
    return p;
}

PayoffSpec PayoffSpec::bump(Vector center, double width, double height) {
    PayoffSpec p = indicator(std::move(center), width, height);
    p.kind = PayoffKind::BoundedBump;
    return p;
}

PayoffSpec PayoffSpec::letf_utility(double alpha, double leverage) {
    PayoffSpec p;
    p.kind = PayoffKind::LETFUtility;
    p.alpha = alpha;
    p.leverage = leverage;
    p.growth = {GrowthKind::PowerLaw, alpha * leverage};
    return p;
}

std::string_view payoff_kind_name(PayoffKind kind) {
    switch (kind) {
        case PayoffKind::Power: return "Power";
        case PayoffKind::PowerCall: return "PowerCall";
        case PayoffKind::Indicator: return "Indicator";
        case PayoffKind::BoundedBump: return "BoundedBump";
        case PayoffKind::Bond: return "Bond";
        case PayoffKind::LETFUtility: return "LETFUtility";
    }
    return "?";
}

PayoffKind parse_payoff_kind(std::string_view name) {
    if (name == "Power") return PayoffKind::Power;
    if (name == "PowerCall") return PayoffKind::PowerCall;
    if (name == "Indicator") return PayoffKind::Indicator;
    if (name == "BoundedBump") return PayoffKind::BoundedBump;
    if (name == "Bond") return PayoffKind::Bond;
    if (name == "LETFUtility") return PayoffKind::LETFUtility;
    raise(ErrorKind::ConfigError, "unknown payoff kind '" + std::string(name) + "'");
}

void validate_payoff(const PayoffSpec& payoff) {
    switch (payoff.kind) {
        case PayoffKind::Power:
        case PayoffKind::PowerCall:
        case PayoffKind::LETFUtility:
            require_finite(payoff.alpha, "alpha");
            require_finite(payoff.strike, "strike");
            require_finite(payoff.leverage, "leverage");
            break;
        case PayoffKind::Indicator:
        case PayoffKind::BoundedBump:
            require_positive(payoff.width, "width");
            require_positive(payoff.height, "height");
            if (payoff.center.size() == 0 || !payoff.center.allFinite()) {
                raise(ErrorKind::InvalidParameter, "payoff center must be a finite, non-empty vector");
            }
            break;
        case PayoffKind::Bond:
            break;
    }
}

double payoff_eval(const PayoffSpec& payoff, const Vector& x) {
    switch (payoff.kind) {
        case PayoffKind::Power: return std::pow(x(0), payoff.alpha);
        case PayoffKind::PowerCall: return std::max(std::pow(x(0), payoff.alpha) - payoff.strike, 0.0);
        case PayoffKind::Bond: return 1.0;
        case PayoffKind::LETFUtility: return std::pow(x(0), payoff.alpha * payoff.leverage);
        case PayoffKind::Indicator: {
            const double d2 = (x.head(payoff.center.size()) - payoff.center).squaredNorm();
            return d2 <= payoff.width * payoff.width ? payoff.height : 0.0;
        }
        case PayoffKind::BoundedBump: {
            const double s = 1.0 - (x.head(payoff.center.size()) - payoff.center).squaredNorm() /
                                       (payoff.width * payoff.width);
            return s > 0.0 ? payoff.height * s * s : 0.0;
        }
    }
    return 0.0;
}

Vector payoff_gradient(const PayoffSpec& payoff, const Vector& x) {
    Vector g = Vector::Zero(x.size());
    switch (payoff.kind) {
        case PayoffKind::Power:
            g(0) = payoff.alpha * std::pow(x(0), payoff.alpha - 1.0);
            break;
        case PayoffKind::PowerCall:
            if (std::pow(x(0), payoff.alpha) > payoff.strike) g(0) = payoff.alpha * std::pow(x(0), payoff.alpha - 1.0);
            break;
        case PayoffKind::LETFUtility: {
            const double p = payoff.alpha * payoff.leverage;
            g(0) = p * std::pow(x(0), p - 1.0);
            break;
        }
        case PayoffKind::Bond:
        case PayoffKind::Indicator:
            break;
        case PayoffKind::BoundedBump: {
            const long k = payoff.center.size();
            const Vector diff = x.head(k) - payoff.center;
            const double w2 = payoff.width * payoff.width;
            const double s = 1.0 - diff.squaredNorm() / w2;
            if (s > 0.0) g.head(k) = payoff.height * 2.0 * s * (-2.0 / w2) * diff;
            break;
        }
    }
    return g;
}

}  // namespace longgreeks
