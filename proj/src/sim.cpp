#include "longgreeks/sim.hpp"

#include "longgreeks/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <random>
#include <string>
#include <thread>

namespace longgreeks {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

// ---------------------------------------------------------------------------
// Names and policies

std::string_view scheme_name(Scheme scheme) {
    switch (scheme) {
        case Scheme::EulerMaruyama: return "EulerMaruyama";
        case Scheme::ExactGBM: return "ExactGBM";
        case Scheme::ExactCIR: return "ExactCIR";
        case Scheme::FullTruncationEuler: return "FullTruncationEuler";
        case Scheme::ExactOU: return "ExactOU";
        case Scheme::LampertiImplicit: return "LampertiImplicit";
    }
    return "?";
}

Scheme parse_scheme(std::string_view name) {
    for (Scheme s : {Scheme::EulerMaruyama, Scheme::ExactGBM, Scheme::ExactCIR, Scheme::FullTruncationEuler,
                     Scheme::ExactOU, Scheme::LampertiImplicit}) {
        if (scheme_name(s) == name) return s;
    }
    raise(ErrorKind::ConfigError, "unknown scheme '" + std::string(name) + "'");
}

bool scheme_has_increments(Scheme scheme) { return scheme != Scheme::ExactCIR; }

Scheme default_scheme(ModelKind kind) {
    switch (kind) {
        case ModelKind::GBM: return Scheme::ExactGBM;
        case ModelKind::CIR:
        case ModelKind::Heston:
        case ModelKind::ThreeHalves: return Scheme::ExactCIR;
        case ModelKind::QTSM: return Scheme::ExactOU;
    }
    return Scheme::EulerMaruyama;
}

Scheme default_increment_scheme(ModelKind kind) {
    switch (kind) {
        case ModelKind::GBM: return Scheme::ExactGBM;
        case ModelKind::CIR:
        case ModelKind::ThreeHalves: return Scheme::LampertiImplicit;
        case ModelKind::Heston: return Scheme::FullTruncationEuler;
        case ModelKind::QTSM: return Scheme::ExactOU;
    }
    return Scheme::EulerMaruyama;
}

Scheme resolve_scheme(const McConfig& mc, ModelKind kind, bool need_increments) {
    if (mc.scheme) return *mc.scheme;
    return need_increments ? default_increment_scheme(kind) : default_scheme(kind);
}

GridSpec GridSpec::with_policy(double T, double steps_per_year) {
    if (!(T > 0.0) || !std::isfinite(T)) raise(ErrorKind::InvalidParameter, "horizon T must be positive");
    const double n = std::ceil(steps_per_year * T - 1e-9);
    return {T, static_cast<int>(std::max(64.0, n))};
}

// ---------------------------------------------------------------------------
// Randomness

PathRng::PathRng(std::uint64_t seed, std::uint64_t stream, bool negate_normals)
    : key_(mix64(seed ^ mix64(stream + kGolden))), negate_(negate_normals) {}

PathRng::result_type PathRng::operator()() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double PathRng::uniform() {
    // 53 random bits, shifted off zero.
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double PathRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double t = 2.0 * M_PI * uniform();
    const double sign = negate_ ? -1.0 : 1.0;
    spare_ = sign * r * std::sin(t);
    has_spare_ = true;
    return sign * r * std::cos(t);
}

std::vector<double> increments(std::uint64_t seed, std::uint64_t path_id, int n_steps, int dim, double dt) {
    PathRng rng(seed, path_id);
    const double s = std::sqrt(dt);
    std::vector<double> out(static_cast<std::size_t>(n_steps) * dim);
    for (double& v : out) v = s * rng.normal();
    return out;
}

// ---------------------------------------------------------------------------
// Lamperti coordinate

double LampertiMap::to_u(double x) const {
    switch (kind) {
        case ModelKind::GBM: return std::log(x / xi) / sigma;
        case ModelKind::CIR: return 2.0 * std::sqrt(std::max(x, 0.0)) / sigma;
        case ModelKind::ThreeHalves: return 2.0 / (sigma * std::sqrt(x));
        default: return x;
    }
}

double LampertiMap::from_u(double u) const {
    switch (kind) {
        case ModelKind::GBM: return xi * std::exp(sigma * u);
        case ModelKind::CIR: return 0.25 * sigma * sigma * u * u;
        case ModelKind::ThreeHalves: return 4.0 / (sigma * sigma * u * u);
        default: return u;
    }
}

double LampertiMap::drift(double u) const {
    const double s2 = sigma * sigma;
    switch (kind) {
        case ModelKind::GBM: return p1 / sigma - 0.5 * sigma;
        case ModelKind::CIR: return (2.0 * p1 / s2 - 0.5) / u - 0.5 * p2 * u;
        case ModelKind::ThreeHalves: return (2.0 * p2 / s2 + 1.5) / u - 0.5 * p1 * u;
        default: return 0.0;
    }
}

double LampertiMap::drift_derivative(double u) const {
    const double s2 = sigma * sigma;
    switch (kind) {
        case ModelKind::GBM: return 0.0;
        case ModelKind::CIR: return -(2.0 * p1 / s2 - 0.5) / (u * u) - 0.5 * p2;
        case ModelKind::ThreeHalves: return -(2.0 * p2 / s2 + 1.5) / (u * u) - 0.5 * p1;
        default: return 0.0;
    }
}

double LampertiMap::implicit_step(double u, double w, double h) const {
    const double s2 = sigma * sigma;
    double c = 0.0, k = 0.0;
    switch (kind) {
        case ModelKind::CIR:
            c = 2.0 * p1 / s2 - 0.5;
            k = 0.5 * p2;
            break;
        case ModelKind::ThreeHalves:
            c = 2.0 * p2 / s2 + 1.5;
            k = 0.5 * p1;
            break;
        default: return u + drift(u) * h + w;
    }
    // (1 + k h) u'^2 - (u + w) u' - c h = 0, positive root.
    const double y = u + w;
    const double kk = 1.0 + k * h;
    return (y + std::sqrt(y * y + 4.0 * kk * c * h)) / (2.0 * kk);
}

double LampertiMap::diffusion(double x) const {
    switch (kind) {
        case ModelKind::GBM: return sigma * x;
        case ModelKind::CIR: return sigma * std::sqrt(x);
        case ModelKind::ThreeHalves: return sigma * x * std::sqrt(x);
        default: return 0.0;
    }
}

double LampertiMap::inverse_sensitivity(double x) const {
    switch (kind) {
        case ModelKind::GBM: return direction * x * std::log(x / xi) / sigma;
        case ModelKind::CIR: return direction * 2.0 * x / sigma;
        case ModelKind::ThreeHalves: return -direction * 2.0 * x / sigma;
        default: return 0.0;
    }
}

LampertiMap lamperti(const ValidatedModel& model, double direction) {
    LampertiMap m;
    m.kind = model.kind();
    m.direction = direction;
    m.xi = model.initial_state()(0);
    switch (model.kind()) {
        case ModelKind::GBM: {
            const auto& p = model.params<GbmParams>();
            m.sigma = p.sigma;
            m.p1 = p.mu;
            break;
        }
        case ModelKind::CIR: {
            const auto& p = model.params<CirParams>();
            m.sigma = p.sigma;
            m.p1 = p.theta;
            m.p2 = p.a;
            break;
        }
        case ModelKind::ThreeHalves: {
            const auto& p = model.params<ThreeHalvesParams>();
            m.sigma = p.sigma;
            m.p1 = p.theta;
            m.p2 = p.a;
            m.orientation = -1.0;
            break;
        }
        default:
            raise(ErrorKind::UnsupportedModel,
                  "no unit-diffusion coordinate for " + std::string(model_kind_name(model.kind())));
    }
    if (m.sigma == 0.0) raise(ErrorKind::NonInvertibleTransform, "volatility vanishes identically");
    m.q0 = m.to_u(m.xi);
    // u_eps(xi) and its derivative; the GBM coordinate is anchored at xi.
    switch (m.kind) {
        case ModelKind::GBM:
            m.q_prime = 0.0;
            m.initial_shift = 0.0;
            break;
        case ModelKind::CIR:
            m.q_prime = -direction * 2.0 * std::sqrt(m.xi) / (m.sigma * m.sigma);
            m.initial_shift = -direction * 2.0 * m.xi / m.sigma;
            break;
        case ModelKind::ThreeHalves:
            m.q_prime = -direction * 2.0 / (m.sigma * m.sigma * std::sqrt(m.xi));
            m.initial_shift = direction * 2.0 * m.xi / m.sigma;
            break;
        default: break;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Ensemble accessors

Vector PathEnsemble::terminal_state(std::size_t i) const {
    return Eigen::Map<const Vector>(terminal.data() + i * dim, dim);
}

Vector PathEnsemble::bel_weight(std::size_t i) const {
    return Eigen::Map<const Vector>(bel.data() + i * dim, dim);
}

Vector PathEnsemble::vega_state(std::size_t i) const {
    return Eigen::Map<const Vector>(vega.data() + i * dim, dim);
}

// ---------------------------------------------------------------------------
// Path engine

namespace {

// Positive semidefinite Cholesky: columns with a vanishing pivot are dropped.
Matrix psd_cholesky(const Matrix& s) {
    const Eigen::Index n = s.rows();
    Matrix l = Matrix::Zero(n, n);
    const double scale = std::max(s.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    for (Eigen::Index j = 0; j < n; ++j) {
        double piv = s(j, j) - l.row(j).head(j).squaredNorm();
        if (piv <= 1e-14 * scale) continue;
        piv = std::sqrt(piv);
        l(j, j) = piv;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            l(i, j) = (s(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / piv;
        }
    }
    return l;
}

// 20-point Gauss-Legendre rule on [0, 1].
struct UnitRule {
    std::vector<double> nodes, weights;
    UnitRule() {
        const auto& a = boost::math::quadrature::gauss<double, 20>::abscissa();
        const auto& w = boost::math::quadrature::gauss<double, 20>::weights();
        for (std::size_t k = 0; k < a.size(); ++k) {
            nodes.push_back(0.5 * (1.0 - a[k]));
            weights.push_back(0.5 * w[k]);
            nodes.push_back(0.5 * (1.0 + a[k]));
            weights.push_back(0.5 * w[k]);
        }
    }
};

const UnitRule& unit_rule() {
    static const UnitRule rule;
    return rule;
}

// Exact one-step transition of dX = (b + C X) dt + sigma dB jointly with the
// increment dB, the forced variation int e^{C(h-s)} sigma_bar dB_s and the
// weight int e^{C^T s} sigma^{-T} dB_s used by the delta estimator.
struct OuStep {
    Matrix phi;
    Vector shift;
    Matrix chol;
    int blocks = 2;
};

OuStep ou_step(const Matrix& c, const Vector& b, const Matrix& sigma, const Matrix* sigma_bar, bool bel_block,
               double h) {
    const Eigen::Index d = c.rows();
    OuStep out;
    out.phi = (c * h).exp();
    out.blocks = 2 + (sigma_bar ? 1 : 0) + (bel_block ? 1 : 0);
    const Eigen::Index k = d * out.blocks;
    Matrix cov = Matrix::Zero(k, k);
    Matrix integral = Matrix::Zero(d, d);
    Matrix sigma_inv_t;
    if (bel_block) sigma_inv_t = sigma.inverse().transpose();
    const UnitRule& rule = unit_rule();
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double s = rule.nodes[q] * h;
        const double w = rule.weights[q] * h;
        const Matrix e_back = (c * (h - s)).exp();
        integral += w * (c * s).exp();
        Matrix g(k, d);
        g.topRows(d) = Matrix::Identity(d, d);
        g.middleRows(d, d) = e_back * sigma;
        Eigen::Index row = 2 * d;
        if (sigma_bar) {
            g.middleRows(row, d) = e_back * (*sigma_bar);
            row += d;
        }
        if (bel_block) g.middleRows(row, d) = (c.transpose() * s).exp() * sigma_inv_t;
        cov += w * g * g.transpose();
    }
    out.shift = integral * b;
    out.chol = psd_cholesky(0.5 * (cov + cov.transpose()));
    return out;
}

void noncentral_guard(const McConfig& mc, const char* what) {
    if (mc.antithetic) {
        raise(ErrorKind::SchemeModelMismatch, std::string(what) + " samples are not antithetic-compatible");
    }
}

// Exact CIR transition for dr = (theta - a r) dt + sigma sqrt(r) dW.
double exact_cir(double r, double theta, double a, double sigma, double h, PathRng& rng) {
    const double e = std::exp(-a * h);
    const double c = a == 0.0 ? 0.25 * sigma * sigma * h : sigma * sigma * (1.0 - e) / (4.0 * a);
    const double df = 4.0 * theta / (sigma * sigma);
    const double nc = std::max(r, 0.0) * e / c;
    double shape = 0.5 * df;
    if (nc > 0.0) {
        std::poisson_distribution<long> pois(0.5 * nc);
        shape += static_cast<double>(pois(rng));
    }
    std::gamma_distribution<double> gam(shape, 1.0);
    return c * 2.0 * gam(rng);
}

[[noreturn]] void blowup(std::size_t path, int step) {
    raise(ErrorKind::NumericalBlowup,
          "non-finite state on path " + std::to_string(path) + " at step " + std::to_string(step));
}

[[noreturn]] void singular(std::size_t path, int step) {
    raise(ErrorKind::SingularDiffusion,
          "state left the interior on path " + std::to_string(path) + " at step " + std::to_string(step));
}

class Engine {
public:
    Engine(const ValidatedModel& model, const GridSpec& grid, const McConfig& mc, const Accumulators& acc)
        : model_(model), grid_(grid), mc_(mc), acc_(acc), d_(model.dim()), h_(grid.dt()) {
        needs_increments_ = static_cast<bool>(acc.score) || acc.bel || acc.variation || acc.vega_direction;
        scheme_ = resolve_scheme(mc, model.kind(), needs_increments_);
        check_scheme();
        if (needs_increments_ && !scheme_has_increments(scheme_)) {
            raise(ErrorKind::SchemeModelMismatch,
                  std::string(scheme_name(scheme_)) + " does not expose Brownian increments");
        }
        if (acc.vega_direction) {
            if (model.kind() != ModelKind::QTSM) {
                raise(ErrorKind::UnsupportedModel, "forced variation is available for QTSM only");
            }
            if (acc.vega_direction->rows() != d_ || acc.vega_direction->cols() != d_) {
                raise(ErrorKind::InvalidParameter, "vega direction must be d x d");
            }
        }
        if (d_ == 1 && model.kind() != ModelKind::QTSM) lmap_ = lamperti(model, 1.0);
        prepare_qtsm();
        if (model.kind() == ModelKind::ThreeHalves) {
            const auto& p = model.params<ThreeHalvesParams>();
            rate0_ = p.r * p.alpha * (p.leverage - 1.0);
            rate1_ = 0.5 * p.alpha * p.leverage * (p.leverage - 1.0) * p.sigma * p.sigma;
        }
    }

    void run(std::size_t path, PathEnsemble& out) const;
    Scheme scheme() const { return scheme_; }

private:
    void check_scheme() const {
        const Scheme s = scheme_;
        bool ok = false;
        switch (model_.kind()) {
            case ModelKind::GBM: ok = s == Scheme::EulerMaruyama || s == Scheme::ExactGBM || s == Scheme::LampertiImplicit; break;
            case ModelKind::CIR:
            case ModelKind::ThreeHalves:
                ok = s == Scheme::ExactCIR || s == Scheme::FullTruncationEuler || s == Scheme::LampertiImplicit;
                break;
            case ModelKind::Heston: ok = s == Scheme::ExactCIR || s == Scheme::FullTruncationEuler; break;
            case ModelKind::QTSM: ok = s == Scheme::EulerMaruyama || s == Scheme::ExactOU; break;
        }
        if (!ok) {
            raise(ErrorKind::SchemeModelMismatch, std::string(scheme_name(s)) + " cannot simulate " +
                                                      std::string(model_kind_name(model_.kind())));
        }
        if (s == Scheme::ExactCIR) noncentral_guard(mc_, "noncentral chi-square");
    }

    void prepare_qtsm() {
        if (model_.kind() != ModelKind::QTSM) return;
        const auto& p = model_.params<QtsmParams>();
        const Matrix* sb = acc_.vega_direction ? &*acc_.vega_direction : nullptr;
        if (scheme_ == Scheme::ExactOU) {
            ou_ = ou_step(p.B, p.b, p.sigma, sb, acc_.bel, h_);
            step_map_ = ou_.phi;
        } else {
            step_map_ = Matrix::Identity(d_, d_) + h_ * p.B;
            if (acc_.bel) sigma_inv_ = p.sigma.inverse();
        }
        if (acc_.bel) {
            // Y_{t_i} = step_map^i is deterministic, so the weights are shared by all paths.
            bel_weights_.reserve(grid_.n_steps);
            Matrix y = Matrix::Identity(d_, d_);
            for (int i = 0; i < grid_.n_steps; ++i) {
                if (scheme_ == Scheme::ExactOU) {
                    bel_weights_.push_back(y.transpose());
                } else {
                    bel_weights_.push_back((sigma_inv_ * y).transpose());
                }
                y = step_map_ * y;
            }
        }
        variation_ = Matrix::Identity(d_, d_);
        for (int i = 0; i < grid_.n_steps; ++i) variation_ = step_map_ * variation_;
    }

    double rate(const Vector& x) const {
        switch (model_.kind()) {
            case ModelKind::GBM: return model_.params<GbmParams>().r;
            case ModelKind::CIR: return std::max(x(0), 0.0);
            case ModelKind::Heston: return 0.0;
            case ModelKind::ThreeHalves: return rate0_ + rate1_ * x(0);
            case ModelKind::QTSM: return short_rate(model_, x);
        }
        return 0.0;
    }

    const ValidatedModel& model_;
    GridSpec grid_;
    McConfig mc_;
    const Accumulators& acc_;
    Scheme scheme_ = Scheme::EulerMaruyama;
    int d_;
    double h_;
    bool needs_increments_ = false;
    LampertiMap lmap_;
    OuStep ou_;
    Matrix step_map_, sigma_inv_, variation_;
    std::vector<Matrix> bel_weights_;
    double rate0_ = 0.0, rate1_ = 0.0;
};

void Engine::run(std::size_t path, PathEnsemble& out) const {
    const std::uint64_t stream = mc_.antithetic ? path / 2 : path;
    PathRng rng(mc_.seed, stream, mc_.antithetic && (path % 2 == 1));
    const int n = grid_.n_steps;
    const double h = h_;
    const double sq = std::sqrt(h);
    const ModelKind kind = model_.kind();
    const Scheme scheme = scheme_;

    Vector x = model_.initial_state();
    Vector db = Vector::Zero(d_);
    Vector bel = Vector::Zero(d_);
    Vector z = Vector::Zero(d_);
    Matrix y_heston;
    if (kind == ModelKind::Heston && (acc_.bel || acc_.variation)) y_heston = Matrix::Identity(2, 2);

    // One-dimensional models carry the unit-diffusion coordinate and the
    // derivative of its flow.
    double u = d_ == 1 ? lmap_.to_u(x(0)) : 0.0;
    double dy_log = 0.0, dy_prod = 1.0;
    double dprime_prev = d_ == 1 ? lmap_.drift_derivative(u) : 0.0;
    const double sigma_xi = d_ == 1 ? lmap_.diffusion(x(0)) : 1.0;
    // Reciprocal state for the 3/2 model.
    double recip = kind == ModelKind::ThreeHalves ? 1.0 / x(0) : 0.0;

    double disc = 0.0, score = 0.0, tint = 0.0;
    double r_prev = acc_.discount ? rate(x) : 0.0;
    double g_prev = acc_.time_integrand ? acc_.time_integrand(x) : 0.0;

    double* rec = nullptr;
    if (acc_.record_paths) {
        rec = out.paths.data() + path * static_cast<std::size_t>(n + 1) * d_;
        for (int k = 0; k < d_; ++k) rec[k] = x(k);
    }

    Vector noise;
    for (int i = 0; i < n; ++i) {
        Vector kbar;
        if (acc_.score) kbar = acc_.score(x);
        Vector bel_left;
        if (acc_.bel) {
            if (d_ == 1) {
                const double yu = scheme == Scheme::LampertiImplicit ? dy_prod : std::exp(dy_log);
                bel_left = Vector::Constant(1, yu / sigma_xi);
            }
        }
        Matrix heston_left;
        if (kind == ModelKind::Heston && y_heston.size()) heston_left = y_heston;
        const Vector x_left = x;

        switch (kind) {
            case ModelKind::GBM: {
                const auto& p = model_.params<GbmParams>();
                db(0) = sq * rng.normal();
                if (scheme == Scheme::EulerMaruyama) {
                    x(0) += p.mu * x(0) * h + p.sigma * x(0) * db(0);
                } else {
                    x(0) *= std::exp((p.mu - 0.5 * p.sigma * p.sigma) * h + p.sigma * db(0));
                }
                break;
            }
            case ModelKind::CIR: {
                const auto& p = model_.params<CirParams>();
                if (scheme == Scheme::ExactCIR) {
                    x(0) = exact_cir(x(0), p.theta, p.a, p.sigma, h, rng);
                } else if (scheme == Scheme::LampertiImplicit) {
                    db(0) = sq * rng.normal();
                    u = lmap_.implicit_step(u, db(0), h);
                    dy_prod /= 1.0 - lmap_.drift_derivative(u) * h;
                    x(0) = lmap_.from_u(u);
                } else {
                    db(0) = sq * rng.normal();
                    const double xp = std::max(x(0), 0.0);
                    x(0) += (p.theta - p.a * xp) * h + p.sigma * std::sqrt(xp) * db(0);
                    if (needs_increments_ && x(0) <= 0.0) singular(path, i + 1);
                }
                break;
            }
            case ModelKind::ThreeHalves: {
                const auto& p = model_.params<ThreeHalvesParams>();
                // R = 1/X is CIR with reversion theta, level a + sigma^2 and noise -dB.
                const double theta_r = p.a + p.sigma * p.sigma;
                if (scheme == Scheme::ExactCIR) {
                    recip = exact_cir(recip, theta_r, p.theta, p.sigma, h, rng);
                    if (!(recip > 0.0)) singular(path, i + 1);
                    x(0) = 1.0 / recip;
                } else if (scheme == Scheme::LampertiImplicit) {
                    db(0) = sq * rng.normal();
                    u = lmap_.implicit_step(u, -db(0), h);
                    dy_prod /= 1.0 - lmap_.drift_derivative(u) * h;
                    x(0) = lmap_.from_u(u);
                } else {
                    db(0) = sq * rng.normal();
                    const double rp = std::max(recip, 0.0);
                    recip += (theta_r - p.theta * rp) * h - p.sigma * std::sqrt(rp) * db(0);
                    if (!(recip > 0.0)) singular(path, i + 1);
                    x(0) = 1.0 / recip;
                }
                break;
            }
            case ModelKind::Heston: {
                const auto& p = model_.params<HestonParams>();
                const double v0 = x(1);
                const double ell = p.variance_loading;
                if (scheme == Scheme::ExactCIR) {
                    const double v1 = exact_cir(v0, p.gamma, p.beta, p.delta, h, rng);
                    const double vbar = 0.5 * (v0 + v1);
                    const double rho2 = std::sqrt(std::max(1.0 - p.rho * p.rho, 0.0));
                    const double dlog = p.mu * h + (ell - 0.5) * vbar * h +
                                        (p.rho / p.delta) * (v1 - v0 - p.gamma * h + p.beta * vbar * h) +
                                        rho2 * std::sqrt(vbar * h) * rng.normal();
                    x(0) *= std::exp(dlog);
                    x(1) = v1;
                } else {
                    db(0) = sq * rng.normal();
                    db(1) = sq * rng.normal();
                    const double vp = std::max(v0, 0.0);
                    const double sv = std::sqrt(vp);
                    const double rho2 = std::sqrt(std::max(1.0 - p.rho * p.rho, 0.0));
                    x(0) *= std::exp((p.mu + (ell - 0.5) * vp) * h + sv * db(0));
                    x(1) += (p.gamma - p.beta * vp) * h + p.delta * sv * (p.rho * db(0) + rho2 * db(1));
                    if (needs_increments_ && x(1) <= 0.0) singular(path, i + 1);
                }
                break;
            }
            case ModelKind::QTSM: {
                const auto& p = model_.params<QtsmParams>();
                if (scheme == Scheme::ExactOU) {
                    const Eigen::Index k = ou_.chol.rows();
                    noise.resize(k);
                    for (Eigen::Index j = 0; j < k; ++j) noise(j) = rng.normal();
                    const Vector w = ou_.chol * noise;
                    db = w.head(d_);
                    x = ou_.phi * x + ou_.shift + w.segment(d_, d_);
                    Eigen::Index row = 2 * d_;
                    if (acc_.vega_direction) {
                        z = ou_.phi * z + w.segment(row, d_);
                        row += d_;
                    }
                    if (acc_.bel) bel += bel_weights_[i] * w.segment(row, d_);
                } else {
                    for (int j = 0; j < d_; ++j) db(j) = sq * rng.normal();
                    if (acc_.vega_direction) z += h * (p.B * z) + (*acc_.vega_direction) * db;
                    x += (p.b + p.B * x) * h + p.sigma * db;
                    if (acc_.bel) bel += bel_weights_[i] * db;
                }
                break;
            }
        }

        for (int k = 0; k < d_; ++k) {
            if (!std::isfinite(x(k))) blowup(path, i + 1);
        }

        if (acc_.score) score += kbar.dot(db);
        if (acc_.bel && d_ == 1) bel += bel_left * db(0);
        if (kind == ModelKind::Heston && heston_left.size()) {
            const auto& p = model_.params<HestonParams>();
            const Matrix s = diffusion(model_, x_left);
            if (acc_.bel) bel += s.triangularView<Eigen::Lower>().solve(heston_left).transpose() * db;
            const double v = x_left(1), xs = x_left(0);
            const double sv = std::sqrt(v);
            const double rho2 = std::sqrt(std::max(1.0 - p.rho * p.rho, 0.0));
            Matrix bp(2, 2), s1(2, 2), s2(2, 2);
            bp << p.mu + p.variance_loading * v, p.variance_loading * xs, 0.0, -p.beta;
            s1 << sv, xs / (2.0 * sv), 0.0, p.rho * p.delta / (2.0 * sv);
            s2 << 0.0, 0.0, 0.0, rho2 * p.delta / (2.0 * sv);
            y_heston = heston_left + bp * heston_left * h + s1 * heston_left * db(0) + s2 * heston_left * db(1);
        }

        if (d_ == 1 && (acc_.bel || acc_.variation)) {
            if (scheme != Scheme::LampertiImplicit) u = lmap_.to_u(x(0));
            const double dprime = lmap_.drift_derivative(u);
            if (scheme != Scheme::LampertiImplicit) dy_log += 0.5 * h * (dprime_prev + dprime);
            dprime_prev = dprime;
        }

        if (acc_.discount) {
            const double r_new = rate(x);
            disc += 0.5 * h * (r_prev + r_new);
            r_prev = r_new;
        }
        if (acc_.time_integrand) {
            const double g_new = acc_.time_integrand(x);
            tint += 0.5 * h * (g_prev + g_new);
            g_prev = g_new;
        }
        if (rec) {
            for (int k = 0; k < d_; ++k) rec[static_cast<std::size_t>(i + 1) * d_ + k] = x(k);
        }
    }

    for (int k = 0; k < d_; ++k) out.terminal[path * d_ + k] = x(k);
    if (acc_.discount) out.discount[path] = disc;
    if (acc_.score) {
        if (!std::isfinite(score)) blowup(path, n);
        out.score[path] = score;
    }
    if (acc_.time_integrand) out.time_integral[path] = tint;
    if (acc_.bel) {
        if (!bel.allFinite()) blowup(path, n);
        for (int k = 0; k < d_; ++k) out.bel[path * d_ + k] = bel(k);
    }
    if (acc_.vega_direction) {
        for (int k = 0; k < d_; ++k) out.vega[path * d_ + k] = z(k);
    }
    if (acc_.variation) {
        Matrix y;
        if (d_ == 1) {
            const double yu = scheme == Scheme::LampertiImplicit ? dy_prod : std::exp(dy_log);
            y = Matrix::Constant(1, 1, yu * lmap_.diffusion(x(0)) / sigma_xi);
        } else if (kind == ModelKind::Heston) {
            y = y_heston;
        } else {
            y = variation_;
        }
        for (int r = 0; r < d_; ++r) {
            for (int c = 0; c < d_; ++c) out.variation[(path * d_ + r) * d_ + c] = y(r, c);
        }
    }
}

}  // namespace

PathEnsemble simulate(const ValidatedModel& model, const GridSpec& grid, const McConfig& mc, const Accumulators& acc) {
    if (mc.n_paths == 0) raise(ErrorKind::InvalidParameter, "n_paths must be positive");
    if (grid.n_steps <= 0 || !(grid.T > 0.0)) raise(ErrorKind::InvalidParameter, "grid needs T > 0 and n_steps > 0");
    const Engine engine(model, grid, mc, acc);

    PathEnsemble out;
    const std::size_t n = mc.n_paths;
    const int d = model.dim();
    out.n_paths = n;
    out.dim = d;
    out.n_steps = grid.n_steps;
    out.dt = grid.dt();
    out.scheme = engine.scheme();
    out.antithetic = mc.antithetic;
    out.terminal.assign(n * d, 0.0);
    if (acc.discount) out.discount.assign(n, 0.0);
    if (acc.score) out.score.assign(n, 0.0);
    if (acc.bel) out.bel.assign(n * d, 0.0);
    if (acc.variation) out.variation.assign(n * d * d, 0.0);
    if (acc.vega_direction) out.vega.assign(n * d, 0.0);
    if (acc.time_integrand) out.time_integral.assign(n, 0.0);
    if (acc.record_paths) out.paths.assign(n * static_cast<std::size_t>(grid.n_steps + 1) * d, 0.0);

    unsigned workers = mc.threads > 0 ? static_cast<unsigned>(mc.threads) : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::min<std::size_t>(n, 1024))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) engine.run(i, out);
        return out;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i) engine.run(i, out);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::vector<double> first_variation_vega(const ValidatedModel& model_under_p, const Matrix& sigma_bar,
                                         const GridSpec& grid, const McConfig& mc) {
    if (model_under_p.measure() != Measure::P) {
        raise(ErrorKind::InvalidParameter, "first_variation_vega expects transformed dynamics");
    }
    if (model_under_p.kind() != ModelKind::QTSM) {
        raise(ErrorKind::UnsupportedModel, "forced variation is available for QTSM only");
    }
    Accumulators acc;
    acc.vega_direction = sigma_bar;
    return simulate(model_under_p, grid, mc, acc).vega;
}

}  // namespace longgreeks
