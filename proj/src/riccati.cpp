#include "longgreeks/riccati.hpp"

#include "longgreeks/errors.hpp"
#include "longgreeks/schur.hpp"

#include <cmath>
#include <sstream>

namespace longgreeks {

namespace {

void check_symmetric(const Matrix& m, const char* name) {
    if ((m - m.transpose()).norm() > 1e-12 * (1.0 + m.norm())) {
        raise(ErrorKind::InvalidParameter, std::string(name) + " must be symmetric");
    }
}

double smallest_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    return eig.eigenvalues()(0);
}

}  // namespace

Matrix care_residual(const CareProblem& p, const Matrix& V) {
    return 2.0 * V * p.a * V - p.B.transpose() * V - V * p.B - p.gamma;
}

CareSolution solve_care(const CareProblem& p) {
    const long d = p.a.rows();
    if (d < 1 || d > 16 || p.a.cols() != d || p.B.rows() != d || p.B.cols() != d || p.gamma.rows() != d ||
        p.gamma.cols() != d) {
        raise(ErrorKind::InvalidParameter, "CARE inputs must be d x d with 1 <= d <= 16");
    }
    if (!p.a.allFinite() || !p.B.allFinite() || !p.gamma.allFinite()) {
        raise(ErrorKind::InvalidParameter, "CARE inputs must be finite");
    }
    check_symmetric(p.a, "a");
    check_symmetric(p.gamma, "Gamma");
    if (!(smallest_eigenvalue(p.a) > 0.0)) raise(ErrorKind::InvalidParameter, "a must be positive definite");
    if (!(smallest_eigenvalue(p.gamma) > 0.0)) {
        raise(ErrorKind::ImaginaryAxisEigenvalue, "Gamma is not positive definite, so the Hamiltonian may "
                                                  "have eigenvalues on the imaginary axis");
    }

    Matrix H(2 * d, 2 * d);
    H << p.B, -2.0 * p.a, -p.gamma, -p.B.transpose();
    const double h_norm = H.norm();

    RealSchurForm form = real_schur(H);
    int k = 0;
    for (int s : form.block_sizes) {
        const double re = block_eigenvalues(form.T, k, s).front().real();
        if (std::abs(re) < 1e-10 * h_norm) {
            std::ostringstream os;
            os << "Hamiltonian eigenvalue with real part " << re << " is on the imaginary axis";
            raise(ErrorKind::ImaginaryAxisEigenvalue, os.str());
        }
        k += s;
    }
    const int n_stable = reorder_schur(form, [](std::complex<double> z) { return z.real() < 0.0; });
    if (n_stable != d) {
        raise(ErrorKind::ImaginaryAxisEigenvalue, "stable invariant subspace has dimension " +
                                                      std::to_string(n_stable) + ", expected " + std::to_string(d));
    }

    const Matrix P11 = form.U.topLeftCorner(d, d);
    const Matrix P21 = form.U.bottomLeftCorner(d, d);
    Eigen::JacobiSVD<Matrix> svd(P11);
    const auto& sv = svd.singularValues();
    if (!(sv(d - 1) > 1e-12 * sv(0))) raise(ErrorKind::SingularP11, "stable subspace is not a graph over the first block");

    // V = P21 P11^{-1}, solved as P11^T V^T = P21^T.
    Matrix V = P11.transpose().fullPivLu().solve(P21.transpose()).transpose();
    V = 0.5 * (V + V.transpose());

    CareSolution out;
    out.V = V;
    out.closed_loop = p.B - 2.0 * p.a * V;
    out.closed_loop_eigenvalues = out.closed_loop.eigenvalues();
    out.residual_norm = care_residual(p, V).norm();
    out.stable = (out.closed_loop_eigenvalues.real().array() < 0.0).all();
    return out;
}

QtsmExtractionInputs qtsm_extraction_inputs(const QtsmParams& q) {
    const Matrix a = q.sigma * q.sigma.transpose();
    QtsmExtractionInputs out;
    out.care = solve_care({a, q.B, q.gamma});
    out.V = out.care.V;
    const Matrix M = 2.0 * out.V * a - q.B.transpose();
    out.u = M.fullPivLu().solve(2.0 * out.V * q.b + q.alpha);
    out.lambda = q.beta - 0.5 * out.u.dot(a * out.u) + (a * out.V).trace() + out.u.dot(q.b);
    return out;
}

LambdaDerivative lambda_prime_numeric(const ModelSpec& model, std::string_view param, double h) {
    if (model.kind() != ModelKind::QTSM) raise(ErrorKind::UnsupportedModel, "lambda_prime_numeric needs a QTSM model");
    const double x = get_param(model, param);
    if (h <= 0.0) h = 1e-5 * (1.0 + std::abs(x));
    auto lam = [&](double value) {
        const auto m = validate(with_param(model, param, value));
        return qtsm_extraction_inputs(m.params<QtsmParams>()).lambda;
    };
    auto central = [&](double step) { return (lam(x + step) - lam(x - step)) / (2.0 * step); };
    const double d1 = central(h), d2 = central(h / 2.0), d4 = central(h / 4.0);

    // The error of a central difference is c h^2, so successive level
    // differences should shrink by about four. Below the rounding floor the
    // ratio carries no information.
    const double floor = 1e-12 * (1.0 + std::abs(lam(x))) / h;
    const double e1 = d1 - d2, e2 = d2 - d4;
    if (std::abs(e2) > floor && std::abs(e1) > floor) {
        const double ratio = e1 / e2;
        if (!(ratio > 0.4 && ratio < 40.0)) {
            std::ostringstream os;
            os << "Richardson levels disagree for " << param << " (ratio " << ratio << ", expected about 4)";
            raise(ErrorKind::StepTooLarge, os.str());
        }
    }
    return {d1, (4.0 * d2 - d1) / 3.0, h};
}

}  // namespace longgreeks
