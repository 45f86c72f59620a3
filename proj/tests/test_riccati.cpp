#include "longgreeks/presets.hpp"
#include "longgreeks/riccati.hpp"
#include "longgreeks/schur.hpp"
#include "reference_values.hpp"
#include "test_util.hpp"

#include <random>

using namespace longgreeks;

namespace {

Matrix random_matrix(std::mt19937_64& gen, int d) {
    std::normal_distribution<double> n01;
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = n01(gen);
    return m;
}

Matrix random_spd(std::mt19937_64& gen, int d) {
    const Matrix m = random_matrix(gen, d);
    return m * m.transpose() + 0.1 * Matrix::Identity(d, d);
}

Matrix random_orthogonal(std::mt19937_64& gen, int d) {
    Eigen::HouseholderQR<Matrix> qr(random_matrix(gen, d));
    return qr.householderQ();
}

CareProblem random_problem(std::mt19937_64& gen, int d) {
    return {random_spd(gen, d), random_matrix(gen, d), random_spd(gen, d)};
}

}  // namespace

TEST(Care, ScalarExample) {
    const CareSolution s = solve_care({Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1), Matrix::Constant(1, 1, 1.0)});
    EXPECT_NEAR(s.V(0, 0), refs::kScalarCareV, 1e-15);
    EXPECT_LT(s.residual_norm, 1e-12);
    EXPECT_TRUE(s.stable);
}

TEST(Care, ScalarClosedForm) {
    for (double a : {0.1, 1.0, 7.0}) {
        for (double b : {-3.0, -0.2, 0.0, 0.5, 4.0}) {
            for (double g : {0.01, 1.0, 20.0}) {
                const double exact = (b + std::sqrt(b * b + 2.0 * a * g)) / (2.0 * a);
                const CareSolution s =
                    solve_care({Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), Matrix::Constant(1, 1, g)});
                EXPECT_NEAR(s.V(0, 0), exact, 1e-14 * std::max(1.0, std::abs(exact))) << a << " " << b << " " << g;
            }
        }
    }
}

TEST(Care, RandomSuiteResidualStabilitySymmetry) {
    std::mt19937_64 gen(2024);
    for (int k = 0; k < 100; ++k) {
        const int d = 1 + k % 5;
        const CareProblem p = random_problem(gen, d);
        const CareSolution s = solve_care(p);
        EXPECT_LT(s.residual_norm, 1e-10 * (1.0 + p.gamma.norm())) << "instance " << k;
        EXPECT_TRUE(s.stable) << "instance " << k;
        EXPECT_LT((s.V - s.V.transpose()).norm(), 1e-10 * (1.0 + s.V.norm()));
        for (Eigen::Index i = 0; i < s.closed_loop_eigenvalues.size(); ++i) {
            EXPECT_LT(s.closed_loop_eigenvalues(i).real(), 0.0);
        }
        // The stabilizing solution is positive definite when Gamma is.
        EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(s.V).eigenvalues().minCoeff(), 0.0);
    }
}

TEST(Care, OrthogonalCovariance) {
    std::mt19937_64 gen(7);
    for (int d = 1; d <= 5; ++d) {
        const CareProblem p = random_problem(gen, d);
        const Matrix Q = random_orthogonal(gen, d);
        const CareProblem rotated{Q.transpose() * p.a * Q, Q.transpose() * p.B * Q, Q.transpose() * p.gamma * Q};
        const Matrix V = solve_care(p).V;
        const Matrix W = solve_care(rotated).V;
        EXPECT_LT((W - Q.transpose() * V * Q).norm(), 1e-9 * (1.0 + V.norm())) << "d = " << d;
    }
}

TEST(Care, CommutingProblemDiagonalizes) {
    // a = alpha I, Gamma = g I and symmetric B share eigenvectors with V, so each
    // eigenvalue of V solves the scalar equation.
    std::mt19937_64 gen(11);
    for (int d = 2; d <= 5; ++d) {
        const Matrix R = random_matrix(gen, d);
        const Matrix B = (0.5 * (R + R.transpose())).eval();
        const double alpha = 0.7, g = 1.3;
        const CareProblem p{alpha * Matrix::Identity(d, d), B, g * Matrix::Identity(d, d)};
        const Eigen::SelfAdjointEigenSolver<Matrix> es(B);
        Vector lam(d);
        for (int i = 0; i < d; ++i) {
            const double b = es.eigenvalues()(i);
            lam(i) = (b + std::sqrt(b * b + 2.0 * alpha * g)) / (2.0 * alpha);
        }
        const Matrix expected = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
        EXPECT_LT((solve_care(p).V - expected).norm(), 1e-12 * (1.0 + expected.norm()));
    }
}

TEST(Care, ResidualFunction) {
    const CareProblem p{Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1), Matrix::Constant(1, 1, 1.0)};
    EXPECT_NEAR(care_residual(p, Matrix::Constant(1, 1, 1.0))(0, 0), 1.0, 1e-15);
}

TEST(Care, QtsmPresetMatchesOracle) {
    const auto in = qtsm_extraction_inputs(std::get<QtsmParams>(presets::qtsm().params));
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) EXPECT_NEAR(in.V(i, j), refs::kQtsmV[2 * i + j], 1e-13);
        EXPECT_NEAR(in.u(i), refs::kQtsmU[i], 1e-13);
    }
    EXPECT_NEAR(in.lambda, refs::kQtsmLambda, 1e-13);
}

TEST(Care, LambdaPrimeOfBetaIsOne) {
    const LambdaDerivative d = lambda_prime_numeric(presets::qtsm(), "beta");
    EXPECT_NEAR(d.value, 1.0, 1e-10);
    EXPECT_NEAR(d.refined, 1.0, 1e-10);
}

TEST(Care, LambdaPrimeOfDriftMatchesOracle) {
    EXPECT_NEAR(-lambda_prime_numeric(presets::qtsm(), "b[0]").refined, refs::kQtsmLimitB0, 1e-8);
}

TEST(Schur, FormReconstructsMatrix) {
    std::mt19937_64 gen(3);
    for (int d : {2, 4, 7, 10}) {
        const Matrix H = random_matrix(gen, d);
        const RealSchurForm f = real_schur(H);
        EXPECT_LT((f.U * f.T * f.U.transpose() - H).norm(), 1e-12 * H.norm());
        EXPECT_LT((f.U.transpose() * f.U - Matrix::Identity(d, d)).norm(), 1e-12);
    }
}

TEST(Schur, ReorderPutsSelectedBlocksFirst) {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 2 + trial % 7;
        const Matrix H = random_matrix(gen, d);
        RealSchurForm f = real_schur(H);
        auto left = [](std::complex<double> z) { return z.real() < 0.0; };
        const int k = reorder_schur(f, left);
        EXPECT_LT((f.U * f.T * f.U.transpose() - H).norm(), 1e-10 * H.norm());
        int row = 0;
        for (int size : f.block_sizes) {
            for (const auto& z : block_eigenvalues(f.T, row, size)) {
                EXPECT_EQ(left(z), row < k) << "trial " << trial;
            }
            row += size;
        }
    }
}

TEST(Schur, SwapPreservesSpectrum) {
    Matrix T(3, 3);
    T << 1.0, 2.0, 3.0, 0.0, 4.0, -5.0, 0.0, 1.0, 4.0;  // 1x1 then a complex 2x2 block
    Matrix U = Matrix::Identity(3, 3);
    const Matrix before = T;
    ASSERT_TRUE(swap_adjacent_blocks(T, U, 0, 1, 2));
    EXPECT_LT((U * T * U.transpose() - before).norm(), 1e-12);
    EXPECT_NEAR(T(2, 2), 1.0, 1e-12);
    EXPECT_NEAR(T(2, 0), 0.0, 1e-14);
    EXPECT_NEAR(T(2, 1), 0.0, 1e-14);
}

TEST(Care, TinyGammaStaysStable) {
    const CareSolution s =
        solve_care({Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1), Matrix::Constant(1, 1, 1e-12)});
    EXPECT_TRUE(s.stable);
    EXPECT_GT(s.V(0, 0), 0.0);
}

TEST(Care, SemidefiniteGammaRejected) {
    EXPECT_LG_ERROR(ErrorKind::ImaginaryAxisEigenvalue,
                    solve_care({Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1), Matrix::Zero(1, 1)}));
}

TEST(Care, ShapeMismatchRejected) {
    EXPECT_LG_ERROR(ErrorKind::InvalidParameter,
                    solve_care({Matrix::Identity(2, 2), Matrix::Zero(1, 1), Matrix::Identity(2, 2)}));
}
