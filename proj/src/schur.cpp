#include "longgreeks/schur.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace longgreeks {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Applies the orthogonal m x m transform Q to rows and columns k..k+m-1.
void apply_similarity(Eigen::MatrixXd& T, Eigen::MatrixXd& U, int k, const Eigen::MatrixXd& Q) {
    const int n = static_cast<int>(T.rows());
    const int m = static_cast<int>(Q.rows());
    T.block(k, 0, m, n) = Q.transpose() * T.block(k, 0, m, n);
    T.block(0, k, n, m) = T.block(0, k, n, m) * Q;
    U.block(0, k, n, m) = U.block(0, k, n, m) * Q;
}

// Splits a 2x2 block with real eigenvalues into two 1x1 blocks.
void split_real_pair(Eigen::MatrixXd& T, Eigen::MatrixXd& U, int k) {
    const double a = T(k, k), b = T(k, k + 1), c = T(k + 1, k), d = T(k + 1, k + 1);
    const double half_tr = 0.5 * (a + d);
    const double disc = 0.25 * (a - d) * (a - d) + b * c;
    const double lam = half_tr + std::copysign(std::sqrt(disc), half_tr);
    // Eigenvector for lam: pick the better conditioned of the two row equations.
    double x0, x1;
    if (std::abs(lam - a) + std::abs(b) >= std::abs(c) + std::abs(lam - d)) {
        x0 = b;
        x1 = lam - a;
    } else {
        x0 = lam - d;
        x1 = c;
    }
    const double r = std::hypot(x0, x1);
    if (r == 0.0) return;
    Eigen::Matrix2d Q;
    Q << x0 / r, -x1 / r, x1 / r, x0 / r;
    apply_similarity(T, U, k, Q);
    T(k + 1, k) = 0.0;
}

}  // namespace

std::vector<std::complex<double>> block_eigenvalues(const Eigen::MatrixXd& T, int k, int size) {
    if (size == 1) return {std::complex<double>(T(k, k), 0.0)};
    const double a = T(k, k), b = T(k, k + 1), c = T(k + 1, k), d = T(k + 1, k + 1);
    const double half_tr = 0.5 * (a + d);
    const double disc = 0.25 * (a - d) * (a - d) + b * c;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        return {{half_tr + s, 0.0}, {half_tr - s, 0.0}};
    }
    const double s = std::sqrt(-disc);
    return {{half_tr, s}, {half_tr, -s}};
}

RealSchurForm real_schur(const Eigen::MatrixXd& H) {
    Eigen::RealSchur<Eigen::MatrixXd> rs(H);
    RealSchurForm form{rs.matrixT(), rs.matrixU(), {}};
    const int n = static_cast<int>(H.rows());
    int i = 0;
    while (i < n) {
        if (i + 1 < n && form.T(i + 1, i) != 0.0) {
            const double a = form.T(i, i), b = form.T(i, i + 1), c = form.T(i + 1, i), d = form.T(i + 1, i + 1);
            if (0.25 * (a - d) * (a - d) + b * c >= 0.0) {
                split_real_pair(form.T, form.U, i);
                form.block_sizes.push_back(1);
                i += 1;
                continue;
            }
            form.block_sizes.push_back(2);
            i += 2;
        } else {
            form.block_sizes.push_back(1);
            i += 1;
        }
    }
    // Clean the strictly lower part outside the 2x2 blocks.
    int k = 0;
    for (int s : form.block_sizes) {
        for (int r = k + s; r < n; ++r)
            for (int c = k; c < k + s; ++c) form.T(r, c) = 0.0;
        k += s;
    }
    return form;
}

bool swap_adjacent_blocks(Eigen::MatrixXd& T, Eigen::MatrixXd& U, int k, int p, int q) {
    const int m = p + q;
    const Eigen::MatrixXd A = T.block(k, k, m, m);
    Eigen::MatrixXd Q(m, m);

    if (p == 1 && q == 1) {
        // Givens rotation whose first column is the eigenvector of A for A(1,1).
        const double x0 = A(0, 1), x1 = A(1, 1) - A(0, 0);
        const double r = std::hypot(x0, x1);
        if (r == 0.0) return true;  // equal diagonal, nothing to move
        const double c = x0 / r, s = x1 / r;
        Q << c, -s, s, c;
    } else {
        // Solve T11 X - X T22 = T12 via the Kronecker form, then take the
        // orthogonal factor of [-X; I], which spans the T22 invariant subspace.
        const Eigen::MatrixXd T11 = A.topLeftCorner(p, p);
        const Eigen::MatrixXd T12 = A.topRightCorner(p, q);
        const Eigen::MatrixXd T22 = A.bottomRightCorner(q, q);
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(p * q, p * q);
        for (int j = 0; j < q; ++j) {
            K.block(j * p, j * p, p, p) += T11;
            for (int l = 0; l < q; ++l) K.block(l * p, j * p, p, p) -= T22(j, l) * Eigen::MatrixXd::Identity(p, p);
        }
        const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(T12.data(), p * q);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
        if (lu.rank() < p * q) return false;  // blocks share an eigenvalue
        const Eigen::VectorXd x = lu.solve(rhs);
        const Eigen::MatrixXd X = Eigen::Map<const Eigen::MatrixXd>(x.data(), p, q);
        Eigen::MatrixXd basis(m, q);
        basis.topRows(p) = -X;
        basis.bottomRows(q) = Eigen::MatrixXd::Identity(q, q);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
        Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
    }

    const Eigen::MatrixXd swapped = Q.transpose() * A * Q;
    const double tol = 100.0 * kEps * std::max(1.0, A.norm());
    if (swapped.bottomLeftCorner(p, q).norm() > tol) return false;

    apply_similarity(T, U, k, Q);
    T.block(k + q, k, p, q).setZero();
    return true;
}

int reorder_schur(RealSchurForm& form, const std::function<bool(std::complex<double>)>& select) {
    auto& sizes = form.block_sizes;
    auto start_of = [&](std::size_t j) {
        int s = 0;
        for (std::size_t i = 0; i < j; ++i) s += sizes[i];
        return s;
    };
    std::size_t placed = 0;
    for (std::size_t j = 0; j < sizes.size(); ++j) {
        const int k = start_of(j);
        if (!select(block_eigenvalues(form.T, k, sizes[j]).front())) continue;
        // Bubble block j up to slot `placed`.
        for (std::size_t i = j; i > placed; --i) {
            const int ks = start_of(i - 1);
            const int p = sizes[i - 1], q = sizes[i];
            if (!swap_adjacent_blocks(form.T, form.U, ks, p, q)) return -1;
            std::swap(sizes[i - 1], sizes[i]);
        }
        ++placed;
    }
    return start_of(placed);
}

}  // namespace longgreeks
