#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <vector>

namespace longgreeks {

// Real Schur form H = U T U^T with T quasi upper triangular, 1x1 blocks for
// real eigenvalues and 2x2 blocks for complex pairs.
struct RealSchurForm {
    Eigen::MatrixXd T;
    Eigen::MatrixXd U;
    std::vector<int> block_sizes;  // diagonal block sizes from the top
};

RealSchurForm real_schur(const Eigen::MatrixXd& H);

// Eigenvalues of the diagonal block starting at row k.
std::vector<std::complex<double>> block_eigenvalues(const Eigen::MatrixXd& T, int k, int size);

// Swaps the adjacent diagonal blocks starting at row k (sizes p then q),
// updating T and U in place. Returns false if the swap would be inaccurate.
bool swap_adjacent_blocks(Eigen::MatrixXd& T, Eigen::MatrixXd& U, int k, int p, int q);

// Reorders the form so every block whose eigenvalues satisfy `select` sits
// above the others. Returns the dimension of the selected leading subspace.
int reorder_schur(RealSchurForm& form, const std::function<bool(std::complex<double>)>& select);

}  // namespace longgreeks
