#pragma once

#include "gridtree/types.hpp"

#include <Eigen/Cholesky>

namespace gridtree {

/// Upper-triangular factor pair for a Hermitian PD covariance:
/// m * m^H = sigma, w = m^{-1}, both upper triangular with positive real
/// diagonals. jitter_applied records the one-shot diagonal regularization.
struct WhiteningPair {
    ComplexMatrix m;
    ComplexMatrix w;
    bool jitter_applied = false;
};

/// Observed-block sample covariance (1/N) I^H I of centered data.
/// Requires N >= columns + 1.
ComplexMatrix sample_covariance(const ComplexMatrix& i_obs);

/// Upper Cholesky factor via order reversal: reverse rows/columns, take the
/// standard lower factor, reverse back. Works for any scalar Eigen supports.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> upper_cholesky_factor(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& sigma) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Mat reversed = sigma.reverse();
    Eigen::LLT<Mat> llt(reversed);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("matrix is not positive definite");
    }
    Mat lower = llt.matrixL();
    return lower.reverse().eval();
}

/// Factors sigma = M M^H with M upper triangular; retries once with a
/// 1e-10 * mean(diag) jitter before reporting "singular covariance".
WhiteningPair cholesky_upper(const ComplexMatrix& sigma);

/// Applies the whitening transform to row-major sample data so the output
/// columns are orthogonal with (1/N) I~^H I~ = identity. With the covariance
/// convention of sample_covariance this is I * W^H.
ComplexMatrix whiten(const ComplexMatrix& i_obs, const ComplexMatrix& w);

struct TheoremReport {
    bool pass = false;
    double deviation = 0.0;
};

/// Trailing-block consistency of the upper Cholesky factor: the factor of
/// the bottom-right observed block equals the corresponding block of the
/// full factor. Observed indices must be the trailing ones.
TheoremReport check_theorem1(const ComplexMatrix& sigma_full, Index obs_start,
                             Index obs_count, double tol = 1e-9);

/// With a zero hidden-observed cross block, the top-right block of the full
/// upper factor vanishes. deviation reports ||M_2||_F.
TheoremReport check_theorem2(const ComplexMatrix& sigma_full, Index obs_count,
                             double tol = 1e-8);

}  // namespace gridtree
