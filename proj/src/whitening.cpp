#include "gridtree/whitening.hpp"

namespace gridtree {

ComplexMatrix sample_covariance(const ComplexMatrix& i_obs) {
    const Index n = i_obs.rows();
    const Index p = i_obs.cols();
    if (n < p + 1) throw std::invalid_argument("insufficient samples");
    ComplexMatrix sigma = (i_obs.adjoint() * i_obs) / static_cast<double>(n);
    // Symmetrize away rounding of the Hermitian product.
    sigma = 0.5 * (sigma + sigma.adjoint()).eval();
    return sigma;
}

WhiteningPair cholesky_upper(const ComplexMatrix& sigma) {
    require(sigma.rows() == sigma.cols(), "covariance must be square");
    WhiteningPair pair;
    try {
        pair.m = upper_cholesky_factor<Complex>(sigma);
    } catch (const std::runtime_error&) {
        const double jitter = 1e-10 * sigma.diagonal().real().mean();
        ComplexMatrix regularized = sigma;
        regularized.diagonal().array() += jitter;
        try {
            pair.m = upper_cholesky_factor<Complex>(regularized);
            pair.jitter_applied = true;
        } catch (const std::runtime_error&) {
            throw std::runtime_error("singular covariance");
        }
    }
    pair.w = pair.m.triangularView<Eigen::Upper>().solve(
        ComplexMatrix::Identity(sigma.rows(), sigma.cols()));
    return pair;
}

ComplexMatrix whiten(const ComplexMatrix& i_obs, const ComplexMatrix& w) {
    require(i_obs.cols() == w.rows(), "dimension mismatch");
    return i_obs * w.adjoint();
}

TheoremReport check_theorem1(const ComplexMatrix& sigma_full, Index obs_start,
                             Index obs_count, double tol) {
    const Index l = sigma_full.rows();
    require(obs_count >= 1 && obs_start >= 0, "empty observed range");
    if (obs_start + obs_count != l) {
        throw std::invalid_argument("ordering violates Theorem 1 premise");
    }
    const ComplexMatrix m_full = cholesky_upper(sigma_full).m;
    const ComplexMatrix m_block =
        cholesky_upper(sigma_full.bottomRightCorner(obs_count, obs_count)).m;
    TheoremReport report;
    report.deviation = (m_full.bottomRightCorner(obs_count, obs_count) - m_block)
                           .cwiseAbs()
                           .maxCoeff();
    report.pass = report.deviation <= tol;
    return report;
}

TheoremReport check_theorem2(const ComplexMatrix& sigma_full, Index obs_count,
                             double tol) {
    const Index l = sigma_full.rows();
    require(obs_count >= 1 && obs_count < l, "observed count out of range");
    const Index hidden = l - obs_count;
    const ComplexMatrix m_full = cholesky_upper(sigma_full).m;
    TheoremReport report;
    report.deviation = m_full.topRightCorner(hidden, obs_count).norm();
    report.pass = report.deviation <= tol;
    return report;
}

}  // namespace gridtree
