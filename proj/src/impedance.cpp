#include "gridtree/impedance.hpp"

#include "gridtree/whitening.hpp"

#include <algorithm>
#include <cmath>

namespace gridtree {

int DistanceMatrix::index_of(int id) const {
    auto it = std::find(active.begin(), active.end(), id);
    require(it != active.end(), "node not in active set");
    return static_cast<int>(it - active.begin());
}

namespace {

/// K(a,b) = i_b^H v_a / (i_b^H i_b) for complex data.
ComplexMatrix inner_product_ratio(const ComplexMatrix& v, const ComplexMatrix& i) {
    require(v.rows() == i.rows() && v.cols() == i.cols(), "dimension mismatch");
    const ComplexMatrix numer = (i.adjoint() * v).transpose();  // (a,b) = i_b^H v_a
    ComplexMatrix z(v.cols(), v.cols());
    for (Index b = 0; b < i.cols(); ++b) {
        const double denom = i.col(b).squaredNorm();
        if (denom < 1e-15) throw std::runtime_error("dead injection column");
        z.col(b) = numer.col(b) / denom;
    }
    return z;
}

RealMatrix inner_product_ratio(const RealMatrix& v, const RealMatrix& i) {
    require(v.rows() == i.rows() && v.cols() == i.cols(), "dimension mismatch");
    const RealMatrix numer = (i.transpose() * v).transpose();
    RealMatrix z(v.cols(), v.cols());
    for (Index b = 0; b < i.cols(); ++b) {
        const double denom = i.col(b).squaredNorm();
        if (denom < 1e-15) throw std::runtime_error("dead injection column");
        z.col(b) = numer.col(b) / denom;
    }
    return z;
}

}  // namespace

ZEstimate estimate_z_plain(const ComplexMatrix& v_obs,
                           const ComplexMatrix& i_obs,
                           std::vector<int> bus_order) {
    ZEstimate est;
    est.block = inner_product_ratio(v_obs, i_obs);
    est.bus_order = std::move(bus_order);
    return est;
}

ZEstimate estimate_z_whitened(const ComplexMatrix& v_obs,
                              const ComplexMatrix& i_obs,
                              std::vector<int> bus_order) {
    const ComplexMatrix sigma = sample_covariance(i_obs);
    const WhiteningPair pair = cholesky_upper(sigma);
    const ComplexMatrix i_white = whiten(i_obs, pair.w);
    const ComplexMatrix k = inner_product_ratio(v_obs, i_white);
    ZEstimate est;
    // With sigma = (1/N) I^H I and the data-side transform I W^H, the
    // population identity is K = Z_O conj(M_O); undo with conj(W_O).
    est.block = k * pair.w.conjugate();
    est.bus_order = std::move(bus_order);
    est.whitened = true;
    return est;
}

ZEstimate estimate_z_magnitude(const RealMatrix& v_mag,
                               const RealMatrix& i_mag,
                               std::vector<int> bus_order,
                               bool whitened_variant) {
    require((i_mag.array() >= 0.0).all() && (v_mag.array() >= 0.0).all(),
            "magnitude data must be nonnegative");
    ZEstimate est;
    est.mode = DistanceMode::Magnitude;
    est.bus_order = std::move(bus_order);
    if (!whitened_variant) {
        est.block = inner_product_ratio(v_mag, i_mag).cast<Complex>();
        return est;
    }
    // |Z| ~ |K| |W| computed from magnitude data: whiten the magnitude
    // columns through the real Gram factor, then take elementwise moduli.
    const Index n = i_mag.rows();
    RealMatrix gram = (i_mag.transpose() * i_mag) / static_cast<double>(n);
    gram = 0.5 * (gram + gram.transpose()).eval();
    RealMatrix m = upper_cholesky_factor<double>(gram);
    RealMatrix w = m.triangularView<Eigen::Upper>().solve(
        RealMatrix::Identity(gram.rows(), gram.cols()));
    const RealMatrix i_white = i_mag * w.transpose();
    const RealMatrix k = inner_product_ratio(v_mag, i_white);
    est.block = (k.cwiseAbs() * w.cwiseAbs()).cast<Complex>();
    est.whitened = true;
    return est;
}

DistanceMatrix distance_from_z(const ZEstimate& z, bool symmetrize) {
    const Index m = z.block.rows();
    require(z.block.cols() == m, "impedance block must be square");
    DistanceMatrix dm;
    dm.active = z.bus_order;
    dm.mode = z.mode;
    dm.d = ComplexMatrix::Zero(m, m);
    for (Index a = 0; a < m; ++a) {
        for (Index b = a + 1; b < m; ++b) {
            Complex d;
            if (z.mode == DistanceMode::Magnitude) {
                d = std::abs(z.block(a, a)) + std::abs(z.block(b, b)) -
                    2.0 * std::abs(z.block(a, b));
            } else if (symmetrize) {
                d = z.block(a, a) + z.block(b, b) - z.block(a, b) - z.block(b, a);
            } else {
                d = z.block(a, a) + z.block(b, b) - 2.0 * z.block(a, b);
            }
            dm.d(a, b) = d;
            dm.d(b, a) = d;
        }
    }
    return dm;
}

std::array<ComplexMatrix, kPhaseCount> weighted_currents(
    const FourWireSpec& fw,
    const std::array<ComplexMatrix, kPhaseCount>& phase_i) {
    const auto lambda = fw.lambda();
    for (int k = 0; k < kPhaseCount; ++k) {
        if (fw.phase_present[k] && lambda.row(k).cwiseAbs().sum() == 0.0) {
            throw std::invalid_argument("unusable ratio prior");
        }
    }
    const Index n = phase_i[0].rows();
    const Index cols = phase_i[0].cols();
    for (const auto& m : phase_i) {
        require(m.rows() == n && m.cols() == cols, "phase currents disagree in shape");
    }
    ComplexMatrix ground = ComplexMatrix::Zero(n, cols);
    for (int k = 0; k < kPhaseCount; ++k) {
        if (fw.phase_present[k]) ground += phase_i[k];
    }
    std::array<ComplexMatrix, kPhaseCount> out;
    for (int k = 0; k < kPhaseCount; ++k) {
        out[k] = ComplexMatrix::Zero(n, cols);
        if (!fw.phase_present[k]) continue;
        for (int j = 0; j < kPhaseCount; ++j) {
            if (fw.phase_present[j]) out[k] += lambda(k, j) * phase_i[j];
        }
        out[k] += lambda(k, kPhaseCount) * ground;
    }
    return out;
}

}  // namespace gridtree
