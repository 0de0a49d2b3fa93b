#pragma once

#include "gridtree/synth_data.hpp"
#include "gridtree/types.hpp"

#include <vector>

namespace gridtree {

enum class DistanceMode { Complex, Magnitude };

/// Observed-block impedance estimate. In magnitude mode the entries are
/// nonnegative reals stored in the real part.
struct ZEstimate {
    ComplexMatrix block;
    std::vector<int> bus_order;
    DistanceMode mode = DistanceMode::Complex;
    bool whitened = false;
};

/// Pairwise additive distances over an active node set; symmetric with a
/// zero diagonal. Magnitude-mode entries are nonnegative reals.
struct DistanceMatrix {
    ComplexMatrix d;
    std::vector<int> active;
    DistanceMode mode = DistanceMode::Complex;

    Index size() const { return d.rows(); }
    int index_of(int id) const;
};

/// Inner-product estimator Z(a,b) = i_b^H v_a / (i_b^H i_b) on centered
/// observed measurements. Throws "dead injection column" when some
/// |i_b^H i_b| falls below 1e-15.
ZEstimate estimate_z_plain(const ComplexMatrix& v_obs,
                           const ComplexMatrix& i_obs,
                           std::vector<int> bus_order);

/// Cholesky-whitened estimator: whitens the observed currents, forms
/// K(a,b) = i~_b^H v_a / (i~_b^H i~_b) and maps K back through the
/// whitening factor so that, under observed-only correlations, the
/// observed impedance block is recovered exactly in expectation.
ZEstimate estimate_z_whitened(const ComplexMatrix& v_obs,
                              const ComplexMatrix& i_obs,
                              std::vector<int> bus_order);

/// Magnitude-only estimator |Z|(a,b) = |i_b|^T |v_a| / (|i_b|^T |i_b|) on
/// deviation-phasor magnitudes; exact when deviation angles are frozen.
/// The whitened variant runs the same pipeline through a real-valued
/// whitening of the magnitude Gram matrix.
ZEstimate estimate_z_magnitude(const RealMatrix& v_mag,
                               const RealMatrix& i_mag,
                               std::vector<int> bus_order,
                               bool whitened_variant = false);

/// Pairwise distances from an impedance estimate. Complex plain form uses
/// Z(a,a) + Z(b,b) - 2 Z(a,b); with `symmetrize` the two off-diagonal
/// entries are used separately (the whitened estimate is asymmetric);
/// magnitude mode uses the modulus form.
DistanceMatrix distance_from_z(const ZEstimate& z, bool symmetrize);

/// Equivalent single-phase currents for an unbalanced feeder:
/// i'_k = sum_j lambda(k, j) i_j with the ground return appended as the sum
/// of the wire currents. Output order matches the phase order a, b, c, n.
std::array<ComplexMatrix, kPhaseCount> weighted_currents(
    const FourWireSpec& fw, const std::array<ComplexMatrix, kPhaseCount>& phase_i);

}  // namespace gridtree
