#pragma once

#include "gridtree/topology.hpp"
#include "gridtree/types.hpp"

namespace gridtree {

/// Full L x L nodal admittance matrix, ordered by ascending node id
/// (slack included): off-diagonal (i,k) = -1/z_ik, diagonal = branch sums.
ComplexMatrix build_admittance(const Topology& t);

/// Removes the slack row/column from a full admittance matrix. Throws
/// "non-invertible reduced admittance" if the result is numerically
/// singular (condition estimate above 1e12).
ComplexMatrix reduce_slack(const ComplexMatrix& y, Index slack_index);
ComplexMatrix reduce_slack(const Topology& t);

/// (L-1) x (L-1) shared-path impedance matrix over bus_order():
/// Z(a,b) = sum of line impedances on the common part of the two paths
/// to the slack. Equals the inverse of the reduced admittance matrix.
ComplexMatrix build_z_paths(const Topology& t);

/// Path impedance between two non-slack nodes:
/// Z(a,a) + Z(b,b) - 2 Z(a,b), i.e. the impedance sum along the tree path.
Complex true_distance(const Topology& t, int a, int b);

}  // namespace gridtree
