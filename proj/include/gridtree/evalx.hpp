#pragma once

#include "gridtree/impedance.hpp"
#include "gridtree/rg.hpp"
#include "gridtree/topology.hpp"

#include <vector>

namespace gridtree {

/// Prunes hidden leaves and contracts degree-2 hidden nodes (edge
/// distances added), the canonical identifiable form of a latent tree.
LatentTree canonical_form(const LatentTree& t);

/// The identifiable ground truth a reconstruction can be compared to: the
/// slack is demoted to an unobserved node, then the canonical form is taken.
LatentTree reference_tree(const Topology& truth);

struct MatchResult {
    bool exact = false;
    double edge_f1 = 0.0;
    /// Max |recovered - true| over matched edge distances (exact match only).
    double max_edge_distance_error = 0.0;
};

/// Compares a recovered latent tree against the contracted truth using
/// observed-node bipartitions (edge splits), so hidden labels never matter.
MatchResult tree_match(const LatentTree& recovered, const Topology& truth);
MatchResult tree_match(const LatentTree& recovered, const LatentTree& reference);

struct ErrorTable {
    /// Percent errors per pair; NaN marks undefined entries (denominator
    /// magnitude below 1e-12), which are excluded from the aggregates.
    RealMatrix real_pct;
    RealMatrix imag_pct;
    DistanceMode mode = DistanceMode::Complex;
    double mean_real = 0.0;
    double mean_imag = 0.0;
    double max_real = 0.0;
    double max_imag = 0.0;
};

/// Separate relative errors of the real and imaginary distance parts
/// (single column in magnitude mode).
ErrorTable distance_error(const DistanceMatrix& estimated,
                          const DistanceMatrix& truth);

/// Moduli of pairwise complex correlation coefficients, sorted ascending.
/// Pairs touching a constant column are undefined and skipped.
std::vector<double> correlation_cdf(const ComplexMatrix& i_obs);

struct EvalReport {
    bool topology_exact = false;
    double edge_f1 = 0.0;
    ErrorTable distance_errors;
    std::vector<double> correlation_cdf;
    double runtime_ms = 0.0;
};

}  // namespace gridtree
