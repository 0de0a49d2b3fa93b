#pragma once

#include "gridtree/types.hpp"

#include <cstdint>
#include <vector>

namespace gridtree {

/// Per-slot embedding (|v_O[n]|, lambda * q_O[n]); rows are time slots.
RealMatrix embed(const RealMatrix& v_mag, const RealMatrix& q_dev, double lambda);

/// Weight that equalizes the total variance of the two embedding blocks.
double auto_lambda(const RealMatrix& v_mag, const RealMatrix& q_dev);

struct Clustering {
    int k = 0;
    RealMatrix centroids;         // k x d
    std::vector<int> assignment;  // per-sample cluster index
    double inertia = 0.0;
    std::vector<double> inertia_history;  // per Lloyd iteration
    int reseed_events = 0;
};

/// Lloyd's iterations with greedy farthest-point seeding from a seeded RNG;
/// deterministic for a given seed. An emptied cluster is reseeded at the
/// sample farthest from its centroid.
Clustering kmeans(const RealMatrix& points, int k, std::uint64_t seed,
                  int max_iter = 100);

/// Sample indices of the cluster nearest to the query point
/// (ties break toward the lowest centroid index).
std::vector<int> select_cluster(const Clustering& clustering,
                                const RealVector& query);

/// Smallest cluster usable for impedance estimation.
inline int min_cluster_size(int n_observed) {
    return std::max(50, 2 * n_observed);
}

}  // namespace gridtree
