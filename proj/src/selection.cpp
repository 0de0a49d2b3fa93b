#include "gridtree/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace gridtree {

RealMatrix embed(const RealMatrix& v_mag, const RealMatrix& q_dev, double lambda) {
    require(lambda > 0.0, "lambda must be positive");
    require(v_mag.rows() == q_dev.rows() && v_mag.cols() == q_dev.cols(),
            "embedding blocks must agree in shape");
    RealMatrix z(v_mag.rows(), v_mag.cols() + q_dev.cols());
    z << v_mag, lambda * q_dev;
    require(z.allFinite(), "embedding entries must be finite");
    return z;
}

namespace {

double total_variance(const RealMatrix& m) {
    if (m.rows() < 2) return 0.0;
    const RealMatrix centered = m.rowwise() - m.colwise().mean();
    return centered.squaredNorm() / static_cast<double>(m.rows() - 1);
}

}  // namespace

double auto_lambda(const RealMatrix& v_mag, const RealMatrix& q_dev) {
    const double vv = total_variance(v_mag);
    const double qv = total_variance(q_dev);
    if (qv <= 0.0 || vv <= 0.0) return 1.0;
    return std::sqrt(vv / qv);
}

namespace {

Index nearest_centroid(const RealMatrix& centroids, const RealVector& p,
                       double* dist2_out = nullptr) {
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centroids.rows(); ++c) {
        const double d2 = (centroids.row(c).transpose() - p).squaredNorm();
        if (d2 < best_d) {
            best_d = d2;
            best = c;
        }
    }
    if (dist2_out) *dist2_out = best_d;
    return best;
}

}  // namespace

Clustering kmeans(const RealMatrix& points, int k, std::uint64_t seed,
                  int max_iter) {
    const Index n = points.rows();
    require(k >= 1 && k <= n, "k must lie in [1, #points]");

    Clustering cl;
    cl.k = k;
    cl.centroids.resize(k, points.cols());

    // Greedy farthest-point seeding.
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    cl.centroids.row(0) = points.row(pick(rng));
    for (int c = 1; c < k; ++c) {
        Index far = 0;
        double far_d = -1.0;
        for (Index p = 0; p < n; ++p) {
            double d2 = std::numeric_limits<double>::infinity();
            for (int cc = 0; cc < c; ++cc) {
                d2 = std::min(d2, (cl.centroids.row(cc) - points.row(p)).squaredNorm());
            }
            if (d2 > far_d) {
                far_d = d2;
                far = p;
            }
        }
        cl.centroids.row(c) = points.row(far);
    }

    cl.assignment.assign(n, -1);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (Index p = 0; p < n; ++p) {
            double d2;
            const int c = static_cast<int>(
                nearest_centroid(cl.centroids, points.row(p).transpose(), &d2));
            inertia += d2;
            if (c != cl.assignment[p]) {
                cl.assignment[p] = c;
                changed = true;
            }
        }
        cl.inertia_history.push_back(inertia);
        if (!changed && iter > 0) break;

        RealMatrix sums = RealMatrix::Zero(k, points.cols());
        std::vector<int> counts(k, 0);
        for (Index p = 0; p < n; ++p) {
            sums.row(cl.assignment[p]) += points.row(p);
            ++counts[cl.assignment[p]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                cl.centroids.row(c) = sums.row(c) / counts[c];
            } else {
                // Reseed an emptied cluster at the sample farthest from its
                // current centroid.
                Index far = 0;
                double far_d = -1.0;
                for (Index p = 0; p < n; ++p) {
                    double d2;
                    nearest_centroid(cl.centroids, points.row(p).transpose(), &d2);
                    if (d2 > far_d) {
                        far_d = d2;
                        far = p;
                    }
                }
                cl.centroids.row(c) = points.row(far);
                ++cl.reseed_events;
            }
        }
    }

    // Final assignment pass keeps the invariant "each sample at its nearest
    // centroid" after the last centroid update.
    cl.inertia = 0.0;
    for (Index p = 0; p < n; ++p) {
        double d2;
        cl.assignment[p] =
            static_cast<int>(nearest_centroid(cl.centroids, points.row(p).transpose(), &d2));
        cl.inertia += d2;
    }
    return cl;
}

std::vector<int> select_cluster(const Clustering& clustering,
                                const RealVector& query) {
    require(clustering.k >= 1, "clustering not fitted");
    const Index c = nearest_centroid(clustering.centroids, query);
    std::vector<int> members;
    for (std::size_t p = 0; p < clustering.assignment.size(); ++p) {
        if (clustering.assignment[p] == static_cast<int>(c)) {
            members.push_back(static_cast<int>(p));
        }
    }
    return members;
}

}  // namespace gridtree
