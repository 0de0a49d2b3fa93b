#pragma once

#include "gridtree/impedance.hpp"
#include "gridtree/types.hpp"

#include <string>
#include <vector>

namespace gridtree {

enum class Scalarization { Modulus, RealPart };

/// Thresholds for the relaxed grouping tests. Negative eps values select
/// the default 0.1 * median(s(d)) / |O| rule. A machine-precision slack
/// proportional to the distance scale is always added, so eps = 0 means
/// "exact distances".
struct RGConfig {
    double eps1 = -1.0;
    double eps2 = -1.0;
    Scalarization scalarization = Scalarization::Modulus;
    bool average_reference_child = false;
};

enum class PairClass { IParentOfJ, JParentOfI, Siblings, Unrelated };

struct LatentNode {
    int id = 0;
    bool hidden = false;

    friend bool operator==(const LatentNode&, const LatentNode&) = default;
    friend auto operator<=>(const LatentNode& a, const LatentNode& b) {
        if (a.hidden != b.hidden) return a.hidden <=> b.hidden;
        return a.id <=> b.id;
    }
    std::string label() const {
        return hidden ? "h" + std::to_string(id) : std::to_string(id);
    }
};

struct LatentEdge {
    LatentNode u;
    LatentNode v;
    Complex distance;
};

/// Reconstructed unrooted tree over the observed nodes plus introduced
/// hidden nodes h1, h2, ... with estimated edge distances.
struct LatentTree {
    std::vector<LatentNode> nodes;
    std::vector<LatentEdge> edges;
    DistanceMode mode = DistanceMode::Complex;
};

struct RGIterationRecord {
    std::vector<std::string> active;
    std::vector<std::vector<std::string>> groups;   // non-singleton partitions
    std::vector<std::string> group_parents;         // parent label or "" (new hidden)
    std::vector<std::string> singletons;
};

struct RGTrace {
    std::vector<RGIterationRecord> iterations;
    std::vector<std::string> warnings;
};

/// Phi statistic d_ik - d_jk for distinct active nodes.
Complex phi(const DistanceMatrix& d, int i, int j, int k);

/// Pair classification from the grouping tests: j is i's parent when
/// Phi_ijk stays at d_ij for every witness k, siblings when the Phi spread
/// collapses and no parent test fired.
PairClass classify_pair(const DistanceMatrix& d, int i, int j,
                        const RGConfig& cfg);

/// Distance from child i to a newly introduced hidden parent:
/// d_ih = (d_ij + Phi_ijk) / 2.
Complex hidden_child_distance(Complex d_ij, Complex phi_ijk);

/// Distance from a new hidden node to a node p that was active in the
/// previous iteration: d_hp = d_ip - d_ih, with i a child of h.
Complex hidden_other_distance(Complex d_ip, Complex d_ih);

/// Distance between two newly introduced hidden nodes via reference
/// children i of h and k of p: d_hp = d_ik - d_ih - d_pk.
Complex hidden_other_distance(Complex d_ik, Complex d_ih, Complex d_pk);

/// Recursive Grouping over a complete distance matrix: repeatedly classify
/// the active pairs, attach detected parents or introduce hidden nodes per
/// parentless group, recompute hidden distances, and stop at <= 2 active
/// nodes (joining the final pair with an edge).
LatentTree recursive_grouping(const DistanceMatrix& d, const RGConfig& cfg = {},
                              RGTrace* trace = nullptr);

std::string latent_tree_to_json(const LatentTree& t);
LatentTree latent_tree_from_json(const std::string& text);
void save_latent_tree(const LatentTree& t, const std::string& path);
LatentTree load_latent_tree(const std::string& path);

/// Graphviz export (observed nodes as boxes, hidden as circles).
std::string to_dot(const LatentTree& t);

}  // namespace gridtree
