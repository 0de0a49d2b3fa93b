#include "gridtree/evalx.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>

namespace gridtree {

namespace {

using AdjMap = std::map<LatentNode, std::map<LatentNode, Complex>>;

AdjMap adjacency_of(const LatentTree& t) {
    AdjMap adj;
    for (const auto& n : t.nodes) adj[n];
    for (const auto& e : t.edges) {
        adj[e.u][e.v] = e.distance;
        adj[e.v][e.u] = e.distance;
    }
    return adj;
}

LatentTree tree_from_adjacency(const AdjMap& adj, DistanceMode mode) {
    LatentTree t;
    t.mode = mode;
    for (const auto& [n, nb] : adj) t.nodes.push_back(n);
    for (const auto& [u, nb] : adj) {
        for (const auto& [v, dist] : nb) {
            if (u < v) t.edges.push_back({u, v, dist});
        }
    }
    return t;
}

void contract_hidden(AdjMap& adj) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto it = adj.begin(); it != adj.end();) {
            if (!it->first.hidden) {
                ++it;
                continue;
            }
            auto& nb = it->second;
            if (nb.size() == 1) {
                adj[nb.begin()->first].erase(it->first);
                it = adj.erase(it);
                changed = true;
            } else if (nb.size() == 2) {
                auto a = *nb.begin();
                auto b = *std::next(nb.begin());
                adj[a.first].erase(it->first);
                adj[b.first].erase(it->first);
                const Complex sum = a.second + b.second;
                adj[a.first][b.first] = sum;
                adj[b.first][a.first] = sum;
                it = adj.erase(it);
                changed = true;
            } else if (nb.empty()) {
                it = adj.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
    }
}

/// Canonical edge key: the observed-node side not containing the smallest
/// observed id, sorted.
using Split = std::vector<int>;

std::map<Split, Complex> edge_splits(const LatentTree& t) {
    const AdjMap adj = adjacency_of(t);
    std::set<int> observed;
    for (const auto& n : t.nodes) {
        if (!n.hidden) observed.insert(n.id);
    }
    require(!observed.empty(), "tree has no observed nodes");
    const int anchor = *observed.begin();

    std::map<Split, Complex> splits;
    for (const auto& e : t.edges) {
        // Observed nodes on e.v's side when the edge is removed.
        std::set<LatentNode> seen{e.u, e.v};
        std::deque<LatentNode> queue{e.v};
        std::vector<int> side;
        if (!e.v.hidden) side.push_back(e.v.id);
        while (!queue.empty()) {
            LatentNode u = queue.front();
            queue.pop_front();
            for (const auto& [w, dist] : adj.at(u)) {
                if (seen.insert(w).second) {
                    if (!w.hidden) side.push_back(w.id);
                    queue.push_back(w);
                }
            }
        }
        std::sort(side.begin(), side.end());
        if (std::binary_search(side.begin(), side.end(), anchor)) {
            // Complement side.
            std::vector<int> comp;
            for (int id : observed) {
                if (!std::binary_search(side.begin(), side.end(), id)) {
                    comp.push_back(id);
                }
            }
            side = std::move(comp);
        }
        splits[side] = e.distance;
    }
    return splits;
}

}  // namespace

LatentTree canonical_form(const LatentTree& t) {
    AdjMap adj = adjacency_of(t);
    contract_hidden(adj);
    return tree_from_adjacency(adj, t.mode);
}

LatentTree reference_tree(const Topology& truth) {
    LatentTree t;
    int hidden_seq = 0;
    std::map<int, LatentNode> remap;
    for (const auto& n : truth.nodes()) {
        const bool hidden = n.role != NodeRole::Observed;
        remap[n.id] = hidden ? LatentNode{++hidden_seq, true} : LatentNode{n.id, false};
        t.nodes.push_back(remap[n.id]);
    }
    for (const auto& e : truth.edges()) {
        t.edges.push_back({remap[e.i], remap[e.k], e.z});
    }
    return canonical_form(t);
}

MatchResult tree_match(const LatentTree& recovered, const LatentTree& reference) {
    const LatentTree rec = canonical_form(recovered);
    const auto rec_splits = edge_splits(rec);
    const auto ref_splits = edge_splits(reference);

    MatchResult result;
    std::size_t common = 0;
    double max_err = 0.0;
    for (const auto& [split, dist] : rec_splits) {
        auto it = ref_splits.find(split);
        if (it != ref_splits.end()) {
            ++common;
            max_err = std::max(max_err, std::abs(dist - it->second));
        }
    }
    const std::size_t total = rec_splits.size() + ref_splits.size();
    result.edge_f1 = total == 0 ? 1.0 : 2.0 * common / static_cast<double>(total);
    result.exact = common == rec_splits.size() && common == ref_splits.size();
    result.max_edge_distance_error =
        result.exact ? max_err : std::numeric_limits<double>::quiet_NaN();
    return result;
}

MatchResult tree_match(const LatentTree& recovered, const Topology& truth) {
    return tree_match(recovered, reference_tree(truth));
}

ErrorTable distance_error(const DistanceMatrix& estimated,
                          const DistanceMatrix& truth) {
    require(estimated.active == truth.active, "active sets must match");
    const Index m = estimated.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    ErrorTable table;
    table.mode = estimated.mode;
    table.real_pct = RealMatrix::Constant(m, m, nan);
    table.imag_pct = RealMatrix::Constant(m, m, nan);

    double sum_re = 0, sum_im = 0;
    int count_re = 0, count_im = 0;
    for (Index a = 0; a < m; ++a) {
        for (Index b = 0; b < m; ++b) {
            if (a == b) continue;
            const Complex est = estimated.d(a, b);
            const Complex tru = truth.d(a, b);
            if (std::abs(tru.real()) >= 1e-12) {
                const double pct =
                    100.0 * std::abs(est.real() - tru.real()) / std::abs(tru.real());
                table.real_pct(a, b) = pct;
                if (a < b) {
                    sum_re += pct;
                    ++count_re;
                    table.max_real = std::max(table.max_real, pct);
                }
            }
            if (estimated.mode == DistanceMode::Complex &&
                std::abs(tru.imag()) >= 1e-12) {
                const double pct =
                    100.0 * std::abs(est.imag() - tru.imag()) / std::abs(tru.imag());
                table.imag_pct(a, b) = pct;
                if (a < b) {
                    sum_im += pct;
                    ++count_im;
                    table.max_imag = std::max(table.max_imag, pct);
                }
            }
        }
    }
    table.mean_real = count_re ? sum_re / count_re : 0.0;
    table.mean_imag = count_im ? sum_im / count_im : 0.0;
    return table;
}

std::vector<double> correlation_cdf(const ComplexMatrix& i_obs) {
    require(i_obs.cols() >= 2, "needs at least 2 observed columns");
    ComplexMatrix centered = i_obs;
    centered.rowwise() -= i_obs.colwise().mean();
    std::vector<double> rho;
    for (Index a = 0; a < centered.cols(); ++a) {
        for (Index b = a + 1; b < centered.cols(); ++b) {
            const double na = centered.col(a).norm();
            const double nb = centered.col(b).norm();
            if (na < 1e-15 || nb < 1e-15) continue;  // constant column: undefined
            const Complex dot = centered.col(a).dot(centered.col(b));
            rho.push_back(std::abs(dot) / (na * nb));
        }
    }
    std::sort(rho.begin(), rho.end());
    return rho;
}

}  // namespace gridtree
