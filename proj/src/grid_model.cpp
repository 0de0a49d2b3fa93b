#include "gridtree/grid_model.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <deque>
#include <map>

namespace gridtree {

ComplexMatrix build_admittance(const Topology& t) {
    std::vector<int> order;
    order.reserve(t.node_count());
    for (const auto& n : t.nodes()) order.push_back(n.id);
    std::sort(order.begin(), order.end());
    std::map<int, Index> pos;
    for (Index i = 0; i < static_cast<Index>(order.size()); ++i) pos[order[i]] = i;

    const Index l = static_cast<Index>(order.size());
    ComplexMatrix y = ComplexMatrix::Zero(l, l);
    for (const auto& e : t.edges()) {
        if (std::abs(e.z) == 0.0) throw std::invalid_argument("degenerate edge");
        const Complex w = 1.0 / e.z;
        const Index a = pos[e.i], b = pos[e.k];
        y(a, b) -= w;
        y(b, a) -= w;
        y(a, a) += w;
        y(b, b) += w;
    }
    return y;
}

ComplexMatrix reduce_slack(const ComplexMatrix& y, Index slack_index) {
    require(y.rows() == y.cols(), "admittance matrix must be square");
    require(slack_index >= 0 && slack_index < y.rows(), "slack index out of range");
    const Index l = y.rows();
    ComplexMatrix r(l - 1, l - 1);
    Index ri = 0;
    for (Index i = 0; i < l; ++i) {
        if (i == slack_index) continue;
        Index rj = 0;
        for (Index j = 0; j < l; ++j) {
            if (j == slack_index) continue;
            r(ri, rj++) = y(i, j);
        }
        ++ri;
    }
    if (r.size() > 0) {
        Eigen::FullPivLU<ComplexMatrix> lu(r);
        if (!lu.isInvertible() || !(lu.rcond() > 1e-12)) {
            throw std::runtime_error("non-invertible reduced admittance");
        }
    }
    return r;
}

ComplexMatrix reduce_slack(const Topology& t) {
    // Slack position within the ascending full-node ordering.
    std::vector<int> order;
    for (const auto& n : t.nodes()) order.push_back(n.id);
    std::sort(order.begin(), order.end());
    const auto it = std::lower_bound(order.begin(), order.end(), t.slack_id());
    return reduce_slack(build_admittance(t), it - order.begin());
}

namespace {

/// Cumulative impedance from every node back to the slack, plus parents,
/// via one BFS rooted at the slack.
struct RootedView {
    std::map<int, Complex> to_slack;
    std::map<int, int> parent;
    std::map<int, int> depth;
};

RootedView root_at_slack(const Topology& t) {
    RootedView v;
    v.to_slack[t.slack_id()] = Complex(0, 0);
    v.parent[t.slack_id()] = t.slack_id();
    v.depth[t.slack_id()] = 0;
    std::deque<int> queue{t.slack_id()};
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        for (const auto& [w, z] : t.neighbors(u)) {
            if (v.to_slack.count(w)) continue;
            v.to_slack[w] = v.to_slack[u] + z;
            v.parent[w] = u;
            v.depth[w] = v.depth[u] + 1;
            queue.push_back(w);
        }
    }
    return v;
}

int lowest_common_ancestor(const RootedView& v, int a, int b) {
    while (a != b) {
        if (v.depth.at(a) >= v.depth.at(b)) {
            a = v.parent.at(a);
        } else {
            b = v.parent.at(b);
        }
    }
    return a;
}

}  // namespace

ComplexMatrix build_z_paths(const Topology& t) {
    const auto view = root_at_slack(t);
    const auto& buses = t.bus_order();
    const Index m = static_cast<Index>(buses.size());
    ComplexMatrix z(m, m);
    for (Index a = 0; a < m; ++a) {
        for (Index b = a; b < m; ++b) {
            const int lca = lowest_common_ancestor(view, buses[a], buses[b]);
            z(a, b) = view.to_slack.at(lca);
            z(b, a) = z(a, b);
        }
    }
    return z;
}

Complex true_distance(const Topology& t, int a, int b) {
    require(t.has_node(a) && t.has_node(b), "unknown node id");
    require(a != t.slack_id() && b != t.slack_id(),
            "true_distance is defined for non-slack nodes");
    if (a == b) return Complex(0, 0);
    const auto view = root_at_slack(t);
    const int lca = lowest_common_ancestor(view, a, b);
    return view.to_slack.at(a) + view.to_slack.at(b) -
           2.0 * view.to_slack.at(lca);
}

}  // namespace gridtree
