#include "gridtree/topology.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <deque>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace gridtree {

std::string to_string(NodeRole role) {
    switch (role) {
        case NodeRole::Slack: return "slack";
        case NodeRole::Observed: return "observed";
        case NodeRole::Hidden: return "hidden";
    }
    return "observed";
}

NodeRole role_from_string(const std::string& s) {
    if (s == "slack") return NodeRole::Slack;
    if (s == "observed") return NodeRole::Observed;
    if (s == "hidden") return NodeRole::Hidden;
    throw std::invalid_argument("unknown node role: " + s);
}

Topology::Topology(std::vector<GridNode> nodes, std::vector<GridEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    require(!nodes_.empty(), "topology has no nodes");
    require(edges_.size() + 1 == nodes_.size(),
            "edge count must be node count - 1 for a tree");

    int slack_count = 0;
    for (const auto& n : nodes_) {
        require(!role_by_id_.count(n.id), "duplicate node id");
        role_by_id_[n.id] = n.role;
        adjacency_[n.id];
        if (n.role == NodeRole::Slack) {
            ++slack_count;
            slack_id_ = n.id;
        }
    }
    require(slack_count == 1, "topology must have exactly one slack node");

    for (const auto& e : edges_) {
        require(role_by_id_.count(e.i) && role_by_id_.count(e.k),
                "edge references unknown node");
        require(e.i != e.k, "self-loop edge");
        if (std::abs(e.z) == 0.0) throw std::invalid_argument("degenerate edge");
        require(e.z.real() > 0.0, "edge resistance must be positive");
        adjacency_[e.i].emplace_back(e.k, e.z);
        adjacency_[e.k].emplace_back(e.i, e.z);
    }

    // Connectivity: BFS from the slack must reach every node.
    std::set<int> seen{slack_id_};
    std::deque<int> queue{slack_id_};
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        for (const auto& [v, z] : adjacency_.at(u)) {
            if (seen.insert(v).second) queue.push_back(v);
        }
    }
    require(seen.size() == nodes_.size(), "topology is disconnected");

    for (const auto& n : nodes_) {
        if (n.role == NodeRole::Slack) continue;
        bus_order_.push_back(n.id);
        if (n.role == NodeRole::Observed) observed_ids_.push_back(n.id);
    }
    std::sort(bus_order_.begin(), bus_order_.end());
    std::sort(observed_ids_.begin(), observed_ids_.end());
}

NodeRole Topology::role(int id) const {
    auto it = role_by_id_.find(id);
    require(it != role_by_id_.end(), "unknown node id");
    return it->second;
}

bool Topology::has_node(int id) const { return role_by_id_.count(id) != 0; }

int Topology::bus_index(int id) const {
    auto it = std::lower_bound(bus_order_.begin(), bus_order_.end(), id);
    require(it != bus_order_.end() && *it == id,
            "unknown node id or slack node used as bus");
    return static_cast<int>(it - bus_order_.begin());
}

const std::vector<std::pair<int, Complex>>& Topology::neighbors(int id) const {
    auto it = adjacency_.find(id);
    require(it != adjacency_.end(), "unknown node id");
    return it->second;
}

int Topology::degree(int id) const {
    return static_cast<int>(neighbors(id).size());
}

std::vector<GridEdge> Topology::path_edges(int a, int b) const {
    require(has_node(a) && has_node(b), "unknown node id");
    // DFS from a to b recording the edge trail.
    std::map<int, std::pair<int, Complex>> parent;  // node -> (parent, z)
    std::deque<int> stack{a};
    std::set<int> seen{a};
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        if (u == b) break;
        for (const auto& [v, z] : adjacency_.at(u)) {
            if (seen.insert(v).second) {
                parent[v] = {u, z};
                stack.push_back(v);
            }
        }
    }
    std::vector<GridEdge> path;
    int cur = b;
    while (cur != a) {
        auto it = parent.find(cur);
        require(it != parent.end(), "nodes are not connected");
        path.push_back({it->second.first, cur, it->second.second});
        cur = it->second.first;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

bool Topology::assumption1_ok() const {
    for (const auto& n : nodes_) {
        if (n.role == NodeRole::Hidden && degree(n.id) < 3) return false;
    }
    return true;
}

Topology contract_degree2_hidden(const Topology& t) {
    // Work on a mutable adjacency copy; repeat until no degree-<=2 hidden
    // node remains.
    std::map<int, NodeRole> roles;
    for (const auto& n : t.nodes()) roles[n.id] = n.role;
    std::map<int, std::map<int, Complex>> adj;
    for (const auto& e : t.edges()) {
        adj[e.i][e.k] = e.z;
        adj[e.k][e.i] = e.z;
    }
    for (const auto& n : t.nodes()) adj[n.id];

    bool changed = true;
    while (changed) {
        changed = false;
        for (auto it = roles.begin(); it != roles.end();) {
            int id = it->first;
            if (it->second != NodeRole::Hidden) {
                ++it;
                continue;
            }
            auto& nb = adj[id];
            if (nb.size() == 1) {
                // Hidden leaf: prune.
                adj[nb.begin()->first].erase(id);
                adj.erase(id);
                it = roles.erase(it);
                changed = true;
            } else if (nb.size() == 2) {
                auto a = *nb.begin();
                auto b = *std::next(nb.begin());
                adj[a.first].erase(id);
                adj[b.first].erase(id);
                adj[a.first][b.first] = a.second + b.second;
                adj[b.first][a.first] = a.second + b.second;
                adj.erase(id);
                it = roles.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
    }

    std::vector<GridNode> nodes;
    for (const auto& [id, role] : roles) nodes.push_back({id, role});
    std::vector<GridEdge> edges;
    for (const auto& [u, nb] : adj) {
        for (const auto& [v, z] : nb) {
            if (u < v) edges.push_back({u, v, z});
        }
    }
    return Topology(std::move(nodes), std::move(edges));
}

Topology random_radial_tree(const RandomTreeSpec& spec) {
    require(spec.node_count >= 2, "random tree needs at least 2 nodes");
    require(spec.r_min > 0.0 && spec.r_min <= spec.r_max, "bad r range");
    require(spec.x_min >= 0.0 && spec.x_min <= spec.x_max, "bad x range");

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> r_dist(spec.r_min, spec.r_max);
    std::uniform_real_distribution<double> x_dist(spec.x_min, spec.x_max);

    const int n = spec.node_count;
    // Node 1 is the slack, always a leaf hanging off node 2; nodes >= 3
    // attach uniformly to any earlier non-slack node.
    std::vector<GridEdge> edges;
    std::vector<int> degree(n + 1, 0);
    auto add_edge = [&](int a, int b) {
        edges.push_back({a, b, {r_dist(rng), x_dist(rng)}});
        ++degree[a];
        ++degree[b];
    };
    add_edge(1, 2);
    for (int v = 3; v <= n; ++v) {
        std::uniform_int_distribution<int> pick(2, v - 1);
        add_edge(pick(rng), v);
    }

    // Hidden candidates: non-slack nodes with degree >= 3.
    std::vector<int> candidates;
    for (int v = 2; v <= n; ++v) {
        if (degree[v] >= 3) candidates.push_back(v);
    }
    std::shuffle(candidates.begin(), candidates.end(), rng);
    int hidden_target = static_cast<int>(spec.hidden_fraction * n + 0.5);
    std::set<int> hidden(candidates.begin(),
                         candidates.begin() +
                             std::min<std::size_t>(hidden_target, candidates.size()));

    std::vector<GridNode> nodes;
    nodes.push_back({1, NodeRole::Slack});
    for (int v = 2; v <= n; ++v) {
        nodes.push_back({v, hidden.count(v) ? NodeRole::Hidden : NodeRole::Observed});
    }
    return Topology(std::move(nodes), std::move(edges));
}

namespace {

int parse_node_id(const nlohmann::json& j) {
    if (j.is_number_integer()) return j.get<int>();
    if (j.is_string()) {
        // Hidden nodes exported by the reconstructor use "h<N>" labels;
        // map them to negative ids so they stay distinct from file ids.
        const std::string s = j.get<std::string>();
        if (!s.empty() && (s[0] == 'h' || s[0] == 'H')) {
            return -std::stoi(s.substr(1));
        }
        return std::stoi(s);
    }
    throw std::invalid_argument("node id must be an integer or string");
}

}  // namespace

Topology topology_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    require(j.contains("nodes") && j.contains("edges"),
            "topology JSON needs 'nodes' and 'edges'");
    std::vector<GridNode> nodes;
    for (const auto& jn : j.at("nodes")) {
        nodes.push_back({parse_node_id(jn.at("id")),
                         role_from_string(jn.at("role").get<std::string>())});
    }
    std::vector<GridEdge> edges;
    for (const auto& je : j.at("edges")) {
        edges.push_back({parse_node_id(je.at("i")), parse_node_id(je.at("k")),
                         Complex(je.at("r").get<double>(), je.at("x").get<double>())});
    }
    return Topology(std::move(nodes), std::move(edges));
}

std::string topology_to_json(const Topology& t) {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : t.nodes()) {
        j["nodes"].push_back({{"id", n.id}, {"role", to_string(n.role)}});
    }
    j["edges"] = nlohmann::json::array();
    for (const auto& e : t.edges()) {
        j["edges"].push_back(
            {{"i", e.i}, {"k", e.k}, {"r", e.z.real()}, {"x", e.z.imag()}});
    }
    return j.dump(2) + "\n";
}

Topology load_topology(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open topology file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return topology_from_json(ss.str());
}

void save_topology(const Topology& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write topology file: " + path);
    out << topology_to_json(t);
}

}  // namespace gridtree
