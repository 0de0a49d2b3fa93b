#pragma once

#include "gridtree/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gridtree {

enum class NodeRole { Slack, Observed, Hidden };

std::string to_string(NodeRole role);
NodeRole role_from_string(const std::string& s);

struct GridNode {
    int id = 0;
    NodeRole role = NodeRole::Observed;
};

struct GridEdge {
    int i = 0;
    int k = 0;
    Complex z;
};

/// Rooted radial grid: one slack node, tree-shaped edge set, complex series
/// impedances with strictly positive resistance. Node ids are arbitrary
/// integers; column/bus ordering is the ascending list of non-slack ids.
class Topology {
  public:
    Topology(std::vector<GridNode> nodes, std::vector<GridEdge> edges);

    const std::vector<GridNode>& nodes() const { return nodes_; }
    const std::vector<GridEdge>& edges() const { return edges_; }

    int node_count() const { return static_cast<int>(nodes_.size()); }
    int slack_id() const { return slack_id_; }
    NodeRole role(int id) const;
    bool has_node(int id) const;

    /// Non-slack node ids, ascending: the bus order of all matrix columns.
    const std::vector<int>& bus_order() const { return bus_order_; }
    const std::vector<int>& observed_ids() const { return observed_ids_; }

    /// Position of `id` within bus_order(); throws for the slack/unknown ids.
    int bus_index(int id) const;

    const std::vector<std::pair<int, Complex>>& neighbors(int id) const;
    int degree(int id) const;

    /// Edges of the unique path between nodes a and b.
    std::vector<GridEdge> path_edges(int a, int b) const;

    /// True iff every hidden node has degree >= 3.
    bool assumption1_ok() const;

  private:
    std::vector<GridNode> nodes_;
    std::vector<GridEdge> edges_;
    std::map<int, NodeRole> role_by_id_;
    std::map<int, std::vector<std::pair<int, Complex>>> adjacency_;
    std::vector<int> bus_order_;
    std::vector<int> observed_ids_;
    int slack_id_ = 0;
};

/// Merges every degree-2 hidden node into a single edge (impedances added)
/// and prunes hidden leaves, which carry no identifiable information.
Topology contract_degree2_hidden(const Topology& t);

struct RandomTreeSpec {
    int node_count = 8;
    double hidden_fraction = 0.3;
    double r_min = 0.1, r_max = 1.0;
    double x_min = 0.1, x_max = 1.0;
    std::uint64_t seed = 0;
};

/// Random radial tree with slack as a leaf attached to the root junction;
/// hidden roles are assigned only to nodes of degree >= 3.
Topology random_radial_tree(const RandomTreeSpec& spec);

Topology topology_from_json(const std::string& text);
std::string topology_to_json(const Topology& t);
Topology load_topology(const std::string& path);
void save_topology(const Topology& t, const std::string& path);

}  // namespace gridtree
