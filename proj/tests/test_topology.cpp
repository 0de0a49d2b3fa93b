#include "gridtree/topology.hpp"

#include "test_util.hpp"

#include <doctest.h>

using namespace gridtree;

TEST_CASE("topology validation") {
    SUBCASE("valid chain") {
        const Topology t = testutil::chain3();
        CHECK(t.node_count() == 3);
        CHECK(t.slack_id() == 1);
        CHECK(t.bus_order() == std::vector<int>{2, 3});
    }
    SUBCASE("two slacks rejected") {
        CHECK_THROWS_WITH_AS(
            Topology({{1, NodeRole::Slack}, {2, NodeRole::Slack}}, {{1, 2, {1, 0}}}),
            "topology must have exactly one slack node", std::invalid_argument);
    }
    SUBCASE("disconnected rejected") {
        CHECK_THROWS_AS(Topology({{1, NodeRole::Slack},
                                  {2, NodeRole::Observed},
                                  {3, NodeRole::Observed},
                                  {4, NodeRole::Observed}},
                                 {{1, 2, {1, 0}}, {3, 4, {1, 0}}, {3, 4, {2, 0}}}),
                        std::invalid_argument);
    }
    SUBCASE("zero impedance edge rejected") {
        CHECK_THROWS_WITH_AS(
            Topology({{1, NodeRole::Slack}, {2, NodeRole::Observed}}, {{1, 2, {0, 0}}}),
            "degenerate edge", std::invalid_argument);
    }
    SUBCASE("cycle rejected by edge count") {
        CHECK_THROWS_AS(Topology({{1, NodeRole::Slack},
                                  {2, NodeRole::Observed},
                                  {3, NodeRole::Observed}},
                                 {{1, 2, {1, 0}}, {2, 3, {1, 0}}, {3, 1, {1, 0}}}),
                        std::invalid_argument);
    }
}

TEST_CASE("degree-2 hidden contraction merges impedances") {
    // slack -- h -- a with hidden h of degree 2: edges merge into one.
    const Topology t({{1, NodeRole::Slack}, {2, NodeRole::Hidden}, {3, NodeRole::Observed}},
                     {{1, 2, {1.0, 0.5}}, {2, 3, {2.0, 0.25}}});
    CHECK_FALSE(t.assumption1_ok());
    const Topology c = contract_degree2_hidden(t);
    CHECK(c.node_count() == 2);
    REQUIRE(c.edges().size() == 1);
    CHECK(c.edges()[0].z == Complex(3.0, 0.75));
    CHECK(c.assumption1_ok());
}

TEST_CASE("random radial trees satisfy the latent-tree assumptions") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        RandomTreeSpec spec;
        spec.node_count = 6 + static_cast<int>(seed % 28);
        spec.hidden_fraction = 0.3;
        spec.seed = seed;
        const Topology t = random_radial_tree(spec);
        CHECK(t.node_count() == spec.node_count);
        CHECK(t.assumption1_ok());
        CHECK(t.degree(t.slack_id()) == 1);
        for (const auto& e : t.edges()) {
            CHECK(e.z.real() >= spec.r_min);
            CHECK(e.z.real() <= spec.r_max);
            CHECK(e.z.imag() >= spec.x_min);
            CHECK(e.z.imag() <= spec.x_max);
        }
    }
}

TEST_CASE("topology JSON round trip with arbitrary labels") {
    const std::string text = R"({
        "nodes": [{"id": 10, "role": "slack"}, {"id": 7, "role": "observed"},
                  {"id": 42, "role": "observed"}],
        "edges": [{"i": 10, "k": 7, "r": 0.5, "x": 0.3},
                  {"i": 7, "k": 42, "r": 0.2, "x": 0.1}]
    })";
    const Topology t = topology_from_json(text);
    CHECK(t.slack_id() == 10);
    CHECK(t.bus_order() == std::vector<int>{7, 42});
    const Topology round = topology_from_json(topology_to_json(t));
    CHECK(round.node_count() == t.node_count());
    CHECK(round.edges().size() == t.edges().size());
    CHECK(round.role(42) == NodeRole::Observed);
}
