#include "gridtree/evalx.hpp"

#include "gridtree/grid_model.hpp"
#include "gridtree/synth_data.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace gridtree;
using doctest::Approx;

namespace {

LatentTree tree_of(std::vector<LatentEdge> edges) {
    LatentTree t;
    std::set<LatentNode> seen;
    for (const auto& e : edges) {
        seen.insert(e.u);
        seen.insert(e.v);
    }
    t.nodes.assign(seen.begin(), seen.end());
    t.edges = std::move(edges);
    return t;
}

const LatentNode obs1{1, false}, obs2{2, false}, obs3{3, false}, obs4{4, false},
    obs5{5, false};
const LatentNode hid1{1, true}, hid2{2, true};

}  // namespace

TEST_CASE("tree match") {
    // Truth: slack - h(6) with children 1, 2, and 3 - 4 below node 3.
    const Topology truth({{9, NodeRole::Slack},
                          {6, NodeRole::Hidden},
                          {1, NodeRole::Observed},
                          {2, NodeRole::Observed},
                          {3, NodeRole::Observed},
                          {4, NodeRole::Observed}},
                         {{9, 6, {1.0, 0.5}},
                          {6, 1, {0.2, 0.1}},
                          {6, 2, {0.3, 0.2}},
                          {6, 3, {0.4, 0.3}},
                          {3, 4, {0.5, 0.4}}});

    SUBCASE("identical structure matches exactly") {
        const LatentTree rec = tree_of({{hid1, obs1, {0.2, 0.1}},
                                        {hid1, obs2, {0.3, 0.2}},
                                        {hid1, obs3, {0.4, 0.3}},
                                        {obs3, obs4, {0.5, 0.4}}});
        const MatchResult m = tree_match(rec, truth);
        CHECK(m.exact);
        CHECK(m.edge_f1 == 1.0);
        CHECK(m.max_edge_distance_error < 1e-12);
    }
    SUBCASE("hidden ids are irrelevant") {
        const LatentTree rec = tree_of({{hid2, obs1, {0.2, 0.1}},
                                        {hid2, obs2, {0.3, 0.2}},
                                        {hid2, obs3, {0.4, 0.3}},
                                        {obs3, obs4, {0.5, 0.4}}});
        CHECK(tree_match(rec, truth).exact);
        CHECK(tree_match(rec, truth).edge_f1 == 1.0);
    }
    SUBCASE("edge order is irrelevant") {
        LatentTree rec = tree_of({{obs3, obs4, {0.5, 0.4}},
                                  {hid1, obs3, {0.4, 0.3}},
                                  {hid1, obs2, {0.3, 0.2}},
                                  {hid1, obs1, {0.2, 0.1}}});
        std::mt19937_64 rng(3);
        std::shuffle(rec.edges.begin(), rec.edges.end(), rng);
        CHECK(tree_match(rec, truth).exact);
    }
    SUBCASE("a rewired edge breaks exactness and lowers F1") {
        // 4 moved under the hidden junction instead of node 3.
        const LatentTree rec = tree_of({{hid1, obs1, {0.2, 0.1}},
                                        {hid1, obs2, {0.3, 0.2}},
                                        {hid1, obs3, {0.4, 0.3}},
                                        {hid1, obs4, {0.9, 0.7}}});
        const MatchResult m = tree_match(rec, truth);
        CHECK_FALSE(m.exact);
        CHECK(m.edge_f1 < 1.0);
        CHECK(m.edge_f1 > 0.0);
    }
    SUBCASE("edge weight drift reports through the distance comparison") {
        const LatentTree rec = tree_of({{hid1, obs1, {0.2, 0.1}},
                                        {hid1, obs2, {0.3, 0.2}},
                                        {hid1, obs3, {0.4, 0.3}},
                                        {obs3, obs4, {0.5 + 1e-3, 0.4}}});
        const MatchResult m = tree_match(rec, truth);
        CHECK(m.exact);
        CHECK(m.max_edge_distance_error == Approx(1e-3).epsilon(1e-6));
    }
}

TEST_CASE("tree match on a rewired 10-node tree") {
    RandomTreeSpec spec;
    spec.node_count = 10;
    spec.seed = 13;
    const Topology t = random_radial_tree(spec);
    const LatentTree ref = reference_tree(t);
    CHECK(tree_match(ref, t).exact);

    // Move one observed leaf to a different attachment point.
    LatentTree rewired = ref;
    LatentNode leaf{-1, false};
    LatentNode old_anchor{-1, false};
    std::map<LatentNode, int> degree;
    for (const auto& e : rewired.edges) {
        ++degree[e.u];
        ++degree[e.v];
    }
    for (auto& e : rewired.edges) {
        if (!e.u.hidden && degree[e.u] == 1) {
            leaf = e.u;
            old_anchor = e.v;
        } else if (!e.v.hidden && degree[e.v] == 1) {
            leaf = e.v;
            old_anchor = e.u;
        }
        if (leaf.id >= 0) break;
    }
    REQUIRE(leaf.id >= 0);
    LatentNode new_anchor{-1, false};
    for (const auto& n : rewired.nodes) {
        if (!(n == leaf) && !(n == old_anchor) && degree[n] >= 1 && !n.hidden) {
            new_anchor = n;
            break;
        }
    }
    REQUIRE(new_anchor.id >= 0);
    for (auto& e : rewired.edges) {
        if ((e.u == leaf && e.v == old_anchor) || (e.v == leaf && e.u == old_anchor)) {
            e.u = leaf;
            e.v = new_anchor;
        }
    }
    const MatchResult m = tree_match(rewired, t);
    CHECK_FALSE(m.exact);
    CHECK(m.edge_f1 < 1.0);
}

TEST_CASE("distance error tables") {
    DistanceMatrix truth;
    truth.active = {1, 2};
    truth.mode = DistanceMode::Complex;
    truth.d = ComplexMatrix::Zero(2, 2);
    truth.d(0, 1) = truth.d(1, 0) = Complex(2.0, 1.0);

    SUBCASE("five percent real deviation") {
        DistanceMatrix est = truth;
        est.d(0, 1) = est.d(1, 0) = Complex(2.1, 1.0);
        const ErrorTable table = distance_error(est, truth);
        CHECK(table.mean_real == Approx(5.0));
        CHECK(table.mean_imag == Approx(0.0));
        CHECK(table.max_real == Approx(5.0));
    }
    SUBCASE("identical matrices give zero error") {
        const ErrorTable table = distance_error(truth, truth);
        CHECK(table.mean_real == 0.0);
        CHECK(table.mean_imag == 0.0);
        CHECK(table.max_real == 0.0);
        CHECK(table.max_imag == 0.0);
    }
    SUBCASE("near-zero denominators are excluded, not clipped") {
        DistanceMatrix t3;
        t3.active = {1, 2, 3};
        t3.mode = DistanceMode::Complex;
        t3.d = ComplexMatrix::Zero(3, 3);
        t3.d(0, 1) = t3.d(1, 0) = Complex(2.0, 0.0);   // zero imaginary part
        t3.d(0, 2) = t3.d(2, 0) = Complex(1.0, 1.0);
        t3.d(1, 2) = t3.d(2, 1) = Complex(1.0, 2.0);
        DistanceMatrix est = t3;
        est.d(0, 1) = est.d(1, 0) = Complex(2.2, 5.0);  // huge but undefined imag
        const ErrorTable table = distance_error(est, t3);
        CHECK(std::isnan(table.imag_pct(0, 1)));
        CHECK(table.mean_imag == 0.0);  // excluded entry does not pollute
        CHECK(table.mean_real == Approx(10.0 / 3.0));
    }
    SUBCASE("mismatched active sets rejected") {
        DistanceMatrix other = truth;
        other.active = {1, 3};
        CHECK_THROWS_AS(distance_error(other, truth), std::invalid_argument);
    }
}

TEST_CASE("correlation coefficient CDF") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n01(0, 1);
    SUBCASE("identical columns give unit correlation") {
        ComplexMatrix data(200, 2);
        for (Index s = 0; s < 200; ++s) {
            data(s, 0) = Complex(n01(rng), n01(rng));
        }
        data.col(1) = data.col(0);
        const auto cdf = correlation_cdf(data);
        REQUIRE(cdf.size() == 1);
        CHECK(cdf[0] == Approx(1.0));
    }
    SUBCASE("independent Gaussian columns concentrate near zero") {
        const Index n = 8760;
        ComplexMatrix data(n, 6);
        for (Index s = 0; s < n; ++s) {
            for (Index c = 0; c < 6; ++c) data(s, c) = Complex(n01(rng), n01(rng));
        }
        const auto cdf = correlation_cdf(data);
        REQUIRE(cdf.size() == 15);
        CHECK(std::is_sorted(cdf.begin(), cdf.end()));
        CHECK(cdf[static_cast<std::size_t>(0.95 * cdf.size())] < 0.03);
    }
    SUBCASE("a generated correlated pair lands near its target") {
        // col1 = 0.5 col0 + sqrt(0.75) independent: population |rho| = 0.5.
        ComplexMatrix data(8760, 2);
        for (Index s = 0; s < 8760; ++s) {
            const Complex g0(n01(rng), n01(rng));
            const Complex g1(n01(rng), n01(rng));
            data(s, 0) = g0;
            data(s, 1) = 0.5 * g0 + std::sqrt(0.75) * g1;
        }
        const auto cdf = correlation_cdf(data);
        CHECK(cdf.back() > 0.4);
        CHECK(cdf.back() < 0.6);
    }
    SUBCASE("constant columns are skipped as undefined") {
        ComplexMatrix data = ComplexMatrix::Zero(100, 3);
        for (Index s = 0; s < 100; ++s) {
            data(s, 0) = Complex(n01(rng), n01(rng));
            data(s, 1) = Complex(n01(rng), n01(rng));
        }
        data.col(2).setConstant(Complex(3.0, 1.0));  // constant: centered to 0
        const auto cdf = correlation_cdf(data);
        CHECK(cdf.size() == 1);  // only the (0, 1) pair is defined
    }
    SUBCASE("single column rejected") {
        CHECK_THROWS_AS(correlation_cdf(ComplexMatrix::Zero(10, 1)),
                        std::invalid_argument);
    }
}

TEST_CASE("canonical form prunes hidden leaves and contracts chains") {
    // h1 - h2 chain with h2 a hidden leaf and h1 of degree 2.
    const LatentTree messy = tree_of({{obs1, hid1, {1.0, 0.0}},
                                      {hid1, obs2, {2.0, 0.0}},
                                      {obs2, hid2, {0.5, 0.0}}});
    const LatentTree clean = canonical_form(messy);
    REQUIRE(clean.edges.size() == 1);
    CHECK(clean.edges[0].distance == Complex(3.0, 0.0));
    CHECK(clean.nodes.size() == 2);
}
