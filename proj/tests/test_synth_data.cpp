#include "gridtree/synth_data.hpp"

#include "gridtree/grid_model.hpp"
#include "gridtree/whitening.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace gridtree;
using doctest::Approx;

namespace {

Topology bench_tree(std::uint64_t seed, int n = 10) {
    RandomTreeSpec spec;
    spec.node_count = n;
    spec.seed = seed;
    return random_radial_tree(spec);
}

}  // namespace

TEST_CASE("gaussian current sampling") {
    const Topology t = bench_tree(1);
    GenSpec spec;
    spec.n_samples = 8760;
    spec.sigma_diag = 0.025;
    spec.seed = 5;

    SUBCASE("per-column variance tracks sigma_diag") {
        const ComplexMatrix i = sample_currents(spec, t);
        for (int id : t.observed_ids()) {
            const double var =
                i.col(t.bus_index(id)).squaredNorm() / spec.n_samples;
            CHECK(var == Approx(0.025).epsilon(0.10));
        }
    }
    SUBCASE("zero variance gives the zero matrix") {
        GenSpec zero = spec;
        zero.sigma_diag = 0.0;
        CHECK(sample_currents(zero, t).norm() == 0.0);
    }
    SUBCASE("hidden columns are exactly zero") {
        const ComplexMatrix i = sample_currents(spec, t);
        for (const auto& n : t.nodes()) {
            if (n.role == NodeRole::Hidden) {
                CHECK(i.col(t.bus_index(n.id)).norm() == 0.0);
            }
        }
    }
    SUBCASE("columns are centered") {
        const ComplexMatrix i = sample_currents(spec, t);
        for (Index c = 0; c < i.cols(); ++c) {
            CHECK(std::abs(i.col(c).mean()) <= 1e-12);
        }
    }
    SUBCASE("same seed reproduces bit-identical draws") {
        const ComplexMatrix a = sample_currents(spec, t);
        const ComplexMatrix b = sample_currents(spec, t);
        CHECK((a - b).norm() == 0.0);
    }
    SUBCASE("requested cross-correlation shows up in the samples") {
        const Index n_obs = static_cast<Index>(t.observed_ids().size());
        ComplexMatrix corr = ComplexMatrix::Identity(n_obs, n_obs);
        corr(0, 1) = corr(1, 0) = Complex(0.5, 0.0);
        GenSpec cs = spec;
        cs.corr = corr;
        const ComplexMatrix i = sample_currents(cs, t);
        const int a = t.observed_ids()[0], b = t.observed_ids()[1];
        const auto ca = i.col(t.bus_index(a)), cb = i.col(t.bus_index(b));
        const double rho =
            std::abs(ca.dot(cb)) / (ca.norm() * cb.norm());
        CHECK(rho > 0.4);
        CHECK(rho < 0.6);
    }
    SUBCASE("empirical covariance converges to the spec covariance") {
        const Index n_obs = static_cast<Index>(t.observed_ids().size());
        ComplexMatrix corr = ComplexMatrix::Identity(n_obs, n_obs);
        for (Index a = 0; a < n_obs; ++a) {
            for (Index b = 0; b < n_obs; ++b) {
                if (a != b) corr(a, b) = Complex(0.4, 0.0);
            }
        }
        GenSpec cs = spec;
        cs.corr = corr;
        ComplexMatrix obs(spec.n_samples, n_obs);
        const ComplexMatrix i = sample_currents(cs, t);
        for (Index c = 0; c < n_obs; ++c) {
            obs.col(c) = i.col(t.bus_index(t.observed_ids()[c]));
        }
        const ComplexMatrix sigma_hat = sample_covariance(obs);
        const ComplexMatrix sigma_true = 0.025 * corr;
        CHECK(rel_frobenius(sigma_hat, sigma_true) <= 0.1);
    }
    SUBCASE("non-PSD correlation rejected") {
        const Index n_obs = static_cast<Index>(t.observed_ids().size());
        ComplexMatrix corr = ComplexMatrix::Identity(n_obs, n_obs);
        corr(0, 1) = corr(1, 0) = Complex(1.5, 0.0);
        GenSpec cs = spec;
        cs.corr = corr;
        CHECK_THROWS_WITH_AS(sample_currents(cs, t), "invalid correlation block",
                             std::invalid_argument);
    }
}

TEST_CASE("load-to-current conversion") {
    SUBCASE("pf frozen at 0.85 gives the closed-form reactive power") {
        RealMatrix p(1, 1);
        p(0, 0) = 1.0;
        const ComplexMatrix i = loads_to_currents(p, 0.85, 0.85, {1.0, 0.0}, 0);
        // q = sqrt(1 - 0.85^2)/0.85, i = conj(p + jq)
        CHECK(i(0, 0).real() == Approx(1.0));
        CHECK(-i(0, 0).imag() == Approx(0.6197).epsilon(1e-3));
    }
    SUBCASE("pf frozen at 0.95") {
        RealMatrix p(1, 1);
        p(0, 0) = 2.0;
        const ComplexMatrix i = loads_to_currents(p, 0.95, 0.95, {1.0, 0.0}, 0);
        const double expected = std::sqrt(1.0 - 0.9025) / 0.95;
        CHECK(-i(0, 0).imag() / i(0, 0).real() == Approx(expected).epsilon(1e-12));
    }
    SUBCASE("zero load row maps to zero current") {
        RealMatrix p = RealMatrix::Zero(3, 2);
        p(1, 0) = 1.0;
        const ComplexMatrix i = loads_to_currents(p, 0.85, 0.95, {1.0, 0.0}, 1);
        CHECK(std::abs(i(0, 0)) == 0.0);
        CHECK(std::abs(i(2, 1)) == 0.0);
        CHECK(std::abs(i(1, 0)) > 0.0);
    }
    SUBCASE("invalid pf range rejected") {
        RealMatrix p = RealMatrix::Ones(1, 1);
        CHECK_THROWS_AS(loads_to_currents(p, 0.0, 0.9, {1.0, 0.0}, 0),
                        std::invalid_argument);
        CHECK_THROWS_AS(loads_to_currents(p, 0.5, 1.2, {1.0, 0.0}, 0),
                        std::invalid_argument);
    }
}

TEST_CASE("voltage computation") {
    SUBCASE("identity impedance passes currents through") {
        ComplexMatrix i(2, 3);
        i << Complex(1, 2), Complex(0, 1), Complex(3, 0), Complex(2, 2),
            Complex(1, 1), Complex(0, 0);
        CHECK(rel_frobenius(compute_voltages(ComplexMatrix::Identity(3, 3), i), i) ==
              0.0);
    }
    SUBCASE("single sample expands by hand on the chain") {
        const Topology t = testutil::chain3();
        const ComplexMatrix z = build_z_paths(t);
        ComplexMatrix i(1, 2);
        i << Complex(0.2, -0.1), Complex(-0.3, 0.4);
        const ComplexMatrix v = compute_voltages(z, i);
        CHECK(std::abs(v(0, 0) - (z(0, 0) * i(0, 0) + z(0, 1) * i(0, 1))) < 1e-15);
        CHECK(std::abs(v(0, 1) - (z(1, 0) * i(0, 0) + z(1, 1) * i(0, 1))) < 1e-15);
    }
    SUBCASE("zero currents give zero voltages") {
        CHECK(compute_voltages(ComplexMatrix::Identity(2, 2), ComplexMatrix::Zero(5, 2))
                  .norm() == 0.0);
    }
    SUBCASE("dimension mismatch rejected") {
        CHECK_THROWS_AS(
            compute_voltages(ComplexMatrix::Identity(3, 3), ComplexMatrix::Zero(5, 2)),
            std::invalid_argument);
    }
}

TEST_CASE("generated measurements satisfy the Ohm residual identity") {
    const Topology t = bench_tree(2, 12);
    GenSpec spec;
    spec.n_samples = 512;
    spec.seed = 9;
    const MeasurementSet ms = generate(spec, t);
    const ComplexMatrix z = build_z_paths(t);
    const double residual = (ms.v.transpose() - z * ms.i.transpose()).norm() /
                            ms.v.transpose().norm();
    CHECK(residual <= 1e-12);
}

TEST_CASE("two-regime generator") {
    const Topology t = bench_tree(3, 10);
    TwoRegimeSpec spec;
    spec.n_samples = 2000;
    spec.seed = 4;
    const TwoRegimeData data = gen_two_regime(spec, t);
    CHECK(data.ms.n_samples() == 2000);
    CHECK(data.regime.size() == 2000);

    SUBCASE("columns centered, hidden columns zero") {
        for (Index c = 0; c < data.ms.i.cols(); ++c) {
            CHECK(std::abs(data.ms.i.col(c).mean()) <= 1e-12);
        }
        for (const auto& n : t.nodes()) {
            if (n.role == NodeRole::Hidden) {
                CHECK(data.ms.i.col(t.bus_index(n.id)).norm() == 0.0);
            }
        }
    }
    SUBCASE("bit-reproducible") {
        const TwoRegimeData again = gen_two_regime(spec, t);
        CHECK((again.ms.v - data.ms.v).norm() == 0.0);
        CHECK((again.ms.i - data.ms.i).norm() == 0.0);
    }
    SUBCASE("regimes separate in voltage level") {
        // The tap shift moves every observed voltage by the regime gap.
        const int bus = t.observed_ids()[0];
        const Index c = t.bus_index(bus);
        double mean0 = 0, mean1 = 0;
        int n0 = 0, n1 = 0;
        for (Index s = 0; s < data.ms.n_samples(); ++s) {
            if (data.regime[s] == 0) {
                mean0 += data.ms.v(s, c).real();
                ++n0;
            } else {
                mean1 += data.ms.v(s, c).real();
                ++n1;
            }
        }
        CHECK(std::abs(mean1 / n1 - mean0 / n0) == Approx(spec.tap_shift).epsilon(0.05));
    }
}

TEST_CASE("three-phase generation") {
    const Topology t = bench_tree(6, 8);
    GenSpec gen;
    gen.n_samples = 400;
    gen.seed = 12;

    SUBCASE("zero mutuals reduce to per-phase single-phase generation") {
        FourWireSpec fw;  // identity pattern, all phases, neutral silent
        fw.injection_scale = {1.0, 1.0, 1.0, 0.0};
        const ThreePhaseData tp = gen_three_phase(fw, t, gen);
        for (int k = 0; k < 3; ++k) {
            GenSpec single = gen;
            single.seed = phase_seed(gen.seed, k);
            const MeasurementSet ref = generate(single, t);
            CHECK(rel_frobenius(tp.phase[k].i, ref.i) < 1e-12);
            CHECK(rel_frobenius(tp.phase[k].v, ref.v) < 1e-12);
        }
    }
    SUBCASE("single line, single sample matches the 5-term expansion") {
        const Topology line({{1, NodeRole::Slack}, {2, NodeRole::Observed}},
                            {{1, 2, {0.4, 0.3}}});
        FourWireSpec fw;
        // Dense pattern with distinct entries per wire pair.
        for (int r = 0; r < kWireCount; ++r) {
            for (int c = 0; c < kWireCount; ++c) {
                fw.block_pattern(r, c) =
                    r == c ? Complex(1.0 + 0.1 * r, 0.05 * r)
                           : Complex(0.02 * (r + 1), 0.03 * (c + 1));
            }
        }
        fw.injection_scale = {1.0, 0.7, 1.3, 0.2};
        GenSpec g1;
        g1.n_samples = 1;
        g1.seed = 77;
        const ThreePhaseData tp = gen_three_phase(fw, line, g1);
        // Hand expansion of the phase-A voltage drop for the only sample:
        // v_a = z_aa * (sum_k lambda_ak i_k) with i_g the wire-current sum.
        const Complex z_aa = fw.block_pattern(0, 0) * Complex(0.4, 0.3);
        const auto lambda = fw.lambda();
        Complex weighted(0, 0);
        Complex ground(0, 0);
        for (int k = 0; k < kPhaseCount; ++k) ground += tp.phase[k].i(0, 0);
        for (int k = 0; k < kPhaseCount; ++k) {
            weighted += lambda(0, k) * tp.phase[k].i(0, 0);
        }
        weighted += lambda(0, kPhaseCount) * ground;
        CHECK(std::abs(tp.phase[0].v(0, 0) - z_aa * weighted) < 1e-12);
    }
    SUBCASE("missing phase stays zero with zeroed ratios") {
        FourWireSpec fw;
        fw.phase_present = {true, false, true, true};
        const ThreePhaseData tp = gen_three_phase(fw, t, gen);
        CHECK(tp.phase[1].i.norm() == 0.0);
        CHECK(tp.phase[1].v.norm() == 0.0);
        CHECK(fw.lambda()(0, 1) == Complex(0, 0));
    }
    SUBCASE("singular wire block rejected") {
        FourWireSpec fw;
        fw.block_pattern.row(1) = fw.block_pattern.row(0);  // duplicate rows
        fw.block_pattern(1, 1) = fw.block_pattern(0, 0);
        fw.block_pattern(0, 1) = fw.block_pattern(0, 0);
        fw.block_pattern(1, 0) = fw.block_pattern(0, 0);
        CHECK_THROWS_WITH_AS(gen_three_phase(fw, t, gen), "singular four-wire block",
                             std::invalid_argument);
    }
}
