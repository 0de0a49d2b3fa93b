#pragma once

#include "gridtree/topology.hpp"
#include "gridtree/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace gridtree {

/// Voltage/current deviation samples: rows are time slots, columns follow
/// bus_order. Hidden-node current columns are exactly zero and every column
/// is centered to zero sample mean.
struct MeasurementSet {
    ComplexMatrix v;
    ComplexMatrix i;
    std::vector<int> bus_order;

    Index n_samples() const { return v.rows(); }
};

/// Columns of `m` restricted to the given bus ids (order preserved).
ComplexMatrix select_columns(const ComplexMatrix& m,
                             const std::vector<int>& bus_order,
                             const std::vector<int>& ids);

/// Subtracts each column's sample mean in place.
void center_columns(ComplexMatrix& m);

enum class GenMode { Gaussian, LoadProfile, ThreePhase, TwoRegime };

std::string to_string(GenMode mode);
GenMode gen_mode_from_string(const std::string& s);

struct GenSpec {
    int n_samples = 8760;
    double sigma_diag = 0.025;
    /// Optional observed-observed correlation block (unit diagonal); the
    /// covariance of those columns becomes sigma_diag * corr.
    std::optional<ComplexMatrix> corr;
    std::uint64_t seed = 0;
    GenMode mode = GenMode::Gaussian;

    // load_profile parameters
    double load_scale = 0.03;
    double load_cv = 0.4;
    double pf_min = 0.85;
    double pf_max = 0.95;
    Complex v0 = Complex(1.0, 0.0);
};

/// Zero-mean complex Gaussian current deviations over all non-slack buses;
/// hidden columns zero, observed columns with covariance sigma_diag (times
/// the optional correlation block), centered to sample mean zero.
ComplexMatrix sample_currents(const GenSpec& spec, const Topology& t);

/// Power-factor-driven conversion of nonnegative real loads to complex
/// currents: q = p sqrt(1 - pf^2)/pf with pf ~ Unif(pf_min, pf_max) per
/// entry, s = p + jq, i = conj(s / v0).
ComplexMatrix loads_to_currents(const RealMatrix& p, double pf_min,
                                double pf_max, Complex v0, std::uint64_t seed);

/// Linear Ohm model: V^T = Z I^T applied row-by-row (V = I Z^T).
ComplexMatrix compute_voltages(const ComplexMatrix& z, const ComplexMatrix& i);

/// Gaussian or load-profile measurement set for a topology.
MeasurementSet generate(const GenSpec& spec, const Topology& t);

// ---------------------------------------------------------------------------
// Two-regime data for magnitude-only estimation and cluster selection.
// ---------------------------------------------------------------------------

/// Produces one-year-style deviation data whose samples fall into two
/// operating regimes. Within a regime current-deviation angles stay nearly
/// constant (sparse single-bus activity with a sign-symmetric burst plus a
/// small per-regime offset), while the regimes differ in burst angle and in
/// a common voltage level shift, so the (|v|, lambda q) embedding separates
/// them cleanly.
struct TwoRegimeSpec {
    int n_samples = 8760;
    double burst_scale = 0.05;
    double burst_spread = 0.3;    // burst magnitude ~ scale * U[1 -/+ spread]
    double theta_regime1 = 0.35;  // burst angle per regime (radians)
    double theta_regime2 = 1.92;
    double angle_jitter = 0.03;
    double offset_scale = 8e-4;   // per-bus per-regime current offset
    double floor_scale = 1e-4;    // inactive-slot noise floor
    double tap_shift = 1.0;       // voltage level gap between regimes
    std::uint64_t seed = 0;
};

struct TwoRegimeData {
    MeasurementSet ms;
    std::vector<int> regime;  // per-sample regime label (0 or 1)
};

TwoRegimeData gen_two_regime(const TwoRegimeSpec& spec, const Topology& t);

// ---------------------------------------------------------------------------
// Three-phase four-wire model.
// ---------------------------------------------------------------------------

enum class Phase { A = 0, B = 1, C = 2, N = 3 };
inline constexpr int kPhaseCount = 4;
inline constexpr int kWireCount = 5;  // a, b, c, n plus ground return

/// Per-line 5x5 wire-impedance pattern: the block of line e is
/// z_e * block_pattern, so the mutual-to-self ratios (the lambda priors)
/// are identical on every line. Missing phases are masked out.
struct FourWireSpec {
    Eigen::Matrix<Complex, 5, 5> block_pattern =
        Eigen::Matrix<Complex, 5, 5>::Identity();
    std::array<bool, kPhaseCount> phase_present = {true, true, true, true};
    /// Per-phase injection scale multipliers (applied to GenSpec sigma).
    std::array<double, kPhaseCount> injection_scale = {1.0, 1.0, 1.0, 0.0};

    /// Ratio priors lambda(k, j) = pattern(k, j) / pattern(k, k) with
    /// masked phases zeroed.
    Eigen::Matrix<Complex, 5, 5> lambda() const;
};

struct ThreePhaseData {
    std::array<MeasurementSet, kPhaseCount> phase;
};

/// Deterministic per-phase RNG stream derivation.
std::uint64_t phase_seed(std::uint64_t seed, int phase_index);

/// Draws per-phase nodal currents, forms the ground return i_g = sum of the
/// wire currents, and produces phase-to-ground voltages through the
/// weighted-current form of the four-wire model. The stored currents are
/// the raw per-phase injections; estimation re-weights them with the
/// lambda priors.
ThreePhaseData gen_three_phase(const FourWireSpec& fw, const Topology& t,
                               const GenSpec& gen);

}  // namespace gridtree
