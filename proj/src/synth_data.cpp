#include "gridtree/synth_data.hpp"

#include "gridtree/grid_model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <random>

namespace gridtree {

std::string to_string(GenMode mode) {
    switch (mode) {
        case GenMode::Gaussian: return "gaussian";
        case GenMode::LoadProfile: return "load_profile";
        case GenMode::ThreePhase: return "three_phase";
        case GenMode::TwoRegime: return "two_regime";
    }
    return "gaussian";
}

GenMode gen_mode_from_string(const std::string& s) {
    if (s == "gaussian") return GenMode::Gaussian;
    if (s == "load_profile") return GenMode::LoadProfile;
    if (s == "three_phase") return GenMode::ThreePhase;
    if (s == "two_regime") return GenMode::TwoRegime;
    throw std::invalid_argument("unknown generation mode: " + s);
}

ComplexMatrix select_columns(const ComplexMatrix& m,
                             const std::vector<int>& bus_order,
                             const std::vector<int>& ids) {
    ComplexMatrix out(m.rows(), static_cast<Index>(ids.size()));
    for (std::size_t j = 0; j < ids.size(); ++j) {
        auto it = std::find(bus_order.begin(), bus_order.end(), ids[j]);
        require(it != bus_order.end(), "unknown bus id in column selection");
        out.col(static_cast<Index>(j)) = m.col(it - bus_order.begin());
    }
    return out;
}

void center_columns(ComplexMatrix& m) {
    if (m.rows() == 0) return;
    m.rowwise() -= m.colwise().mean();
}

namespace {

/// iid complex standard normal draws, E|z|^2 = 1.
ComplexMatrix standard_complex_gaussian(Index rows, Index cols,
                                        std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, std::sqrt(0.5));
    ComplexMatrix g(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            const double re = n01(rng);
            const double im = n01(rng);
            g(r, c) = Complex(re, im);
        }
    }
    return g;
}

}  // namespace

ComplexMatrix sample_currents(const GenSpec& spec, const Topology& t) {
    require(spec.n_samples >= 1, "n_samples must be positive");
    require(spec.sigma_diag >= 0.0, "sigma_diag must be nonnegative");

    const auto& buses = t.bus_order();
    const auto& observed = t.observed_ids();
    const Index n = spec.n_samples;
    const Index n_obs = static_cast<Index>(observed.size());

    ComplexMatrix obs_draws = ComplexMatrix::Zero(n, n_obs);
    if (spec.sigma_diag > 0.0 && n_obs > 0) {
        std::mt19937_64 rng(spec.seed);
        ComplexMatrix g = standard_complex_gaussian(n, n_obs, rng);
        if (spec.corr) {
            const ComplexMatrix& r = *spec.corr;
            if (r.rows() != n_obs || r.cols() != n_obs || !is_hermitian(r, 1e-9)) {
                throw std::invalid_argument("invalid correlation block");
            }
            Eigen::LLT<ComplexMatrix> llt(r);
            if (llt.info() != Eigen::Success) {
                throw std::invalid_argument("invalid correlation block");
            }
            ComplexMatrix chol = llt.matrixL();
            obs_draws = g * chol.transpose();
        } else {
            obs_draws = g;
        }
        obs_draws *= std::sqrt(spec.sigma_diag);
    }

    ComplexMatrix currents = ComplexMatrix::Zero(n, static_cast<Index>(buses.size()));
    for (Index j = 0; j < n_obs; ++j) {
        currents.col(t.bus_index(observed[j])) = obs_draws.col(j);
    }
    center_columns(currents);
    return currents;
}

ComplexMatrix loads_to_currents(const RealMatrix& p, double pf_min,
                                double pf_max, Complex v0, std::uint64_t seed) {
    require(pf_min > 0.0 && pf_max <= 1.0 && pf_min <= pf_max,
            "power factor range must lie in (0, 1]");
    require(std::abs(v0) > 0.0, "reference voltage must be nonzero");
    require((p.array() >= 0.0).all(), "loads must be nonnegative");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pf_dist(pf_min, pf_max);
    ComplexMatrix i(p.rows(), p.cols());
    for (Index r = 0; r < p.rows(); ++r) {
        for (Index c = 0; c < p.cols(); ++c) {
            const double pf = pf_dist(rng);
            const double q = p(r, c) * std::sqrt(1.0 - pf * pf) / pf;
            i(r, c) = std::conj(Complex(p(r, c), q) / v0);
        }
    }
    return i;
}

ComplexMatrix compute_voltages(const ComplexMatrix& z, const ComplexMatrix& i) {
    require(z.rows() == z.cols(), "impedance matrix must be square");
    require(i.cols() == z.cols(), "dimension mismatch");
    return i * z.transpose();
}

MeasurementSet generate(const GenSpec& spec, const Topology& t) {
    MeasurementSet ms;
    ms.bus_order = t.bus_order();
    const ComplexMatrix z = build_z_paths(t);

    if (spec.mode == GenMode::Gaussian) {
        ms.i = sample_currents(spec, t);
    } else if (spec.mode == GenMode::LoadProfile) {
        const auto& observed = t.observed_ids();
        std::mt19937_64 rng(spec.seed);
        std::normal_distribution<double> n01(0.0, 1.0);
        RealMatrix p(spec.n_samples, static_cast<Index>(observed.size()));
        for (Index r = 0; r < p.rows(); ++r) {
            for (Index c = 0; c < p.cols(); ++c) {
                p(r, c) = spec.load_scale *
                          std::max(0.0, 1.0 + spec.load_cv * n01(rng));
            }
        }
        const ComplexMatrix obs = loads_to_currents(p, spec.pf_min, spec.pf_max,
                                                    spec.v0, spec.seed + 1);
        ms.i = ComplexMatrix::Zero(spec.n_samples,
                                   static_cast<Index>(ms.bus_order.size()));
        for (std::size_t j = 0; j < observed.size(); ++j) {
            ms.i.col(t.bus_index(observed[j])) = obs.col(static_cast<Index>(j));
        }
        center_columns(ms.i);
    } else {
        throw std::invalid_argument(
            "generate() handles gaussian and load_profile modes only");
    }

    ms.v = compute_voltages(z, ms.i);
    return ms;
}

TwoRegimeData gen_two_regime(const TwoRegimeSpec& spec, const Topology& t) {
    require(spec.n_samples >= 4, "need at least 4 samples");
    const auto& buses = t.bus_order();
    const auto& observed = t.observed_ids();
    require(!observed.empty(), "two-regime data needs observed nodes");

    const Index n = spec.n_samples;
    const Index n_obs = static_cast<Index>(observed.size());
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    TwoRegimeData data;
    data.regime.resize(n);
    for (Index s = 0; s < n; ++s) data.regime[s] = s < n / 2 ? 0 : 1;

    // Per-bus, per-regime current offsets: opposite directions per regime
    // so the inactive-slot deviation angles are regime-identifying. The
    // direction is kept away from the +-pi wrap so angle quartiles stay
    // stable on both sides.
    ComplexMatrix offsets(2, n_obs);
    for (Index b = 0; b < n_obs; ++b) {
        // Keep both the offset direction and its antipode at least 0.6 rad
        // away from the +-pi wrap, beyond the floor-noise angular tails.
        const double ang = 0.6 + (M_PI - 1.2) * u01(rng);
        const Complex delta = spec.offset_scale * std::polar(1.0, ang);
        offsets(0, b) = 0.5 * delta;
        offsets(1, b) = -0.5 * delta;
    }

    // One bus is active per slot (rotation, so the burst supports are
    // disjoint) with the burst sign alternating per bus: the column burst
    // sums then cancel pairwise and the sample mean stays far below the
    // regime offsets.
    ComplexMatrix currents = ComplexMatrix::Zero(n, static_cast<Index>(buses.size()));
    const double theta[2] = {spec.theta_regime1, spec.theta_regime2};
    std::vector<int> activation_count(n_obs, 0);
    for (Index s = 0; s < n; ++s) {
        const int r = data.regime[s];
        const Index active = s % n_obs;
        const double sign = activation_count[active]++ % 2 == 0 ? 1.0 : -1.0;
        const double mag =
            spec.burst_scale *
            (1.0 + spec.burst_spread * (2.0 * u01(rng) - 1.0));
        const double ang = theta[r] + spec.angle_jitter * n01(rng);
        for (Index b = 0; b < n_obs; ++b) {
            Complex val = offsets(r, b) +
                          spec.floor_scale * Complex(n01(rng), n01(rng));
            if (b == active) val += sign * mag * std::polar(1.0, ang);
            currents(s, t.bus_index(observed[b])) = val;
        }
    }
    center_columns(currents);

    const ComplexMatrix z = build_z_paths(t);
    ComplexMatrix v = compute_voltages(z, currents);
    // Common voltage level shift between regimes (slack tap style): centered
    // so the set stays deviation data.
    RealVector tap(n);
    for (Index s = 0; s < n; ++s) {
        tap(s) = (data.regime[s] == 0 ? -0.5 : 0.5) * spec.tap_shift;
    }
    tap.array() -= tap.mean();
    v.colwise() += tap.cast<Complex>();

    data.ms.v = std::move(v);
    data.ms.i = std::move(currents);
    data.ms.bus_order = buses;
    return data;
}

Eigen::Matrix<Complex, 5, 5> FourWireSpec::lambda() const {
    Eigen::Matrix<Complex, 5, 5> l = Eigen::Matrix<Complex, 5, 5>::Zero();
    for (int k = 0; k < kWireCount; ++k) {
        const bool k_present = k >= kPhaseCount || phase_present[k];
        if (!k_present) continue;
        const Complex self = block_pattern(k, k);
        if (std::abs(self) == 0.0) continue;
        for (int j = 0; j < kWireCount; ++j) {
            const bool j_present = j >= kPhaseCount || phase_present[j];
            l(k, j) = j_present ? block_pattern(k, j) / self : Complex(0, 0);
        }
    }
    return l;
}

std::uint64_t phase_seed(std::uint64_t seed, int phase_index) {
    // splitmix64 step keyed by phase.
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (phase_index + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

ThreePhaseData gen_three_phase(const FourWireSpec& fw, const Topology& t,
                               const GenSpec& gen) {
    // Reject degenerate wire blocks (the per-line block is a scalar multiple
    // of the pattern, so checking the pattern covers every line). Missing
    // phases are padded with identity rows so absence is not singularity.
    Eigen::Matrix<Complex, 5, 5> probe = fw.block_pattern;
    for (int k = 0; k < kPhaseCount; ++k) {
        if (!fw.phase_present[k]) {
            probe.row(k).setZero();
            probe.col(k).setZero();
            probe(k, k) = Complex(1, 0);
        }
    }
    const ComplexMatrix probe_dyn = probe;
    Eigen::FullPivLU<ComplexMatrix> lu(probe_dyn);
    if (!lu.isInvertible()) {
        throw std::invalid_argument("singular four-wire block");
    }

    const auto lambda = fw.lambda();
    for (int k = 0; k < kPhaseCount; ++k) {
        if (fw.phase_present[k] && lambda.row(k).cwiseAbs().sum() == 0.0) {
            throw std::invalid_argument("unusable ratio prior");
        }
    }

    const ComplexMatrix z_base = build_z_paths(t);
    const Index n = gen.n_samples;
    const Index n_bus = static_cast<Index>(t.bus_order().size());

    // Raw per-phase nodal current deviations.
    std::array<ComplexMatrix, kPhaseCount> raw;
    for (int k = 0; k < kPhaseCount; ++k) {
        if (!fw.phase_present[k] || fw.injection_scale[k] == 0.0) {
            raw[k] = ComplexMatrix::Zero(n, n_bus);
            continue;
        }
        GenSpec phase_gen = gen;
        phase_gen.mode = GenMode::Gaussian;
        phase_gen.seed = phase_seed(gen.seed, k);
        phase_gen.sigma_diag =
            gen.sigma_diag * fw.injection_scale[k] * fw.injection_scale[k];
        raw[k] = sample_currents(phase_gen, t);
    }

    ComplexMatrix ground = ComplexMatrix::Zero(n, n_bus);
    for (int k = 0; k < kPhaseCount; ++k) ground += raw[k];

    ThreePhaseData out;
    for (int k = 0; k < kPhaseCount; ++k) {
        MeasurementSet& ms = out.phase[k];
        ms.bus_order = t.bus_order();
        ms.i = raw[k];
        if (!fw.phase_present[k]) {
            ms.v = ComplexMatrix::Zero(n, n_bus);
            continue;
        }
        ComplexMatrix weighted = ComplexMatrix::Zero(n, n_bus);
        for (int j = 0; j < kPhaseCount; ++j) weighted += lambda(k, j) * raw[j];
        weighted += lambda(k, kPhaseCount) * ground;
        // Phase self-impedance path matrix is pattern(k,k) * z_base.
        ms.v = compute_voltages(fw.block_pattern(k, k) * z_base, weighted);
    }
    return out;
}

}  // namespace gridtree
