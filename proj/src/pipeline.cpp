#include "gridtree/pipeline.hpp"

#include "gridtree/grid_model.hpp"
#include "gridtree/whitening.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace gridtree {

namespace {

using nlohmann::json;

template <typename T>
T get_field(const json& j, const std::string& ptr, T def) {
    const auto p = json::json_pointer(ptr);
    if (!j.contains(p)) return def;
    try {
        return j.at(p).get<T>();
    } catch (const json::exception& e) {
        throw std::runtime_error("config error at " + ptr + ": " + e.what());
    }
}

template <typename F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
    }
}

void ensure_out_dir(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

}  // namespace

FourWireSpec make_four_wire(double mutual, std::array<bool, kPhaseCount> present,
                            std::array<double, kPhaseCount> injection) {
    FourWireSpec fw;
    const Complex selfs[kWireCount] = {
        {1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}, {0.6, 0.0}, {0.3, 0.0}};
    const Complex coupling = mutual * Complex(0.25, 0.6);
    for (int k = 0; k < kWireCount; ++k) {
        for (int j = 0; j < kWireCount; ++j) {
            fw.block_pattern(k, j) = k == j ? selfs[k] : coupling;
        }
    }
    fw.phase_present = present;
    fw.injection_scale = injection;
    return fw;
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config parse error: ") + e.what());
    }

    RunConfig cfg;
    cfg.topology_path = get_field<std::string>(j, "/topology", "");
    cfg.measurements_path = get_field<std::string>(j, "/measurements", "");
    cfg.out_dir = get_field<std::string>(j, "/out", "out");
    cfg.est_mode = get_field<std::string>(j, "/mode", "plain");
    cfg.seed = get_field<std::uint64_t>(j, "/seed", 0);

    const bool valid_mode = cfg.est_mode == "plain" || cfg.est_mode == "whitened" ||
                            cfg.est_mode == "magnitude" ||
                            cfg.est_mode == "three_phase";
    if (!valid_mode) {
        throw std::runtime_error("config error at /mode: unknown mode '" +
                                 cfg.est_mode + "'");
    }

    cfg.gen.mode = gen_mode_from_string(
        get_field<std::string>(j, "/gen/mode", "gaussian"));
    cfg.gen.n_samples = get_field<int>(j, "/gen/n_samples", 8760);
    cfg.gen.sigma_diag = get_field<double>(j, "/gen/sigma_diag", 0.025);
    cfg.gen.seed = get_field<std::uint64_t>(j, "/gen/seed", phase_seed(cfg.seed, 101));
    cfg.gen.load_scale = get_field<double>(j, "/gen/load_scale", 0.03);
    cfg.gen.load_cv = get_field<double>(j, "/gen/load_cv", 0.4);
    cfg.gen.pf_min = get_field<double>(j, "/gen/pf_min", 0.85);
    cfg.gen.pf_max = get_field<double>(j, "/gen/pf_max", 0.95);
    cfg.gen.v0 = Complex(get_field<double>(j, "/gen/v0_re", 1.0),
                         get_field<double>(j, "/gen/v0_im", 0.0));
    cfg.corr_offdiag = get_field<double>(j, "/gen/corr_offdiag", 0.0);
    if (cfg.corr_offdiag < 0.0 || cfg.corr_offdiag >= 1.0) {
        throw std::runtime_error("config error at /gen/corr_offdiag: must be in [0, 1)");
    }

    cfg.two_regime.n_samples = get_field<int>(j, "/two_regime/n_samples",
                                              cfg.gen.n_samples);
    cfg.two_regime.burst_scale =
        get_field<double>(j, "/two_regime/burst_scale", cfg.two_regime.burst_scale);
    cfg.two_regime.theta_regime1 = get_field<double>(j, "/two_regime/theta_regime1",
                                                     cfg.two_regime.theta_regime1);
    cfg.two_regime.theta_regime2 = get_field<double>(j, "/two_regime/theta_regime2",
                                                     cfg.two_regime.theta_regime2);
    cfg.two_regime.angle_jitter =
        get_field<double>(j, "/two_regime/angle_jitter", cfg.two_regime.angle_jitter);
    cfg.two_regime.offset_scale =
        get_field<double>(j, "/two_regime/offset_scale", cfg.two_regime.offset_scale);
    cfg.two_regime.floor_scale =
        get_field<double>(j, "/two_regime/floor_scale", cfg.two_regime.floor_scale);
    cfg.two_regime.tap_shift =
        get_field<double>(j, "/two_regime/tap_shift", cfg.two_regime.tap_shift);
    cfg.two_regime.seed =
        get_field<std::uint64_t>(j, "/two_regime/seed", phase_seed(cfg.seed, 102));

    if (j.contains("/four_wire"_json_pointer)) {
        const double mutual = get_field<double>(j, "/four_wire/mutual", 0.0);
        std::array<bool, kPhaseCount> present = {true, true, true, true};
        std::array<double, kPhaseCount> inject = {1.0, 1.0, 1.0, 0.0};
        const auto jp = get_field<std::vector<bool>>(j, "/four_wire/phase_present",
                                                     {true, true, true, true});
        const auto ji = get_field<std::vector<double>>(
            j, "/four_wire/injection_scale", {1.0, 1.0, 1.0, 0.0});
        if (jp.size() != kPhaseCount || ji.size() != kPhaseCount) {
            throw std::runtime_error(
                "config error at /four_wire: phase arrays need 4 entries");
        }
        for (int k = 0; k < kPhaseCount; ++k) {
            present[k] = jp[k];
            inject[k] = ji[k];
        }
        cfg.four_wire = make_four_wire(mutual, present, inject);
        if (j.contains("/four_wire/pattern"_json_pointer)) {
            const auto pat = j.at("/four_wire/pattern"_json_pointer);
            if (!pat.is_array() || pat.size() != kWireCount) {
                throw std::runtime_error(
                    "config error at /four_wire/pattern: need a 5x5 array of [re, im]");
            }
            for (int r = 0; r < kWireCount; ++r) {
                for (int c = 0; c < kWireCount; ++c) {
                    const auto& cell = pat.at(r).at(c);
                    cfg.four_wire.block_pattern(r, c) =
                        Complex(cell.at(0).get<double>(), cell.at(1).get<double>());
                }
            }
        }
    } else if (cfg.est_mode == "three_phase") {
        throw std::runtime_error(
            "config error at /four_wire: required for three_phase mode");
    }

    cfg.selection.enabled = get_field<bool>(j, "/selection/enabled", false);
    cfg.selection.lambda = get_field<double>(j, "/selection/lambda", -1.0);
    cfg.selection.k = get_field<int>(j, "/selection/k", 3);
    cfg.selection.query_index = get_field<int>(j, "/selection/query_index", 0);
    cfg.selection.seed =
        get_field<std::uint64_t>(j, "/selection/seed", phase_seed(cfg.seed, 103));

    cfg.rg.eps1 = get_field<double>(j, "/rg/eps1", -1.0);
    cfg.rg.eps2 = get_field<double>(j, "/rg/eps2", -1.0);
    const std::string scal = get_field<std::string>(j, "/rg/scalarization", "modulus");
    if (scal == "modulus") {
        cfg.rg.scalarization = Scalarization::Modulus;
    } else if (scal == "real_part") {
        cfg.rg.scalarization = Scalarization::RealPart;
    } else {
        throw std::runtime_error(
            "config error at /rg/scalarization: expected 'modulus' or 'real_part'");
    }
    cfg.rg.average_reference_child =
        get_field<bool>(j, "/rg/average_reference_child", false);

    cfg.config_hash = hash_hex(fnv1a(j.dump()));
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_text_file(path));
}

void apply_seed_override(RunConfig& cfg) {
    const char* env = std::getenv("GRIDTREE_SEED");
    if (!env) return;
    const std::uint64_t seed = std::strtoull(env, nullptr, 10);
    cfg.seed = seed;
    cfg.gen.seed = phase_seed(seed, 101);
    cfg.two_regime.seed = phase_seed(seed, 102);
    cfg.selection.seed = phase_seed(seed, 103);
}

namespace {

ComplexMatrix equicorrelation(Index n, double rho) {
    ComplexMatrix r = ComplexMatrix::Constant(n, n, Complex(rho, 0.0));
    r.diagonal().setConstant(Complex(1.0, 0.0));
    return r;
}

struct Dataset {
    MeasurementSet ms;
    std::optional<ThreePhaseData> three_phase;
};

std::string phase_file_name(const std::string& base, int phase) {
    static const char* suffix[kPhaseCount] = {"_a", "_b", "_c", "_n"};
    const std::filesystem::path p(base);
    std::filesystem::path out = p.parent_path();
    out /= p.stem().string() + suffix[phase] + p.extension().string();
    return out.string();
}

Dataset acquire_dataset(const RunConfig& cfg, const Topology& t) {
    Dataset data;
    if (cfg.est_mode == "three_phase") {
        if (!cfg.measurements_path.empty()) {
            data.three_phase.emplace();
            for (int k = 0; k < kPhaseCount; ++k) {
                data.three_phase->phase[k] =
                    load_measurements(phase_file_name(cfg.measurements_path, k));
            }
        } else {
            data.three_phase = gen_three_phase(cfg.four_wire, t, cfg.gen);
        }
        return data;
    }
    if (!cfg.measurements_path.empty()) {
        data.ms = load_measurements(cfg.measurements_path);
        center_columns(data.ms.v);
        center_columns(data.ms.i);
        return data;
    }
    if (cfg.gen.mode == GenMode::TwoRegime) {
        data.ms = gen_two_regime(cfg.two_regime, t).ms;
        return data;
    }
    GenSpec gen = cfg.gen;
    if (cfg.corr_offdiag > 0.0) {
        gen.corr = equicorrelation(static_cast<Index>(t.observed_ids().size()),
                                   cfg.corr_offdiag);
    }
    data.ms = generate(gen, t);
    return data;
}

DistanceMatrix true_complex_distances(const Topology& t, Complex scale) {
    const auto& obs = t.observed_ids();
    DistanceMatrix dm;
    dm.active = obs;
    dm.mode = DistanceMode::Complex;
    const Index m = static_cast<Index>(obs.size());
    dm.d = ComplexMatrix::Zero(m, m);
    for (Index a = 0; a < m; ++a) {
        for (Index b = a + 1; b < m; ++b) {
            dm.d(a, b) = scale * true_distance(t, obs[a], obs[b]);
            dm.d(b, a) = dm.d(a, b);
        }
    }
    return dm;
}

ComplexMatrix observed_z_block(const Topology& t) {
    const ComplexMatrix z = build_z_paths(t);
    const auto& obs = t.observed_ids();
    const Index m = static_cast<Index>(obs.size());
    ComplexMatrix block(m, m);
    for (Index a = 0; a < m; ++a) {
        for (Index b = 0; b < m; ++b) {
            block(a, b) = z(t.bus_index(obs[a]), t.bus_index(obs[b]));
        }
    }
    return block;
}

DistanceMatrix true_magnitude_distances(const Topology& t) {
    ZEstimate truth;
    truth.block = observed_z_block(t).cwiseAbs().cast<Complex>();
    truth.bus_order = t.observed_ids();
    truth.mode = DistanceMode::Magnitude;
    return distance_from_z(truth, false);
}

struct SelectionOutcome {
    std::optional<Clustering> clustering;
    std::vector<int> selected_rows;
    double lambda = 0.0;
};

/// Embedding features from deviation data: |v0 + dv| voltage magnitudes and
/// the reactive-power deviation proxy -Im(di) (exact for v0 = 1 p.u. up to
/// second-order terms).
SelectionOutcome run_selection_stage(const RunConfig& cfg,
                                     const ComplexMatrix& v_obs,
                                     const ComplexMatrix& i_obs) {
    SelectionOutcome out;
    const RealMatrix v_mag =
        (v_obs.array() + cfg.gen.v0).matrix().cwiseAbs();
    const RealMatrix q_dev = -i_obs.imag();
    out.lambda = cfg.selection.lambda > 0.0 ? cfg.selection.lambda
                                            : auto_lambda(v_mag, q_dev);
    const RealMatrix points = embed(v_mag, q_dev, out.lambda);
    out.clustering = kmeans(points, cfg.selection.k, cfg.selection.seed);
    const int q = cfg.selection.query_index;
    require(q >= 0 && q < points.rows(), "selection query index out of range");
    out.selected_rows =
        select_cluster(*out.clustering, points.row(q).transpose());
    const int min_size = min_cluster_size(static_cast<int>(i_obs.cols()));
    if (static_cast<int>(out.selected_rows.size()) < min_size) {
        throw std::runtime_error(
            "selected cluster too small for estimation: " +
            std::to_string(out.selected_rows.size()) + " < " +
            std::to_string(min_size) + " samples");
    }
    return out;
}

ComplexMatrix take_rows(const ComplexMatrix& m, const std::vector<int>& rows) {
    ComplexMatrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.row(static_cast<Index>(r)) = m.row(rows[r]);
    }
    return out;
}

struct Estimation {
    ZEstimate z;
    DistanceMatrix estimated;
    DistanceMatrix truth;
    ComplexMatrix i_obs;  // currents feeding the correlation CDF
    SelectionOutcome selection;
    Complex tree_scale{1.0, 0.0};  // recovered-to-truth distance scale
};

Estimation run_estimation(const RunConfig& cfg, const Topology& t,
                          const Dataset& data) {
    const auto& obs = t.observed_ids();
    require(!obs.empty(), "topology has no observed nodes");
    Estimation est;

    if (cfg.est_mode == "three_phase") {
        const ThreePhaseData& tp = *data.three_phase;
        std::array<ComplexMatrix, kPhaseCount> raw;
        for (int k = 0; k < kPhaseCount; ++k) raw[k] = tp.phase[k].i;
        const auto weighted = weighted_currents(cfg.four_wire, raw);
        const ComplexMatrix v_obs =
            select_columns(tp.phase[0].v, tp.phase[0].bus_order, obs);
        const ComplexMatrix i_obs =
            select_columns(weighted[0], tp.phase[0].bus_order, obs);
        est.z = estimate_z_plain(v_obs, i_obs, obs);
        est.estimated = distance_from_z(est.z, false);
        est.truth = true_complex_distances(t, cfg.four_wire.block_pattern(0, 0));
        est.i_obs = i_obs;
        est.tree_scale = cfg.four_wire.block_pattern(0, 0);
        return est;
    }

    ComplexMatrix v_obs = select_columns(data.ms.v, data.ms.bus_order, obs);
    ComplexMatrix i_obs = select_columns(data.ms.i, data.ms.bus_order, obs);
    est.i_obs = i_obs;

    if (cfg.est_mode == "plain") {
        est.z = estimate_z_plain(v_obs, i_obs, obs);
        est.estimated = distance_from_z(est.z, false);
        est.truth = true_complex_distances(t, Complex(1.0, 0.0));
    } else if (cfg.est_mode == "whitened") {
        est.z = estimate_z_whitened(v_obs, i_obs, obs);
        est.estimated = distance_from_z(est.z, true);
        est.truth = true_complex_distances(t, Complex(1.0, 0.0));
    } else if (cfg.est_mode == "magnitude") {
        if (cfg.selection.enabled) {
            est.selection = run_selection_stage(cfg, v_obs, i_obs);
            v_obs = take_rows(v_obs, est.selection.selected_rows);
            i_obs = take_rows(i_obs, est.selection.selected_rows);
            // Re-center within the selected collection so regime offsets do
            // not masquerade as signal.
            center_columns(v_obs);
            center_columns(i_obs);
        }
        est.z = estimate_z_magnitude(v_obs.cwiseAbs(), i_obs.cwiseAbs(), obs);
        est.estimated = distance_from_z(est.z, false);
        est.truth = true_magnitude_distances(t);
    } else {
        throw std::invalid_argument("unknown estimation mode: " + cfg.est_mode);
    }
    return est;
}

json report_to_json(const RunConfig& cfg, const EvalReport& report,
                    const RGTrace& trace) {
    json j;
    j["config_hash"] = cfg.config_hash;
    j["seed"] = cfg.seed;
    j["mode"] = cfg.est_mode;
    j["topology_exact"] = report.topology_exact;
    j["edge_f1"] = report.edge_f1;
    j["distance_error"] = {
        {"mode", report.distance_errors.mode == DistanceMode::Magnitude
                     ? "magnitude"
                     : "complex"},
        {"mean_real_pct", report.distance_errors.mean_real},
        {"mean_imag_pct", report.distance_errors.mean_imag},
        {"max_real_pct", report.distance_errors.max_real},
        {"max_imag_pct", report.distance_errors.max_imag},
    };
    j["correlation_cdf"] = report.correlation_cdf;
    j["warnings"] = trace.warnings;
    return j;
}

void write_provenance(const RunConfig& cfg, const std::string& name) {
    json j;
    j["config_hash"] = cfg.config_hash;
    j["seed"] = cfg.seed;
    j["mode"] = cfg.est_mode;
    j["gen_mode"] = to_string(cfg.gen.mode);
    j["n_samples"] = cfg.gen.mode == GenMode::TwoRegime ? cfg.two_regime.n_samples
                                                        : cfg.gen.n_samples;
    j["sigma_diag"] = cfg.gen.sigma_diag;
    write_text_file(out_path(cfg, name), j.dump(2) + "\n");
}

}  // namespace

void run_gen(const RunConfig& cfg) {
    const Topology t = stage("load", [&] { return load_topology(cfg.topology_path); });
    ensure_out_dir(cfg);
    stage("generate", [&] {
        if (cfg.est_mode == "three_phase" || cfg.gen.mode == GenMode::ThreePhase) {
            const ThreePhaseData tp = gen_three_phase(cfg.four_wire, t, cfg.gen);
            for (int k = 0; k < kPhaseCount; ++k) {
                save_measurements(tp.phase[k], t.observed_ids(),
                                  phase_file_name(out_path(cfg, "measurements.csv"), k));
            }
        } else {
            Dataset data = acquire_dataset(cfg, t);
            save_measurements(data.ms, t.observed_ids(),
                              out_path(cfg, "measurements.csv"));
        }
        return 0;
    });
    write_provenance(cfg, "provenance.json");
}

void run_select(const RunConfig& cfg) {
    const Topology t = stage("load", [&] { return load_topology(cfg.topology_path); });
    const Dataset data = stage("generate", [&] { return acquire_dataset(cfg, t); });
    ensure_out_dir(cfg);
    stage("select", [&] {
        const auto& obs = t.observed_ids();
        const ComplexMatrix v_obs = select_columns(data.ms.v, data.ms.bus_order, obs);
        const ComplexMatrix i_obs = select_columns(data.ms.i, data.ms.bus_order, obs);
        const SelectionOutcome out = run_selection_stage(cfg, v_obs, i_obs);
        save_assignments(out.clustering->assignment, out_path(cfg, "assignments.csv"));
        json meta;
        meta["lambda"] = out.lambda;
        meta["k"] = cfg.selection.k;
        meta["seed"] = cfg.selection.seed;
        meta["inertia"] = out.clustering->inertia;
        meta["selected_samples"] = out.selected_rows.size();
        meta["reseed_events"] = out.clustering->reseed_events;
        write_text_file(out_path(cfg, "selection.json"), meta.dump(2) + "\n");
        return 0;
    });
}

namespace {

void write_estimate(const RunConfig& cfg, const Estimation& est) {
    save_matrix_csv(est.z.block, est.z.bus_order, out_path(cfg, "z_estimate.csv"));
    json meta;
    meta["mode"] = est.z.mode == DistanceMode::Magnitude ? "magnitude" : "complex";
    meta["whitened"] = est.z.whitened;
    meta["config_hash"] = cfg.config_hash;
    if (cfg.est_mode == "magnitude" && !cfg.selection.enabled) {
        meta["note"] = "magnitudes of deviations approximated from full history";
    }
    write_text_file(out_path(cfg, "z_estimate_meta.json"), meta.dump(2) + "\n");
}

}  // namespace

void run_estimate(const RunConfig& cfg) {
    const Topology t = stage("load", [&] { return load_topology(cfg.topology_path); });
    const Dataset data = stage("generate", [&] { return acquire_dataset(cfg, t); });
    const Estimation est =
        stage("estimate", [&] { return run_estimation(cfg, t, data); });
    ensure_out_dir(cfg);
    write_estimate(cfg, est);
}

void run_reconstruct(const RunConfig& cfg) {
    const Topology t = stage("load", [&] { return load_topology(cfg.topology_path); });
    const Dataset data = stage("generate", [&] { return acquire_dataset(cfg, t); });
    const Estimation est =
        stage("estimate", [&] { return run_estimation(cfg, t, data); });
    RGTrace trace;
    const LatentTree tree = stage(
        "reconstruct", [&] { return recursive_grouping(est.estimated, cfg.rg, &trace); });
    ensure_out_dir(cfg);
    write_estimate(cfg, est);
    save_distance_matrix(est.estimated, out_path(cfg, "distances.csv"));
    save_latent_tree(tree, out_path(cfg, "recovered_topology.json"));
    write_text_file(out_path(cfg, "recovered_tree.dot"), to_dot(tree));
}

EvalReport run_evaluate(const RunConfig& cfg) {
    const Topology t = stage("load", [&] { return load_topology(cfg.topology_path); });
    const LatentTree recovered = stage("load", [&] {
        return load_latent_tree(out_path(cfg, "recovered_topology.json"));
    });
    EvalReport report;
    const MatchResult match =
        stage("evaluate", [&] { return tree_match(recovered, t); });
    report.topology_exact = match.exact;
    report.edge_f1 = match.edge_f1;
    json j;
    j["topology_exact"] = report.topology_exact;
    j["edge_f1"] = report.edge_f1;
    j["config_hash"] = cfg.config_hash;
    ensure_out_dir(cfg);
    write_text_file(out_path(cfg, "evaluation.json"), j.dump(2) + "\n");
    return report;
}

PipelineResult run_pipeline_on(const RunConfig& cfg, const Topology& t,
                               bool write_outputs) {
    const auto start = std::chrono::steady_clock::now();
    const Dataset data = stage("generate", [&] { return acquire_dataset(cfg, t); });
    const Estimation est =
        stage("estimate", [&] { return run_estimation(cfg, t, data); });

    PipelineResult result;
    result.recovered = stage("reconstruct", [&] {
        return recursive_grouping(est.estimated, cfg.rg, &result.trace);
    });

    stage("evaluate", [&] {
        LatentTree for_match = result.recovered;
        if (std::abs(est.tree_scale - Complex(1.0, 0.0)) > 0.0) {
            for (auto& e : for_match.edges) e.distance /= est.tree_scale;
        }
        const MatchResult match = tree_match(for_match, t);
        result.report.topology_exact = match.exact;
        result.report.edge_f1 = match.edge_f1;
        result.report.distance_errors = distance_error(est.estimated, est.truth);
        if (est.i_obs.cols() >= 2) {
            result.report.correlation_cdf = correlation_cdf(est.i_obs);
        }
        return 0;
    });
    result.estimated = est.estimated;
    result.truth = est.truth;

    const auto elapsed = std::chrono::steady_clock::now() - start;
    result.report.runtime_ms =
        std::chrono::duration<double, std::milli>(elapsed).count();

    if (write_outputs) {
        ensure_out_dir(cfg);
        write_estimate(cfg, est);
        save_distance_matrix(est.estimated, out_path(cfg, "distances.csv"));
        save_latent_tree(result.recovered, out_path(cfg, "recovered_topology.json"));
        write_text_file(out_path(cfg, "recovered_tree.dot"), to_dot(result.recovered));
        // report.json stays a pure function of the config: timing goes to
        // stderr, never into the output files.
        write_text_file(out_path(cfg, "report.json"),
                        report_to_json(cfg, result.report, result.trace).dump(2) + "\n");
        write_provenance(cfg, "provenance.json");
        if (est.selection.clustering) {
            save_assignments(est.selection.clustering->assignment,
                             out_path(cfg, "assignments.csv"));
        }
        std::cerr << "pipeline " << cfg.config_hash << " finished in "
                  << result.report.runtime_ms << " ms\n";
    }
    return result;
}

PipelineResult run_pipeline(const RunConfig& cfg, bool write_outputs) {
    const Topology t = stage("load", [&] { return load_topology(cfg.topology_path); });
    return run_pipeline_on(cfg, t, write_outputs);
}

BenchConfig parse_bench_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config parse error: ") + e.what());
    }
    BenchConfig cfg;
    cfg.sizes = get_field<std::vector<int>>(j, "/bench/sizes", cfg.sizes);
    cfg.hidden_fraction =
        get_field<double>(j, "/bench/hidden_fraction", cfg.hidden_fraction);
    cfg.modes = get_field<std::vector<std::string>>(j, "/bench/modes", cfg.modes);
    cfg.seeds = get_field<std::vector<std::uint64_t>>(j, "/bench/seeds", cfg.seeds);
    cfg.n_samples = get_field<int>(j, "/bench/n_samples", cfg.n_samples);
    cfg.sigma_diag = get_field<double>(j, "/bench/sigma_diag", cfg.sigma_diag);
    cfg.corr_offdiag = get_field<double>(j, "/bench/corr_offdiag", cfg.corr_offdiag);
    cfg.out_dir = get_field<std::string>(j, "/out", cfg.out_dir);
    return cfg;
}

void run_bench(const BenchConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ostringstream rows;
    rows << "size,mode,seed,status,exact,edge_f1,mean_real_pct,mean_imag_pct,"
            "max_real_pct,runtime_ms\n";

    struct Key {
        int size;
        std::string mode;
        auto operator<=>(const Key&) const = default;
    };
    struct Agg {
        int runs = 0, ok = 0, exact = 0;
        double mean_re = 0, mean_im = 0;
    };
    std::map<Key, Agg> summary;

    for (int size : cfg.sizes) {
        for (const auto& mode : cfg.modes) {
            for (std::uint64_t seed : cfg.seeds) {
                Agg& agg = summary[{size, mode}];
                ++agg.runs;
                rows << size << ',' << mode << ',' << seed << ',';
                try {
                    RandomTreeSpec tree_spec;
                    tree_spec.node_count = size;
                    tree_spec.hidden_fraction = cfg.hidden_fraction;
                    tree_spec.seed = phase_seed(seed, size);
                    const Topology t = random_radial_tree(tree_spec);

                    RunConfig run;
                    run.est_mode = mode;
                    run.seed = seed;
                    run.gen.n_samples = cfg.n_samples;
                    run.gen.sigma_diag = cfg.sigma_diag;
                    run.gen.seed = phase_seed(seed, 101);
                    run.two_regime.seed = phase_seed(seed, 102);
                    run.selection.seed = phase_seed(seed, 103);
                    run.corr_offdiag = cfg.corr_offdiag;
                    if (mode == "magnitude") {
                        run.gen.mode = GenMode::TwoRegime;
                        run.two_regime.n_samples = cfg.n_samples;
                        run.selection.enabled = true;
                    }
                    if (mode == "three_phase") run.four_wire = make_four_wire(0.2);

                    const PipelineResult res = run_pipeline_on(run, t, false);
                    const auto& err = res.report.distance_errors;
                    rows << "ok," << (res.report.topology_exact ? 1 : 0) << ','
                         << format_double(res.report.edge_f1) << ','
                         << format_double(err.mean_real) << ','
                         << format_double(err.mean_imag) << ','
                         << format_double(err.max_real) << ','
                         << format_double(res.report.runtime_ms) << '\n';
                    ++agg.ok;
                    agg.exact += res.report.topology_exact ? 1 : 0;
                    agg.mean_re += err.mean_real;
                    agg.mean_im += err.mean_imag;
                } catch (const std::exception& e) {
                    std::string msg = e.what();
                    std::replace(msg.begin(), msg.end(), ',', ';');
                    rows << "error: " << msg << ",,,,,,\n";
                }
            }
        }
    }
    write_text_file((std::filesystem::path(cfg.out_dir) / "bench.csv").string(),
                    rows.str());

    std::ostringstream sum;
    sum << "size,mode,runs,ok,recovery_rate,mean_real_pct,mean_imag_pct\n";
    for (const auto& [key, agg] : summary) {
        sum << key.size << ',' << key.mode << ',' << agg.runs << ',' << agg.ok << ',';
        if (agg.ok > 0) {
            sum << format_double(static_cast<double>(agg.exact) / agg.ok) << ','
                << format_double(agg.mean_re / agg.ok) << ','
                << format_double(agg.mean_im / agg.ok) << '\n';
        } else {
            sum << "0,0,0\n";
        }
    }
    write_text_file(
        (std::filesystem::path(cfg.out_dir) / "bench_summary.csv").string(),
        sum.str());
}

}  // namespace gridtree
