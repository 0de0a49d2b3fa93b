#pragma once

#include "gridtree/evalx.hpp"
#include "gridtree/io.hpp"
#include "gridtree/rg.hpp"
#include "gridtree/selection.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gridtree {

struct SelectionConfig {
    bool enabled = false;
    double lambda = -1.0;  // <= 0 selects the variance-balancing default
    int k = 3;
    int query_index = 0;
    std::uint64_t seed = 0;
};

struct RunConfig {
    std::string topology_path;
    std::string measurements_path;  // optional pre-generated dataset
    std::string out_dir = "out";
    std::string est_mode = "plain";  // plain | whitened | magnitude | three_phase
    std::uint64_t seed = 0;
    GenSpec gen;
    TwoRegimeSpec two_regime;
    FourWireSpec four_wire;
    SelectionConfig selection;
    RGConfig rg;
    double corr_offdiag = 0.0;  // equicorrelation shorthand for gen.corr
    std::string config_hash;
};

/// Shorthand four-wire pattern: unit phase self-impedances, reduced neutral
/// and ground selfs, and a common mutual coupling factor.
FourWireSpec make_four_wire(double mutual,
                            std::array<bool, kPhaseCount> present = {true, true,
                                                                     true, true},
                            std::array<double, kPhaseCount> injection = {1.0, 1.0,
                                                                         1.0, 0.0});

/// Parses and validates a run config; errors carry the JSON pointer of the
/// offending field.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Applies the GRIDTREE_SEED environment override, if set.
void apply_seed_override(RunConfig& cfg);

struct PipelineResult {
    EvalReport report;
    LatentTree recovered;
    DistanceMatrix estimated;
    DistanceMatrix truth;
    RGTrace trace;
};

/// Dataset generation: measurement CSV(s) plus a provenance JSON.
void run_gen(const RunConfig& cfg);

/// Embedding + clustering only; writes "t,cluster" assignments.
void run_select(const RunConfig& cfg);

/// Impedance estimation only; writes the Z block with a mode sidecar.
void run_estimate(const RunConfig& cfg);

/// Estimation + recursive grouping; writes the recovered topology and DOT.
void run_reconstruct(const RunConfig& cfg);

/// Scores a previously written reconstruction against the true topology.
EvalReport run_evaluate(const RunConfig& cfg);

/// Full generate -> (select) -> estimate -> reconstruct -> evaluate chain.
/// All file outputs are deterministic functions of the config (timing goes
/// to stderr only).
PipelineResult run_pipeline(const RunConfig& cfg, bool write_outputs = true);

/// Same pipeline with an in-memory topology (used by the benchmark grid).
PipelineResult run_pipeline_on(const RunConfig& cfg, const Topology& t,
                               bool write_outputs);

struct BenchConfig {
    std::vector<int> sizes{8, 19, 33};
    double hidden_fraction = 0.25;
    std::vector<std::string> modes{"plain"};
    std::vector<std::uint64_t> seeds{1};
    int n_samples = 8760;
    double sigma_diag = 0.025;
    double corr_offdiag = 0.0;
    std::string out_dir = "out";
};

BenchConfig parse_bench_config(const std::string& json_text);

/// One row per (size, mode, seed) with per-row failure capture; writes
/// bench.csv and bench_summary.csv.
void run_bench(const BenchConfig& cfg);

}  // namespace gridtree
