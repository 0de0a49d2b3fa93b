#pragma once

#include "gridtree/impedance.hpp"
#include "gridtree/synth_data.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gridtree {

/// Long-format measurement CSV "t,bus,v_re,v_im,i_re,i_im"; only the given
/// bus ids (normally the observed set) are written.
void save_measurements(const MeasurementSet& ms, const std::vector<int>& bus_ids,
                       const std::string& path);

/// Loads a measurement CSV; the set spans exactly the bus ids present in
/// the file.
MeasurementSet load_measurements(const std::string& path);

/// Square complex matrix as CSV with a bus-order header; entries written as
/// re/im column pairs.
void save_matrix_csv(const ComplexMatrix& m, const std::vector<int>& bus_order,
                     const std::string& path);

void save_distance_matrix(const DistanceMatrix& d, const std::string& path);

/// Cluster assignment export "t,cluster".
void save_assignments(const std::vector<int>& assignment, const std::string& path);

/// FNV-1a 64-bit content hash, stable across runs and platforms.
std::uint64_t fnv1a(const std::string& data);
std::string hash_hex(std::uint64_t h);

/// Full-precision float formatting shared by all writers so identical runs
/// produce byte-identical files.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace gridtree
