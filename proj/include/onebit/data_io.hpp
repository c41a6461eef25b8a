#pragma once

// Plain-text data files. Observations: CSV with header `i,j,y`, 1-based
// indices, y in {-1, 1}. Matrices (including Pi): headerless CSV, one row per
// line, full precision. Chain dumps: CSV of flattened samples plus a JSON
// diagnostics sidecar.

#include <filesystem>

#include "onebit/chains.hpp"
#include "onebit/core_model.hpp"

namespace onebit {

void write_observations_csv(const ObservationSet& data, const std::filesystem::path& path);

/// Converts to 0-based indices. With d1, d2 > 0 the indices are range-checked.
ObservationSet read_observations_csv(const std::filesystem::path& path, int d1 = 0, int d2 = 0);

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);

SamplingDistribution read_pi_csv(const std::filesystem::path& path);

/// Header `sample,m_1_1,m_1_2,...` (row-major, 1-based), one line per kept sample.
void write_chain_csv(const Chain& chain, const std::filesystem::path& path);

/// Seed, target, acceptance rates and step-size trajectories.
void write_chain_diagnostics_json(const Chain& chain, const std::filesystem::path& path);

}  // namespace onebit
