#pragma once

// Harness output files: runs.csv (one row per run, locked column order) and
// summary.json (grid medians, slopes, bound checks, pointwise check totals).

#include <filesystem>
#include <string>
#include <vector>

#include "onebit/harness.hpp"

namespace onebit {

extern const char* const kRunsCsvHeader;

void write_runs_csv(const std::vector<RunResult>& runs, const std::filesystem::path& path);

/// Reads back a runs.csv. Fields outside the locked columns (MCSEs,
/// pointwise check counts, diagnostics) are left at their defaults, except
/// constants.C1 which carries thr_hellinger / thr_frobenius (and C_kappa = 1)
/// so that check_runs reproduces the original Frobenius thresholds.
std::vector<RunResult> read_runs_csv(const std::filesystem::path& path);

std::string summary_json(const SweepReport& report);

/// Writes runs.csv and summary.json into dir (created if missing).
void emit_report(const SweepReport& report, const std::filesystem::path& dir);

}  // namespace onebit
