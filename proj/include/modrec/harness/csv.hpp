#pragma once

#include <string>
#include <vector>

#include "modrec/harness/latency.hpp"
#include "modrec/harness/runner.hpp"

namespace modrec {

/// Write the plot-ready CSVs into `out_dir`:
///   ber_vs_snr.csv   updater, snr_db, ber_mean, ber_std
///   ber_vs_time.csv  updater, snr_db, block, ber
///   ser_rotation.csv updater, block, ser      (rotation runs only)
///   latency.csv      updater, repr, P, mean_us, p95_us
/// Headers are always written; empty inputs yield header-only files.
void emit_csv(const std::vector<RunResult>& runs, const std::vector<LatencyRow>& latency,
              const std::string& out_dir);

/// Minimal CSV reader (no quoting; our emitters never need it).
std::vector<std::vector<std::string>> read_csv(const std::string& path);

}  // namespace modrec
