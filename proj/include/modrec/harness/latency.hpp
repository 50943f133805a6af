#pragma once

#include <string>
#include <vector>

#include "modrec/harness/config.hpp"

namespace modrec {

struct LatencyRow {
    std::string updater;
    std::string repr;   // full | diag | dlr | point
    int params = 0;
    double mean_us = 0.0;
    double p95_us = 0.0;
    bool refused = false;  // capability policy blocked this combination
};

struct LatencyProbe {
    UpdaterConfig updater;
    SsmHyper ssm;
    std::string label;
};

/// Streaming-updater roster used for the latency table.
std::vector<LatencyProbe> default_latency_roster();

/// Warmed-up mean/p95 wall time per single-sample update, measured on one
/// thread. Each hidden width defines one module size P.
std::vector<LatencyRow> measure_latency(const std::vector<LatencyProbe>& roster,
                                        int input_dim, int output_bits,
                                        const std::vector<int>& hidden_widths,
                                        int updates = 1000, int warmup = 100,
                                        std::uint64_t seed = 1);

std::string repr_of(const UpdaterConfig& cfg);

}  // namespace modrec
