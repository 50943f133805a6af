#pragma once

#include <string>
#include <vector>

#include "modrec/harness/config.hpp"

namespace modrec {

/// Per-(trial, snr, block) metrics over the data-bearing symbols.
struct BlockRecord {
    int trial = 0;
    double snr_db = 0.0;
    int block = 0;
    double ber = 0.0;
    double ser = 0.0;
    long data_bits = 0;
    long data_symbols = 0;
    long pilots_seen = 0;        // cumulative
    double update_mean_us = 0.0; // per-pilot update latency in this block
    double update_p95_us = 0.0;
};

struct SnrSummary {
    double snr_db = 0.0;
    double ber_mean = 0.0;  // mean over trials of per-trial data BER
    double ber_std = 0.0;
    std::vector<double> per_trial_ber;
};

struct RunResult {
    std::string updater_label;
    std::string scenario;  // "rotation" | "linear-mimo" | "tanh-mimo"
    std::vector<BlockRecord> blocks;
    std::vector<SnrSummary> summaries;
};

RunResult run_experiment(const ExperimentConfig& cfg);

/// Worker count for the (trial, snr) task pool; honors MODREC_WORKERS.
int worker_count();

}  // namespace modrec
