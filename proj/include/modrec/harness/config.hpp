#pragma once

#include <string>
#include <vector>

#include "modrec/channel.hpp"
#include "modrec/learners.hpp"
#include "modrec/receiver.hpp"
#include "modrec/schedule.hpp"

namespace modrec {

enum class ReceiverType { DeepSic, Monolithic };

struct ExperimentConfig {
    int schema = 1;

    // scenario
    ChannelConfig channel;
    std::vector<double> snr_grid_db = {10.0};
    std::string constellation = "qpsk";

    // receiver
    ReceiverType receiver = ReceiverType::DeepSic;
    ReceiverTopology topology;
    std::vector<int> monolithic_hidden = {10};

    // updater + state-space hyperparameters
    UpdaterConfig updater;
    SsmHyper ssm;

    TransmissionSchedule schedule;

    int trials = 1;
    std::uint64_t seed = 0;

    Constellation make_constellation() const;

    /// Collect every validation failure; empty means the config is runnable.
    std::vector<std::string> validate() const;
};

/// Bundled scenario presets: "rotation", "mimo-linear", "mimo-nonlinear",
/// "mimo-sparse-pilots".
ExperimentConfig preset_config(const std::string& name);

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

std::string updater_kind_name(UpdaterKind k);
UpdaterKind updater_kind_from_name(const std::string& name);
std::string cov_kind_name(CovKind k);

}  // namespace modrec
