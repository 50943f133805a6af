#pragma once

#include <deque>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "modrec/learners.hpp"

namespace modrec {

struct ReceiverTopology {
    int users = 1;      // K
    int antennas = 1;   // N
    int bits = 2;       // B per user
    int sic_iters = 3;  // Q
    int hidden = 24;    // hidden width of each module MLP

    int module_input_dim() const { return 2 * antennas + users * bits; }
    void validate() const;
};

/// One network plus whatever the selected updater tracks for it: a Gaussian
/// belief for the Bayesian rules, a bare parameter vector otherwise.
struct ModuleState {
    MlpSpec spec;
    bool bayesian = false;
    GaussianBelief belief;
    Eigen::VectorXd theta;
    std::mt19937_64 rng;

    const Eigen::VectorXd& inference_params() const { return bayesian ? belief.mu : theta; }
};

ModuleState make_module(const MlpSpec& spec, const UpdaterConfig& cfg, const SsmHyper& ssm,
                        std::uint64_t seed);

/// Predict + single-step update with the configured rule. SgdBatch and None
/// leave the module untouched (SGD trains from a snapshot buffer instead).
void apply_module_update(ModuleState& m, const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                         const SsmHyper& ssm, const UpdaterConfig& cfg);

Eigen::VectorXi hard_decide(const Eigen::VectorXd& ell);

/// Eq.-style module input: received signal followed by the previous
/// iteration's soft estimates, user by user.
Eigen::VectorXd assemble_input(const Eigen::VectorXd& r, const Eigen::VectorXd& ell_prev);

struct PipelineOutput {
    long sample_index = 0;
    Eigen::VectorXd ell;      // final-layer soft estimates, length K*B
    bool pilot = false;
    int layers_applied = 0;   // instrumentation: SIC stages this sample passed
    int updates_applied = 0;  // instrumentation: module updates triggered by it
};

/// DeepSIC: K x Q lattice of compact modules exchanging soft estimates,
/// driven either sample-at-a-time through the Q-deep pipeline or as a
/// plain batched forward pass.
class DeepSic {
public:
    DeepSic(const ReceiverTopology& topo, const UpdaterConfig& cfg, const SsmHyper& ssm,
            std::uint64_t seed);

    const ReceiverTopology& topology() const { return topo_; }
    ModuleState& module(int k, int q) { return modules_[idx(k, q)]; }
    const ModuleState& module(int k, int q) const { return modules_[idx(k, q)]; }

    /// Q sequential SIC iterations with plug-in parameters.
    Eigen::VectorXd forward(const Eigen::VectorXd& r) const;

    /// Advance the staggered pipeline by one received sample. Emits the
    /// final soft estimates of the sample leaving the pipe (delay Q-1).
    std::optional<PipelineOutput> pipelined_step(const Eigen::VectorXd& r, bool pilot,
                                                 const Eigen::VectorXd& bits = {});
    void reset_pipeline();
    void set_training_enabled(bool on) { training_enabled_ = on; }
    void set_parallel_modules(bool on) { parallel_modules_ = on; }

    /// Snapshot-buffer training path for the non-streaming SGD baseline:
    /// layers are fitted in order on the buffered pilots of one snapshot.
    void train_sgd_snapshot(const std::vector<PilotSample>& pilots);

private:
    struct InFlight {
        long sample_index;
        Eigen::VectorXd r;
        bool pilot;
        Eigen::VectorXd bits;
        Eigen::VectorXd ell;  // output of the last stage this sample passed
        int layers_applied = 0;
        int updates_applied = 0;
    };

    std::size_t idx(int k, int q) const {
        return static_cast<std::size_t>(q) * static_cast<std::size_t>(topo_.users) +
               static_cast<std::size_t>(k);
    }
    void run_stage(int q, InFlight& e);

    ReceiverTopology topo_;
    UpdaterConfig cfg_;
    SsmHyper ssm_;
    std::vector<ModuleState> modules_;
    std::deque<InFlight> pipe_;
    long next_sample_ = 0;
    bool training_enabled_ = true;
    bool parallel_modules_ = false;
};

/// Single fully-connected network mapping the received signal directly to
/// all users' soft bits; trainable by the same update rules.
class MonolithicReceiver {
public:
    MonolithicReceiver(const ReceiverTopology& topo, const std::vector<int>& hidden_widths,
                       const UpdaterConfig& cfg, const SsmHyper& ssm, std::uint64_t seed);

    Eigen::VectorXd forward(const Eigen::VectorXd& r) const;
    void update(const Eigen::VectorXd& r, const Eigen::VectorXd& bits);
    void train_sgd_snapshot(const std::vector<PilotSample>& pilots);
    ModuleState& state() { return state_; }

private:
    UpdaterConfig cfg_;
    SsmHyper ssm_;
    ModuleState state_;
};

}  // namespace modrec
