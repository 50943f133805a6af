#pragma once

#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "modrec/belief.hpp"
#include "modrec/mlp.hpp"

namespace modrec {

enum class UpdaterKind { CmEkf, VdEkf, LoFi, BongEf, BbbOnline, GdOnline, SgdBatch, None };

struct UpdaterConfig {
    UpdaterKind kind = UpdaterKind::CmEkf;
    int rank = 10;        // Lo-Fi / Dlr rank R
    int samples = 10;     // BONG-EF sample count M (antithetic pairs)
    int iters = 10;       // GD / BBB iterations, SGD epochs
    int batch = 4;        // SGD batch size J
    double lr = 1e-2;
    double obs_cov_floor = 1e-6;
    bool dlr_diag_refresh = true;  // fold truncated mass back into the diagonal
    int full_cov_param_cap = 20000;  // refuse full-covariance updates past this P
    CovKind bong_cov = CovKind::Full;
};

/// Raised when a full-covariance method is asked to run at a parameter
/// count beyond the configured memory cap.
struct CapabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Single-step Bayesian updates. All of them consume the *predicted*
// belief (after the state-evolution step) and return the posterior.

GaussianBelief cmekf_update(const GaussianBelief& pred, const MlpSpec& spec,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                            const UpdaterConfig& cfg = {});

GaussianBelief vdekf_update(const GaussianBelief& pred, const MlpSpec& spec,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                            const UpdaterConfig& cfg = {});

GaussianBelief lofi_update(const GaussianBelief& pred, const MlpSpec& spec,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                           const UpdaterConfig& cfg = {}, double* truncation_residual = nullptr);

/// Natural-gradient step with the linearized-Gaussian expectations written
/// in information form. Full covariance only; kept as a separate algebraic
/// route from cmekf_update.
GaussianBelief bong_a1_update(const GaussianBelief& pred, const MlpSpec& spec,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                              const UpdaterConfig& cfg = {});

/// Natural-gradient step with the empirical-Fisher precision increment,
/// estimated from M sampled weight vectors (antithetic pairs).
GaussianBelief bong_ef_update(const GaussianBelief& pred, const MlpSpec& spec,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                              std::mt19937_64& rng, const UpdaterConfig& cfg = {});

/// I gradient steps on the per-sample online ELBO over (mu, var).
GaussianBelief bbb_online_update(const GaussianBelief& pred, const MlpSpec& spec,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                                 const UpdaterConfig& cfg = {});

Eigen::VectorXd gd_online_update(const Eigen::VectorXd& theta, const MlpSpec& spec,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                                 int iters, double lr);

struct PilotSample {
    Eigen::VectorXd x;
    Eigen::VectorXd bits;
};

Eigen::VectorXd sgd_batch_update(const Eigen::VectorXd& theta, const MlpSpec& spec,
                                 const std::vector<PilotSample>& buffer, int epochs,
                                 int batch, double lr, std::mt19937_64& rng);

}  // namespace modrec
