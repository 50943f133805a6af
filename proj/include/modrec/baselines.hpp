#pragma once

#include <Eigen/Dense>

#include "modrec/constellation.hpp"

namespace modrec {

/// Nearest neighbor in the rotated constellation; with isotropic Gaussian
/// noise and equiprobable symbols this is the MAP rule. Ties break toward
/// the lowest symbol index.
int map_decode(const Eigen::Vector2d& r, double phi, const Constellation& c);

/// Real-composite 2x2 NLMS channel estimator for the rotation scenario.
struct NlmsState {
    Eigen::Matrix2d h_hat = Eigen::Matrix2d::Identity();
    double step = 0.5;   // eta in (0,2)
    double reg = 1e-6;   // delta

    void validate() const;
};

void nlms_step(NlmsState& state, const Eigen::Vector2d& s_pilot, const Eigen::Vector2d& r);

/// Minimum-distance decoding against the estimated channel.
int nlms_decode(const NlmsState& state, const Eigen::Vector2d& r, const Constellation& c);

/// Linear MMSE detection with full CSI, then per-user nearest-point
/// slicing. Returns one symbol index per user.
Eigen::VectorXi mmse_detect(const Eigen::VectorXcd& r, const Eigen::MatrixXcd& h,
                            double noise_var, const Constellation& c);

}  // namespace modrec
