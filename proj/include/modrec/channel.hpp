#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "modrec/constellation.hpp"

namespace modrec {

enum class ChannelKind { Rotation, LinearMimo, TanhMimo };

struct ChannelConfig {
    ChannelKind kind = ChannelKind::Rotation;
    int users = 1;
    int antennas = 1;

    // Rotation channel
    double alpha = 2.5e-4;        // angle slope, phi_t = 2*pi*alpha*t
    double sigma_u2 = 1.0 / 16.0; // noise variance per real dimension

    // MIMO channels
    double rho = 0.995;           // Gauss-Markov memory of each H entry
    double snr_db = 10.0;         // sets the noise variance
    double tanh_scale = 0.5;      // c in tanh(c * (Hs + u))
    bool static_channel = false;  // freeze H at its t=0 draw

    std::uint64_t seed = 0;
    bool noiseless = false;       // test override, skips the additive noise

    void validate() const;
};

/// Time-varying channel. The channel state advances once per snapshot
/// index; noise is a pure function of (seed, snapshot, draw), so repeated
/// calls with the same arguments return the same output. The trajectory
/// cache is not thread-safe; give each worker its own instance.
class ChannelProcess {
public:
    explicit ChannelProcess(ChannelConfig cfg);

    /// Transmit symbol vector s during snapshot `snapshot`; `draw`
    /// disambiguates noise realizations within a snapshot.
    Eigen::VectorXd transmit(int snapshot, int draw, const Eigen::VectorXcd& s);

    double rotation_angle(int snapshot) const;
    const Eigen::MatrixXcd& channel_matrix(int snapshot);

    /// Noise variance per real dimension.
    double noise_variance() const { return noise_var_; }
    const ChannelConfig& config() const { return cfg_; }

    /// Real-composite 2x2 representation of the rotation at `snapshot`.
    Eigen::Matrix2d rotation_matrix(int snapshot) const;

private:
    void extend_trajectory(int snapshot);

    ChannelConfig cfg_;
    double noise_var_ = 0.0;
    std::vector<Eigen::MatrixXcd> h_cache_;
};

/// Stack a complex vector as [Re; Im].
Eigen::VectorXd to_real(const Eigen::VectorXcd& v);

}  // namespace modrec
