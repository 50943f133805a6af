#include "modrec/channel.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace modrec {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 noise_rng(std::uint64_t seed, int snapshot, int draw) {
    std::uint64_t s = splitmix64(seed ^ 0x6e6f697365ULL);
    s = splitmix64(s ^ static_cast<std::uint64_t>(snapshot));
    s = splitmix64(s ^ (static_cast<std::uint64_t>(draw) << 20));
    return std::mt19937_64(s);
}

}  // namespace

void ChannelConfig::validate() const {
    if (kind == ChannelKind::Rotation) {
        if (users != 1 || antennas != 1)
            throw std::invalid_argument("channel: rotation channel requires K=1, N=1");
        if (sigma_u2 < 0.0) throw std::invalid_argument("channel: sigma_u2 must be >= 0");
    } else {
        if (users <= 0 || antennas <= 0)
            throw std::invalid_argument("channel: users and antennas must be positive");
        if (rho <= 0.0 || rho >= 1.0)
            throw std::invalid_argument("channel: rho must be in (0,1)");
    }
}

ChannelProcess::ChannelProcess(ChannelConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.kind == ChannelKind::Rotation) {
        noise_var_ = cfg_.sigma_u2;
    } else {
        // Average received signal power per real dimension is K/2 for
        // unit-variance H entries and unit-energy symbols.
        const double sig_power = cfg_.users / 2.0;
        noise_var_ = sig_power / std::pow(10.0, cfg_.snr_db / 10.0);
    }
}

double ChannelProcess::rotation_angle(int snapshot) const {
    return 2.0 * M_PI * cfg_.alpha * static_cast<double>(snapshot);
}

Eigen::Matrix2d ChannelProcess::rotation_matrix(int snapshot) const {
    const double phi = rotation_angle(snapshot);
    Eigen::Matrix2d R;
    R << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    return R;
}

void ChannelProcess::extend_trajectory(int snapshot) {
    const int want = cfg_.static_channel ? 0 : snapshot;
    if (static_cast<int>(h_cache_.size()) > want) return;

    // Replay the whole recursion from the seed so the trajectory is a pure
    // function of (seed, snapshot) no matter how the cache was filled.
    std::mt19937_64 rng(splitmix64(cfg_.seed ^ 0x7472616aULL));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double comp_sd = std::sqrt(0.5);  // unit-variance complex entries
    const double innov_scale = std::sqrt(1.0 - cfg_.rho * cfg_.rho);

    auto draw_matrix = [&]() {
        Eigen::MatrixXcd M(cfg_.antennas, cfg_.users);
        for (int i = 0; i < cfg_.antennas; ++i)
            for (int j = 0; j < cfg_.users; ++j)
                M(i, j) = cplx(gauss(rng) * comp_sd, gauss(rng) * comp_sd);
        return M;
    };

    Eigen::MatrixXcd H = draw_matrix();
    if (h_cache_.empty()) h_cache_.push_back(H);
    for (int t = 1; t <= want; ++t) {
        H = cfg_.rho * H + innov_scale * draw_matrix();
        if (t >= static_cast<int>(h_cache_.size())) h_cache_.push_back(H);
    }
}

const Eigen::MatrixXcd& ChannelProcess::channel_matrix(int snapshot) {
    if (cfg_.kind == ChannelKind::Rotation)
        throw std::logic_error("channel: rotation channel has no matrix trajectory");
    extend_trajectory(snapshot);
    const int idx = cfg_.static_channel ? 0 : snapshot;
    return h_cache_[static_cast<std::size_t>(idx)];
}

Eigen::VectorXd ChannelProcess::transmit(int snapshot, int draw, const Eigen::VectorXcd& s) {
    if (s.size() != cfg_.users)
        throw std::invalid_argument("channel: symbol vector dimension mismatch");

    if (cfg_.kind == ChannelKind::Rotation) {
        Eigen::Vector2d sr(s(0).real(), s(0).imag());
        Eigen::Vector2d r = rotation_matrix(snapshot) * sr;
        if (!cfg_.noiseless) {
            auto rng = noise_rng(cfg_.seed, snapshot, draw);
            std::normal_distribution<double> gauss(0.0, std::sqrt(noise_var_));
            r(0) += gauss(rng);
            r(1) += gauss(rng);
        }
        return r;
    }

    Eigen::VectorXcd y = channel_matrix(snapshot) * s;
    Eigen::VectorXd r = to_real(y);
    if (!cfg_.noiseless) {
        auto rng = noise_rng(cfg_.seed, snapshot, draw);
        std::normal_distribution<double> gauss(0.0, std::sqrt(noise_var_));
        for (int i = 0; i < r.size(); ++i) r(i) += gauss(rng);
    }
    if (cfg_.kind == ChannelKind::TanhMimo) {
        for (int i = 0; i < r.size(); ++i) r(i) = std::tanh(cfg_.tanh_scale * r(i));
    }
    return r;
}

Eigen::VectorXd to_real(const Eigen::VectorXcd& v) {
    Eigen::VectorXd out(2 * v.size());
    out.head(v.size()) = v.real();
    out.tail(v.size()) = v.imag();
    return out;
}

}  // namespace modrec
