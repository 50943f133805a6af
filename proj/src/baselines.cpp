#include "modrec/baselines.hpp"

#include <stdexcept>

namespace modrec {

int map_decode(const Eigen::Vector2d& r, double phi, const Constellation& c) {
    Eigen::Matrix2d rot;
    rot << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < c.size(); ++i) {
        const cplx p = c.points[static_cast<std::size_t>(i)];
        const Eigen::Vector2d rotated = rot * Eigen::Vector2d(p.real(), p.imag());
        const double d = (r - rotated).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

void NlmsState::validate() const {
    if (step <= 0.0 || step >= 2.0) throw std::invalid_argument("nlms: step must be in (0,2)");
    if (reg <= 0.0) throw std::invalid_argument("nlms: regularizer must be positive");
}

void nlms_step(NlmsState& state, const Eigen::Vector2d& s_pilot, const Eigen::Vector2d& r) {
    state.validate();
    const Eigen::Vector2d err = r - state.h_hat * s_pilot;
    state.h_hat += state.step / (state.reg + s_pilot.squaredNorm()) * err * s_pilot.transpose();
}

int nlms_decode(const NlmsState& state, const Eigen::Vector2d& r, const Constellation& c) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < c.size(); ++i) {
        const cplx p = c.points[static_cast<std::size_t>(i)];
        const Eigen::Vector2d cand = state.h_hat * Eigen::Vector2d(p.real(), p.imag());
        const double d = (r - cand).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

Eigen::VectorXi mmse_detect(const Eigen::VectorXcd& r, const Eigen::MatrixXcd& h,
                            double noise_var, const Constellation& c) {
    if (h.rows() != r.size()) throw std::invalid_argument("mmse: dimension mismatch");
    const int users = static_cast<int>(h.cols());
    Eigen::MatrixXcd normal = h.adjoint() * h;
    normal.diagonal().array() += noise_var;
    Eigen::LLT<Eigen::MatrixXcd> llt(normal);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("mmse: normal matrix is singular");
    const Eigen::VectorXcd s_hat = llt.solve(h.adjoint() * r);
    Eigen::VectorXi decisions(users);
    for (int k = 0; k < users; ++k) decisions(k) = c.nearest(s_hat(k));
    return decisions;
}

}  // namespace modrec
