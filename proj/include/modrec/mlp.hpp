#pragma once

#include <vector>

#include <Eigen/Dense>

namespace modrec {

/// Feed-forward network: ReLU hidden layers, element-wise sigmoid output.
/// Parameters live in one flat vector, laid out layer by layer as the
/// row-major weight matrix followed by the bias vector. This layout is
/// part of the public contract; beliefs address coordinates through it.
struct MlpSpec {
    std::vector<int> widths;  // [d_in, hidden..., d_out]

    int input_dim() const { return widths.front(); }
    int output_dim() const { return widths.back(); }
    int layers() const { return static_cast<int>(widths.size()) - 1; }
    int param_count() const;

    /// Flat offset of layer l's weight block (biases follow the weights).
    int layer_offset(int l) const;

    void validate() const;
};

/// Intermediate activations kept for Jacobian/gradient passes.
struct ForwardTrace {
    std::vector<Eigen::VectorXd> act;  // act[0] = x, act[l] = post-activation of layer l
    std::vector<Eigen::VectorXd> pre;  // pre[l] = pre-activation of layer l
    const Eigen::VectorXd& output() const { return act.back(); }
};

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& x);
ForwardTrace mlp_forward_trace(const MlpSpec& spec, const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& x);

/// d output / d theta, exact; ReLU subgradient at 0 taken as 0.
Eigen::MatrixXd mlp_jacobian(const MlpSpec& spec, const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& x);

/// d logits / d theta (output layer pre-sigmoid).
Eigen::MatrixXd mlp_logit_jacobian(const MlpSpec& spec, const Eigen::VectorXd& theta,
                                   const Eigen::VectorXd& x);

/// Binary cross-entropy summed over output bits, and its theta-gradient.
double mlp_ce_loss(const MlpSpec& spec, const Eigen::VectorXd& theta,
                   const Eigen::VectorXd& x, const Eigen::VectorXd& bits);
Eigen::VectorXd mlp_ce_gradient(const MlpSpec& spec, const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& x, const Eigen::VectorXd& bits);

/// Bernoulli mean and per-bit variance induced by soft estimates.
struct BernoulliMoments {
    Eigen::VectorXd mean;
    Eigen::VectorXd var;  // diagonal of the covariance
};
BernoulliMoments bernoulli_moments(const Eigen::VectorXd& ell);

}  // namespace modrec
