#include "modrec/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace modrec {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

using ConstW = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>;
using ConstB = Eigen::Map<const Eigen::VectorXd>;

ConstW weight_view(const MlpSpec& spec, const Eigen::VectorXd& theta, int l) {
    const int rows = spec.widths[static_cast<std::size_t>(l + 1)];
    const int cols = spec.widths[static_cast<std::size_t>(l)];
    return ConstW(theta.data() + spec.layer_offset(l), rows, cols);
}

ConstB bias_view(const MlpSpec& spec, const Eigen::VectorXd& theta, int l) {
    const int rows = spec.widths[static_cast<std::size_t>(l + 1)];
    const int cols = spec.widths[static_cast<std::size_t>(l)];
    return ConstB(theta.data() + spec.layer_offset(l) + rows * cols, rows);
}

void check_dims(const MlpSpec& spec, const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
    spec.validate();
    if (theta.size() != spec.param_count())
        throw std::invalid_argument("mlp: parameter vector length mismatch");
    if (x.size() != spec.input_dim())
        throw std::invalid_argument("mlp: input dimension mismatch");
}

/// Reverse pass from an output-side seed vector to a flat theta gradient.
/// seed is d(loss or output component)/d(output pre-activation).
void backprop_into(const MlpSpec& spec, const Eigen::VectorXd& theta, const ForwardTrace& tr,
                   Eigen::VectorXd seed, Eigen::Ref<Eigen::VectorXd> grad) {
    const int L = spec.layers();
    for (int l = L - 1; l >= 0; --l) {
        const int rows = spec.widths[static_cast<std::size_t>(l + 1)];
        const int cols = spec.widths[static_cast<std::size_t>(l)];
        const int off = spec.layer_offset(l);
        // Weight gradient is the outer product seed * act[l]^T, row-major flat.
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            gw(grad.data() + off, rows, cols);
        gw = seed * tr.act[static_cast<std::size_t>(l)].transpose();
        grad.segment(off + rows * cols, rows) = seed;
        if (l > 0) {
            seed = weight_view(spec, theta, l).transpose() * seed;
            const auto& pre = tr.pre[static_cast<std::size_t>(l - 1)];
            for (int i = 0; i < seed.size(); ++i)
                if (pre(i) <= 0.0) seed(i) = 0.0;  // ReLU gate, derivative 0 at the kink
        }
    }
}

}  // namespace

int MlpSpec::param_count() const {
    int p = 0;
    for (int l = 0; l + 1 < static_cast<int>(widths.size()); ++l)
        p += widths[static_cast<std::size_t>(l)] * widths[static_cast<std::size_t>(l + 1)] +
             widths[static_cast<std::size_t>(l + 1)];
    return p;
}

int MlpSpec::layer_offset(int l) const {
    int off = 0;
    for (int i = 0; i < l; ++i)
        off += widths[static_cast<std::size_t>(i)] * widths[static_cast<std::size_t>(i + 1)] +
               widths[static_cast<std::size_t>(i + 1)];
    return off;
}

void MlpSpec::validate() const {
    if (widths.size() < 2) throw std::invalid_argument("mlp: need at least input and output widths");
    for (int w : widths)
        if (w <= 0) throw std::invalid_argument("mlp: widths must be positive");
}

ForwardTrace mlp_forward_trace(const MlpSpec& spec, const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& x) {
    check_dims(spec, theta, x);
    const int L = spec.layers();
    ForwardTrace tr;
    tr.act.resize(static_cast<std::size_t>(L + 1));
    tr.pre.resize(static_cast<std::size_t>(L));
    tr.act[0] = x;
    for (int l = 0; l < L; ++l) {
        Eigen::VectorXd z = weight_view(spec, theta, l) * tr.act[static_cast<std::size_t>(l)] +
                            bias_view(spec, theta, l);
        tr.pre[static_cast<std::size_t>(l)] = z;
        if (l + 1 < L) {
            tr.act[static_cast<std::size_t>(l + 1)] = z.cwiseMax(0.0);
        } else {
            tr.act[static_cast<std::size_t>(l + 1)] = z.unaryExpr([](double v) { return sigmoid(v); });
        }
    }
    return tr;
}

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& x) {
    return mlp_forward_trace(spec, theta, x).output();
}

Eigen::MatrixXd mlp_jacobian(const MlpSpec& spec, const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& x) {
    const ForwardTrace tr = mlp_forward_trace(spec, theta, x);
    const int B = spec.output_dim();
    const int P = spec.param_count();
    const Eigen::VectorXd& ell = tr.output();
    Eigen::MatrixXd H(B, P);
    for (int i = 0; i < B; ++i) {
        Eigen::VectorXd seed = Eigen::VectorXd::Zero(B);
        seed(i) = ell(i) * (1.0 - ell(i));  // sigmoid derivative
        Eigen::VectorXd row(P);
        backprop_into(spec, theta, tr, seed, row);
        H.row(i) = row;
    }
    return H;
}

Eigen::MatrixXd mlp_logit_jacobian(const MlpSpec& spec, const Eigen::VectorXd& theta,
                                   const Eigen::VectorXd& x) {
    const ForwardTrace tr = mlp_forward_trace(spec, theta, x);
    const int B = spec.output_dim();
    const int P = spec.param_count();
    Eigen::MatrixXd J(B, P);
    for (int i = 0; i < B; ++i) {
        Eigen::VectorXd seed = Eigen::VectorXd::Zero(B);
        seed(i) = 1.0;
        Eigen::VectorXd row(P);
        backprop_into(spec, theta, tr, seed, row);
        J.row(i) = row;
    }
    return J;
}

double mlp_ce_loss(const MlpSpec& spec, const Eigen::VectorXd& theta,
                   const Eigen::VectorXd& x, const Eigen::VectorXd& bits) {
    const Eigen::VectorXd ell = mlp_forward(spec, theta, x);
    double loss = 0.0;
    const double eps = 1e-12;
    for (int i = 0; i < ell.size(); ++i) {
        loss -= bits(i) * std::log(ell(i) + eps) + (1.0 - bits(i)) * std::log(1.0 - ell(i) + eps);
    }
    return loss;
}

Eigen::VectorXd mlp_ce_gradient(const MlpSpec& spec, const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& x, const Eigen::VectorXd& bits) {
    const ForwardTrace tr = mlp_forward_trace(spec, theta, x);
    // With a sigmoid output, d CE / d logit = ell - b; one reverse pass suffices.
    Eigen::VectorXd seed = tr.output() - bits;
    Eigen::VectorXd grad(spec.param_count());
    backprop_into(spec, theta, tr, seed, grad);
    return grad;
}

BernoulliMoments bernoulli_moments(const Eigen::VectorXd& ell) {
    BernoulliMoments m;
    m.mean = ell;
    m.var = ell.array() * (1.0 - ell.array());
    return m;
}

}  // namespace modrec
