#include "modrec/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace modrec {

namespace {

struct Linearization {
    Eigen::VectorXd ell;
    Eigen::MatrixXd h;   // B x P Jacobian at the predicted mean
    Eigen::VectorXd rt;  // floored Bernoulli variances
};

Linearization linearize(const GaussianBelief& pred, const MlpSpec& spec,
                        const Eigen::VectorXd& x, const UpdaterConfig& cfg) {
    Linearization lin;
    lin.ell = mlp_forward(spec, pred.mu, x);
    lin.h = mlp_jacobian(spec, pred.mu, x);
    lin.rt = floor_obs_cov(bernoulli_moments(lin.ell).var, cfg.obs_cov_floor);
    return lin;
}

/// Cholesky of the innovation matrix with one jittered retry.
Eigen::LLT<Eigen::MatrixXd> innovation_llt(Eigen::MatrixXd m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        m.diagonal().array() += 1e-9;
        llt.compute(m);
        if (llt.info() != Eigen::Success)
            throw NumericalError("update: innovation matrix is not positive definite");
    }
    return llt;
}

void check_bits(const Eigen::VectorXd& bits, const MlpSpec& spec) {
    if (bits.size() != spec.output_dim())
        throw std::invalid_argument("update: label dimension mismatch");
}

/// Exact in-place symmetrization. A triangular sweep avoids both the
/// transpose-aliasing pitfall and the cache-hostile full-matrix transpose.
void symmetrize(Eigen::MatrixXd& m) {
    const Eigen::Index n = m.rows();
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double a = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = a;
            m(j, i) = a;
        }
}

/// Batched Marsaglia-polar draw of n standard normals. Per-coordinate
/// std::normal_distribution calls dominate sampling-based updates at
/// realistic parameter counts; the polar method needs no trig, so the
/// log/sqrt transform runs vectorized over whole chunks.
Eigen::VectorXd sample_std_normal(int n, std::mt19937_64& rng) {
    Eigen::VectorXd z(n);
    constexpr int kChunk = 128;
    constexpr double kScale = 2.0 / 9007199254740992.0;  // maps [0, 2^53) to [0, 2)
    Eigen::ArrayXd u(kChunk), v(kChunk);
    // One engine draw seeds a splitmix64 expansion for the whole batch:
    // deterministic given the caller's engine state, but far cheaper per
    // uniform than advancing the Mersenne twister coordinate by coordinate.
    std::uint64_t state = rng();
    auto next_u64 = [&state]() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    int filled = 0;
    while (filled < n) {
        for (int i = 0; i < kChunk; ++i) {
            u(i) = static_cast<double>(next_u64() >> 11) * kScale - 1.0;
            v(i) = static_cast<double>(next_u64() >> 11) * kScale - 1.0;
        }
        const Eigen::ArrayXd s = u.square() + v.square();
        // Transform every entry (vectorized), then keep the accepted ones.
        const Eigen::ArrayXd f = (-2.0 * s.log() / s.max(1e-300)).sqrt();
        for (int i = 0; i < kChunk && filled < n; ++i) {
            if (s(i) >= 1.0 || s(i) <= 0.0) continue;
            z(filled++) = u(i) * f(i);
            if (filled < n) z(filled++) = v(i) * f(i);
        }
    }
    return z;
}

void check_full_cap(const MlpSpec& spec, const UpdaterConfig& cfg) {
    if (spec.param_count() > cfg.full_cov_param_cap)
        throw CapabilityError("full-covariance update refused: P=" +
                              std::to_string(spec.param_count()) + " exceeds cap " +
                              std::to_string(cfg.full_cov_param_cap));
}

/// Truncate a precision-space low-rank factor, folding the dropped
/// diagonal back into d.
void truncate_prec_factor(Eigen::VectorXd& d, Eigen::MatrixXd& w, int rank, bool absorb) {
    if (w.cols() <= rank) {
        if (w.cols() < rank) {
            Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(d.size(), rank);
            padded.leftCols(w.cols()) = w;
            w = padded;
        }
        return;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const Eigen::MatrixXd& u = svd.matrixU();
    Eigen::MatrixXd kept = Eigen::MatrixXd::Zero(d.size(), rank);
    for (int j = 0; j < rank && j < s.size(); ++j) kept.col(j) = u.col(j) * s(j);
    if (absorb) {
        for (int j = rank; j < s.size(); ++j)
            d.array() += (u.col(j) * s(j)).array().square();
    }
    w = kept;
}

}  // namespace

GaussianBelief cmekf_update(const GaussianBelief& pred, const MlpSpec& spec,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                            const UpdaterConfig& cfg) {
    if (pred.kind != CovKind::Full) throw std::invalid_argument("cmekf: requires full covariance");
    check_bits(bits, spec);
    check_full_cap(spec, cfg);

    const Linearization lin = linearize(pred, spec, x, cfg);
    const Eigen::MatrixXd sh = pred.sigma * lin.h.transpose();  // P x B
    Eigen::MatrixXd innov_cov = lin.h * sh;
    innov_cov.diagonal() += lin.rt;
    const auto llt = innovation_llt(innov_cov);
    const Eigen::MatrixXd gain = llt.solve(sh.transpose()).transpose();  // P x B

    GaussianBelief post;
    post.kind = CovKind::Full;
    post.mu = pred.mu + gain * (bits - lin.ell);
    // accumulate the gemm in place instead of materializing K H Sigma
    post.sigma = pred.sigma;
    post.sigma.noalias() -= gain * sh.transpose();
    symmetrize(post.sigma);
    return post;
}

GaussianBelief vdekf_update(const GaussianBelief& pred, const MlpSpec& spec,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                            const UpdaterConfig& cfg) {
    if (pred.kind != CovKind::Diag) throw std::invalid_argument("vdekf: requires diagonal covariance");
    check_bits(bits, spec);

    const Linearization lin = linearize(pred, spec, x, cfg);
    const Eigen::MatrixXd sh = pred.var.asDiagonal() * lin.h.transpose();  // P x B
    Eigen::MatrixXd innov_cov = lin.h * sh;
    innov_cov.diagonal() += lin.rt;
    const auto llt = innovation_llt(innov_cov);
    const Eigen::MatrixXd gain = llt.solve(sh.transpose()).transpose();

    GaussianBelief post = pred;
    post.mu = pred.mu + gain * (bits - lin.ell);
    // Keep only the diagonal of the exact covariance update.
    const Eigen::VectorXd kh_diag = (gain.array() * lin.h.transpose().array()).rowwise().sum();
    post.var = (pred.var.array() * (1.0 - kh_diag.array())).cwiseMax(1e-300).matrix();
    return post;
}

GaussianBelief lofi_update(const GaussianBelief& pred, const MlpSpec& spec,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                           const UpdaterConfig& cfg, double* truncation_residual) {
    if (pred.kind != CovKind::Dlr) throw std::invalid_argument("lofi: requires dlr covariance");
    check_bits(bits, spec);

    const Linearization lin = linearize(pred, spec, x, cfg);
    const Eigen::MatrixXd sh = dlr_apply_cov(pred, lin.h.transpose());  // P x B
    Eigen::MatrixXd innov_cov = lin.h * sh;
    innov_cov.diagonal() += lin.rt;
    const auto llt = innovation_llt(innov_cov);
    const Eigen::MatrixXd gain = llt.solve(sh.transpose()).transpose();

    GaussianBelief post = pred;
    post.mu = pred.mu + gain * (bits - lin.ell);

    // Exact covariance update in factored form: the correction
    // K H Sigma equals (sh L^-T)(sh L^-T)^T with innov_cov = L L^T.
    DlrCovFactor f = dlr_cov_factor(pred);
    const Eigen::MatrixXd update_cols =
        llt.matrixU().solve<Eigen::OnTheRight>(Eigen::MatrixXd(sh));
    Eigen::MatrixXd combined(f.dc.size(), f.v.cols() + update_cols.cols());
    combined << f.v, update_cols;
    f.v = combined;
    const int rank = static_cast<int>(pred.prec_w.cols());
    double resid;
    if (cfg.dlr_diag_refresh) {
        resid = dlr_truncate(f, rank);
    } else {
        // Drop the tail without the diagonal refresh.
        Eigen::VectorXd dc_keep = f.dc;
        resid = dlr_truncate(f, rank);
        f.dc = dc_keep;
    }
    if (truncation_residual) *truncation_residual = resid;
    dlr_set_from_cov_factor(post, f);
    return post;
}

GaussianBelief bong_a1_update(const GaussianBelief& pred, const MlpSpec& spec,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                              const UpdaterConfig& cfg) {
    if (pred.kind != CovKind::Full)
        throw std::invalid_argument("bong_a1: requires full covariance");
    check_bits(bits, spec);
    check_full_cap(spec, cfg);

    const Linearization lin = linearize(pred, spec, x, cfg);
    const int p = pred.dim();
    const Eigen::MatrixXd prec_pred =
        pred.sigma.llt().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd ht_rinv = lin.h.transpose() * lin.rt.cwiseInverse().asDiagonal();
    Eigen::MatrixXd prec_post = prec_pred + ht_rinv * lin.h;
    symmetrize(prec_post);

    GaussianBelief post = pred;
    post.sigma = prec_post.llt().solve(Eigen::MatrixXd::Identity(p, p));
    symmetrize(post.sigma);
    post.mu = pred.mu + post.sigma * (ht_rinv * (bits - lin.ell));
    return post;
}

GaussianBelief bong_ef_update(const GaussianBelief& pred, const MlpSpec& spec,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                              std::mt19937_64& rng, const UpdaterConfig& cfg) {
    check_bits(bits, spec);
    const int p = pred.dim();
    const int m = std::max(1, cfg.samples);

    // Antithetic sampling from the predicted belief.
    Eigen::MatrixXd thetas(p, m);
    switch (pred.kind) {
        case CovKind::Full: {
            check_full_cap(spec, cfg);
            Eigen::LLT<Eigen::MatrixXd> llt(pred.sigma);
            if (llt.info() != Eigen::Success)
                throw NumericalError("bong_ef: predicted covariance not positive definite");
            const Eigen::MatrixXd l = llt.matrixL();
            for (int j = 0; j < m; j += 2) {
                const Eigen::VectorXd z = sample_std_normal(p, rng);
                thetas.col(j) = pred.mu + l * z;
                if (j + 1 < m) thetas.col(j + 1) = pred.mu - l * z;
            }
            break;
        }
        case CovKind::Diag: {
            const Eigen::VectorXd sd = pred.var.cwiseSqrt();
            for (int j = 0; j < m; j += 2) {
                const Eigen::VectorXd z = sample_std_normal(p, rng);
                thetas.col(j) = pred.mu + sd.cwiseProduct(z);
                if (j + 1 < m) thetas.col(j + 1) = pred.mu - sd.cwiseProduct(z);
            }
            break;
        }
        case CovKind::Dlr: {
            // y ~ N(0, Lambda) via y = D^1/2 z0 + W z1, then Sigma * y ~ N(0, Sigma).
            const Eigen::VectorXd dsqrt = pred.prec_diag.cwiseSqrt();
            const int r = static_cast<int>(pred.prec_w.cols());
            for (int j = 0; j < m; j += 2) {
                Eigen::VectorXd y = dsqrt.cwiseProduct(sample_std_normal(p, rng));
                if (r > 0) y += pred.prec_w * sample_std_normal(r, rng);
                const Eigen::VectorXd dev = dlr_apply_cov(pred, y);
                thetas.col(j) = pred.mu + dev;
                if (j + 1 < m) thetas.col(j + 1) = pred.mu - dev;
            }
            break;
        }
    }

    // Score samples of the Bernoulli likelihood.
    Eigen::MatrixXd grads(p, m);
    for (int j = 0; j < m; ++j)
        grads.col(j) = -mlp_ce_gradient(spec, thetas.col(j), x, bits);
    const Eigen::VectorXd gbar = grads.rowwise().mean();

    GaussianBelief post = pred;
    switch (pred.kind) {
        case CovKind::Full: {
            // Rank-m precision increment, inverted by Woodbury instead of two
            // dense P x P inversions: (Sigma^-1 + G G^T)^-1
            //   = Sigma - Sigma G (I + G^T Sigma G)^-1 G^T Sigma.
            const Eigen::MatrixXd gs = grads / std::sqrt(static_cast<double>(m));
            const Eigen::MatrixXd sg = pred.sigma * gs;  // P x m
            Eigen::MatrixXd core = Eigen::MatrixXd::Identity(m, m);
            core.noalias() += gs.transpose() * sg;
            post.sigma = pred.sigma;
            post.sigma.noalias() -= sg * core.llt().solve(sg.transpose());
            symmetrize(post.sigma);
            post.mu = pred.mu + post.sigma * gbar;
            break;
        }
        case CovKind::Diag: {
            // Empirical-Fisher diagonal straight from the raw gradients.
            post.var = (pred.var.cwiseInverse() +
                        (grads.array().square().rowwise().sum() /
                         static_cast<double>(m))
                            .matrix())
                           .cwiseInverse();
            post.mu = pred.mu + post.var.cwiseProduct(gbar);
            break;
        }
        case CovKind::Dlr: {
            const Eigen::MatrixXd gs = grads / std::sqrt(static_cast<double>(m));
            Eigen::VectorXd d = pred.prec_diag;
            Eigen::MatrixXd w(p, pred.prec_w.cols() + m);
            w << pred.prec_w, gs;
            truncate_prec_factor(d, w, static_cast<int>(pred.prec_w.cols()),
                                 cfg.dlr_diag_refresh);
            post.prec_diag = d;
            post.prec_w = w;
            post.mu = pred.mu + dlr_apply_cov(post, gbar);
            break;
        }
    }
    return post;
}

GaussianBelief bbb_online_update(const GaussianBelief& pred, const MlpSpec& spec,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                                 const UpdaterConfig& cfg) {
    if (pred.kind != CovKind::Diag)
        throw std::invalid_argument("bbb: requires diagonal covariance");
    check_bits(bits, spec);

    GaussianBelief cur = pred;
    const Eigen::VectorXd& mu_p = pred.mu;
    const Eigen::VectorXd& var_p = pred.var;
    for (int it = 0; it < cfg.iters; ++it) {
        const Eigen::VectorXd ell = mlp_forward(spec, cur.mu, x);
        const Eigen::MatrixXd h = mlp_jacobian(spec, cur.mu, x);
        const Eigen::VectorXd rt = floor_obs_cov(bernoulli_moments(ell).var, cfg.obs_cov_floor);
        const Eigen::VectorXd rinv = rt.cwiseInverse();

        // Linearized-Gaussian expected NLL plus closed-form diagonal KL.
        const Eigen::VectorXd innov = bits - ell;
        const Eigen::VectorXd h2_rinv =
            (h.array().square().colwise() * rinv.array()).colwise().sum().transpose();
        const Eigen::VectorXd g_mu = -h.transpose() * rinv.cwiseProduct(innov) +
                                     (cur.mu - mu_p).cwiseQuotient(var_p);
        const Eigen::VectorXd g_var =
            0.5 * h2_rinv + 0.5 * (var_p.cwiseInverse() - cur.var.cwiseInverse());

        if (!g_mu.allFinite() || !g_var.allFinite())
            throw NumericalError("bbb: non-finite loss gradient");

        cur.mu -= cfg.lr * g_mu;
        cur.var = (cur.var - cfg.lr * g_var).cwiseMax(1e-10);
    }
    return cur;
}

Eigen::VectorXd gd_online_update(const Eigen::VectorXd& theta, const MlpSpec& spec,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                                 int iters, double lr) {
    Eigen::VectorXd cur = theta;
    for (int i = 0; i < iters; ++i) cur -= lr * mlp_ce_gradient(spec, cur, x, bits);
    return cur;
}

Eigen::VectorXd sgd_batch_update(const Eigen::VectorXd& theta, const MlpSpec& spec,
                                 const std::vector<PilotSample>& buffer, int epochs,
                                 int batch, double lr, std::mt19937_64& rng) {
    if (buffer.empty()) return theta;
    Eigen::VectorXd cur = theta;
    std::vector<std::size_t> order(buffer.size());
    std::iota(order.begin(), order.end(), 0u);
    for (int e = 0; e < epochs; ++e) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch));
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(cur.size());
            for (std::size_t i = start; i < stop; ++i) {
                const auto& s = buffer[order[i]];
                grad += mlp_ce_gradient(spec, cur, s.x, s.bits);
            }
            cur -= lr / static_cast<double>(stop - start) * grad;
        }
    }
    return cur;
}

}  // namespace modrec
