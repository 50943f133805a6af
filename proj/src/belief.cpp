#include "modrec/belief.hpp"

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace modrec {

namespace {

constexpr char kMagic[4] = {'M', 'R', 'B', 'F'};
constexpr std::uint32_t kVersion = 1;

void write_vec(std::ostream& os, const Eigen::VectorXd& v) {
    const std::uint64_t n = static_cast<std::uint64_t>(v.size());
    os.write(reinterpret_cast<const char*>(&n), sizeof(n));
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

Eigen::VectorXd read_vec(std::istream& is) {
    std::uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof(n));
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    return v;
}

void write_mat(std::ostream& os, const Eigen::MatrixXd& m) {
    const std::uint64_t r = static_cast<std::uint64_t>(m.rows());
    const std::uint64_t c = static_cast<std::uint64_t>(m.cols());
    os.write(reinterpret_cast<const char*>(&r), sizeof(r));
    os.write(reinterpret_cast<const char*>(&c), sizeof(c));
    os.write(reinterpret_cast<const char*>(m.data()),
             static_cast<std::streamsize>(r * c * sizeof(double)));
}

Eigen::MatrixXd read_mat(std::istream& is) {
    std::uint64_t r = 0, c = 0;
    is.read(reinterpret_cast<char*>(&r), sizeof(r));
    is.read(reinterpret_cast<char*>(&c), sizeof(c));
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    is.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(r * c * sizeof(double)));
    return m;
}

}  // namespace

void SsmHyper::validate() const {
    if (gamma <= 0.0 || gamma > 1.0) throw std::invalid_argument("ssm: gamma must be in (0,1]");
    if (sigma2 < 0.0) throw std::invalid_argument("ssm: sigma2 must be >= 0");
    if (prior_var <= 0.0) throw std::invalid_argument("ssm: prior_var must be positive");
}

GaussianBelief GaussianBelief::full_prior(const Eigen::VectorXd& mu0, double var0) {
    GaussianBelief b;
    b.kind = CovKind::Full;
    b.mu = mu0;
    b.sigma = var0 * Eigen::MatrixXd::Identity(mu0.size(), mu0.size());
    return b;
}

GaussianBelief GaussianBelief::diag_prior(const Eigen::VectorXd& mu0, double var0) {
    GaussianBelief b;
    b.kind = CovKind::Diag;
    b.mu = mu0;
    b.var = Eigen::VectorXd::Constant(mu0.size(), var0);
    return b;
}

GaussianBelief GaussianBelief::dlr_prior(const Eigen::VectorXd& mu0, double var0, int rank) {
    GaussianBelief b;
    b.kind = CovKind::Dlr;
    b.mu = mu0;
    b.prec_diag = Eigen::VectorXd::Constant(mu0.size(), 1.0 / var0);
    b.prec_w = Eigen::MatrixXd::Zero(mu0.size(), rank);
    return b;
}

DlrCovFactor dlr_cov_factor(const GaussianBelief& b) {
    DlrCovFactor f;
    f.dc = b.prec_diag.cwiseInverse();
    const int r = static_cast<int>(b.prec_w.cols());
    if (r == 0 || b.prec_w.isZero(0.0)) {
        f.v = Eigen::MatrixXd::Zero(b.dim(), 0);
        return f;
    }
    // Sigma = D^-1 - D^-1 W (I + W^T D^-1 W)^-1 W^T D^-1; factor the core.
    Eigen::MatrixXd dinv_w = b.prec_diag.cwiseInverse().asDiagonal() * b.prec_w;
    Eigen::MatrixXd core = Eigen::MatrixXd::Identity(r, r) + b.prec_w.transpose() * dinv_w;
    Eigen::LLT<Eigen::MatrixXd> llt(core);
    if (llt.info() != Eigen::Success) throw std::runtime_error("dlr: core factorization failed");
    // v = D^-1 W L^-T where core = L L^T, so that v v^T equals the correction.
    f.v = llt.matrixU().solve<Eigen::OnTheRight>(dinv_w);
    return f;
}

void dlr_set_from_cov_factor(GaussianBelief& b, const DlrCovFactor& f) {
    if ((f.dc.array() <= 0.0).any())
        throw std::runtime_error("dlr: covariance diagonal must stay positive");
    b.prec_diag = f.dc.cwiseInverse();
    const int r = static_cast<int>(f.v.cols());
    if (r == 0) {
        b.prec_w = Eigen::MatrixXd::Zero(b.dim(), b.rank());
        return;
    }
    // Precision = Dc^-1 + Dc^-1 V (I - V^T Dc^-1 V)^-1 V^T Dc^-1.
    Eigen::MatrixXd dcinv_v = f.dc.cwiseInverse().asDiagonal() * f.v;
    Eigen::MatrixXd core = Eigen::MatrixXd::Identity(r, r) - f.v.transpose() * dcinv_v;
    Eigen::LLT<Eigen::MatrixXd> llt(core);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("dlr: covariance factor is not positive definite");
    b.prec_w = llt.matrixU().solve<Eigen::OnTheRight>(dcinv_v);
}

Eigen::MatrixXd dlr_apply_cov(const GaussianBelief& b, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd dinv_x = b.prec_diag.cwiseInverse().asDiagonal() * x;
    const int r = static_cast<int>(b.prec_w.cols());
    if (r == 0) return dinv_x;
    Eigen::MatrixXd dinv_w = b.prec_diag.cwiseInverse().asDiagonal() * b.prec_w;
    Eigen::MatrixXd core = Eigen::MatrixXd::Identity(r, r) + b.prec_w.transpose() * dinv_w;
    return dinv_x - dinv_w * core.llt().solve(b.prec_w.transpose() * dinv_x);
}

double dlr_truncate(DlrCovFactor& f, int rank) {
    const int cols = static_cast<int>(f.v.cols());
    if (cols <= rank) {
        if (cols < rank) {
            Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(f.dc.size(), rank);
            padded.leftCols(cols) = f.v;
            f.v = padded;
        }
        return 0.0;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(f.v, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const Eigen::MatrixXd& u = svd.matrixU();
    Eigen::MatrixXd kept = Eigen::MatrixXd::Zero(f.dc.size(), rank);
    for (int j = 0; j < rank && j < s.size(); ++j) kept.col(j) = u.col(j) * s(j);
    // Fold the diagonal of the dropped correction into dc so the covariance
    // diagonal is unchanged by the truncation. Full absorption can push
    // diag(dc) - v v^T indefinite (the dropped off-diagonal mass is gone but
    // its diagonal is subtracted), so back off geometrically until the
    // Woodbury core stays positive definite; zero absorption is always safe
    // because dropping columns only inflates the covariance.
    Eigen::VectorXd dropped_diag = Eigen::VectorXd::Zero(f.dc.size());
    for (int j = rank; j < s.size(); ++j)
        dropped_diag.array() += (u.col(j) * s(j)).array().square();
    double scale = 1.0;
    for (int attempt = 0; attempt < 12; ++attempt, scale *= 0.5) {
        const Eigen::VectorXd dc_try = f.dc - scale * dropped_diag;
        if ((dc_try.array() <= 0.0).any()) continue;
        if (rank > 0) {
            const Eigen::MatrixXd core =
                Eigen::MatrixXd::Identity(rank, rank) -
                kept.transpose() * dc_try.cwiseInverse().asDiagonal() * kept;
            if (Eigen::LLT<Eigen::MatrixXd>(core).info() != Eigen::Success) continue;
        }
        f.dc = dc_try;
        f.v = kept;
        return rank < s.size() ? s(rank) : 0.0;
    }
    f.v = kept;  // keep dc untouched: pure column drop, PSD by construction
    return rank < s.size() ? s(rank) : 0.0;
}

GaussianBelief predict(const GaussianBelief& b, const SsmHyper& h) {
    h.validate();
    const double g2 = h.gamma * h.gamma;
    GaussianBelief out = b;
    out.mu = h.gamma * b.mu;
    switch (b.kind) {
        case CovKind::Full:
            out.sigma = g2 * b.sigma + h.sigma2 * Eigen::MatrixXd::Identity(b.dim(), b.dim());
            break;
        case CovKind::Diag:
            out.var = (g2 * b.var.array() + h.sigma2).matrix();
            break;
        case CovKind::Dlr: {
            // Inflate exactly in covariance space; the diag-minus-low-rank
            // form is closed under this map, so no rank is lost here.
            DlrCovFactor f = dlr_cov_factor(b);
            f.dc = (g2 * f.dc.array() + h.sigma2).matrix();
            f.v *= h.gamma;
            dlr_set_from_cov_factor(out, f);
            break;
        }
    }
    return out;
}

Eigen::MatrixXd as_covariance(const GaussianBelief& b) {
    switch (b.kind) {
        case CovKind::Full:
            return b.sigma;
        case CovKind::Diag:
            return b.var.asDiagonal();
        case CovKind::Dlr:
            return dlr_apply_cov(b, Eigen::MatrixXd::Identity(b.dim(), b.dim()));
    }
    throw std::logic_error("belief: unknown covariance kind");
}

Eigen::VectorXd floor_obs_cov(const Eigen::VectorXd& rt, double eps) {
    return rt.cwiseMax(eps);
}

void save_belief(const GaussianBelief& b, std::ostream& os) {
    os.write(kMagic, sizeof(kMagic));
    os.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    const std::uint8_t kind = static_cast<std::uint8_t>(b.kind);
    os.write(reinterpret_cast<const char*>(&kind), sizeof(kind));
    write_vec(os, b.mu);
    switch (b.kind) {
        case CovKind::Full: write_mat(os, b.sigma); break;
        case CovKind::Diag: write_vec(os, b.var); break;
        case CovKind::Dlr:
            write_vec(os, b.prec_diag);
            write_mat(os, b.prec_w);
            break;
    }
}

GaussianBelief load_belief(std::istream& is) {
    char magic[4];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("belief: bad snapshot header");
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kVersion) throw std::runtime_error("belief: unsupported snapshot version");
    std::uint8_t kind = 0;
    is.read(reinterpret_cast<char*>(&kind), sizeof(kind));
    GaussianBelief b;
    b.kind = static_cast<CovKind>(kind);
    b.mu = read_vec(is);
    switch (b.kind) {
        case CovKind::Full: b.sigma = read_mat(is); break;
        case CovKind::Diag: b.var = read_vec(is); break;
        case CovKind::Dlr:
            b.prec_diag = read_vec(is);
            b.prec_w = read_mat(is);
            break;
    }
    if (!is) throw std::runtime_error("belief: truncated snapshot");
    return b;
}

}  // namespace modrec
