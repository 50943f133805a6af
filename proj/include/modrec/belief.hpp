#pragma once

#include <iosfwd>

#include <Eigen/Dense>

namespace modrec {

enum class CovKind { Full, Diag, Dlr };

/// Gauss-Markov state evolution constants and the weight prior scale.
struct SsmHyper {
    double gamma = 0.999;   // memory, in (0, 1]
    double sigma2 = 1e-4;   // evolution-rate variance
    double prior_var = 1.0; // isotropic prior covariance scale

    void validate() const;
};

/// Gaussian variational posterior over a module's flat parameter vector.
/// Full and Diag store the covariance directly; Dlr stores the precision
/// as diag(prec_diag) + prec_w * prec_w^T.
struct GaussianBelief {
    CovKind kind = CovKind::Full;
    Eigen::VectorXd mu;

    Eigen::MatrixXd sigma;      // Full
    Eigen::VectorXd var;        // Diag
    Eigen::VectorXd prec_diag;  // Dlr
    Eigen::MatrixXd prec_w;     // Dlr, P x R

    int dim() const { return static_cast<int>(mu.size()); }
    int rank() const { return kind == CovKind::Dlr ? static_cast<int>(prec_w.cols()) : 0; }

    static GaussianBelief full_prior(const Eigen::VectorXd& mu0, double var0);
    static GaussianBelief diag_prior(const Eigen::VectorXd& mu0, double var0);
    static GaussianBelief dlr_prior(const Eigen::VectorXd& mu0, double var0, int rank);
};

GaussianBelief predict(const GaussianBelief& b, const SsmHyper& h);

/// Materialize the covariance matrix; for Dlr this inverts the precision
/// through the Woodbury identity. Intended for diagnostics and tests.
Eigen::MatrixXd as_covariance(const GaussianBelief& b);

/// Clamp observation-covariance entries away from zero so saturated soft
/// estimates cannot produce a singular innovation matrix.
Eigen::VectorXd floor_obs_cov(const Eigen::VectorXd& rt, double eps = 1e-6);

void save_belief(const GaussianBelief& b, std::ostream& os);
GaussianBelief load_belief(std::istream& is);

// --- Dlr internals, shared with the update rules -------------------------

/// Covariance-space form of a Dlr belief: Sigma = diag(dc) - v * v^T.
struct DlrCovFactor {
    Eigen::VectorXd dc;
    Eigen::MatrixXd v;  // P x r, r <= rank budget plus pending update columns
};

DlrCovFactor dlr_cov_factor(const GaussianBelief& b);
void dlr_set_from_cov_factor(GaussianBelief& b, const DlrCovFactor& f);

/// Sigma * X through the Woodbury identity, never forming P x P matrices.
Eigen::MatrixXd dlr_apply_cov(const GaussianBelief& b, const Eigen::MatrixXd& x);

/// Reduce v to `rank` columns via thin SVD; the diagonal of the discarded
/// part is folded into dc so the covariance diagonal is preserved. Returns
/// the largest discarded singular value (0 when nothing is dropped).
double dlr_truncate(DlrCovFactor& f, int rank);

}  // namespace modrec
