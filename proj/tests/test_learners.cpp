#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "modrec/learners.hpp"

using namespace modrec;

namespace {

Eigen::VectorXd random_vec(int n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> gauss(0.0, scale);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = gauss(rng);
    return v;
}

Eigen::VectorXd random_bits(int n, std::mt19937_64& rng) {
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b(i) = static_cast<double>(rng() % 2);
    return b;
}

MlpSpec small_spec(std::mt19937_64& rng) {
    MlpSpec spec;
    spec.widths = {2 + static_cast<int>(rng() % 3), 2 + static_cast<int>(rng() % 4),
                   1 + static_cast<int>(rng() % 3)};
    return spec;
}

double min_eig(const Eigen::MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("cm-ekf reproduces the textbook gain/covariance recursion") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 30; ++trial) {
        const MlpSpec spec = small_spec(rng);
        const int p = spec.param_count(), b = spec.output_dim();
        GaussianBelief pred = GaussianBelief::full_prior(random_vec(p, rng, 0.6), 1.0);
        // non-isotropic but SPD prior
        const Eigen::MatrixXd a = 0.2 * Eigen::MatrixXd::NullaryExpr(p, p, [&](int, int) {
            return random_vec(1, rng)(0);
        });
        pred.sigma += a * a.transpose();
        const Eigen::VectorXd x = random_vec(spec.input_dim(), rng);
        const Eigen::VectorXd bits = random_bits(b, rng);
        UpdaterConfig cfg;

        // independent reference: explicit inverse, no Cholesky shortcuts
        const Eigen::VectorXd ell = mlp_forward(spec, pred.mu, x);
        const Eigen::MatrixXd h = mlp_jacobian(spec, pred.mu, x);
        Eigen::VectorXd rt = (ell.array() * (1.0 - ell.array())).cwiseMax(cfg.obs_cov_floor);
        const Eigen::MatrixXd s = h * pred.sigma * h.transpose() + Eigen::MatrixXd(rt.asDiagonal());
        const Eigen::MatrixXd k = pred.sigma * h.transpose() * s.inverse();
        const Eigen::VectorXd mu_want = pred.mu + k * (bits - ell);
        const Eigen::MatrixXd sig_want = pred.sigma - k * h * pred.sigma;

        const GaussianBelief post = cmekf_update(pred, spec, x, bits, cfg);
        CHECK((post.mu - mu_want).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((post.sigma - sig_want).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((post.sigma - post.sigma.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("vd-ekf keeps the diagonal of the exact update from a diagonal prior") {
    std::mt19937_64 rng(102);
    for (int trial = 0; trial < 20; ++trial) {
        const MlpSpec spec = small_spec(rng);
        const int p = spec.param_count();
        const Eigen::VectorXd mu = random_vec(p, rng, 0.6);
        Eigen::VectorXd v = random_vec(p, rng).array().abs() + 0.3;

        GaussianBelief diag = GaussianBelief::diag_prior(mu, 1.0);
        diag.var = v;
        GaussianBelief full = GaussianBelief::full_prior(mu, 1.0);
        full.sigma = v.asDiagonal();

        const Eigen::VectorXd x = random_vec(spec.input_dim(), rng);
        const Eigen::VectorXd bits = random_bits(spec.output_dim(), rng);
        const GaussianBelief pd = vdekf_update(diag, spec, x, bits);
        const GaussianBelief pf = cmekf_update(full, spec, x, bits);

        CHECK((pd.mu - pf.mu).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((pd.var - pf.sigma.diagonal()).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(pd.var.minCoeff() > 0.0);
    }
}

TEST_CASE("lo-fi collapses to vd-ekf at rank 0") {
    std::mt19937_64 rng(103);
    for (int trial = 0; trial < 10; ++trial) {
        const MlpSpec spec = small_spec(rng);
        const int p = spec.param_count();
        const Eigen::VectorXd mu = random_vec(p, rng, 0.5);
        GaussianBelief dlr = GaussianBelief::dlr_prior(mu, 0.8, 0);
        GaussianBelief diag = GaussianBelief::diag_prior(mu, 0.8);
        SsmHyper ssm;
        UpdaterConfig cfg;
        cfg.rank = 0;
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int step = 0; step < 5; ++step) {
            const Eigen::VectorXd x = random_vec(spec.input_dim(), rng);
            const Eigen::VectorXd bits = random_bits(spec.output_dim(), rng);
            dlr = lofi_update(predict(dlr, ssm), spec, x, bits, cfg);
            diag = vdekf_update(predict(diag, ssm), spec, x, bits, cfg);
            CHECK((dlr.mu - diag.mu).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((as_covariance(dlr).diagonal() - diag.var).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("lo-fi with rank >= B matches cm-ekf for one step from an exact prior") {
    std::mt19937_64 rng(104);
    for (int trial = 0; trial < 10; ++trial) {
        const MlpSpec spec = small_spec(rng);
        const int p = spec.param_count(), b = spec.output_dim();
        const Eigen::VectorXd mu = random_vec(p, rng, 0.5);
        GaussianBelief dlr = GaussianBelief::dlr_prior(mu, 1.0, b);
        GaussianBelief full = GaussianBelief::full_prior(mu, 1.0);
        UpdaterConfig cfg;
        cfg.rank = b;

        const Eigen::VectorXd x = random_vec(spec.input_dim(), rng);
        const Eigen::VectorXd bits = random_bits(b, rng);
        double resid = -1.0;
        const GaussianBelief pl = lofi_update(dlr, spec, x, bits, cfg, &resid);
        const GaussianBelief pf = cmekf_update(full, spec, x, bits, cfg);
        CHECK(resid == 0.0);  // nothing truncated: update adds exactly B columns
        CHECK((pl.mu - pf.mu).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((as_covariance(pl) - pf.sigma).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("bong natural-gradient route equals cm-ekf under linearized expectations") {
    std::mt19937_64 rng(105);
    for (int trial = 0; trial < 100; ++trial) {
        MlpSpec spec;
        spec.widths = {1 + static_cast<int>(rng() % 3), 1 + static_cast<int>(rng() % 4),
                       1 + static_cast<int>(rng() % 4)};
        const int p = spec.param_count();
        if (p > 32 || spec.output_dim() > 4) continue;
        GaussianBelief pred = GaussianBelief::full_prior(random_vec(p, rng, 0.6), 1.0);
        const Eigen::MatrixXd a = 0.3 * Eigen::MatrixXd::NullaryExpr(p, p, [&](int, int) {
            return random_vec(1, rng)(0);
        });
        pred.sigma += a * a.transpose();
        const Eigen::VectorXd x = random_vec(spec.input_dim(), rng);
        const Eigen::VectorXd bits = random_bits(spec.output_dim(), rng);

        const GaussianBelief pa = bong_a1_update(pred, spec, x, bits);
        const GaussianBelief pk = cmekf_update(pred, spec, x, bits);
        CHECK((pa.mu - pk.mu).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((pa.sigma - pk.sigma).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("cm-ekf posterior mean tracks the exact bayes posterior on a tiny logistic model") {
    // Two-parameter logistic observation (single weight + bias); the exact
    // posterior comes from dense grid quadrature.
    MlpSpec spec;
    spec.widths = {1, 1};
    Eigen::VectorXd mu_p(2), x(1), bits(1);
    mu_p << 0.3, -0.2;
    x << 1.0;
    bits << 1.0;
    const double vp = 0.25;  // moderate curvature: sd 0.5

    const int g = 400;
    const double lo = -2.5, hi = 3.0, step = (hi - lo) / (g - 1);
    double z = 0.0, ew = 0.0, eb = 0.0;
    for (int i = 0; i < g; ++i) {
        const double w = lo + i * step;
        for (int j = 0; j < g; ++j) {
            const double b = lo + j * step;
            const double ell = 1.0 / (1.0 + std::exp(-(w * x(0) + b)));
            const double prior = std::exp(-0.5 * ((w - mu_p(0)) * (w - mu_p(0)) +
                                                  (b - mu_p(1)) * (b - mu_p(1))) /
                                          vp);
            const double post = prior * ell;  // bits(0) == 1
            z += post;
            ew += post * w;
            eb += post * b;
        }
    }
    Eigen::VectorXd mu_bayes(2);
    mu_bayes << ew / z, eb / z;

    const GaussianBelief pred = GaussianBelief::full_prior(mu_p, vp);
    const GaussianBelief post = cmekf_update(pred, spec, x, bits);
    const double shift_err = (post.mu - mu_bayes).norm() / (mu_bayes - mu_p).norm();
    CHECK(shift_err < 0.10);
}

TEST_CASE("posterior contracts under repeated cm-ekf updates on the same sample") {
    std::mt19937_64 rng(106);
    const MlpSpec spec = small_spec(rng);
    SsmHyper ssm;
    ssm.gamma = 1.0;
    ssm.sigma2 = 0.0;
    GaussianBelief b = GaussianBelief::full_prior(random_vec(spec.param_count(), rng, 0.5), 1.0);
    const Eigen::VectorXd x = random_vec(spec.input_dim(), rng);
    const Eigen::VectorXd bits = random_bits(spec.output_dim(), rng);
    double prev = b.sigma.trace();
    for (int t = 0; t < 50; ++t) {
        b = cmekf_update(predict(b, ssm), spec, x, bits);
        const double tr = b.sigma.trace();
        CHECK(tr <= prev + 1e-12);
        prev = tr;
    }
}

TEST_CASE("sequential updates keep every representation finite and psd") {
    std::mt19937_64 rng(107);
    MlpSpec spec;
    spec.widths = {4, 6, 2};
    SsmHyper ssm;
    UpdaterConfig cfg;
    cfg.rank = 3;

    GaussianBelief full = GaussianBelief::full_prior(random_vec(spec.param_count(), rng, 0.4), 1.0);
    GaussianBelief diag = GaussianBelief::diag_prior(full.mu, 1.0);
    GaussianBelief dlr = GaussianBelief::dlr_prior(full.mu, 1.0, 3);

    for (int t = 0; t < 300; ++t) {
        const Eigen::VectorXd x = random_vec(4, rng);
        const Eigen::VectorXd bits = random_bits(2, rng);
        full = cmekf_update(predict(full, ssm), spec, x, bits, cfg);
        diag = vdekf_update(predict(diag, ssm), spec, x, bits, cfg);
        dlr = lofi_update(predict(dlr, ssm), spec, x, bits, cfg);

        REQUIRE(full.mu.allFinite());
        REQUIRE(diag.mu.allFinite());
        REQUIRE(dlr.mu.allFinite());
        CHECK(diag.var.minCoeff() > 0.0);
        if (t % 50 == 49) {
            CHECK(min_eig(full.sigma) >= -1e-9);
            CHECK(min_eig(as_covariance(dlr)) >= -1e-9);
        }
    }
}

TEST_CASE("bong-ef is deterministic given the rng stream and tightens the belief") {
    std::mt19937_64 rng(108);
    MlpSpec spec;
    spec.widths = {3, 5, 2};
    GaussianBelief pred = GaussianBelief::full_prior(random_vec(spec.param_count(), rng, 0.5), 0.5);
    const Eigen::VectorXd x = random_vec(3, rng);
    const Eigen::VectorXd bits = random_bits(2, rng);
    UpdaterConfig cfg;
    cfg.samples = 10;

    std::mt19937_64 r1(55), r2(55), r3(56);
    const GaussianBelief a = bong_ef_update(pred, spec, x, bits, r1, cfg);
    const GaussianBelief b = bong_ef_update(pred, spec, x, bits, r2, cfg);
    const GaussianBelief c = bong_ef_update(pred, spec, x, bits, r3, cfg);
    CHECK((a.mu - b.mu).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.sigma - b.sigma).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.mu - c.mu).cwiseAbs().maxCoeff() > 0.0);

    // empirical-Fisher increment can only increase the precision
    CHECK(a.sigma.trace() <= pred.sigma.trace());
    CHECK(min_eig(a.sigma) > 0.0);
}

TEST_CASE("bong-ef at vanishing prior variance approaches the plug-in fisher step") {
    // With Sigma_pred -> eps I the sampled weights collapse onto mu, so the
    // EF increment approaches g g^T for the deterministic gradient g.
    std::mt19937_64 rng(109);
    MlpSpec spec;
    spec.widths = {3, 4, 2};
    const int p = spec.param_count();
    const double eps = 1e-8;
    GaussianBelief pred = GaussianBelief::full_prior(random_vec(p, rng, 0.5), eps);
    const Eigen::VectorXd x = random_vec(3, rng);
    const Eigen::VectorXd bits = random_bits(2, rng);
    UpdaterConfig cfg;
    cfg.samples = 4;

    const Eigen::VectorXd g = -mlp_ce_gradient(spec, pred.mu, x, bits);
    const Eigen::MatrixXd prec =
        (1.0 / eps) * Eigen::MatrixXd::Identity(p, p) + g * g.transpose();
    const Eigen::MatrixXd sig_want = prec.llt().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::VectorXd mu_want = pred.mu + sig_want * g;

    std::mt19937_64 r(7);
    const GaussianBelief post = bong_ef_update(pred, spec, x, bits, r, cfg);
    CHECK((post.mu - mu_want).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("bbb online descends the surrogate objective and stays positive") {
    std::mt19937_64 rng(110);
    MlpSpec spec;
    spec.widths = {3, 5, 2};
    GaussianBelief pred = GaussianBelief::diag_prior(random_vec(spec.param_count(), rng, 0.5), 0.5);
    const Eigen::VectorXd x = random_vec(3, rng);
    const Eigen::VectorXd bits = random_bits(2, rng);
    UpdaterConfig cfg;
    cfg.iters = 25;
    cfg.lr = 5e-3;

    const GaussianBelief post = bbb_online_update(pred, spec, x, bits, cfg);
    CHECK(post.mu.allFinite());
    CHECK(post.var.minCoeff() > 0.0);
    // fitting the observed bits must lower the pilot loss
    CHECK(mlp_ce_loss(spec, post.mu, x, bits) < mlp_ce_loss(spec, pred.mu, x, bits));
    // a zero-iteration run is the identity
    UpdaterConfig id_cfg = cfg;
    id_cfg.iters = 0;
    const GaussianBelief same = bbb_online_update(pred, spec, x, bits, id_cfg);
    CHECK((same.mu - pred.mu).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gd online reduces the pilot loss monotonically for a small step") {
    std::mt19937_64 rng(111);
    MlpSpec spec;
    spec.widths = {4, 6, 2};
    const Eigen::VectorXd theta = random_vec(spec.param_count(), rng, 0.5);
    const Eigen::VectorXd x = random_vec(4, rng);
    const Eigen::VectorXd bits = random_bits(2, rng);

    double prev = mlp_ce_loss(spec, theta, x, bits);
    Eigen::VectorXd cur = theta;
    for (int i = 0; i < 10; ++i) {
        cur = gd_online_update(cur, spec, x, bits, 1, 1e-2);
        const double loss = mlp_ce_loss(spec, cur, x, bits);
        CHECK(loss <= prev + 1e-12);
        prev = loss;
    }
}

TEST_CASE("sgd batch training fits a pilot buffer") {
    std::mt19937_64 rng(112);
    MlpSpec spec;
    spec.widths = {4, 8, 2};
    Eigen::VectorXd theta = random_vec(spec.param_count(), rng, 0.4);

    std::vector<PilotSample> buffer;
    for (int i = 0; i < 32; ++i) {
        PilotSample s;
        s.x = random_vec(4, rng);
        s.bits = Eigen::VectorXd(2);
        s.bits << (s.x(0) > 0 ? 1.0 : 0.0), (s.x(1) > 0 ? 1.0 : 0.0);
        buffer.push_back(std::move(s));
    }
    auto mean_loss = [&](const Eigen::VectorXd& t) {
        double acc = 0.0;
        for (const auto& s : buffer) acc += mlp_ce_loss(spec, t, s.x, s.bits);
        return acc / static_cast<double>(buffer.size());
    };

    const double before = mean_loss(theta);
    std::mt19937_64 sgd_rng(3);
    theta = sgd_batch_update(theta, spec, buffer, 40, 4, 5e-2, sgd_rng);
    CHECK(mean_loss(theta) < 0.5 * before);

    // empty buffer is a no-op
    const Eigen::VectorXd untouched =
        sgd_batch_update(theta, spec, {}, 10, 4, 1e-2, sgd_rng);
    CHECK((untouched - theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("full-covariance rules refuse oversized parameter vectors") {
    MlpSpec spec;
    spec.widths = {200, 150, 2};  // P = 30452
    REQUIRE(spec.param_count() > 20000);
    GaussianBelief dummy;  // never touched: the cap fires first
    Eigen::VectorXd x(200), bits(2);
    x.setZero();
    bits.setZero();
    dummy.kind = CovKind::Full;
    CHECK_THROWS_AS(cmekf_update(dummy, spec, x, bits), CapabilityError);
    CHECK_THROWS_AS(bong_a1_update(dummy, spec, x, bits), CapabilityError);

    UpdaterConfig relaxed;
    relaxed.full_cov_param_cap = 40000;
    CHECK_THROWS_AS(cmekf_update(dummy, spec, x, bits, relaxed), std::invalid_argument);
}

TEST_CASE("cm-ekf cost grows roughly quadratically in the parameter count") {
    // wall-time exponent between P=64-ish and P=1024-ish module sizes
    auto time_update = [](int hidden) {
        MlpSpec spec;
        spec.widths = {8, hidden, 2};
        std::mt19937_64 rng(5);
        GaussianBelief b =
            GaussianBelief::full_prior(random_vec(spec.param_count(), rng, 0.3), 1.0);
        const Eigen::VectorXd x = random_vec(8, rng);
        Eigen::VectorXd bits(2);
        bits << 1.0, 0.0;
        SsmHyper ssm;
        // warm-up
        for (int i = 0; i < 3; ++i) b = cmekf_update(predict(b, ssm), spec, x, bits);
        // Short batches, many repeats: the min survives scheduler preemption
        // on busy machines where any long batch would be contaminated.
        const int reps = 5;
        double best = 1e100;
        for (int outer = 0; outer < 20; ++outer) {
            const auto t0 = std::chrono::steady_clock::now();
            for (int i = 0; i < reps; ++i) b = cmekf_update(predict(b, ssm), spec, x, bits);
            const auto t1 = std::chrono::steady_clock::now();
            best = std::min(best, std::chrono::duration<double>(t1 - t0).count() / reps);
        }
        return std::pair<double, double>(static_cast<double>(spec.param_count()), best);
    };

    // least-squares slope of log t against log P over the three sizes
    std::vector<std::pair<double, double>> pts = {time_update(6),    // P = 68
                                                  time_update(23),   // P = 255
                                                  time_update(93)};  // P = 1027
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [p, t] : pts) {
        const double lx = std::log(p), ly = std::log(t);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(pts.size());
    const double exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(exponent > 1.6);
    CHECK(exponent < 2.5);
}
