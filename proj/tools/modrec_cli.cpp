#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "modrec/baselines.hpp"
#include "modrec/harness/csv.hpp"
#include "modrec/harness/latency.hpp"
#include "modrec/harness/runner.hpp"

namespace {

using namespace modrec;

struct CommonArgs {
    std::string config_path;
    std::string preset;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int trials = 0;
};

ExperimentConfig resolve_config(const CommonArgs& args) {
    ExperimentConfig cfg;
    if (!args.config_path.empty())
        cfg = load_config(args.config_path);
    else if (!args.preset.empty())
        cfg = preset_config(args.preset);
    else
        throw std::invalid_argument("either --config or --preset is required");
    if (args.seed_set) cfg.seed = args.seed;
    if (args.trials > 0) cfg.trials = args.trials;
    return cfg;
}

int fail_with_summary(const std::string& stage, const std::exception& e) {
    nlohmann::json err;
    err["error"] = {{"stage", stage}, {"message", e.what()}};
    std::cerr << err.dump() << std::endl;
    return 2;
}

void print_summaries(const RunResult& result) {
    std::printf("updater=%s scenario=%s\n", result.updater_label.c_str(),
                result.scenario.c_str());
    for (const SnrSummary& s : result.summaries)
        std::printf("  snr=%6.2f dB  ber=%.6g (std %.3g over %zu trials)\n", s.snr_db,
                    s.ber_mean, s.ber_std, s.per_trial_ber.size());
}

int run_selftest() {
    int failures = 0;
    auto check = [&](bool ok, const char* what) {
        std::printf("[%s] %s\n", ok ? "ok" : "FAIL", what);
        if (!ok) ++failures;
    };

    {  // Jacobian vs central differences
        std::mt19937_64 rng(7);
        std::normal_distribution<double> gauss(0.0, 1.0);
        MlpSpec spec;
        spec.widths = {4, 6, 2};
        Eigen::VectorXd theta(spec.param_count()), x(4);
        for (int i = 0; i < theta.size(); ++i) theta(i) = gauss(rng);
        for (int i = 0; i < x.size(); ++i) x(i) = gauss(rng);
        const Eigen::MatrixXd h = mlp_jacobian(spec, theta, x);
        double max_rel = 0.0;
        const double step = 1e-5;
        for (int p = 0; p < theta.size(); ++p) {
            Eigen::VectorXd tp = theta, tm = theta;
            tp(p) += step;
            tm(p) -= step;
            const Eigen::VectorXd fd = (mlp_forward(spec, tp, x) - mlp_forward(spec, tm, x)) / (2 * step);
            for (int i = 0; i < fd.size(); ++i) {
                const double denom = std::max(1e-6, std::abs(fd(i)));
                max_rel = std::max(max_rel, std::abs(fd(i) - h(i, p)) / denom);
            }
        }
        check(max_rel < 1e-5, "analytic jacobian matches finite differences");
    }

    {  // covariance stays PSD over a short random CM-EKF run
        std::mt19937_64 rng(11);
        std::normal_distribution<double> gauss(0.0, 1.0);
        MlpSpec spec;
        spec.widths = {3, 5, 2};
        SsmHyper ssm;
        UpdaterConfig cfg;
        Eigen::VectorXd mu0(spec.param_count());
        for (int i = 0; i < mu0.size(); ++i) mu0(i) = 0.3 * gauss(rng);
        GaussianBelief b = GaussianBelief::full_prior(mu0, 1.0);
        bool ok = true;
        for (int t = 0; t < 100 && ok; ++t) {
            Eigen::VectorXd x(3), bits(2);
            for (int i = 0; i < 3; ++i) x(i) = gauss(rng);
            for (int i = 0; i < 2; ++i) bits(i) = rng() % 2;
            b = cmekf_update(predict(b, ssm), spec, x, bits, cfg);
            const double mineig =
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(b.sigma).eigenvalues().minCoeff();
            ok = b.mu.allFinite() && mineig >= -1e-9;
        }
        check(ok, "cm-ekf keeps the covariance positive semidefinite");
    }

    {  // frozen pipeline equals delayed sequential forward
        ReceiverTopology topo{2, 3, 2, 2, 8};
        UpdaterConfig cfg;
        cfg.kind = UpdaterKind::None;
        DeepSic rx(topo, cfg, SsmHyper{}, 99);
        std::mt19937_64 rng(3);
        std::normal_distribution<double> gauss(0.0, 1.0);
        bool ok = true;
        std::vector<Eigen::VectorXd> inputs;
        std::size_t emitted = 0;
        for (int t = 0; t < 50 && ok; ++t) {
            Eigen::VectorXd r(6);
            for (int i = 0; i < 6; ++i) r(i) = gauss(rng);
            inputs.push_back(r);
            auto out = rx.pipelined_step(r, false);
            if (out) {
                ok = (rx.forward(inputs[emitted]) - out->ell).cwiseAbs().maxCoeff() == 0.0;
                ++emitted;
            }
        }
        check(ok && emitted > 0, "frozen pipeline matches delayed sequential forward");
    }

    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming Bayesian adaptation of modular deep receivers"};
    app.require_subcommand(1);

    CommonArgs args;
    std::vector<std::string> updater_names;
    std::vector<int> latency_widths = {4, 14, 24, 54};
    int latency_updates = 1000;

    auto add_common = [&](CLI::App* cmd, bool needs_cfg) {
        if (needs_cfg) {
            cmd->add_option("--config", args.config_path, "experiment config file (json)");
            cmd->add_option("--preset", args.preset,
                            "scenario preset: rotation, mimo-linear, mimo-nonlinear, "
                            "mimo-sparse-pilots");
            cmd->add_option("--trials", args.trials, "override trial count");
        }
        cmd->add_option("--out-dir", args.out_dir, "output directory for csv files");
        cmd->add_option("--seed", args.seed, "rng seed")->each([&](const std::string&) {
            args.seed_set = true;
        });
    };

    CLI::App* run_cmd = app.add_subcommand("run", "run one experiment and emit csv");
    add_common(run_cmd, true);

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "run several updaters over the snr grid");
    add_common(sweep_cmd, true);
    sweep_cmd->add_option("--updaters", updater_names,
                          "updater kinds (cmekf vdekf lofi bong-ef bbb gd sgd)")
        ->delimiter(',');

    CLI::App* lat_cmd = app.add_subcommand("latency", "measure per-update latency");
    add_common(lat_cmd, false);
    lat_cmd->add_option("--widths", latency_widths, "hidden widths defining module sizes")
        ->delimiter(',');
    lat_cmd->add_option("--updates", latency_updates, "timed updates per combination");

    CLI::App* selftest_cmd = app.add_subcommand("selftest", "run built-in invariant checks");
    (void)selftest_cmd;

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            const ExperimentConfig cfg = resolve_config(args);
            const RunResult result = run_experiment(cfg);
            print_summaries(result);
            emit_csv({result}, {}, args.out_dir);
            std::printf("csv written to %s\n", args.out_dir.c_str());
            return 0;
        }
        if (sweep_cmd->parsed()) {
            ExperimentConfig cfg = resolve_config(args);
            if (updater_names.empty())
                updater_names = {"cmekf", "lofi", "vdekf", "gd"};
            std::vector<RunResult> results;
            for (const std::string& name : updater_names) {
                cfg.updater.kind = updater_kind_from_name(name);
                RunResult r = run_experiment(cfg);
                print_summaries(r);
                results.push_back(std::move(r));
            }
            emit_csv(results, {}, args.out_dir);
            std::printf("csv written to %s\n", args.out_dir.c_str());
            return 0;
        }
        if (lat_cmd->parsed()) {
            const auto rows = measure_latency(default_latency_roster(), 16, 2, latency_widths,
                                              latency_updates);
            for (const LatencyRow& row : rows) {
                if (row.refused)
                    std::printf("%-8s %-5s P=%-6d refused (capability policy)\n",
                                row.updater.c_str(), row.repr.c_str(), row.params);
                else
                    std::printf("%-8s %-5s P=%-6d mean=%9.2f us  p95=%9.2f us\n",
                                row.updater.c_str(), row.repr.c_str(), row.params, row.mean_us,
                                row.p95_us);
            }
            emit_csv({}, rows, args.out_dir);
            std::printf("csv written to %s\n", args.out_dir.c_str());
            return 0;
        }
        if (selftest_cmd->parsed()) return run_selftest();
    } catch (const std::invalid_argument& e) {
        return fail_with_summary("validation", e);
    } catch (const std::exception& e) {
        return fail_with_summary("runtime", e);
    }
    return 0;
}
