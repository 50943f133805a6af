#include "modrec/harness/latency.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

namespace modrec {

namespace {

double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double idx = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

std::string repr_of(const UpdaterConfig& cfg) {
    switch (cfg.kind) {
        case UpdaterKind::CmEkf: return "full";
        case UpdaterKind::VdEkf: return "diag";
        case UpdaterKind::LoFi: return "dlr";
        case UpdaterKind::BongEf: return cov_kind_name(cfg.bong_cov);
        case UpdaterKind::BbbOnline: return "diag";
        default: return "point";
    }
}

std::vector<LatencyProbe> default_latency_roster() {
    std::vector<LatencyProbe> roster;
    SsmHyper ssm;
    auto add = [&](UpdaterKind kind, const std::string& label, auto&& tweak) {
        UpdaterConfig cfg;
        cfg.kind = kind;
        tweak(cfg);
        roster.push_back({cfg, ssm, label});
    };
    add(UpdaterKind::GdOnline, "gd", [](UpdaterConfig& c) { c.iters = 10; });
    add(UpdaterKind::BbbOnline, "bbb", [](UpdaterConfig& c) { c.iters = 10; });
    add(UpdaterKind::VdEkf, "vdekf", [](UpdaterConfig&) {});
    add(UpdaterKind::LoFi, "lofi", [](UpdaterConfig& c) { c.rank = 10; });
    add(UpdaterKind::CmEkf, "cmekf", [](UpdaterConfig&) {});
    add(UpdaterKind::BongEf, "bong-ef", [](UpdaterConfig& c) {
        c.bong_cov = CovKind::Diag;
        c.samples = 2;
    });
    return roster;
}

std::vector<LatencyRow> measure_latency(const std::vector<LatencyProbe>& roster,
                                        int input_dim, int output_bits,
                                        const std::vector<int>& hidden_widths,
                                        int updates, int warmup, std::uint64_t seed) {
    using clock = std::chrono::steady_clock;
    std::vector<LatencyRow> rows;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    for (const LatencyProbe& probe : roster) {
        for (int hidden : hidden_widths) {
            MlpSpec spec;
            spec.widths = {input_dim, hidden, output_bits};

            LatencyRow row;
            row.updater = probe.label;
            row.repr = repr_of(probe.updater);
            row.params = spec.param_count();

            // Pre-generate a small rotation of inputs and labels.
            std::vector<Eigen::VectorXd> xs(16), bs(16);
            for (std::size_t i = 0; i < xs.size(); ++i) {
                xs[i] = Eigen::VectorXd::NullaryExpr(input_dim, [&](Eigen::Index) { return gauss(rng); });
                bs[i] = Eigen::VectorXd::NullaryExpr(output_bits,
                                                     [&](Eigen::Index) { return coin(rng) ? 1.0 : 0.0; });
            }

            std::vector<double> samples;
            samples.reserve(static_cast<std::size_t>(updates));
            bool refused = false;
            try {
                ModuleState mod =
                    make_module(spec, probe.updater, probe.ssm, seed ^ static_cast<std::uint64_t>(hidden));
                for (int i = 0; i < warmup + updates; ++i) {
                    const auto& x = xs[static_cast<std::size_t>(i) % xs.size()];
                    const auto& b = bs[static_cast<std::size_t>(i) % bs.size()];
                    const auto t0 = clock::now();
                    apply_module_update(mod, x, b, probe.ssm, probe.updater);
                    const auto t1 = clock::now();
                    if (i >= warmup)
                        samples.push_back(
                            std::chrono::duration<double, std::micro>(t1 - t0).count());
                }
            } catch (const CapabilityError&) {
                refused = true;
            }
            row.refused = refused;
            if (!samples.empty()) {
                row.mean_us = std::accumulate(samples.begin(), samples.end(), 0.0) /
                              static_cast<double>(samples.size());
                row.p95_us = percentile(samples, 0.95);
            }
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace modrec
