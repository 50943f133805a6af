#include "modrec/harness/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <thread>

namespace modrec {

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0x517cc1b727220a95ULL * (b + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double idx = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

struct BlockScore {
    long bit_errors = 0;
    long bits = 0;
    long symbol_errors = 0;
    long symbols = 0;
    std::vector<double> update_us;
};

struct TruthEntry {
    int block = 0;
    SymbolRole role = SymbolRole::Data;
    Eigen::VectorXd bits;
    bool score = true;
};

class Scorer {
public:
    Scorer(int users, int bits_per_symbol) : users_(users), bits_per_symbol_(bits_per_symbol) {}

    void score(int block, const Eigen::VectorXd& ell, const Eigen::VectorXd& truth) {
        BlockScore& s = blocks_[block];
        const Eigen::VectorXi dec = hard_decide(ell);
        for (int k = 0; k < users_; ++k) {
            bool sym_err = false;
            for (int b = 0; b < bits_per_symbol_; ++b) {
                const int i = k * bits_per_symbol_ + b;
                if (dec(i) != static_cast<int>(truth(i))) {
                    ++s.bit_errors;
                    sym_err = true;
                }
            }
            if (sym_err) ++s.symbol_errors;
            ++s.symbols;
        }
        s.bits += users_ * bits_per_symbol_;
    }

    void record_latency(int block, double us) { blocks_[block].update_us.push_back(us); }

    std::vector<BlockRecord> finish(int trial, double snr_db, long total_pilots_by_block_end,
                                    const std::map<int, long>& pilots_by_block) const {
        (void)total_pilots_by_block_end;
        std::vector<BlockRecord> out;
        long cum_pilots = 0;
        // Walk blocks in order; pilot counts accumulate even for blocks
        // that produced no data.
        std::map<int, BlockScore> merged = blocks_;
        for (const auto& [blk, n] : pilots_by_block)
            merged.try_emplace(blk);
        for (const auto& [blk, s] : merged) {
            auto it = pilots_by_block.find(blk);
            if (it != pilots_by_block.end()) cum_pilots += it->second;
            if (s.bits == 0 && s.update_us.empty()) continue;
            BlockRecord rec;
            rec.trial = trial;
            rec.snr_db = snr_db;
            rec.block = blk;
            rec.ber = s.bits > 0 ? static_cast<double>(s.bit_errors) / s.bits : 0.0;
            rec.ser = s.symbols > 0 ? static_cast<double>(s.symbol_errors) / s.symbols : 0.0;
            rec.data_bits = s.bits;
            rec.data_symbols = s.symbols;
            rec.pilots_seen = cum_pilots;
            if (!s.update_us.empty()) {
                rec.update_mean_us =
                    std::accumulate(s.update_us.begin(), s.update_us.end(), 0.0) /
                    static_cast<double>(s.update_us.size());
                rec.update_p95_us = percentile(s.update_us, 0.95);
            }
            out.push_back(rec);
        }
        return out;
    }

    double overall_ber() const {
        long errs = 0, bits = 0;
        for (const auto& [blk, s] : blocks_) {
            errs += s.bit_errors;
            bits += s.bits;
        }
        return bits > 0 ? static_cast<double>(errs) / bits : 0.0;
    }

private:
    int users_;
    int bits_per_symbol_;
    std::map<int, BlockScore> blocks_;
};

struct TrialOutput {
    std::vector<BlockRecord> blocks;
    double ber = 0.0;
};

TrialOutput simulate_one(const ExperimentConfig& cfg, int trial, double snr_db) {
    const Constellation c = cfg.make_constellation();
    const int K = cfg.topology.users;
    const int B = cfg.topology.bits;

    ChannelConfig ch = cfg.channel;
    ch.snr_db = snr_db;
    ch.seed = mix(cfg.seed, static_cast<std::uint64_t>(trial), 0xC4A11ULL);
    ChannelProcess chan(ch);

    std::mt19937_64 bit_rng(mix(cfg.seed, static_cast<std::uint64_t>(trial), 0xB175ULL));
    std::bernoulli_distribution coin(0.5);

    const std::uint64_t rx_seed = mix(cfg.seed, static_cast<std::uint64_t>(trial), 0x4278ULL);
    const bool streaming = cfg.updater.kind != UpdaterKind::SgdBatch;

    std::unique_ptr<DeepSic> sic;
    std::unique_ptr<MonolithicReceiver> mono;
    if (cfg.receiver == ReceiverType::DeepSic)
        sic = std::make_unique<DeepSic>(cfg.topology, cfg.updater, cfg.ssm, rx_seed);
    else
        mono = std::make_unique<MonolithicReceiver>(cfg.topology, cfg.monolithic_hidden,
                                                    cfg.updater, cfg.ssm, rx_seed);

    Scorer scorer(K, B);
    std::map<int, long> pilots_by_block;
    std::vector<TruthEntry> truth;  // indexed by pipeline sample index

    std::vector<PilotSample> sgd_buffer;
    int sgd_snapshot = -1;
    bool sgd_trained = false;
    auto sgd_train_now = [&]() {
        if (sgd_buffer.empty()) return;
        if (sic) sic->train_sgd_snapshot(sgd_buffer);
        else mono->train_sgd_snapshot(sgd_buffer);
        sgd_buffer.clear();
    };

    auto handle_output = [&](const PipelineOutput& out) {
        const TruthEntry& te = truth[static_cast<std::size_t>(out.sample_index)];
        if (te.score && te.role == SymbolRole::Data) scorer.score(te.block, out.ell, te.bits);
    };

    using clock = std::chrono::steady_clock;

    for (const ScheduledSymbol& sym : schedule_iter(cfg.schedule)) {
        const int block = cfg.schedule.block_of(sym.t);
        BitBlock bits_blk;
        bits_blk.bits.resize(K, B);
        for (int k = 0; k < K; ++k)
            for (int b = 0; b < B; ++b) bits_blk.bits(k, b) = coin(bit_rng) ? 1 : 0;
        Eigen::VectorXd bits_flat(K * B);
        for (int k = 0; k < K; ++k)
            for (int b = 0; b < B; ++b) bits_flat(k * B + b) = bits_blk.bits(k, b);

        const Eigen::VectorXcd s = modulate(bits_blk, c);
        const Eigen::VectorXd r = chan.transmit(block, sym.t, s);
        const bool pilot = sym.role != SymbolRole::Data;
        if (pilot) ++pilots_by_block[block];

        if (!streaming) {
            // Non-streaming SGD: batch-train when a snapshot's pilots are
            // complete (next snapshot begins or its first data symbol shows).
            if (block != sgd_snapshot) {
                sgd_train_now();
                sgd_snapshot = block;
                sgd_trained = false;
            }
            if (pilot) {
                sgd_buffer.push_back({r, bits_flat});
            } else {
                if (!sgd_trained) {
                    const auto t0 = clock::now();
                    sgd_train_now();
                    const auto t1 = clock::now();
                    scorer.record_latency(
                        block, std::chrono::duration<double, std::micro>(t1 - t0).count());
                    sgd_trained = true;
                }
                const Eigen::VectorXd ell = sic ? sic->forward(r) : mono->forward(r);
                scorer.score(block, ell, bits_flat);
            }
            continue;
        }

        if (sic) {
            truth.push_back({block, sym.role, bits_flat, true});
            const auto t0 = clock::now();
            auto out = sic->pipelined_step(r, pilot, bits_flat);
            const auto t1 = clock::now();
            if (pilot)
                scorer.record_latency(
                    block, std::chrono::duration<double, std::micro>(t1 - t0).count());
            if (out) handle_output(*out);
        } else {
            if (pilot) {
                const auto t0 = clock::now();
                mono->update(r, bits_flat);
                const auto t1 = clock::now();
                scorer.record_latency(
                    block, std::chrono::duration<double, std::micro>(t1 - t0).count());
            } else {
                scorer.score(block, mono->forward(r), bits_flat);
            }
        }
    }

    if (!streaming) sgd_train_now();

    // Drain the pipeline with unscored filler samples.
    if (sic && streaming) {
        const Eigen::VectorXd zero_r = Eigen::VectorXd::Zero(2 * cfg.topology.antennas);
        for (int q = 1; q < cfg.topology.sic_iters; ++q) {
            truth.push_back({0, SymbolRole::Data, Eigen::VectorXd::Zero(K * B), false});
            auto out = sic->pipelined_step(zero_r, false);
            if (out) handle_output(*out);
        }
    }

    TrialOutput out;
    out.blocks = scorer.finish(trial, snr_db, 0, pilots_by_block);
    out.ber = scorer.overall_ber();
    return out;
}

}  // namespace

int worker_count() {
    if (const char* env = std::getenv("MODREC_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

RunResult run_experiment(const ExperimentConfig& cfg) {
    const std::vector<std::string> errs = cfg.validate();
    if (!errs.empty()) {
        std::ostringstream os;
        os << "config validation failed:";
        for (const auto& e : errs) os << "\n  - " << e;
        throw std::invalid_argument(os.str());
    }

    struct Task {
        int trial;
        double snr_db;
    };
    std::vector<Task> tasks;
    for (double snr : cfg.snr_grid_db)
        for (int t = 0; t < cfg.trials; ++t) tasks.push_back({t, snr});

    std::vector<TrialOutput> outputs(tasks.size());
    std::atomic<std::size_t> next{0};
    const int workers = std::min<int>(worker_count(), static_cast<int>(tasks.size()));
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            outputs[i] = simulate_one(cfg, tasks[i].trial, tasks[i].snr_db);
        }
    };
    if (workers > 1) {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    } else {
        work();
    }

    RunResult result;
    result.updater_label = updater_kind_name(cfg.updater.kind);
    result.scenario = cfg.channel.kind == ChannelKind::Rotation     ? "rotation"
                      : cfg.channel.kind == ChannelKind::LinearMimo ? "linear-mimo"
                                                                    : "tanh-mimo";
    for (const auto& o : outputs)
        result.blocks.insert(result.blocks.end(), o.blocks.begin(), o.blocks.end());
    std::sort(result.blocks.begin(), result.blocks.end(), [](const auto& a, const auto& b) {
        return std::tie(a.snr_db, a.trial, a.block) < std::tie(b.snr_db, b.trial, b.block);
    });

    for (double snr : cfg.snr_grid_db) {
        SnrSummary s;
        s.snr_db = snr;
        for (std::size_t i = 0; i < tasks.size(); ++i)
            if (tasks[i].snr_db == snr) s.per_trial_ber.push_back(outputs[i].ber);
        const double n = static_cast<double>(s.per_trial_ber.size());
        s.ber_mean = std::accumulate(s.per_trial_ber.begin(), s.per_trial_ber.end(), 0.0) / n;
        double var = 0.0;
        for (double b : s.per_trial_ber) var += (b - s.ber_mean) * (b - s.ber_mean);
        s.ber_std = n > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
        result.summaries.push_back(s);
    }
    return result;
}

}  // namespace modrec
