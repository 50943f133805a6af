#include "modrec/receiver.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace modrec {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed ^ (salt * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Eigen::VectorXd random_init(const MlpSpec& spec, std::mt19937_64& rng) {
    // He-style fan-in scaling for weights, zero biases.
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(spec.param_count());
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int l = 0; l < spec.layers(); ++l) {
        const int rows = spec.widths[static_cast<std::size_t>(l + 1)];
        const int cols = spec.widths[static_cast<std::size_t>(l)];
        const double sd = std::sqrt(2.0 / static_cast<double>(cols));
        const int off = spec.layer_offset(l);
        for (int i = 0; i < rows * cols; ++i) theta(off + i) = sd * gauss(rng);
    }
    return theta;
}

}  // namespace

void ReceiverTopology::validate() const {
    if (users <= 0 || antennas <= 0 || bits <= 0 || sic_iters <= 0 || hidden <= 0)
        throw std::invalid_argument("receiver: all topology dimensions must be positive");
}

ModuleState make_module(const MlpSpec& spec, const UpdaterConfig& cfg, const SsmHyper& ssm,
                        std::uint64_t seed) {
    // Refuse full-covariance beliefs past the memory cap before the P x P
    // prior is ever allocated.
    const bool full_cov = cfg.kind == UpdaterKind::CmEkf ||
                          (cfg.kind == UpdaterKind::BongEf && cfg.bong_cov == CovKind::Full);
    if (full_cov && spec.param_count() > cfg.full_cov_param_cap)
        throw CapabilityError("full-covariance belief refused: P=" +
                              std::to_string(spec.param_count()) + " exceeds cap " +
                              std::to_string(cfg.full_cov_param_cap));
    ModuleState m;
    m.spec = spec;
    m.rng = std::mt19937_64(seed);
    const Eigen::VectorXd mu0 = random_init(m.spec, m.rng);
    switch (cfg.kind) {
        case UpdaterKind::CmEkf:
            m.bayesian = true;
            m.belief = GaussianBelief::full_prior(mu0, ssm.prior_var);
            break;
        case UpdaterKind::VdEkf:
        case UpdaterKind::BbbOnline:
            m.bayesian = true;
            m.belief = GaussianBelief::diag_prior(mu0, ssm.prior_var);
            break;
        case UpdaterKind::LoFi:
            m.bayesian = true;
            m.belief = GaussianBelief::dlr_prior(mu0, ssm.prior_var, cfg.rank);
            break;
        case UpdaterKind::BongEf:
            m.bayesian = true;
            switch (cfg.bong_cov) {
                case CovKind::Full: m.belief = GaussianBelief::full_prior(mu0, ssm.prior_var); break;
                case CovKind::Diag: m.belief = GaussianBelief::diag_prior(mu0, ssm.prior_var); break;
                case CovKind::Dlr:
                    m.belief = GaussianBelief::dlr_prior(mu0, ssm.prior_var, cfg.rank);
                    break;
            }
            break;
        case UpdaterKind::GdOnline:
        case UpdaterKind::SgdBatch:
        case UpdaterKind::None:
            m.bayesian = false;
            m.theta = mu0;
            break;
    }
    return m;
}

void apply_module_update(ModuleState& m, const Eigen::VectorXd& x, const Eigen::VectorXd& bits,
                         const SsmHyper& ssm, const UpdaterConfig& cfg) {
    switch (cfg.kind) {
        case UpdaterKind::CmEkf:
            m.belief = cmekf_update(predict(m.belief, ssm), m.spec, x, bits, cfg);
            break;
        case UpdaterKind::VdEkf:
            m.belief = vdekf_update(predict(m.belief, ssm), m.spec, x, bits, cfg);
            break;
        case UpdaterKind::LoFi:
            m.belief = lofi_update(predict(m.belief, ssm), m.spec, x, bits, cfg);
            break;
        case UpdaterKind::BongEf:
            m.belief = bong_ef_update(predict(m.belief, ssm), m.spec, x, bits, m.rng, cfg);
            break;
        case UpdaterKind::BbbOnline:
            m.belief = bbb_online_update(predict(m.belief, ssm), m.spec, x, bits, cfg);
            break;
        case UpdaterKind::GdOnline:
            m.theta = gd_online_update(m.theta, m.spec, x, bits, cfg.iters, cfg.lr);
            break;
        case UpdaterKind::SgdBatch:
        case UpdaterKind::None:
            break;
    }
}

Eigen::VectorXi hard_decide(const Eigen::VectorXd& ell) {
    Eigen::VectorXi bits(ell.size());
    for (int i = 0; i < ell.size(); ++i) bits(i) = ell(i) > 0.5 ? 1 : 0;
    return bits;
}

Eigen::VectorXd assemble_input(const Eigen::VectorXd& r, const Eigen::VectorXd& ell_prev) {
    Eigen::VectorXd x(r.size() + ell_prev.size());
    x << r, ell_prev;
    return x;
}

DeepSic::DeepSic(const ReceiverTopology& topo, const UpdaterConfig& cfg, const SsmHyper& ssm,
                 std::uint64_t seed)
    : topo_(topo), cfg_(cfg), ssm_(ssm) {
    topo_.validate();
    MlpSpec spec;
    spec.widths = {topo_.module_input_dim(), topo_.hidden, topo_.bits};
    modules_.reserve(static_cast<std::size_t>(topo_.users * topo_.sic_iters));
    for (int q = 0; q < topo_.sic_iters; ++q)
        for (int k = 0; k < topo_.users; ++k)
            modules_.push_back(make_module(
                spec, cfg_, ssm_,
                mix_seed(seed, static_cast<std::uint64_t>(q * topo_.users + k + 1))));
}

Eigen::VectorXd DeepSic::forward(const Eigen::VectorXd& r) const {
    const int K = topo_.users;
    const int B = topo_.bits;
    Eigen::VectorXd ell = Eigen::VectorXd::Constant(K * B, 0.5);
    for (int q = 0; q < topo_.sic_iters; ++q) {
        const Eigen::VectorXd x = assemble_input(r, ell);
        Eigen::VectorXd next(K * B);
        for (int k = 0; k < K; ++k) {
            const ModuleState& m = module(k, q);
            next.segment(k * B, B) = mlp_forward(m.spec, m.inference_params(), x);
        }
        ell = next;
    }
    return ell;
}

void DeepSic::run_stage(int q, InFlight& e) {
    const int K = topo_.users;
    const int B = topo_.bits;
    const Eigen::VectorXd x = assemble_input(e.r, e.ell);
    const bool train = training_enabled_ && e.pilot && cfg_.kind != UpdaterKind::None &&
                       cfg_.kind != UpdaterKind::SgdBatch;

    auto process_user = [&](int k, Eigen::VectorXd& out) {
        ModuleState& m = module(k, q);
        if (train) apply_module_update(m, x, e.bits.segment(k * B, B), ssm_, cfg_);
        out = mlp_forward(m.spec, m.inference_params(), x);
    };

    std::vector<Eigen::VectorXd> outs(static_cast<std::size_t>(K));
    if (parallel_modules_ && K > 1) {
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k)
            workers.emplace_back([&, k] { process_user(k, outs[static_cast<std::size_t>(k)]); });
        for (auto& w : workers) w.join();
    } else {
        for (int k = 0; k < K; ++k) process_user(k, outs[static_cast<std::size_t>(k)]);
    }
    for (int k = 0; k < K; ++k) e.ell.segment(k * B, B) = outs[static_cast<std::size_t>(k)];
    e.layers_applied += 1;
    if (train) e.updates_applied += K;
}

std::optional<PipelineOutput> DeepSic::pipelined_step(const Eigen::VectorXd& r, bool pilot,
                                                       const Eigen::VectorXd& bits) {
    if (pilot && bits.size() != topo_.users * topo_.bits)
        throw std::invalid_argument("pipeline: pilot sample requires labels");

    InFlight fresh;
    fresh.sample_index = next_sample_++;
    fresh.r = r;
    fresh.pilot = pilot;
    fresh.bits = bits;
    fresh.ell = Eigen::VectorXd::Constant(topo_.users * topo_.bits, 0.5);
    pipe_.push_front(std::move(fresh));

    // Stage q consumes the soft estimates its sample got from stage q-1 on
    // the previous tick; distinct stages touch distinct samples.
    const int stages = std::min<int>(topo_.sic_iters, static_cast<int>(pipe_.size()));
    for (int q = 0; q < stages; ++q) run_stage(q, pipe_[static_cast<std::size_t>(q)]);

    if (static_cast<int>(pipe_.size()) == topo_.sic_iters) {
        PipelineOutput out;
        InFlight& done = pipe_.back();
        out.sample_index = done.sample_index;
        out.ell = done.ell;
        out.pilot = done.pilot;
        out.layers_applied = done.layers_applied;
        out.updates_applied = done.updates_applied;
        pipe_.pop_back();
        return out;
    }
    return std::nullopt;
}

void DeepSic::reset_pipeline() {
    pipe_.clear();
    next_sample_ = 0;
}

void DeepSic::train_sgd_snapshot(const std::vector<PilotSample>& pilots) {
    if (pilots.empty()) return;
    const int K = topo_.users;
    const int B = topo_.bits;
    std::vector<Eigen::VectorXd> ells(pilots.size(),
                                      Eigen::VectorXd::Constant(K * B, 0.5));
    for (int q = 0; q < topo_.sic_iters; ++q) {
        std::vector<Eigen::VectorXd> xs(pilots.size());
        for (std::size_t i = 0; i < pilots.size(); ++i)
            xs[i] = assemble_input(pilots[i].x, ells[i]);
        for (int k = 0; k < K; ++k) {
            ModuleState& m = module(k, q);
            std::vector<PilotSample> buf(pilots.size());
            for (std::size_t i = 0; i < pilots.size(); ++i)
                buf[i] = {xs[i], pilots[i].bits.segment(k * B, B)};
            m.theta = sgd_batch_update(m.theta, m.spec, buf, cfg_.iters, cfg_.batch,
                                       cfg_.lr, m.rng);
        }
        for (std::size_t i = 0; i < pilots.size(); ++i) {
            for (int k = 0; k < K; ++k) {
                const ModuleState& m = module(k, q);
                ells[i].segment(k * B, B) = mlp_forward(m.spec, m.inference_params(), xs[i]);
            }
        }
    }
}

MonolithicReceiver::MonolithicReceiver(const ReceiverTopology& topo,
                                       const std::vector<int>& hidden_widths,
                                       const UpdaterConfig& cfg, const SsmHyper& ssm,
                                       std::uint64_t seed)
    : cfg_(cfg), ssm_(ssm) {
    MlpSpec spec;
    spec.widths.push_back(2 * topo.antennas);
    for (int w : hidden_widths) spec.widths.push_back(w);
    spec.widths.push_back(topo.users * topo.bits);
    state_ = make_module(spec, cfg_, ssm_, mix_seed(seed, 0xabcdefULL));
}

Eigen::VectorXd MonolithicReceiver::forward(const Eigen::VectorXd& r) const {
    return mlp_forward(state_.spec, state_.inference_params(), r);
}

void MonolithicReceiver::update(const Eigen::VectorXd& r, const Eigen::VectorXd& bits) {
    apply_module_update(state_, r, bits, ssm_, cfg_);
}

void MonolithicReceiver::train_sgd_snapshot(const std::vector<PilotSample>& pilots) {
    state_.theta = sgd_batch_update(state_.theta, state_.spec, pilots, cfg_.iters, cfg_.batch,
                                    cfg_.lr, state_.rng);
}

}  // namespace modrec
