#include "modrec/harness/config.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace modrec {

using nlohmann::json;

Constellation ExperimentConfig::make_constellation() const {
    if (constellation == "qpsk") return Constellation::qpsk();
    if (constellation == "bpsk") return Constellation::bpsk();
    throw std::invalid_argument("config: unknown constellation " + constellation);
}

std::vector<std::string> ExperimentConfig::validate() const {
    std::vector<std::string> errs;
    if (schema != 1) errs.push_back("schema: unsupported version");
    if (trials < 1) errs.push_back("trials: must be >= 1");
    try {
        channel.validate();
    } catch (const std::exception& e) {
        errs.push_back(e.what());
    }
    try {
        schedule.validate();
    } catch (const std::exception& e) {
        errs.push_back(e.what());
    }
    try {
        ssm.validate();
    } catch (const std::exception& e) {
        errs.push_back(e.what());
    }
    try {
        topology.validate();
    } catch (const std::exception& e) {
        errs.push_back(e.what());
    }
    Constellation c;
    try {
        c = make_constellation();
    } catch (const std::exception& e) {
        errs.push_back(e.what());
        return errs;
    }
    if (topology.bits != c.bits_per_symbol)
        errs.push_back("topology: bits per user must match the constellation");
    if (topology.users != channel.users || topology.antennas != channel.antennas)
        errs.push_back("topology: user/antenna counts must match the channel");
    if (receiver == ReceiverType::DeepSic && channel.kind == ChannelKind::Rotation)
        errs.push_back("receiver: rotation scenario uses the monolithic single-user receiver");
    if (updater.kind == UpdaterKind::LoFi && updater.rank < 0)
        errs.push_back("updater: lofi rank must be >= 0");
    if (updater.iters < 0 || updater.batch < 1 || updater.samples < 1)
        errs.push_back("updater: iteration/batch/sample counts must be positive");
    if (snr_grid_db.empty() && channel.kind != ChannelKind::Rotation)
        errs.push_back("scenario: snr grid must not be empty");
    return errs;
}

std::string updater_kind_name(UpdaterKind k) {
    switch (k) {
        case UpdaterKind::CmEkf: return "cmekf";
        case UpdaterKind::VdEkf: return "vdekf";
        case UpdaterKind::LoFi: return "lofi";
        case UpdaterKind::BongEf: return "bong-ef";
        case UpdaterKind::BbbOnline: return "bbb";
        case UpdaterKind::GdOnline: return "gd";
        case UpdaterKind::SgdBatch: return "sgd";
        case UpdaterKind::None: return "none";
    }
    return "unknown";
}

UpdaterKind updater_kind_from_name(const std::string& name) {
    if (name == "cmekf") return UpdaterKind::CmEkf;
    if (name == "vdekf") return UpdaterKind::VdEkf;
    if (name == "lofi") return UpdaterKind::LoFi;
    if (name == "bong-ef") return UpdaterKind::BongEf;
    if (name == "bbb") return UpdaterKind::BbbOnline;
    if (name == "gd") return UpdaterKind::GdOnline;
    if (name == "sgd") return UpdaterKind::SgdBatch;
    if (name == "none") return UpdaterKind::None;
    throw std::invalid_argument("config: unknown updater kind " + name);
}

std::string cov_kind_name(CovKind k) {
    switch (k) {
        case CovKind::Full: return "full";
        case CovKind::Diag: return "diag";
        case CovKind::Dlr: return "dlr";
    }
    return "unknown";
}

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig cfg;
    if (name == "rotation") {
        cfg.channel.kind = ChannelKind::Rotation;
        cfg.channel.users = 1;
        cfg.channel.antennas = 1;
        cfg.channel.alpha = 2.5e-4;
        cfg.channel.sigma_u2 = 1.0 / 16.0;
        cfg.receiver = ReceiverType::Monolithic;
        cfg.monolithic_hidden = {10};
        cfg.topology = {1, 1, 2, 1, 10};
        cfg.snr_grid_db = {0.0};  // unused: rotation noise is fixed by sigma_u2
        cfg.schedule = {0, 64, 16, 500};
        cfg.updater.kind = UpdaterKind::CmEkf;
        return cfg;
    }
    if (name == "mimo-linear" || name == "mimo-nonlinear") {
        cfg.channel.kind =
            name == "mimo-linear" ? ChannelKind::LinearMimo : ChannelKind::TanhMimo;
        cfg.channel.users = 3;
        cfg.channel.antennas = 5;
        cfg.receiver = ReceiverType::DeepSic;
        cfg.topology = {3, 5, 2, 3, 24};  // module P = 458
        cfg.snr_grid_db = {4.0, 8.0, 12.0};
        cfg.schedule = {256, 64, 16, 96};
        cfg.updater.kind = UpdaterKind::CmEkf;
        // DeepSIC modules saturate their soft outputs at these SNRs; a firm
        // floor on the Bernoulli observation covariance keeps EKF gains sane.
        cfg.updater.obs_cov_floor = 1e-2;
        return cfg;
    }
    if (name == "mimo-sparse-pilots") {
        cfg.channel.kind = ChannelKind::LinearMimo;
        cfg.channel.users = 3;
        cfg.channel.antennas = 5;
        cfg.receiver = ReceiverType::DeepSic;
        cfg.topology = {3, 5, 2, 3, 24};
        cfg.snr_grid_db = {10.0};
        cfg.schedule = {128, 64, 2, 298};
        cfg.updater.kind = UpdaterKind::CmEkf;
        cfg.updater.obs_cov_floor = 1e-2;
        return cfg;
    }
    throw std::invalid_argument("config: unknown preset " + name);
}

namespace {

json to_json(const ExperimentConfig& cfg) {
    json j;
    j["schema"] = cfg.schema;
    json ch;
    ch["kind"] = cfg.channel.kind == ChannelKind::Rotation     ? "rotation"
                 : cfg.channel.kind == ChannelKind::LinearMimo ? "linear-mimo"
                                                               : "tanh-mimo";
    ch["users"] = cfg.channel.users;
    ch["antennas"] = cfg.channel.antennas;
    ch["alpha"] = cfg.channel.alpha;
    ch["sigma_u2"] = cfg.channel.sigma_u2;
    ch["rho"] = cfg.channel.rho;
    ch["tanh_scale"] = cfg.channel.tanh_scale;
    ch["static_channel"] = cfg.channel.static_channel;
    j["scenario"] = {{"channel", ch},
                     {"snr_grid_db", cfg.snr_grid_db},
                     {"constellation", cfg.constellation}};
    j["receiver"] = {
        {"type", cfg.receiver == ReceiverType::DeepSic ? "deepsic" : "monolithic"},
        {"sic_iters", cfg.topology.sic_iters},
        {"hidden", cfg.topology.hidden},
        {"monolithic_hidden", cfg.monolithic_hidden}};
    j["updater"] = {{"kind", updater_kind_name(cfg.updater.kind)},
                    {"rank", cfg.updater.rank},
                    {"samples", cfg.updater.samples},
                    {"iters", cfg.updater.iters},
                    {"batch", cfg.updater.batch},
                    {"lr", cfg.updater.lr},
                    {"obs_cov_floor", cfg.updater.obs_cov_floor},
                    {"dlr_diag_refresh", cfg.updater.dlr_diag_refresh},
                    {"full_cov_param_cap", cfg.updater.full_cov_param_cap},
                    {"bong_cov", cov_kind_name(cfg.updater.bong_cov)},
                    {"gamma", cfg.ssm.gamma},
                    {"sigma2", cfg.ssm.sigma2},
                    {"prior_var", cfg.ssm.prior_var}};
    j["schedule"] = {{"t_sync", cfg.schedule.t_sync},
                     {"block_len", cfg.schedule.block_len},
                     {"pilots_per_block", cfg.schedule.pilots_per_block},
                     {"n_blocks", cfg.schedule.n_blocks}};
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    return j;
}

ExperimentConfig from_json(const json& j) {
    ExperimentConfig cfg;
    if (j.contains("preset")) cfg = preset_config(j.at("preset").get<std::string>());
    cfg.schema = j.value("schema", cfg.schema);
    if (j.contains("scenario")) {
        const json& sc = j.at("scenario");
        if (sc.contains("channel")) {
            const json& ch = sc.at("channel");
            if (ch.contains("kind")) {
                const std::string k = ch.at("kind").get<std::string>();
                if (k == "rotation") cfg.channel.kind = ChannelKind::Rotation;
                else if (k == "linear-mimo") cfg.channel.kind = ChannelKind::LinearMimo;
                else if (k == "tanh-mimo") cfg.channel.kind = ChannelKind::TanhMimo;
                else throw std::invalid_argument("config: unknown channel kind " + k);
            }
            cfg.channel.users = ch.value("users", cfg.channel.users);
            cfg.channel.antennas = ch.value("antennas", cfg.channel.antennas);
            cfg.channel.alpha = ch.value("alpha", cfg.channel.alpha);
            cfg.channel.sigma_u2 = ch.value("sigma_u2", cfg.channel.sigma_u2);
            cfg.channel.rho = ch.value("rho", cfg.channel.rho);
            cfg.channel.tanh_scale = ch.value("tanh_scale", cfg.channel.tanh_scale);
            cfg.channel.static_channel = ch.value("static_channel", cfg.channel.static_channel);
        }
        if (sc.contains("snr_grid_db"))
            cfg.snr_grid_db = sc.at("snr_grid_db").get<std::vector<double>>();
        cfg.constellation = sc.value("constellation", cfg.constellation);
    }
    if (j.contains("receiver")) {
        const json& rx = j.at("receiver");
        if (rx.contains("type")) {
            const std::string t = rx.at("type").get<std::string>();
            if (t == "deepsic") cfg.receiver = ReceiverType::DeepSic;
            else if (t == "monolithic") cfg.receiver = ReceiverType::Monolithic;
            else throw std::invalid_argument("config: unknown receiver type " + t);
        }
        cfg.topology.sic_iters = rx.value("sic_iters", cfg.topology.sic_iters);
        cfg.topology.hidden = rx.value("hidden", cfg.topology.hidden);
        if (rx.contains("monolithic_hidden"))
            cfg.monolithic_hidden = rx.at("monolithic_hidden").get<std::vector<int>>();
    }
    if (j.contains("updater")) {
        const json& up = j.at("updater");
        if (up.contains("kind"))
            cfg.updater.kind = updater_kind_from_name(up.at("kind").get<std::string>());
        cfg.updater.rank = up.value("rank", cfg.updater.rank);
        cfg.updater.samples = up.value("samples", cfg.updater.samples);
        cfg.updater.iters = up.value("iters", cfg.updater.iters);
        cfg.updater.batch = up.value("batch", cfg.updater.batch);
        cfg.updater.lr = up.value("lr", cfg.updater.lr);
        cfg.updater.obs_cov_floor = up.value("obs_cov_floor", cfg.updater.obs_cov_floor);
        cfg.updater.dlr_diag_refresh =
            up.value("dlr_diag_refresh", cfg.updater.dlr_diag_refresh);
        cfg.updater.full_cov_param_cap =
            up.value("full_cov_param_cap", cfg.updater.full_cov_param_cap);
        if (up.contains("bong_cov")) {
            const std::string b = up.at("bong_cov").get<std::string>();
            if (b == "full") cfg.updater.bong_cov = CovKind::Full;
            else if (b == "diag") cfg.updater.bong_cov = CovKind::Diag;
            else if (b == "dlr") cfg.updater.bong_cov = CovKind::Dlr;
            else throw std::invalid_argument("config: unknown bong covariance " + b);
        }
        cfg.ssm.gamma = up.value("gamma", cfg.ssm.gamma);
        cfg.ssm.sigma2 = up.value("sigma2", cfg.ssm.sigma2);
        cfg.ssm.prior_var = up.value("prior_var", cfg.ssm.prior_var);
    }
    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        cfg.schedule.t_sync = s.value("t_sync", cfg.schedule.t_sync);
        cfg.schedule.block_len = s.value("block_len", cfg.schedule.block_len);
        cfg.schedule.pilots_per_block = s.value("pilots_per_block", cfg.schedule.pilots_per_block);
        cfg.schedule.n_blocks = s.value("n_blocks", cfg.schedule.n_blocks);
    }
    cfg.trials = j.value("trials", cfg.trials);
    cfg.seed = j.value("seed", cfg.seed);
    // Keep the topology consistent with the scenario dimensions.
    cfg.topology.users = cfg.channel.users;
    cfg.topology.antennas = cfg.channel.antennas;
    const Constellation c = cfg.make_constellation();
    cfg.topology.bits = c.bits_per_symbol;
    return cfg;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    json j = json::parse(in);
    return from_json(j);
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write " + path);
    out << to_json(cfg).dump(2) << "\n";
}

}  // namespace modrec
