#include "msiph/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "msiph/errors.hpp"

namespace msiph {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

const std::map<std::string, std::string>& ExperimentConfig::defaults() {
    static const std::map<std::string, std::string> d{
        {"seed", "1"},
        {"planner.M", "32"},
        {"planner.lambda_max", "1550"},
        {"planner.delta_lambda", "0.5"},
        {"planner.Q", "8000"},
        {"device.V_ddh", "2.4"},
        {"device.R_hs", "2000"},
        {"device.C_load", "30e-15"},
        {"device.settling_budget", "200e-12"},
        {"device.R_u", "5e6"},
        {"device.shift_rate", "0.04"},
        {"device.extinction_floor", "0.001"},
        {"device.insertion_loss_db", "0"},
        {"device.responsivity", "0.5"},
        {"device.dr_loss_db", "2.5"},
        {"device.dr_oe", "670e-6"},
        {"device.G_m_tia", "1e-3"},
        {"device.R_f", "1650"},
        {"device.C_tia", "30e-15"},
        {"device.G_m_amp", "5e-3"},
        {"device.R_amp", "600"},
        {"device.C_amp", "80e-15"},
        {"device.g_m_ind", "auto"},
        {"device.gamma", "2.5"},
        {"device.T", "300"},
        {"device.adc_full_scale", "1.0"},
        {"device.adc_noise_rms", "0"},
        {"device.crosstalk", "0"},
        {"device.noise_scale", "1"},
        {"engine.M", "32"},
        {"engine.L", "4"},
        {"engine.clock_rate", "2e9"},
        {"engine.mode", "device"},
        {"engine.trials", "100"},
        {"engine.exhaustive", "false"},
        {"invert.M", "8"},
        {"invert.N", "64"},
        {"invert.k_max", "6"},
        {"invert.requantize", "true"},
        {"invert.mmm_mode", "parallel"},
        {"invert.fidelity", "float"},
        {"mimo.N", "64"},
        {"mimo.M", "8"},
        {"mimo.qam", "16"},
        {"mimo.trials", "200"},
        {"mimo.snr_db", "10,20"},
        {"mimo.k", "1,2,3,4,5,6,7,8"},
        {"mimo.fidelity", "float"},
        {"mimo.requantize", "true"},
        {"perf.M", "8,16,32,64,128,256"},
        {"perf.r2r_dac_w", "7.2e-6"},
        {"perf.hs_dac_w", "0.65e-3"},
        {"perf.analog_chain_w", "2.05e-3"},
        {"perf.digital_overhead_w", "0.6319e-3"},
        {"perf.clock_hz", "2e9"},
    };
    return d;
}

ExperimentConfig::ExperimentConfig() : values_(defaults()) {}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) throw ConfigError("unknown key '" + key + "'");
    values_[key] = value;
}

void ExperimentConfig::load_text(const std::string& text, const std::string& origin) {
    std::stringstream ss(text);
    std::string line;
    int n = 0;
    while (std::getline(ss, line)) {
        ++n;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(n) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (!values_.count(key)) throw ConfigError(origin + ":" + std::to_string(n) + ": unknown key '" + key + "'");
        values_[key] = trim(line.substr(eq + 1));
    }
}

void ExperimentConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    load_text(ss.str(), path);
}

const std::string& ExperimentConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
    return it->second;
}

double ExperimentConfig::get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
    }
}

long ExperimentConfig::get_int(const std::string& key) const {
    const std::string& v = get(key);
    try {
        size_t pos = 0;
        long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects an integer, got '" + v + "'");
    }
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key) const {
    const std::string& v = get(key);
    try {
        size_t pos = 0;
        unsigned long long d = std::stoull(v, &pos);
        if (pos != v.size() || v.front() == '-') throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a non-negative integer, got '" + v + "'");
    }
}

bool ExperimentConfig::get_bool(const std::string& key) const {
    std::string v = get(key);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("key '" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<double> ExperimentConfig::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : split_list(get(key))) {
        try {
            out.push_back(std::stod(s));
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "' has a non-numeric entry '" + s + "'");
        }
    }
    return out;
}

std::vector<int> ExperimentConfig::get_ints(const std::string& key) const {
    std::vector<int> out;
    for (const auto& s : split_list(get(key))) {
        try {
            out.push_back(std::stoi(s));
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "' has a non-integer entry '" + s + "'");
        }
    }
    return out;
}

std::string ExperimentConfig::resolved() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
    return os.str();
}

PlannerConfig ExperimentConfig::planner() const {
    PlannerConfig p;
    p.M = static_cast<int>(get_int("planner.M"));
    p.lambda_max = get_double("planner.lambda_max");
    p.delta_lambda_target = get_double("planner.delta_lambda");
    p.Q_mrm = get_double("planner.Q");
    return p;
}

DeviceChain ExperimentConfig::devices(int M, int L) const {
    DeviceChain d;
    d.hs_dac.L = L;
    d.hs_dac.V_ddh = get_double("device.V_ddh");
    d.hs_dac.R_hs = get_double("device.R_hs");
    d.hs_dac.C_load = get_double("device.C_load");
    d.hs_dac.settling_budget = get_double("device.settling_budget");
    d.r2r_dac.L = L;
    d.r2r_dac.V_ddh = d.hs_dac.V_ddh;
    d.r2r_dac.R_u = get_double("device.R_u");
    d.mrm.shift_rate = get_double("device.shift_rate");
    d.mrm.Q = get_double("planner.Q");
    d.mrm.extinction_floor = get_double("device.extinction_floor");
    d.mrm.insertion_loss_db = get_double("device.insertion_loss_db");
    d.rtr_pd.responsivity = get_double("device.responsivity");
    d.rtr_pd.dr_loss_db = get_double("device.dr_loss_db");
    d.dr_oe = get_double("device.dr_oe");
    d.analog.G_m_tia = get_double("device.G_m_tia");
    d.analog.R_f = get_double("device.R_f");
    d.analog.C_tia = get_double("device.C_tia");
    d.analog.G_m_amp = get_double("device.G_m_amp");
    d.analog.R_amp = get_double("device.R_amp");
    d.analog.C_amp = get_double("device.C_amp");
    d.analog.g_m_ind = get("device.g_m_ind") == "auto" ? 0.0 : get_double("device.g_m_ind");
    d.analog.gamma = get_double("device.gamma");
    d.analog.T = get_double("device.T");
    d.adc.L = L;
    d.adc.full_scale_diff = get_double("device.adc_full_scale");
    d.adc_noise_rms = get_double("device.adc_noise_rms");
    d.crosstalk = get_double("device.crosstalk");
    d.noise_scale = get_double("device.noise_scale");
    d.row_responsivity_scale.assign(M, 1.0);
    return d;
}

EngineConfig ExperimentConfig::engine(int M, int L) const {
    EngineConfig cfg;
    cfg.M = M;
    cfg.L = L;
    cfg.seed = seed();
    cfg.clock_rate = get_double("engine.clock_rate");
    cfg.material = default_material();
    PlannerConfig pc = planner();
    pc.M = M;
    cfg.plan = plan_all(pc, cfg.material);
    cfg.mma_plan = plan_mma_spectrum(cfg.plan, cfg.material);
    cfg.devices = devices(M, L);
    cfg.devices.rtr_pd.L_rtr = cfg.plan.L_rtr;
    cfg.devices.rtr_pd.Q_rtr = pc.Q_mrm;
    cfg.devices.rtr_pd.weight_ref = rtr_weight_ref(cfg.plan.lambdas, cfg.material.n_g);
    return cfg;
}

namespace {

std::optional<FidelityMode> parse_fidelity(const std::string& s) {
    if (s == "float") return std::nullopt;
    return fidelity_from_string(s);
}

}  // namespace

NeumannConfig ExperimentConfig::neumann() const {
    NeumannConfig n;
    n.k_max = static_cast<int>(get_int("invert.k_max"));
    n.requantize = get_bool("invert.requantize");
    n.mmm_mode = mmm_mode_from_string(get("invert.mmm_mode"));
    n.fidelity = parse_fidelity(get("invert.fidelity"));
    return n;
}

SweepConfig ExperimentConfig::mimo_sweep() const {
    SweepConfig s;
    s.N = static_cast<int>(get_int("mimo.N"));
    s.M = static_cast<int>(get_int("mimo.M"));
    s.qam = static_cast<int>(get_int("mimo.qam"));
    s.trials = static_cast<int>(get_int("mimo.trials"));
    s.seed = seed();
    s.ks = get_ints("mimo.k");
    s.snrs_db = get_doubles("mimo.snr_db");
    s.fidelities.clear();
    for (const auto& f : split_list(get("mimo.fidelity"))) s.fidelities.push_back(parse_fidelity(f));
    s.requantize = get_bool("mimo.requantize");
    return s;
}

BlockBudget ExperimentConfig::budget() const {
    BlockBudget b;
    b.r2r_dac_w = get_double("perf.r2r_dac_w");
    b.hs_dac_w = get_double("perf.hs_dac_w");
    b.analog_chain_w = get_double("perf.analog_chain_w");
    b.digital_overhead_per_row_w = get_double("perf.digital_overhead_w");
    b.clock_hz = get_double("perf.clock_hz");
    b.dr_oe = get_double("device.dr_oe");
    return b;
}

}  // namespace msiph
