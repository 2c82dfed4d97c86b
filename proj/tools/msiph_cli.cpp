// msiph command-line driver.
#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "msiph/acceptance.hpp"
#include "msiph/config.hpp"
#include "msiph/errors.hpp"

using namespace msiph;

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "csv";
    std::vector<std::string> overrides;
};

ExperimentConfig load_config(const Options& o) {
    ExperimentConfig cfg;
    if (!o.config_path.empty()) cfg.load_file(o.config_path);
    for (const auto& kv : o.overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.seed) cfg.set("seed", std::to_string(*o.seed));
    return cfg;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

nlohmann::json cell_value(const std::string& s) {
    if (s.empty()) return nullptr;
    if (s == "true") return true;
    if (s == "false") return false;
    try {
        size_t pos = 0;
        double d = std::stod(s, &pos);
        if (pos == s.size()) {
            if (s.find_first_of(".eEn") == std::string::npos) return std::stoll(s);
            return d;
        }
    } catch (const std::exception&) {
    }
    return s;
}

// Tables are built as CSV (header row first) and converted for jsonl.
void emit(const Options& o, const ExperimentConfig& cfg, const std::string& command, const std::string& csv) {
    std::ostringstream doc;
    if (o.format == "csv") {
        doc << "# " << kToolName << ' ' << kToolVersion << " command=" << command << " seed=" << cfg.seed() << '\n'
            << csv;
    } else {
        nlohmann::json head = {{"tool", kToolName}, {"version", kToolVersion}, {"command", command},
                               {"seed", cfg.seed()}};
        doc << head.dump() << '\n';
        std::stringstream ss(csv);
        std::string line;
        std::getline(ss, line);
        auto cols = split_csv_line(line);
        while (std::getline(ss, line)) {
            auto cells = split_csv_line(line);
            nlohmann::json row = nlohmann::json::object();
            for (size_t i = 0; i < cols.size(); ++i) row[cols[i]] = i < cells.size() ? cell_value(cells[i]) : nullptr;
            doc << row.dump() << '\n';
        }
    }
    if (o.out.empty()) {
        std::cout << doc.str();
        return;
    }
    std::ofstream f(o.out);
    if (!f) throw IoError("cannot write " + o.out);
    f << doc.str();
    std::ofstream c(o.out + ".config");
    if (!c) throw IoError("cannot write " + o.out + ".config");
    c << "# " << kToolName << ' ' << kToolVersion << " command=" << command << " seed=" << cfg.seed() << '\n'
      << cfg.resolved();
}

int cmd_plan(const Options& o, bool mma) {
    ExperimentConfig cfg = load_config(o);
    const MaterialModel mat = default_material();
    WdmPlan plan = plan_all(cfg.planner(), mat);
    std::optional<WdmPlan> comb;
    if (mma) comb = plan_mma_spectrum(plan, mat);
    std::ostringstream os;
    os << std::setprecision(10) << "channel,lambda_nm,spacing_nm,rtr_mode,mrm_mode,radius_um";
    if (comb) os << ",mma_lambda_nm,mma_mode";
    os << '\n';
    for (int j = 0; j < plan.M(); ++j) {
        os << j << ',' << plan.lambdas[j] << ',' << plan.spacings[j] << ',' << plan.rtr_modes[j] << ','
           << plan.mrm_modes[j] << ',' << plan.mrm_radii[j];
        if (comb) os << ',' << comb->lambdas[j] << ',' << comb->rtr_modes[j];
        os << '\n';
    }
    emit(o, cfg, "plan", os.str());
    PlanReport rep = validate_plan(plan, mat);
    std::cerr << std::setprecision(8) << "L_rtr " << plan.L_rtr << " um";
    if (comb) std::cerr << ", interleaved L' " << comb->L_rtr << " um";
    std::cerr << ", fsr bound radius " << plan.fsr_bound_radius << " um, residual " << rep.max_resonance_residual
              << " nm\n";
    for (const auto& i : rep.issues) std::cerr << "warning: " << i << '\n';
    return rep.ok() ? 0 : 2;
}

int cmd_mvm(const Options& o) {
    ExperimentConfig cfg = load_config(o);
    const int M = static_cast<int>(cfg.get_int("engine.M")), L = static_cast<int>(cfg.get_int("engine.L"));
    const FidelityMode mode = fidelity_from_string(cfg.get("engine.mode"));
    MvmEngine eng(cfg.engine(M, L));
    eng.calibrate();
    std::ostringstream os;
    long mismatches = 0, cases = 0;
    if (cfg.get_bool("engine.exhaustive")) {
        const int bits = L * (M * M + M);
        if (bits > 24) throw ConfigError("exhaustive sweep needs L*(M*M+M) <= 24 bits, got " + std::to_string(bits));
        const int mask = (1 << L) - 1;
        QuantizedMatrix a(M, M, L);
        QuantizedVector y{std::vector<int>(M), 1.0, L};
        os << "case,a_codes,y_codes,out_codes,golden_codes,match\n";
        auto join = [](const std::vector<int>& v) {
            std::string s;
            for (size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
            return s;
        };
        for (long code = 0; code < (1L << bits); ++code) {
            long c = code;
            for (auto& v : a.codes) v = static_cast<int>(c & mask), c >>= L;
            for (auto& v : y.codes) v = static_cast<int>(c & mask), c >>= L;
            MvmResult r = eng.run_mvm(mode, a, y, code);
            QuantizedVector g = golden_mvm(a, y);
            bool match = r.out.codes == g.codes;
            mismatches += !match;
            ++cases;
            os << code << ',' << join(a.codes) << ',' << join(y.codes) << ',' << join(r.out.codes) << ','
               << join(g.codes) << ',' << (match ? "true" : "false") << '\n';
        }
    } else {
        std::mt19937_64 rng(cfg.seed());
        std::uniform_int_distribution<int> pick(0, (1 << L) - 1);
        QuantizedMatrix a(M, M, L);
        QuantizedVector y{std::vector<int>(M), 1.0, L};
        os << "op,row,photocurrent_a,voltage_v,noise_v,code,golden,error_lsb\n";
        const long trials = cfg.get_int("engine.trials");
        for (long t = 0; t < trials; ++t) {
            for (auto& v : a.codes) v = pick(rng);
            for (auto& v : y.codes) v = pick(rng);
            MvmResult r = eng.run_mvm(mode, a, y, static_cast<std::uint64_t>(t));
            for (const auto& d : r.rows) mismatches += d.error != 0;
            cases += M;
            os << export_diagnostics(r, static_cast<std::uint64_t>(t));
        }
    }
    emit(o, cfg, "mvm", os.str());
    std::cerr << to_string(mode) << ": " << mismatches << " of " << cases
              << (cfg.get_bool("engine.exhaustive") ? " cases" : " outputs") << " differ from the golden result\n";
    return 0;
}

int cmd_invert(const Options& o) {
    ExperimentConfig cfg = load_config(o);
    MimoConfig mc;
    mc.N = static_cast<int>(cfg.get_int("invert.N"));
    mc.M = static_cast<int>(cfg.get_int("invert.M"));
    mc.seed = cfg.seed();
    std::mt19937_64 rng(cfg.seed());
    ChannelRealization inst = generate_instance(mc, rng);
    GramParts g = gram_decompose(inst.H);
    NeumannConfig nc = cfg.neumann();
    std::optional<MvmEngine> eng;
    if (nc.fidelity) {
        eng.emplace(cfg.engine(mc.M, static_cast<int>(cfg.get_int("engine.L"))));
        eng->calibrate();
    }
    ComplexNeumannRun run = neumann_invert(nc, g.Z, eng ? &*eng : nullptr);
    emit(o, cfg, "invert",
         "k,residual,max_abs_error,cycles,fidelity\n" + export_neumann(run.records, fidelity_label(nc.fidelity)));
    std::cerr << "spectral radius " << spectral_radius(g) << ", wall cycles " << run.wall_cycles
              << (run.divergence_detected ? ", residual grew" : "") << '\n';
    return 0;
}

int cmd_mimo(const Options& o) {
    ExperimentConfig cfg = load_config(o);
    SweepConfig sc = cfg.mimo_sweep();
    std::optional<MvmEngine> eng;
    bool needs_engine = false;
    for (const auto& f : sc.fidelities) needs_engine |= f.has_value();
    if (needs_engine) {
        eng.emplace(cfg.engine(sc.M, static_cast<int>(cfg.get_int("engine.L"))));
        eng->calibrate();
    }
    std::vector<SweepRow> rows = sweep(sc, eng ? &*eng : nullptr);
    std::ostringstream os;
    os << std::setprecision(10) << "k,fidelity,snr_db,symbols,errors,ser,inversion_rel_error,spectral_radius\n";
    for (const auto& r : rows)
        os << r.k << ',' << r.fidelity << ',' << r.snr_db << ',' << r.symbols << ',' << r.errors << ',' << r.ser << ','
           << r.inversion_rel_error << ',' << r.spectral_radius << '\n';
    emit(o, cfg, "mimo", os.str());
    return 0;
}

int cmd_perf(const Options& o) {
    ExperimentConfig cfg = load_config(o);
    PerfTable t = perf_table(cfg.get_ints("perf.M"), cfg.budget());
    emit(o, cfg, "perf", perf_csv(t));
    return 0;
}

int cmd_validate(const Options& o) {
    ExperimentConfig cfg = load_config(o);
    bool ok = false;
    std::string report = validate_report(cfg.seed(), &ok);
    if (o.out.empty()) {
        std::cout << report;
    } else {
        std::ofstream f(o.out);
        if (!f) throw IoError("cannot write " + o.out);
        f << report;
        std::ofstream c(o.out + ".config");
        c << "# " << kToolName << ' ' << kToolVersion << " command=validate seed=" << cfg.seed() << '\n'
          << cfg.resolved();
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Photonic MVM engine simulator"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config_path, "key = value settings file")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "overrides the seed key");
    app.add_option("--out", o.out, "output file (stdout when absent)");
    app.add_option("--format", o.format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
    app.add_option("--set", o.overrides, "key=value override, repeatable");

    bool mma = false;
    auto* plan = app.add_subcommand("plan", "WDM channel plan and ring radii");
    plan->add_flag("--mma", mma, "add the interleaved second comb");
    auto* mvm = app.add_subcommand("mvm", "random or exhaustive products through the engine");
    bool exhaustive = false;
    mvm->add_flag("--exhaustive", exhaustive, "every code combination (small M, L only)");
    app.add_subcommand("invert", "Neumann inversion of one channel Gram matrix");
    app.add_subcommand("mimo", "detection sweep over k, fidelity and SNR");
    app.add_subcommand("perf", "power, area and throughput table");
    app.add_subcommand("validate", "acceptance report; nonzero exit on failure");

    CLI11_PARSE(app, argc, argv);
    if (exhaustive) o.overrides.push_back("engine.exhaustive=true");
    try {
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "plan") return cmd_plan(o, mma);
        if (cmd == "mvm") return cmd_mvm(o);
        if (cmd == "invert") return cmd_invert(o);
        if (cmd == "mimo") return cmd_mimo(o);
        if (cmd == "perf") return cmd_perf(o);
        return cmd_validate(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
