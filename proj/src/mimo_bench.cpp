#include "msiph/mimo_bench.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "msiph/errors.hpp"

namespace msiph {

using cd = std::complex<double>;

void MimoConfig::check() const {
    if (M < 1 || N <= M) throw ConfigError("need 1 <= M < N");
    int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(qam))));
    bool pow4 = qam >= 4 && (qam & (qam - 1)) == 0 && side * side == qam;
    if (!pow4) throw ConfigError("QAM order must be a power of 4");
    if (trials < 1) throw ConfigError("trials must be >= 1");
}

std::vector<cd> qam_constellation(int order) {
    int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
    if (side * side != order || side < 2) throw ConfigError("QAM order must be a perfect square");
    // average energy of the odd-integer grid is 2(side^2 - 1)/3
    const double norm = std::sqrt(2.0 * (side * side - 1) / 3.0);
    std::vector<cd> pts;
    for (int a = 0; a < side; ++a)
        for (int b = 0; b < side; ++b) pts.emplace_back((2 * a - side + 1) / norm, (2 * b - side + 1) / norm);
    return pts;
}

namespace {

double noise_var_for(int M, double snr_db) {
    if (!std::isfinite(snr_db)) return 0.0;
    return M / std::pow(10.0, snr_db / 10.0);
}

int slice(const std::vector<cd>& pts, cd x) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < pts.size(); ++k) {
        double d = std::norm(x - pts[k]);
        if (d < bd) {
            bd = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

}  // namespace

ChannelRealization generate_instance(const MimoConfig& cfg, std::mt19937_64& rng) {
    cfg.check();
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    std::uniform_int_distribution<int> pick(0, cfg.qam - 1);
    const auto pts = qam_constellation(cfg.qam);
    ChannelRealization c;
    c.H.resize(cfg.N, cfg.M);
    for (int j = 0; j < cfg.M; ++j)
        for (int i = 0; i < cfg.N; ++i) c.H(i, j) = cd(nd(rng), nd(rng));
    c.X.resize(cfg.M);
    for (int j = 0; j < cfg.M; ++j) {
        c.symbols.push_back(pick(rng));
        c.X(j) = pts[c.symbols.back()];
    }
    c.noise.resize(cfg.N);
    for (int i = 0; i < cfg.N; ++i) c.noise(i) = cd(nd(rng), nd(rng));
    c.noise_var = noise_var_for(cfg.M, cfg.snr_db);
    c.U = c.H * c.X + std::sqrt(c.noise_var) * c.noise;
    return c;
}

GramParts gram_decompose(const Eigen::MatrixXcd& H) {
    GramParts g;
    g.Z = H.adjoint() * H;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g.Z, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (ev.size() == 0 || ev(0) <= 1e-10 * std::max(1.0, ev(ev.size() - 1)))
        throw RankDeficient("channel matrix lacks full column rank");
    g.D = g.Z.diagonal().real();
    g.E = g.Z;
    for (int i = 0; i < g.Z.rows(); ++i) g.E(i, i) = 0.0;
    return g;
}

double spectral_radius(const GramParts& g) {
    Eigen::MatrixXcd A = g.D.cwiseInverse().asDiagonal() * g.E;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

DetectionResult linear_detect(const ChannelRealization& inst, const Eigen::MatrixXcd& z_inv, int qam) {
    const auto pts = qam_constellation(qam);
    DetectionResult r;
    r.X_hat = z_inv * (inst.H.adjoint() * inst.U);
    double err2 = 0.0;
    for (int j = 0; j < r.X_hat.size(); ++j) {
        if (slice(pts, r.X_hat(j)) != inst.symbols[j]) ++r.symbol_errors;
        err2 += std::norm(r.X_hat(j) - inst.X(j));
    }
    r.evm = std::sqrt(err2 / static_cast<double>(r.X_hat.size()));
    Eigen::MatrixXcd zi = (inst.H.adjoint() * inst.H).inverse();
    r.inversion_rel_error = (z_inv - zi).norm() / zi.norm();
    return r;
}

std::string fidelity_label(const std::optional<FidelityMode>& f) { return f ? to_string(*f) : "float"; }

std::vector<SweepRow> sweep(const SweepConfig& cfg, MvmEngine* eng) {
    MimoConfig mc;
    mc.N = cfg.N;
    mc.M = cfg.M;
    mc.qam = cfg.qam;
    mc.trials = cfg.trials;
    mc.seed = cfg.seed;
    mc.snr_db = std::numeric_limits<double>::infinity();
    mc.check();
    if (cfg.ks.empty() || cfg.snrs_db.empty()) throw ConfigError("sweep needs k and snr values");
    int k_max = 0;
    for (int k : cfg.ks) {
        if (k < 1) throw ConfigError("k values must be >= 1");
        k_max = std::max(k_max, k);
    }

    struct Acc {
        long errors = 0, symbols = 0;
        double inv_err = 0.0;
    };
    // key: (fidelity slot, k, snr slot); slot 0 is the exact inverse
    std::map<std::tuple<int, int, int>, Acc> acc;
    double rho_sum = 0.0;

    for (int t = 0; t < cfg.trials; ++t) {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(t)};
        std::mt19937_64 rng(seq);
        ChannelRealization inst;
        GramParts g;
        for (;;) {
            inst = generate_instance(mc, rng);
            try {
                g = gram_decompose(inst.H);
                break;
            } catch (const RankDeficient&) {
            }
        }
        rho_sum += spectral_radius(g);
        const Eigen::MatrixXcd zi = g.Z.inverse();

        std::vector<std::pair<int, std::vector<Eigen::MatrixXcd>>> invs;
        if (cfg.include_exact) invs.push_back({0, {zi}});
        for (size_t f = 0; f < cfg.fidelities.size(); ++f) {
            NeumannConfig nc;
            nc.k_max = k_max;
            nc.fidelity = cfg.fidelities[f];
            nc.requantize = cfg.requantize;
            ComplexNeumannRun run = neumann_invert(nc, g.Z, eng);
            invs.push_back({static_cast<int>(f) + 1, run.iterates});
        }
        const Eigen::VectorXcd hx = inst.H * inst.X;
        for (size_t s = 0; s < cfg.snrs_db.size(); ++s) {
            ChannelRealization at = inst;
            at.noise_var = noise_var_for(cfg.M, cfg.snrs_db[s]);
            at.U = hx + std::sqrt(at.noise_var) * inst.noise;
            for (const auto& [slot, mats] : invs) {
                const std::vector<int> ks = slot == 0 ? std::vector<int>{0} : cfg.ks;
                for (int k : ks) {
                    const Eigen::MatrixXcd& zk = slot == 0 ? mats[0] : mats[k];
                    DetectionResult d = linear_detect(at, zk, cfg.qam);
                    Acc& a = acc[{slot, k, static_cast<int>(s)}];
                    a.errors += d.symbol_errors;
                    a.symbols += cfg.M;
                    a.inv_err += d.inversion_rel_error;
                }
            }
        }
    }

    std::vector<SweepRow> rows;
    for (const auto& [key, a] : acc) {
        auto [slot, k, s] = key;
        SweepRow r;
        r.k = k;
        r.fidelity = slot == 0 ? "exact" : fidelity_label(cfg.fidelities[slot - 1]);
        r.snr_db = cfg.snrs_db[s];
        r.symbols = a.symbols;
        r.errors = a.errors;
        r.ser = static_cast<double>(a.errors) / static_cast<double>(a.symbols);
        r.inversion_rel_error = a.inv_err / cfg.trials;
        r.spectral_radius = rho_sum / cfg.trials;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace msiph
