#include "msiph/device_models.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "msiph/errors.hpp"

namespace msiph {

namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

double HsDacModel::settling_residual() const { return std::exp(-settling_budget / tau()); }
bool HsDacModel::settles() const { return settling_residual() < std::ldexp(1.0, -(L + 1)); }

double RtrPdModel::absorption() const { return std::pow(10.0, -dr_loss_db / 10.0); }

SplitterModel SplitterModel::for_rows(int M) {
    SplitterModel s;
    s.stages = 0;
    while ((1 << s.stages) < M) ++s.stages;
    return s;
}

double SplitterModel::excess() const {
    return std::pow(10.0, -stages * excess_loss_db_per_stage / 10.0);
}

double SplitterModel::per_output(double p_in) const { return p_in / outputs() * excess(); }

double AnalogChainModel::R_tia() const { return R_f / (1.0 + G_m_tia * R_f); }

double AnalogChainModel::resolved_g_m_ind() const {
    if (g_m_ind > 0) return g_m_ind;
    // pick the active-inductor transconductance that puts full-scale noise at 11 uW
    AnalogChainModel c = *this;
    c.g_m_ind = 1e-12;
    NoiseTerms t = noise_terms_at_adc(c, 335e-6);
    double amp_needed = 11e-6 - t.shot - t.tia;
    double x = amp_needed * C_amp / (2.0 * kBoltzmann * T);
    return std::max(0.0, (x - 1.0 - gamma * G_m_amp * R_amp) / (gamma * R_amp));
}

double AdcModel::quantization_noise() const {
    double v = lsb();
    return v * v / 12.0;
}

double EoCalibrationTable::max_inl() const { return max_abs(inl); }
double EoCalibrationTable::max_dnl() const { return max_abs(dnl); }
double EoCalibrationTable::raw_max_inl() const { return max_abs(raw_inl); }
double EoCalibrationTable::raw_max_dnl() const { return max_abs(raw_dnl); }

double mrm_transmission(const MrmModel& m, double lambda_nm, double v_drive) {
    const double lr = m.lambda_res(v_drive);
    const double x = 2.0 * m.Q * (lambda_nm - lr) / lr;
    const double notch = 1.0 - (1.0 - m.extinction_floor) / (1.0 + x * x);
    return notch * std::pow(10.0, -m.insertion_loss_db / 10.0);
}

std::pair<std::vector<double>, std::vector<double>> inl_dnl(const std::vector<double>& g) {
    const size_t n = g.size();
    std::vector<double> inl(n, 0.0), dnl(n > 0 ? n - 1 : 0, 0.0);
    if (n < 2) return {inl, dnl};
    const double lsb = (g.back() - g.front()) / static_cast<double>(n - 1);
    if (lsb == 0.0) throw CalibrationFailure("flat transfer curve");
    for (size_t c = 0; c < n; ++c) inl[c] = (g[c] - g.front()) / lsb - static_cast<double>(c);
    for (size_t c = 1; c < n; ++c) dnl[c - 1] = (g[c] - g[c - 1]) / lsb - 1.0;
    return {inl, dnl};
}

EoCalibrationTable calibrate_levels(const std::vector<double>& g, int L, bool enforce) {
    const int K = 1 << L;
    const int n = static_cast<int>(g.size());
    if (n < K) throw CalibrationFailure("fewer candidate levels than codes");
    const double inf = std::numeric_limits<double>::infinity();

    double best_cost = inf, best_span = -1.0;
    std::vector<int> best_path;
    std::vector<double> cost(n), next(n);
    std::vector<std::vector<int>> from(K, std::vector<int>(n, -1));

    for (int e = K - 1; e < n; ++e) {
        const double lsb = (g[e] - g[0]) / (K - 1);
        if (lsb == 0.0) continue;
        std::vector<double> u(n);
        for (int l = 0; l < n; ++l) u[l] = (g[l] - g[0]) / lsb;

        std::fill(cost.begin(), cost.end(), inf);
        cost[0] = 0.0;
        for (int c = 1; c < K; ++c) {
            std::fill(next.begin(), next.end(), inf);
            int m_lo = c, m_hi = (c == K - 1) ? e : e - (K - 1 - c);
            if (c == K - 1) m_lo = e;
            for (int m = m_lo; m <= m_hi; ++m) {
                const double inl = std::abs(u[m] - c);
                for (int l = c - 1; l < m; ++l) {
                    if (cost[l] == inf) continue;
                    double v = std::max({cost[l], inl, std::abs(u[m] - u[l] - 1.0)});
                    if (v < next[m]) {
                        next[m] = v;
                        from[c][m] = l;
                    }
                }
            }
            std::swap(cost, next);
        }
        const double span = std::abs(g[e] - g[0]);
        const double c_end = cost[e];
        const bool better = c_end < best_cost - 1e-12 ||
                            (std::abs(c_end - best_cost) <= 1e-12 && span > best_span);
        if (c_end < inf && better) {
            best_cost = c_end;
            best_span = span;
            best_path.assign(K, 0);
            int m = e;
            for (int c = K - 1; c > 0; --c) {
                best_path[c] = m;
                m = from[c][m];
            }
            best_path[0] = 0;
        }
    }
    if (best_path.empty()) throw CalibrationFailure("no monotone subset found");

    EoCalibrationTable t;
    t.code_map = best_path;
    for (int c = 0; c < K; ++c) t.gains.push_back(g[best_path[c]]);
    std::tie(t.inl, t.dnl) = inl_dnl(t.gains);
    if (enforce && (t.max_inl() > 0.5 || t.max_dnl() > 0.5)) {
        std::ostringstream os;
        os << "best subset reaches INL " << t.max_inl() << " / DNL " << t.max_dnl() << " LSB";
        throw CalibrationFailure(os.str());
    }
    return t;
}

std::vector<double> uniform_levels(int count, double v_max) {
    std::vector<double> v(count);
    for (int k = 0; k < count; ++k) v[k] = v_max * k / (count - 1);
    return v;
}

EoCalibrationTable calibrate_eo(const MrmModel& m, const std::vector<double>& dac_levels,
                                double target_lambda, bool enforce) {
    int L = 0;
    while ((2 << L) < static_cast<int>(dac_levels.size())) ++L;
    if ((2 << L) != static_cast<int>(dac_levels.size()) || L < 1)
        throw CalibrationFailure("need 2^(L+1) drive levels");
    std::vector<double> g;
    for (double v : dac_levels) g.push_back(mrm_transmission(m, target_lambda, v));
    EoCalibrationTable t = calibrate_levels(g, L, enforce);

    const int K = 1 << L;
    const double v0 = dac_levels.front(), v1 = dac_levels.back();
    for (int c = 0; c < K; ++c)
        t.raw_gains.push_back(mrm_transmission(m, target_lambda, v0 + (v1 - v0) * c / (K - 1)));
    std::tie(t.raw_inl, t.raw_dnl) = inl_dnl(t.raw_gains);
    return t;
}

double rtr_weight_ref(const std::vector<double>& lambdas, const PiecewiseLinear& n_g) {
    if (lambdas.empty()) return 0.0;
    double s = 0.0;
    for (double l : lambdas) s += l / n_g(l);
    return s / static_cast<double>(lambdas.size());
}

double rtr_absorbed_power(const RtrPdModel& pd,
                          const std::vector<std::pair<double, double>>& per_channel_powers,
                          const PiecewiseLinear& n_g) {
    if (!(pd.weight_ref > 0)) throw ConfigError("RTR-PD weight reference not set");
    double s = 0.0;
    for (const auto& [lam, p] : per_channel_powers) s += lam / n_g(lam) * p;
    return pd.absorption() * s / pd.weight_ref;
}

double rtr_photocurrent(const RtrPdModel& pd, double absorbed_w) { return pd.responsivity * absorbed_w; }

TiaResponse tia_response(const AnalogChainModel& c) {
    const double rt = c.R_tia();
    return {c.G_m_tia * c.R_f * rt, 1.0 / (2.0 * std::numbers::pi * rt * c.C_tia)};
}

double tia_input_noise_psd(const AnalogChainModel& c) {
    const double rt = c.R_tia();
    double i2 = 2.0 * std::numbers::pi * kBoltzmann * c.T / (c.R_f * c.R_f) *
                (c.gamma / c.G_m_tia + 1.0 / (c.G_m_tia * c.G_m_tia * rt));
    return std::sqrt(i2);
}

NoiseTerms noise_terms_at_adc(const AnalogChainModel& c, double i_pd) {
    const double rt = c.R_tia();
    const double kt = kBoltzmann * c.T;
    const double amp = c.G_m_amp * c.G_m_amp * c.R_amp / c.C_amp;
    const double z2 = c.G_m_tia * c.G_m_tia * c.R_f * c.R_f * rt * rt;
    const double g_ind = c.resolved_g_m_ind();
    NoiseTerms t;
    t.shot = 0.5 * kElectronCharge * i_pd * z2 * amp;
    t.tia = kt * (c.gamma * c.G_m_tia * rt * rt + rt) * amp;
    t.amp = 2.0 * kt * (c.gamma * c.G_m_amp * c.R_amp + c.gamma * g_ind * c.R_amp + 1.0) / c.C_amp;
    return t;
}

double noise_power_at_adc(const AnalogChainModel& c, double i_pd) { return noise_terms_at_adc(c, i_pd).total(); }

double quantization_margin_db(const AnalogChainModel& c, const AdcModel& a, double i_pd) {
    return 10.0 * std::log10(a.quantization_noise() / noise_power_at_adc(c, i_pd));
}

double hs_dac_static_power(const HsDacModel& d) {
    const double n = std::ldexp(1.0, d.L);
    double s = 0.0;
    for (int k = 1; k <= static_cast<int>(n) - 1; ++k) s += (k - 1.0) * (n - k);
    return d.V_ddh * d.V_ddh / d.R_hs * s / (n * (n - 1) * (n - 1));
}

double hs_dac_static_power_printed(const HsDacModel& d) {
    const double n = std::ldexp(1.0, d.L);
    double s = 0.0;
    for (int k = 1; k <= static_cast<int>(n) - 1; ++k) s += (k - 1.0) * (n - k);
    return d.V_ddh * d.V_ddh / d.R_hs * s / (std::ldexp(1.0, d.L - 1) * (n - 1) * (n - 1));
}

namespace {

// Node 0 is the terminated LSB end, node L-1 the output. Shunt 2R from each
// node to its bit driver, series R between neighbours, 2R to ground at node 0.
Eigen::VectorXd r2r_nodes(const R2rDacModel& d, unsigned code) {
    const int n = d.L;
    const double g1 = 1.0 / d.R_u, g2 = 0.5 / d.R_u;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (int p = 0; p < n; ++p) {
        G(p, p) += g2;
        if ((code >> p) & 1u) b(p) += g2 * d.V_ddh;
        if (p + 1 < n) {
            G(p, p) += g1;
            G(p + 1, p + 1) += g1;
            G(p, p + 1) -= g1;
            G(p + 1, p) -= g1;
        }
    }
    G(0, 0) += g2;
    return G.ldlt().solve(b);
}

}  // namespace

double r2r_code_power(const R2rDacModel& d, unsigned code) {
    if (!std::isfinite(d.R_u)) return 0.0;
    Eigen::VectorXd v = r2r_nodes(d, code);
    double p = 0.0;
    for (int k = 0; k < d.L; ++k)
        if ((code >> k) & 1u) p += (d.V_ddh - v(k)) * 0.5 / d.R_u * d.V_ddh;
    return p;
}

double r2r_output_voltage(const R2rDacModel& d, unsigned code) { return r2r_nodes(d, code)(d.L - 1); }

double r2r_dac_static_power(const R2rDacModel& d) {
    const unsigned n = 1u << d.L;
    double s = 0.0;
    for (unsigned k = 0; k < n; ++k) s += r2r_code_power(d, k);
    return s / n;
}

double r2r_closed_form_power(const R2rDacModel& d) {
    const int L = d.L;
    // R_p = (R_{p-1} || 2R) + R as reduced fractions G_p / H_p
    std::vector<long long> G{1}, H{0};
    for (int p = 2; p <= L; ++p) {
        long long g, h;
        if (H.back() == 0) {
            g = 3;
            h = 1;
        } else {
            long long a = G.back(), bq = H.back();
            // (a/b * 2)/(a/b + 2) + 1 = (2a + a + 2b)/(a + 2b)
            g = 3 * a + 2 * bq;
            h = a + 2 * bq;
            long long q = std::gcd(g, h);
            g /= q;
            h /= q;
        }
        G.push_back(g);
        H.push_back(h);
    }
    auto bit = [](unsigned k, int i) { return static_cast<double>((k >> i) & 1u); };
    double tot = 0.0;
    for (unsigned k = 0; k < (1u << L); ++k)
        for (int p = 1; p <= L; ++p) {
            double vkp = 0.0;
            for (int q = 1; q <= L; ++q)
                vkp += bit(k, L - q) * static_cast<double>(std::min(G[p - 1], G[q - 1])) /
                       std::ldexp(1.0, p + q - 1);
            tot += bit(k, L - p) * (1.0 - vkp);
        }
    return d.V_ddh * d.V_ddh / d.R_u * tot / std::ldexp(1.0, L + 1);
}

double laser_power_per_wavelength(int M, double dr_oe) {
    const double stages = std::log2(static_cast<double>(M));
    return dr_oe / (std::pow(10.0, -7.5 / 10.0) * std::pow(10.0, -stages * 0.07 / 10.0));
}

double laser_total_power(int M, double dr_oe) { return M * laser_power_per_wavelength(M, dr_oe); }

int adc_quantize(const AdcModel& a, double v_diff) {
    const int top = a.max_code();
    double x = std::floor(v_diff / a.full_scale_diff * top + 0.5);
    if (!(x > 0)) return 0;
    return x > top ? top : static_cast<int>(x);
}

}  // namespace msiph
