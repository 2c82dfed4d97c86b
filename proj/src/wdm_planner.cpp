#include "msiph/wdm_planner.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>

#include "msiph/errors.hpp"

namespace msiph {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_pow2(int m) { return m >= 2 && (m & (m - 1)) == 0; }

}  // namespace

void PlannerConfig::check() const {
    if (!is_pow2(M)) throw ConfigError("planner.M must be a power of two >= 2");
    if (!(delta_lambda_target > 0)) throw ConfigError("planner.delta_lambda must be > 0");
    if (!(Q_mrm > 0)) throw ConfigError("planner.Q must be > 0");
}

double WdmPlan::span() const { return std::accumulate(spacings.begin(), spacings.end(), 0.0); }

double solve_resonance(const MaterialModel& mat, double L_um, long m, double guess_nm) {
    const double L_nm = L_um * 1e3;
    double lam = guess_nm;
    for (int it = 0; it < kFixedPointMaxIter; ++it) {
        double next = mat.n_eff(lam) * L_nm / static_cast<double>(m);
        if (std::abs(next - lam) < kFixedPointTol) return next;
        lam = next;
    }
    std::ostringstream os;
    os << "mode " << m << " did not settle within " << kFixedPointMaxIter << " iterations";
    throw NonConvergence(os.str());
}

WdmPlan plan_rtr_spectrum(const PlannerConfig& cfg, const MaterialModel& mat) {
    cfg.check();
    const int M = cfg.M;
    const double dl = cfg.delta_lambda_target;
    const double lo_need = cfg.lambda_max - M * dl * 1.2;
    if (!mat.n_eff.covers(lo_need, cfg.lambda_max) || !mat.n_g.covers(lo_need, cfg.lambda_max))
        throw DomainExceeded("material curves do not cover the requested band");

    // Mode count from the band centre, then walked back to the top channel.
    const double half = 0.5 * (M - 1);
    const double lam_c = cfg.lambda_max - half * dl;
    const double m_c = mat.n_eff(lam_c) / mat.n_g(lam_c) * lam_c / dl;
    const long m_top = std::lround(m_c - half);
    if (m_top < 1) throw InfeasiblePlan("spacing too large for any cavity mode");

    WdmPlan p;
    p.L_rtr = cfg.lambda_max * m_top / mat.n_eff(cfg.lambda_max) * 1e-3;
    p.lambdas.resize(M);
    p.rtr_modes.resize(M);
    p.lambdas[M - 1] = cfg.lambda_max;
    p.rtr_modes[M - 1] = m_top;
    for (int j = M - 2; j >= 0; --j) {
        long m = m_top + (M - 1 - j);
        double guess = p.lambdas[j + 1] - dl;
        if (guess < mat.domain_lo()) throw DomainExceeded("channel below the material domain");
        p.lambdas[j] = solve_resonance(mat, p.L_rtr, m, guess);
        p.rtr_modes[j] = m;
        if (p.lambdas[j] < mat.domain_lo()) throw DomainExceeded("channel below the material domain");
    }
    p.spacings.resize(M);
    for (int j = 0; j + 1 < M; ++j) p.spacings[j] = p.lambdas[j + 1] - p.lambdas[j];
    const double lt = p.lambdas[M - 1];
    p.spacings[M - 1] = lt * lt / (mat.n_g(lt) * p.L_rtr * 1e3);
    return p;
}

WdmPlan plan_mrm_radii(WdmPlan plan, const MaterialModel& mat) {
    if (plan.lambdas.empty()) throw PlanMissing("spectrum has not been planned");
    const double span = plan.span();
    const int M = plan.M();
    auto bound_nm = [&](double lam) { return lam * lam / (mat.n_g(lam) * kTwoPi * span); };

    plan.fsr_bound_radius = bound_nm(plan.lambdas[M - 1]) * 1e-3;
    for (double lam : plan.lambdas) plan.fsr_bound_radius = std::max(plan.fsr_bound_radius, bound_nm(lam) * 1e-3);
    plan.mrm_modes.assign(M, 0);
    plan.mrm_radii.assign(M, 0.0);
    for (int j = 0; j < M; ++j) {
        const double lam = plan.lambdas[j];
        const double per_mode = lam / (kTwoPi * mat.n_eff(lam));  // nm of radius per mode
        long m = static_cast<long>(std::floor(bound_nm(lam) / per_mode));
        if (m < 1) throw InfeasiblePlan("no ring mode satisfies the FSR bound");
        plan.mrm_modes[j] = m;
        plan.mrm_radii[j] = m * per_mode * 1e-3;
    }
    return plan;
}

WdmPlan plan_all(const PlannerConfig& cfg, const MaterialModel& mat) {
    return plan_mrm_radii(plan_rtr_spectrum(cfg, mat), mat);
}

WdmPlan plan_mma_spectrum(const WdmPlan& plan, const MaterialModel& mat) {
    if (plan.lambdas.empty() || plan.rtr_modes.size() != plan.lambdas.size() || plan.L_rtr <= 0)
        throw PlanMissing("base spectrum missing");
    const int M = plan.M();
    WdmPlan q;
    q.L_rtr = 2.0 * plan.L_rtr;
    q.lambdas.resize(M);
    q.rtr_modes.resize(M);
    for (int j = 0; j < M; ++j) {
        long m2 = 2 * plan.rtr_modes[j] - 1;
        double guess = plan.lambdas[j] + 0.5 * plan.spacings[j];
        q.lambdas[j] = solve_resonance(mat, q.L_rtr, m2, guess);
        q.rtr_modes[j] = m2;
        // both combs must sit on modes of the doubled cavity
        double r_orig = std::abs(plan.lambdas[j] -
                                 mat.n_eff(plan.lambdas[j]) * q.L_rtr * 1e3 / (2.0 * plan.rtr_modes[j]));
        double r_new = std::abs(q.lambdas[j] - mat.n_eff(q.lambdas[j]) * q.L_rtr * 1e3 / m2);
        if (r_orig > 1e-3 || r_new > 1e-3) throw InterleaveConflict("doubled cavity lost a resonance");
    }
    for (int j = 0; j < M; ++j) {
        double guard = 0.1 * 0.5 * plan.spacings[j];
        for (double lam : plan.lambdas)
            if (std::abs(q.lambdas[j] - lam) < guard) {
                std::ostringstream os;
                os << "offset wavelength " << q.lambdas[j] << " nm collides with " << lam << " nm";
                throw InterleaveConflict(os.str());
            }
    }
    q.spacings.resize(M);
    for (int j = 0; j + 1 < M; ++j) q.spacings[j] = q.lambdas[j + 1] - q.lambdas[j];
    q.spacings[M - 1] = plan.spacings[M - 1];
    q = plan_mrm_radii(std::move(q), mat);
    return q;
}

PlanReport validate_plan(const WdmPlan& plan, const MaterialModel& mat) {
    PlanReport r;
    const size_t M = plan.lambdas.size();
    if (M == 0) r.issues.push_back("lambdas missing");
    if (plan.spacings.size() != M || M == 0) r.issues.push_back("spacings missing");
    if (plan.rtr_modes.size() != M || M == 0) r.issues.push_back("rtr_modes missing");
    if (!(plan.L_rtr > 0)) r.issues.push_back("L_rtr missing");
    if (plan.mrm_modes.size() != M || M == 0) r.issues.push_back("mrm_modes missing");
    if (plan.mrm_radii.size() != M || M == 0) r.issues.push_back("mrm_radii missing");
    if (!(plan.fsr_bound_radius > 0)) r.issues.push_back("fsr_bound_radius missing");
    if (M == 0) return r;

    r.min_spacing = plan.spacings.empty() ? 0.0
                                          : *std::min_element(plan.spacings.begin(), plan.spacings.end());
    if (!plan.spacings.empty() && r.min_spacing <= 0) r.issues.push_back("non-positive spacing");

    if (plan.rtr_modes.size() == M && plan.L_rtr > 0) {
        for (size_t j = 0; j < M; ++j) {
            double lam = plan.lambdas[j];
            double res = std::abs(lam - mat.n_eff(lam) * plan.L_rtr * 1e3 / plan.rtr_modes[j]);
            r.max_resonance_residual = std::max(r.max_resonance_residual, res);
            if (j + 1 < M && plan.rtr_modes[j + 1] != plan.rtr_modes[j] - 1)
                r.issues.push_back("rtr modes not consecutive at channel " + std::to_string(j));
            if (plan.spacings.size() == M) {
                double fsr = lam * lam / (mat.n_g(lam) * plan.L_rtr * 1e3);
                r.max_fsr_spacing_dev = std::max(r.max_fsr_spacing_dev,
                                                 std::abs(fsr - plan.spacings[j]) / plan.spacings[j]);
            }
        }
        if (r.max_resonance_residual >= 1e-6) r.issues.push_back("resonance residual above 1e-6 nm");
        if (r.max_fsr_spacing_dev > 0.05) r.issues.push_back("local FSR disagrees with spacing by > 5%");
    }
    if (plan.mrm_radii.size() == M && plan.fsr_bound_radius > 0) {
        const double span = plan.span();
        for (size_t j = 0; j < M; ++j) {
            double lam = plan.lambdas[j];
            double margin = plan.fsr_bound_radius - plan.mrm_radii[j];
            r.fsr_margin.push_back(margin);
            if (margin < 0) r.issues.push_back("radius above FSR bound at channel " + std::to_string(j));
            double fsr = lam * lam / (mat.n_g(lam) * kTwoPi * plan.mrm_radii[j] * 1e3);
            if (fsr < span - 1e-9) r.issues.push_back("ring FSR below band span at channel " + std::to_string(j));
        }
    }
    return r;
}

double error_scale(const WdmPlan& plan, const WdmPlan& reference) {
    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    if (plan.mrm_radii.empty() || reference.mrm_radii.empty()) throw PlanMissing("radii missing");
    return mean(reference.mrm_radii) / mean(plan.mrm_radii);
}

std::string export_plan(const WdmPlan& plan) {
    std::ostringstream os;
    os << std::fixed;
    for (int j = 0; j < plan.M(); ++j) {
        os << "channel=" << j << std::setprecision(6) << " lambda_nm=" << plan.lambdas[j]
           << " spacing_nm=" << plan.spacings[j] << " rtr_mode=" << plan.rtr_modes[j];
        if (static_cast<size_t>(j) < plan.mrm_modes.size())
            os << " mrm_mode=" << plan.mrm_modes[j] << std::setprecision(6)
               << " radius_um=" << plan.mrm_radii[j];
        os << '\n';
    }
    return os.str();
}

}  // namespace msiph
