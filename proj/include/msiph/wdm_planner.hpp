#pragma once

#include <string>
#include <vector>

#include "msiph/material.hpp"

namespace msiph {

struct PlannerConfig {
    int M = 32;
    double lambda_max = 1550.0;         // nm
    double delta_lambda_target = 0.5;   // nm
    double Q_mrm = 8000.0;

    void check() const;
};

/// Wavelengths and spacings in nm, lengths in um. Channels are stored in
/// ascending wavelength order.
struct WdmPlan {
    std::vector<double> lambdas;
    std::vector<double> spacings;
    std::vector<long> rtr_modes;
    double L_rtr = 0.0;
    std::vector<long> mrm_modes;
    std::vector<double> mrm_radii;
    double fsr_bound_radius = 0.0;

    int M() const { return static_cast<int>(lambdas.size()); }
    double span() const;              // sum of spacings, nm
};

// Fixed-point tolerance and iteration cap for lambda = n_eff(lambda)*L/m.
inline constexpr double kFixedPointTol = 1e-9;
inline constexpr int kFixedPointMaxIter = 100;

/// Resonant wavelength (nm) of mode m in a cavity of length L_um.
double solve_resonance(const MaterialModel& mat, double L_um, long m, double guess_nm);

WdmPlan plan_rtr_spectrum(const PlannerConfig& cfg, const MaterialModel& mat);
WdmPlan plan_mrm_radii(WdmPlan plan, const MaterialModel& mat);
WdmPlan plan_mma_spectrum(const WdmPlan& plan, const MaterialModel& mat);

/// plan_rtr_spectrum followed by plan_mrm_radii.
WdmPlan plan_all(const PlannerConfig& cfg, const MaterialModel& mat);

struct PlanReport {
    double max_resonance_residual = 0.0;   // nm
    double min_spacing = 0.0;         // nm
    double max_fsr_spacing_dev = 0.0; // relative, local FSR vs realized spacing
    std::vector<double> fsr_margin;   // um, bound - radius per channel
    std::vector<std::string> issues;
    bool ok() const { return issues.empty(); }
};

PlanReport validate_plan(const WdmPlan& plan, const MaterialModel& mat);

/// Relative fabrication-error scale: mean radius of a reference plan over
/// mean radius of this plan.
double error_scale(const WdmPlan& plan, const WdmPlan& reference);

/// One line per channel, flat key=value fields.
std::string export_plan(const WdmPlan& plan);

}  // namespace msiph
