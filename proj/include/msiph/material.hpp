#pragma once

#include <utility>
#include <vector>

namespace msiph {

/// Piecewise-linear curve over sorted knots. Evaluation outside the knot
/// range throws DomainExceeded.
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;
    explicit PiecewiseLinear(std::vector<std::pair<double, double>> knots);

    double operator()(double x) const;
    double lo() const { return knots_.front().first; }
    double hi() const { return knots_.back().first; }
    bool covers(double a, double b) const;
    bool empty() const { return knots_.empty(); }
    const std::vector<std::pair<double, double>>& knots() const { return knots_; }

private:
    std::vector<std::pair<double, double>> knots_;
};

/// Wavelengths in nm. Both curves are dimensionless indices.
struct MaterialModel {
    PiecewiseLinear n_eff;
    PiecewiseLinear n_g;

    double domain_lo() const;
    double domain_hi() const;
    void check() const;  // throws DomainExceeded when the invariants fail
};

/// Silicon strip-waveguide curves for the 1180..1600 nm band.
/// n_g falls linearly 5.06 -> 4.98 over 1519..1550 nm and is extended
/// linearly to 1180 and 1600 nm; n_eff is integrated from n_g so that
/// n_g = n_eff - lambda * dn_eff/dlambda holds, starting from
/// n_eff(1550) = 3.7312.
MaterialModel default_material();

/// Largest relative disagreement between the stored n_g and the group index
/// implied by the slope of n_eff, sampled across the domain.
double group_index_mismatch(const MaterialModel& mat);

}  // namespace msiph
