#include "msiph/material.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "msiph/errors.hpp"

namespace msiph {

PiecewiseLinear::PiecewiseLinear(std::vector<std::pair<double, double>> knots)
    : knots_(std::move(knots)) {
    std::sort(knots_.begin(), knots_.end());
    if (knots_.size() < 2) throw DomainExceeded("curve needs at least two knots");
    for (size_t i = 1; i < knots_.size(); ++i)
        if (knots_[i].first <= knots_[i - 1].first)
            throw DomainExceeded("curve knots must be distinct");
}

double PiecewiseLinear::operator()(double x) const {
    if (knots_.empty()) throw DomainExceeded("empty curve");
    const double eps = 1e-9;
    if (x < lo() - eps || x > hi() + eps) {
        std::ostringstream os;
        os << "wavelength " << x << " nm outside [" << lo() << ", " << hi() << "]";
        throw DomainExceeded(os.str());
    }
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                               [](double v, const auto& k) { return v < k.first; });
    if (it == knots_.begin()) return knots_.front().second;
    if (it == knots_.end()) return knots_.back().second;
    const auto& [x1, y1] = *(it - 1);
    const auto& [x2, y2] = *it;
    return y1 + (y2 - y1) * (x - x1) / (x2 - x1);
}

bool PiecewiseLinear::covers(double a, double b) const {
    return !knots_.empty() && a >= lo() - 1e-9 && b <= hi() + 1e-9;
}

double MaterialModel::domain_lo() const { return std::max(n_eff.lo(), n_g.lo()); }
double MaterialModel::domain_hi() const { return std::min(n_eff.hi(), n_g.hi()); }

void MaterialModel::check() const {
    if (n_eff.empty() || n_g.empty()) throw DomainExceeded("material curves missing");
    if (domain_lo() > 1180.0 || domain_hi() < 1550.0)
        throw DomainExceeded("material curves must cover 1180..1550 nm");
    std::vector<double> xs;
    for (const auto& k : n_eff.knots()) xs.push_back(k.first);
    for (const auto& k : n_g.knots()) xs.push_back(k.first);
    for (double x : xs) {
        if (x < domain_lo() || x > domain_hi()) continue;
        double ne = n_eff(x), ng = n_g(x);
        if (!(ng > ne && ne > 1.0)) throw DomainExceeded("need n_g > n_eff > 1 on the domain");
    }
}

namespace {

double ng_default(double lam) { return 4.98 + (1550.0 - lam) * (0.04 / 15.5); }

}  // namespace

MaterialModel default_material() {
    // dn_eff/dlambda = (n_eff - n_g) / lambda, integrated both ways from 1550 nm
    const double lo = 1180.0, hi = 1600.0, anchor = 1550.0, n0 = 3.7312;
    auto f = [](double lam, double n) { return (n - ng_default(lam)) / lam; };

    std::vector<std::pair<double, double>> neff{{anchor, n0}};
    for (double h : {-0.5, 0.5}) {
        double lam = anchor, n = n0;
        while (lam > lo + 1e-9 && lam < hi - 1e-9) {
            double k1 = f(lam, n);
            double k2 = f(lam + h / 2, n + h / 2 * k1);
            double k3 = f(lam + h / 2, n + h / 2 * k2);
            double k4 = f(lam + h, n + h * k3);
            n += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
            lam += h;
            long tenth = std::lround(lam * 10);
            if (tenth % 10 == 0 || tenth == 15345) neff.emplace_back(lam, n);
        }
    }
    MaterialModel m;
    m.n_eff = PiecewiseLinear(neff);
    m.n_g = PiecewiseLinear({{lo, ng_default(lo)}, {hi, ng_default(hi)}});
    return m;
}

double group_index_mismatch(const MaterialModel& mat) {
    double worst = 0.0;
    const double lo = mat.domain_lo(), hi = mat.domain_hi();
    for (double lam = lo + 1.0; lam < hi - 1.0; lam += 1.0) {
        double slope = (mat.n_eff(lam + 0.5) - mat.n_eff(lam - 0.5));
        double implied = mat.n_eff(lam) - lam * slope;
        worst = std::max(worst, std::abs(implied - mat.n_g(lam)) / mat.n_g(lam));
    }
    return worst;
}

}  // namespace msiph
