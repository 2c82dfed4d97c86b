#include "msiph/perf_model.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "msiph/device_models.hpp"

namespace msiph {

const std::vector<ReferenceRow>& reference_table() {
    static const std::vector<ReferenceRow> rows{
        {16, 64.3, 79.2, 198.7, 0.33, 0.512, 1.56, 388.0},
        {32, 130.7, 156.0, 400.7, 1.14, 2.048, 1.80, 195.6},
        {64, 265.6, 309.6, 818.0, 4.16, 8.192, 1.97, 99.8},
        {128, 539.9, 616.8, 1701.1, 15.77, 32.768, 2.08, 51.9},
        {256, 1097.3, 1231.2, 3653.3, 61.12, 131.072, 2.14, 27.9},
    };
    return rows;
}

double heater_power(int M, const BlockBudget& b) {
    // M*(1+M) a-MRMs and y-MRMs share the M per-row heaters, plus M b-MRMs
    return M * (1.0 + M) * b.heater_unit_w / M + M * b.heater_unit_w;
}

PowerBreakdown total_power(int M, const BlockBudget& b) {
    PowerBreakdown p;
    p.laser = laser_total_power(M, b.dr_oe);
    p.heater = heater_power(M, b);
    p.electronics = M * (b.hs_dac_w + b.analog_chain_w + b.digital_overhead_per_row_w) +
                    static_cast<double>(M) * M * b.r2r_dac_w;
    p.soc = p.laser + p.heater + p.electronics;
    return p;
}

double total_area_um2(int M, const BlockBudget& b) {
    const double m = M;
    const double rtr = b.rtr_pd_length * m / b.rtr_reference_M * b.rtr_pd_width;
    const double splitter = std::log2(m) * b.splitter_stage_length * m * b.splitter_row_pitch;
    return m * (b.hs_dac_area + rtr + b.analog_chain_area) + m * m * b.r2r_dac_area +
           (m + m * m) * b.mrm_tile_area + splitter;
}

double total_area(int M, const BlockBudget& b) { return total_area_um2(M, b) * 1e-6; }

PerfReport perf_report(int M, const BlockBudget& b) {
    PerfReport r;
    r.M = M;
    PowerBreakdown p = total_power(M, b);
    r.laser_w = p.laser;
    r.heater_w = p.heater;
    r.electronics_w = p.electronics;
    r.soc_w = p.soc;
    r.area_mm2 = total_area(M, b);
    r.clock_hz = b.clock_hz;
    r.bits = b.bits;
    r.tmacs = static_cast<double>(M) * M * b.clock_hz * 1e-12;
    r.tops = 2.0 * r.tmacs;
    r.density_tmacs_per_mm2 = r.tmacs / r.area_mm2;
    if (r.tmacs > 0) r.energy_fj_per_mac = r.soc_w / (r.tmacs * 1e12) * 1e15;
    return r;
}

PerfTable perf_table(const std::vector<int>& Ms, const BlockBudget& b) {
    PerfTable t;
    for (int M : Ms) t.rows.push_back(perf_report(M, b));
    return t;
}

double fit_digital_overhead(const BlockBudget& b) {
    BlockBudget z = b;
    z.digital_overhead_per_row_w = 0.0;
    double num = 0.0, den = 0.0;
    for (const auto& ref : reference_table()) {
        double resid = ref.soc_mw * 1e-3 - total_power(ref.M, z).soc;
        num += resid * ref.M;
        den += static_cast<double>(ref.M) * ref.M;
    }
    return num / den;
}

namespace {

const ReferenceRow* find_ref(int M) {
    for (const auto& r : reference_table())
        if (r.M == M) return &r;
    return nullptr;
}

void cell(std::ostringstream& os, double v, const ReferenceRow* ref, double ReferenceRow::*field) {
    os << ',' << v << ',';
    if (ref && ref->*field != 0.0) os << (v - ref->*field) / (ref->*field);
}

}  // namespace

std::string perf_csv(const PerfTable& t) {
    std::ostringstream os;
    os << std::setprecision(8);
    os << "M,laser_mw,laser_rel_diff,heater_mw,heater_rel_diff,soc_mw,soc_rel_diff,area_mm2,area_rel_diff,"
          "tmacs,tmacs_rel_diff,tops,density_tmacs_mm2,density_rel_diff,energy_fj_mac,energy_rel_diff,"
          "clock_ghz,bits\n";
    for (const auto& r : t.rows) {
        const ReferenceRow* ref = find_ref(r.M);
        os << r.M;
        cell(os, r.laser_w * 1e3, ref, &ReferenceRow::laser_mw);
        cell(os, r.heater_w * 1e3, ref, &ReferenceRow::heater_mw);
        cell(os, r.soc_w * 1e3, ref, &ReferenceRow::soc_mw);
        cell(os, r.area_mm2, ref, &ReferenceRow::area_mm2);
        cell(os, r.tmacs, ref, &ReferenceRow::tmacs);
        os << ',' << r.tops;
        cell(os, r.density_tmacs_per_mm2, ref, &ReferenceRow::density);
        if (r.energy_fj_per_mac)
            cell(os, *r.energy_fj_per_mac, ref, &ReferenceRow::energy_fj);
        else
            os << ",,";
        os << ',' << r.clock_hz * 1e-9 << ',' << r.bits << '\n';
    }
    os << "tpuv4,,,,," << t.tpu.busy_power_w * 1e3 << ",," << t.tpu.area_mm2 << ",," << t.tpu.tmacs << ",,"
       << 2 * t.tpu.tmacs << ',' << t.tpu.density << ",," << t.tpu.energy_fj_per_mac << ",,1.05,8\n";
    return os.str();
}

}  // namespace msiph
