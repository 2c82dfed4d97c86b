#include "msiph/linalg_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "msiph/errors.hpp"

namespace msiph {

const char* to_string(MmmMode m) { return m == MmmMode::PARALLEL ? "parallel" : "time_mux"; }

MmmMode mmm_mode_from_string(const std::string& s) {
    if (s == "parallel") return MmmMode::PARALLEL;
    if (s == "time_mux") return MmmMode::TIME_MUX;
    throw ConfigError("unknown mmm mode '" + s + "'");
}

Eigen::MatrixXd SignedEncoding::decode() const {
    const double top = (1 << pos.L) - 1;
    Eigen::MatrixXd x(pos.rows, pos.cols);
    for (int i = 0; i < pos.rows; ++i)
        for (int j = 0; j < pos.cols; ++j) x(i, j) = scale * (pos.at(i, j) - neg.at(i, j)) / top;
    return x;
}

bool SignedEncoding::canonical() const {
    for (size_t k = 0; k < pos.codes.size(); ++k)
        if (pos.codes[k] != 0 && neg.codes[k] != 0) return false;
    return true;
}

SignedEncoding from_signed_codes(const Eigen::MatrixXi& codes, int L, double scale) {
    const int top = (1 << L) - 1;
    SignedEncoding e;
    e.scale = scale;
    e.pos = QuantizedMatrix(codes.rows(), codes.cols(), L, scale);
    e.neg = QuantizedMatrix(codes.rows(), codes.cols(), L, scale);
    for (int i = 0; i < codes.rows(); ++i)
        for (int j = 0; j < codes.cols(); ++j) {
            int c = std::clamp(codes(i, j), -top, top);
            if (c > 0) e.pos.at(i, j) = c;
            if (c < 0) e.neg.at(i, j) = -c;
        }
    return e;
}

namespace {

double auto_scale(double m) { return m > 0 ? m : 1.0; }

int to_code(double x, double scale, int top) {
    long c = std::lround(x / scale * top);
    return static_cast<int>(std::clamp<long>(c, -top, top));
}

// Round half away from zero so that negation commutes with halving.
int halve(int c) { return c >= 0 ? (c + 1) / 2 : -((-c + 1) / 2); }

}  // namespace

SignedEncoding encode_signed(const Eigen::MatrixXd& x, int L, double scale) {
    const int top = (1 << L) - 1;
    const double s = scale > 0 ? scale : auto_scale(x.cwiseAbs().maxCoeff());
    Eigen::MatrixXi c(x.rows(), x.cols());
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j) c(i, j) = to_code(x(i, j), s, top);
    return from_signed_codes(c, L, s);
}

Eigen::MatrixXcd ComplexEncoding::decode() const {
    return real.decode().cast<std::complex<double>>() +
           std::complex<double>(0, 1) * imag.decode().cast<std::complex<double>>();
}

ComplexEncoding encode_complex(const Eigen::MatrixXcd& x, int L, double scale) {
    const double m = std::max(x.real().cwiseAbs().maxCoeff(), x.imag().cwiseAbs().maxCoeff());
    const double s = scale > 0 ? scale : auto_scale(m);
    return {encode_signed(x.real(), L, s), encode_signed(x.imag(), L, s)};
}

namespace {

void charge(MmmResult& r, MmmMode mm, int cols, int M) {
    if (mm == MmmMode::PARALLEL) {
        r.cycles = (cols + M - 1) / M;
        r.instances = M;
    } else {
        r.cycles = cols;
        r.instances = 1;
    }
}

void check_mmm(const MvmEngine& eng, const QuantizedMatrix& a, const QuantizedMatrix& y) {
    if (a.rows != eng.M() || a.cols != eng.M() || y.rows != eng.M())
        throw DimensionMismatch("MMM operands must have M rows and M columns in a");
}

}  // namespace

MmmResult run_mmm(MvmEngine& eng, FidelityMode mode, const QuantizedMatrix& a, const QuantizedMatrix& y,
                  MmmMode mm) {
    check_mmm(eng, a, y);
    MmmResult r;
    r.out = QuantizedMatrix(a.rows, y.cols, a.L, a.cols * a.scale * y.scale);
    // column j always draws noise stream base + j, whatever the schedule
    const std::uint64_t base = eng.reserve_ops(static_cast<std::uint64_t>(y.cols));
    for (int j = 0; j < y.cols; ++j) r.out.set_column(j, eng.run_mvm(mode, a, y.column(j), base + j).out);
    charge(r, mm, y.cols, eng.M());
    return r;
}

QuantizedMatrix run_mma(MvmEngine& eng, FidelityMode mode, const QuantizedMatrix& ay, const QuantizedMatrix& b) {
    if (!eng.has_mma()) throw PlanMissing("matrix addition needs the interleaved b-comb plan");
    if (ay.rows != b.rows || ay.cols != b.cols || ay.rows != eng.M())
        throw DimensionMismatch("addends must be M x n of equal shape");
    QuantizedMatrix out(ay.rows, ay.cols, ay.L, 2.0 * ay.scale);
    const std::uint64_t base = eng.reserve_ops(static_cast<std::uint64_t>(ay.cols));
    for (int j = 0; j < ay.cols; ++j) out.set_column(j, eng.run_add(mode, ay.column(j), b.column(j), base + j).out);
    return out;
}

MmmResult run_mmm_mma(MvmEngine& eng, FidelityMode mode, const QuantizedMatrix& a, const QuantizedMatrix& y,
                      const QuantizedMatrix& b, MmmMode mm) {
    if (!eng.has_mma()) throw PlanMissing("matrix addition needs the interleaved b-comb plan");
    check_mmm(eng, a, y);
    if (b.rows != a.rows || b.cols != y.cols) throw DimensionMismatch("addend shape");
    MmmResult r;
    r.out = QuantizedMatrix(a.rows, y.cols, a.L, 2.0 * a.cols * a.scale * y.scale);
    const std::uint64_t base = eng.reserve_ops(static_cast<std::uint64_t>(y.cols));
    for (int j = 0; j < y.cols; ++j)
        r.out.set_column(j, eng.run_mvm_add(mode, a, y.column(j), b.column(j), base + j).out);
    charge(r, mm, y.cols, eng.M());
    return r;
}

SignedProduct signed_mmm(MvmEngine& eng, FidelityMode mode, const SignedEncoding& a, const SignedEncoding& y,
                         const SignedEncoding* b, MmmMode mm) {
    if (a.cols() != y.rows() || a.L() != y.L()) throw DimensionMismatch("signed operand shapes");
    const int L = a.L();
    const double S = a.cols() * a.scale * y.scale;
    SignedProduct res;
    Eigen::MatrixXi acc = Eigen::MatrixXi::Zero(a.rows(), y.cols());
    auto add = [&](const QuantizedMatrix& m, int sign) {
        for (int i = 0; i < m.rows; ++i)
            for (int j = 0; j < m.cols; ++j) acc(i, j) += sign * m.at(i, j);
    };
    if (!b) {
        const std::pair<const QuantizedMatrix*, const QuantizedMatrix*> passes[4] = {
            {&a.pos, &y.pos}, {&a.neg, &y.neg}, {&a.pos, &y.neg}, {&a.neg, &y.pos}};
        for (int p = 0; p < 4; ++p) {
            MmmResult r = run_mmm(eng, mode, *passes[p].first, *passes[p].second, mm);
            add(r.out, p < 2 ? 1 : -1);
            res.cycles += r.cycles;
        }
        res.out = from_signed_codes(acc, L, S);
        return res;
    }
    if (b->rows() != a.rows() || b->cols() != y.cols()) throw DimensionMismatch("addend shape");
    SignedEncoding bs = std::abs(b->scale - S) <= 1e-12 * S ? *b : encode_signed(b->decode(), L, S);
    QuantizedMatrix zero(a.rows(), y.cols(), L, S);
    struct Pass {
        const QuantizedMatrix *a, *y, *b;
        int sign;
    };
    const Pass passes[4] = {{&a.pos, &y.pos, &bs.pos, 1},
                            {&a.neg, &y.neg, &zero, 1},
                            {&a.pos, &y.neg, &bs.neg, -1},
                            {&a.neg, &y.pos, &zero, -1}};
    for (const Pass& p : passes) {
        MmmResult r = run_mmm_mma(eng, mode, *p.a, *p.y, *p.b, mm);
        add(r.out, p.sign);
        res.cycles += r.cycles;
    }
    res.out = from_signed_codes(acc, L, 2.0 * S);
    return res;
}

SignedEncoding signed_mvm(MvmEngine& eng, FidelityMode mode, const SignedEncoding& a, const SignedEncoding& y) {
    if (y.cols() != 1) throw DimensionMismatch("vector operand must be a single column");
    return signed_mmm(eng, mode, a, y).out;
}

ComplexEncoding complex_mmm(MvmEngine& eng, FidelityMode mode, const ComplexEncoding& a,
                            const ComplexEncoding& y, MmmMode mm) {
    if (a.real.scale != a.imag.scale || y.real.scale != y.imag.scale)
        throw DimensionMismatch("complex parts must share one scale");
    SignedProduct rr = signed_mmm(eng, mode, a.real, y.real, nullptr, mm);
    SignedProduct ii = signed_mmm(eng, mode, a.imag, y.imag, nullptr, mm);
    SignedProduct ri = signed_mmm(eng, mode, a.real, y.imag, nullptr, mm);
    SignedProduct ir = signed_mmm(eng, mode, a.imag, y.real, nullptr, mm);
    auto codes = [](const SignedEncoding& e) {
        Eigen::MatrixXi c(e.rows(), e.cols());
        for (int i = 0; i < e.rows(); ++i)
            for (int j = 0; j < e.cols(); ++j) c(i, j) = e.pos.at(i, j) - e.neg.at(i, j);
        return c;
    };
    Eigen::MatrixXi re = codes(rr.out) - codes(ii.out);
    Eigen::MatrixXi im = codes(ri.out) + codes(ir.out);
    const double S2 = 2.0 * rr.out.scale;
    return {from_signed_codes(re.unaryExpr([](int c) { return halve(c); }), a.real.L(), S2),
            from_signed_codes(im.unaryExpr([](int c) { return halve(c); }), a.real.L(), S2)};
}

namespace {

template <typename Mat>
void split(const Mat& z, Mat& A, Mat& B) {
    const int M = static_cast<int>(z.rows());
    if (z.cols() != M) throw DimensionMismatch("matrix to invert must be square");
    A = Mat::Zero(M, M);
    B = Mat::Zero(M, M);
    for (int i = 0; i < M; ++i) {
        auto d = z(i, i);
        if (std::abs(d) == 0.0) throw ZeroDiagonal("zero diagonal entry at row " + std::to_string(i));
        B(i, i) = 1.0 / d;
        for (int j = 0; j < M; ++j)
            if (j != i) A(i, j) = -z(i, j) / d;
    }
}

template <typename Mat>
void record(NeumannTrace<Mat>& run, const Mat& z, const Mat& zinv, const Mat& Y, int k, long cycles) {
    const int M = static_cast<int>(z.rows());
    Mat I = Mat::Identity(M, M);
    double res = (I - Y * z).norm() / std::sqrt(static_cast<double>(M));
    run.iterates.push_back(Y);
    run.residuals.push_back(res);
    run.records.push_back({k, res, (Y - zinv).cwiseAbs().maxCoeff(), cycles});
    run.wall_cycles += cycles;
    const size_t n = run.residuals.size();
    if (n >= 4 && run.residuals[n - 1] > run.residuals[n - 2] && run.residuals[n - 2] > run.residuals[n - 3] &&
        run.residuals[n - 3] > run.residuals[n - 4])
        run.divergence_detected = true;
}

void check_engine(const NeumannConfig& cfg, MvmEngine* eng, int M) {
    if (cfg.k_max < 1) throw ConfigError("k_max must be >= 1");
    if (!cfg.fidelity) return;
    if (!eng) throw ConfigError("quantized inversion needs an engine");
    if (eng->M() != M) throw DimensionMismatch("engine dimension differs from the matrix");
}

// A's scale is widened so the fused addend fits the product's full scale.
double a_scale(double max_a, double max_b, int M, double s_y) {
    return std::max(auto_scale(max_a), max_b / (M * s_y));
}

// An all-zero Y carries no information; size its scale so B lands on full scale.
double y_scale(double max_y, double max_a, double max_b, int M) {
    if (max_y > 0) return max_y;
    return max_b > 0 ? max_b / (M * auto_scale(max_a)) : 1.0;
}

}  // namespace

NeumannRun neumann_invert(const NeumannConfig& cfg, const Eigen::MatrixXd& z, MvmEngine* eng) {
    const int M = static_cast<int>(z.rows());
    Eigen::MatrixXd A, B;
    split(z, A, B);
    check_engine(cfg, eng, M);
    Eigen::MatrixXd zinv = z.fullPivLu().inverse();

    NeumannRun run;
    run.fidelity = cfg.fidelity ? to_string(*cfg.fidelity) : "float";
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(M, M);
    record(run, z, zinv, Y, 0, 0);

    Eigen::MatrixXd Aq = A, Bq = B;
    if (cfg.fidelity && !cfg.requantize) {
        Aq = encode_signed(A, eng->L()).decode();
        Bq = encode_signed(B, eng->L()).decode();
    }
    for (int k = 1; k <= cfg.k_max; ++k) {
        long cycles = 0;
        if (!cfg.fidelity || !cfg.requantize) {
            Y = Bq + Aq * Y;
        } else {
            const int L = eng->L();
            const double ma = A.cwiseAbs().maxCoeff(), mb = B.cwiseAbs().maxCoeff();
            const double sy = y_scale(Y.cwiseAbs().maxCoeff(), ma, mb, M);
            const double sa = a_scale(ma, mb, M, sy);
            SignedEncoding ea = encode_signed(A, L, sa), ey = encode_signed(Y, L, sy);
            SignedEncoding eb = encode_signed(B, L, M * sa * sy);
            SignedProduct p = signed_mmm(*eng, *cfg.fidelity, ea, ey, &eb, cfg.mmm_mode);
            Y = p.out.decode();
            cycles = p.cycles;
        }
        record(run, z, zinv, Y, k, cycles);
    }
    return run;
}

ComplexNeumannRun neumann_invert(const NeumannConfig& cfg, const Eigen::MatrixXcd& z, MvmEngine* eng) {
    using C = std::complex<double>;
    const int M = static_cast<int>(z.rows());
    Eigen::MatrixXcd A, B;
    split(z, A, B);
    check_engine(cfg, eng, M);
    Eigen::MatrixXcd zinv = z.fullPivLu().inverse();

    ComplexNeumannRun run;
    run.fidelity = cfg.fidelity ? to_string(*cfg.fidelity) : "float";
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(M, M);
    record(run, z, zinv, Y, 0, 0);

    Eigen::MatrixXcd Aq = A, Bq = B;
    if (cfg.fidelity && !cfg.requantize) {
        Aq = encode_complex(A, eng->L()).decode();
        Bq = encode_complex(B, eng->L()).decode();
    }
    for (int k = 1; k <= cfg.k_max; ++k) {
        long cycles = 0;
        if (!cfg.fidelity || !cfg.requantize) {
            Y = Bq + Aq * Y;
        } else {
            const int L = eng->L();
            const FidelityMode mode = *cfg.fidelity;
            const double ma = std::max(A.real().cwiseAbs().maxCoeff(), A.imag().cwiseAbs().maxCoeff());
            const double mb = std::max(B.real().cwiseAbs().maxCoeff(), B.imag().cwiseAbs().maxCoeff());
            const double sy =
                y_scale(std::max(Y.real().cwiseAbs().maxCoeff(), Y.imag().cwiseAbs().maxCoeff()), ma, mb, M);
            const double sa = a_scale(ma, mb, M, sy);
            ComplexEncoding ea = encode_complex(A, L, sa), ey = encode_complex(Y, L, sy);
            ComplexEncoding eb = encode_complex(B, L, M * sa * sy);
            // B is fused into the real product; the imaginary parts of B are zero
            SignedProduct p_rr = signed_mmm(*eng, mode, ea.real, ey.real, &eb.real, cfg.mmm_mode);
            SignedProduct p_ii = signed_mmm(*eng, mode, ea.imag, ey.imag, nullptr, cfg.mmm_mode);
            SignedProduct p_ri = signed_mmm(*eng, mode, ea.real, ey.imag, &eb.imag, cfg.mmm_mode);
            SignedProduct p_ir = signed_mmm(*eng, mode, ea.imag, ey.real, nullptr, cfg.mmm_mode);
            Eigen::MatrixXd re = p_rr.out.decode() - p_ii.out.decode();
            Eigen::MatrixXd im = p_ri.out.decode() + p_ir.out.decode();
            Y = re.cast<C>() + C(0, 1) * im.cast<C>();
            cycles = p_rr.cycles + p_ii.cycles + p_ri.cycles + p_ir.cycles;
        }
        record(run, z, zinv, Y, k, cycles);
    }
    return run;
}

namespace {

template <typename Mat>
Mat series(const Mat& z, int k) {
    Mat A, B;
    split(z, A, B);
    Mat term = B, sum = Mat::Zero(z.rows(), z.cols());
    for (int n = 0; n < k; ++n) {
        sum += term;
        term = A * term;
    }
    return sum;
}

}  // namespace

Eigen::MatrixXd neumann_series(const Eigen::MatrixXd& z, int k) { return series(z, k); }
Eigen::MatrixXcd neumann_series(const Eigen::MatrixXcd& z, int k) { return series(z, k); }

std::string export_neumann(const std::vector<NeumannRecord>& recs, const std::string& fidelity) {
    std::ostringstream os;
    os << std::setprecision(10);
    for (const auto& r : recs)
        os << r.k << ',' << r.residual << ',' << r.max_abs_error << ',' << r.cycles << ',' << fidelity << '\n';
    return os.str();
}

}  // namespace msiph
