#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "msiph/mvm_engine.hpp"

namespace msiph {

enum class MmmMode { PARALLEL, TIME_MUX };

const char* to_string(MmmMode m);
MmmMode mmm_mode_from_string(const std::string& s);

/// value = scale * (pos - neg) / (2^L - 1). A vector is a single column.
struct SignedEncoding {
    QuantizedMatrix pos;
    QuantizedMatrix neg;
    double scale = 1.0;

    int rows() const { return pos.rows; }
    int cols() const { return pos.cols; }
    int L() const { return pos.L; }
    Eigen::MatrixXd decode() const;
    bool canonical() const;
};

/// scale <= 0 picks max|x| (1 for an all-zero input).
SignedEncoding encode_signed(const Eigen::MatrixXd& x, int L, double scale = 0.0);

/// Signed codes in [-(2^L-1), 2^L-1] to canonical form.
SignedEncoding from_signed_codes(const Eigen::MatrixXi& codes, int L, double scale);

struct ComplexEncoding {
    SignedEncoding real;
    SignedEncoding imag;

    Eigen::MatrixXcd decode() const;
};

/// Real and imaginary parts share one scale.
ComplexEncoding encode_complex(const Eigen::MatrixXcd& x, int L, double scale = 0.0);

struct MmmResult {
    QuantizedMatrix out;
    long cycles = 0;
    int instances = 0;
};

MmmResult run_mmm(MvmEngine& eng, FidelityMode mode, const QuantizedMatrix& a,
                  const QuantizedMatrix& y, MmmMode mm = MmmMode::PARALLEL);

/// Element-wise add through the doubled-cavity detector; codes halve.
QuantizedMatrix run_mma(MvmEngine& eng, FidelityMode mode, const QuantizedMatrix& ay,
                        const QuantizedMatrix& b);

/// a*y + b in a single optical pass per column.
MmmResult run_mmm_mma(MvmEngine& eng, FidelityMode mode, const QuantizedMatrix& a,
                      const QuantizedMatrix& y, const QuantizedMatrix& b,
                      MmmMode mm = MmmMode::PARALLEL);

struct SignedProduct {
    SignedEncoding out;
    long cycles = 0;
};

/// Four non-negative passes combined digitally. With b present the passes
/// use the fused add and the result carries twice the product scale.
SignedProduct signed_mmm(MvmEngine& eng, FidelityMode mode, const SignedEncoding& a,
                         const SignedEncoding& y, const SignedEncoding* b = nullptr,
                         MmmMode mm = MmmMode::PARALLEL);

SignedEncoding signed_mvm(MvmEngine& eng, FidelityMode mode, const SignedEncoding& a,
                          const SignedEncoding& y);

ComplexEncoding complex_mmm(MvmEngine& eng, FidelityMode mode, const ComplexEncoding& a,
                            const ComplexEncoding& y, MmmMode mm = MmmMode::PARALLEL);

struct NeumannConfig {
    int k_max = 6;
    bool requantize = true;
    MmmMode mmm_mode = MmmMode::PARALLEL;
    std::optional<FidelityMode> fidelity;  // empty = float arithmetic
};

struct NeumannRecord {
    int k = 0;
    double residual = 0.0;
    double max_abs_error = 0.0;  // vs exact inverse
    long cycles = 0;
};

template <typename Mat>
struct NeumannTrace {
    std::vector<Mat> iterates;       // Y[0] = 0 through Y[k_max]
    std::vector<double> residuals;   // ||I - Y Z||_F / sqrt(M)
    std::vector<NeumannRecord> records;
    long wall_cycles = 0;
    bool divergence_detected = false;
    std::string fidelity = "float";
};

using NeumannRun = NeumannTrace<Eigen::MatrixXd>;
using ComplexNeumannRun = NeumannTrace<Eigen::MatrixXcd>;

/// Y[k] = B + A Y[k-1] with A = -D^-1 E, B = D^-1. An engine is required
/// unless the fidelity is empty.
NeumannRun neumann_invert(const NeumannConfig& cfg, const Eigen::MatrixXd& z,
                          MvmEngine* eng = nullptr);
ComplexNeumannRun neumann_invert(const NeumannConfig& cfg, const Eigen::MatrixXcd& z,
                                 MvmEngine* eng = nullptr);

/// sum_{n<k} (-D^-1 E)^n D^-1, evaluated directly.
Eigen::MatrixXd neumann_series(const Eigen::MatrixXd& z, int k);
Eigen::MatrixXcd neumann_series(const Eigen::MatrixXcd& z, int k);

std::string export_neumann(const std::vector<NeumannRecord>& recs, const std::string& fidelity);

}  // namespace msiph
