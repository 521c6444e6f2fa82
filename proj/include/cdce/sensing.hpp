#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cdce/image.hpp"

namespace cdce {

enum class MatrixKind : std::uint8_t {
  ScrambledOrthonormal = 0,    // row-subsampled orthonormal DCT-II after +/-1 scrambling
  GaussianOrthonormalized = 1, // i.i.d. N(0,1) rows, Gram-Schmidt orthonormalized
  Bernoulli = 2,               // +/-1/sqrt(N2) entries, rows not exactly orthonormal
};

const char* kind_name(MatrixKind k);
MatrixKind kind_from_name(const std::string& name);

// Block-diagonal measurement operator: one M x N2 block per image row, all
// derived deterministically from (kind, seed, dims). The scrambled kind is
// never materialized; it is applied through the shared DCT matrix.
struct SensingMatrix {
  MatrixKind kind = MatrixKind::ScrambledOrthonormal;
  int M = 0, N1 = 0, N2 = 0;
  std::uint64_t seed = 0;
  bool orthonormal_rows = true;

  // scrambled kind
  Eigen::MatrixXd dct;                  // N2 x N2 orthonormal DCT-II
  Eigen::MatrixXi select;               // M x N1, sorted selected DCT rows per image row
  Eigen::MatrixXd signs;                // N2 x N1, +/-1 pre-randomization per image row

  // gaussian / bernoulli kinds
  std::vector<Eigen::MatrixXd> blocks;  // N1 dense M x N2 blocks

  int measurement_count() const { return M * N1; }
  double rate() const { return static_cast<double>(M) / N2; }

  Eigen::VectorXd apply_row(int k, const Eigen::VectorXd& x) const;    // phi^k x
  Eigen::VectorXd adjoint_row(int k, const Eigen::VectorXd& y) const;  // (phi^k)^T y
  Eigen::MatrixXd dense_row_block(int k) const;

  // ||phi^k column l||^2 for every (k, l); cached by energy evaluation.
  Eigen::MatrixXd column_norms_squared() const;  // N1 x N2

  bool same_provenance(const SensingMatrix& other) const {
    return kind == other.kind && M == other.M && N1 == other.N1 && N2 == other.N2 &&
           seed == other.seed;
  }
};

SensingMatrix build_sensing(MatrixKind kind, int M, int N1, int N2, std::uint64_t seed);

struct Quantizer {
  int bits = 0;  // 0 = unquantized
  double lo = 0.0, hi = 0.0;
  double step() const { return (hi - lo) / static_cast<double>(1u << bits); }
};

struct MeasurementSet {
  Eigen::VectorXd y;  // length K = M*N1; cell midpoints when quantized
  MatrixKind kind = MatrixKind::ScrambledOrthonormal;
  int M = 0, N1 = 0, N2 = 0;
  std::uint64_t seed = 0;
  Quantizer quantizer;

  Eigen::VectorXd::ConstSegmentReturnType row_segment(int k) const {
    return y.segment(static_cast<Eigen::Index>(k) * M, M);
  }
  bool matches(const SensingMatrix& S) const {
    return kind == S.kind && M == S.M && N1 == S.N1 && N2 == S.N2 && seed == S.seed;
  }
};

MeasurementSet measure(const Image& img, const SensingMatrix& S);

// Back-projection Phi^T y reshaped to N1 x N2 (the "pre-image"; not clamped).
Image preimage(const MeasurementSet& Y, const SensingMatrix& S);
Image preimage_rows(const Eigen::MatrixXd& y_rows, const SensingMatrix& S);  // y as M x N1

// Mid-rise uniform quantizer over [min(y), max(y)]; returns cell midpoints
// with the grid recorded. A constant vector passes through unchanged.
MeasurementSet quantize(const MeasurementSet& Y, int bits);
Eigen::VectorXd dequantize_codes(const std::vector<std::uint16_t>& codes, const Quantizer& q);
std::vector<std::uint16_t> quantizer_codes(const MeasurementSet& Y);

// Little-endian binary: magic "CDCE", version u16, kind u8, N1 u32, N2 u32,
// M u32, seed u64, bits u8, lo f64, hi f64, then K f64 (or K u16 codes).
void save_measurements(const std::string& path, const MeasurementSet& Y);
MeasurementSet load_measurements(const std::string& path);

}  // namespace cdce
