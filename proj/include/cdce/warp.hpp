#pragma once

#include <Eigen/Dense>

#include "cdce/image.hpp"
#include "cdce/motion.hpp"
#include "cdce/sensing.hpp"

namespace cdce {

// Sparse 0/1 selection operator realizing I2 = A I1: every target pixel
// copies exactly one source pixel of I1. Stored as one flat source index per
// pixel; the dense N2 x N form exists only in test oracles.
struct WarpOperator {
  int rows = 0, cols = 0;
  Eigen::MatrixXi src_row, src_col;  // per target pixel, already clamped
  int wy = 0;                        // vertical reach of the generating field

  Eigen::Index flat(int k, int l) const {
    return static_cast<Eigen::Index>(src_row(k, l)) * cols + src_col(k, l);
  }

  // Largest singular value of the row block A^k: sqrt of the maximum source
  // multiplicity among the row's N2 unit entries.
  double sigma_max_row(int k) const;
};

// Source pixel (k + mv, l + mh), clamped per axis to the image rectangle.
WarpOperator build_warp(const MotionField& field);

Image predict(const WarpOperator& A, const Image& I1);

// Phi2 * A * preimage(Y1): equals measure(predict(A, preimage(Y1)), S2).
MeasurementSet compressed_predict(const WarpOperator& A, const MeasurementSet& Y1,
                                  const SensingMatrix& S1, const SensingMatrix& S2);

}  // namespace cdce
