#include "cdce/warp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cdce/errors.hpp"

namespace cdce {

WarpOperator build_warp(const MotionField& field) {
  if (!field.within_window())
    throw ConfigError("build_warp: field exceeds its search window");
  WarpOperator A;
  A.rows = field.rows;
  A.cols = field.cols;
  A.wy = field.wy;
  A.src_row.resize(field.rows, field.cols);
  A.src_col.resize(field.rows, field.cols);
  for (int k = 0; k < field.rows; ++k)
    for (int l = 0; l < field.cols; ++l) {
      A.src_row(k, l) = std::clamp(k + field.mv_at(k, l), 0, field.rows - 1);
      A.src_col(k, l) = std::clamp(l + field.mh_at(k, l), 0, field.cols - 1);
    }
  return A;
}

double WarpOperator::sigma_max_row(int k) const {
  // A^k has one unit per row, so (A^k)^T A^k is diagonal with the source
  // multiplicities; sigma_max is the root of the largest count.
  std::vector<Eigen::Index> srcs(static_cast<size_t>(cols));
  for (int l = 0; l < cols; ++l) srcs[static_cast<size_t>(l)] = flat(k, l);
  std::sort(srcs.begin(), srcs.end());
  int best = 1, run = 1;
  for (size_t i = 1; i < srcs.size(); ++i) {
    run = (srcs[i] == srcs[i - 1]) ? run + 1 : 1;
    best = std::max(best, run);
  }
  return std::sqrt(static_cast<double>(best));
}

Image predict(const WarpOperator& A, const Image& I1) {
  if (I1.rows() != A.rows || I1.cols() != A.cols)
    throw ShapeError("predict: image does not match warp dims");
  Image out(A.rows, A.cols);
  for (int k = 0; k < A.rows; ++k)
    for (int l = 0; l < A.cols; ++l)
      out(k, l) = I1(A.src_row(k, l), A.src_col(k, l));
  return out;
}

MeasurementSet compressed_predict(const WarpOperator& A, const MeasurementSet& Y1,
                                  const SensingMatrix& S1, const SensingMatrix& S2) {
  if (!Y1.matches(S1)) throw ConfigError("compressed_predict: Y1/S1 provenance mismatch");
  if (S1.N1 != S2.N1 || S1.N2 != S2.N2)
    throw ConfigError("compressed_predict: S1/S2 dims differ");
  if (A.rows != S1.N1 || A.cols != S1.N2)
    throw ShapeError("compressed_predict: warp does not match sensing dims");
  return measure(predict(A, preimage(Y1, S1)), S2);
}

}  // namespace cdce
