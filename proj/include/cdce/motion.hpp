#pragma once

#include <Eigen/Dense>
#include <string>

#include "cdce/image.hpp"

namespace cdce {

enum class Granularity { Pixel, Block };

using MaskXb = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Integer displacement field over an N1 x N2 raster. In block mode every
// pixel of a b x b block shares one vector; mh/mv then live on the
// ceil(N1/b) x ceil(N2/b) cell grid.
struct MotionField {
  Granularity granularity = Granularity::Pixel;
  int block = 1;
  int rows = 0, cols = 0;  // raster size in pixels
  int wx = 0, wy = 0;      // search window: |mh| <= wx, |mv| <= wy
  Eigen::MatrixXi mh, mv;  // cell grid

  int cell_rows() const { return granularity == Granularity::Pixel ? rows : (rows + block - 1) / block; }
  int cell_cols() const { return granularity == Granularity::Pixel ? cols : (cols + block - 1) / block; }
  int cell_row_of(int k) const { return granularity == Granularity::Pixel ? k : k / block; }
  int cell_col_of(int l) const { return granularity == Granularity::Pixel ? l : l / block; }

  int mh_at(int k, int l) const { return mh(cell_row_of(k), cell_col_of(l)); }
  int mv_at(int k, int l) const { return mv(cell_row_of(k), cell_col_of(l)); }

  bool within_window() const {
    return mh.cwiseAbs().maxCoeff() <= wx && mv.cwiseAbs().maxCoeff() <= wy;
  }

  // Per-pixel copy of a block field (identity for pixel fields).
  MotionField to_pixel() const;
  // Block field whose cells hold the rounded mean of the covered pixels.
  MotionField to_block(int b) const;

  static MotionField zero(Granularity g, int block, int rows, int cols, int wx, int wy);
};

// Ground-truth displacements as stored on disk: values are pre-scaled
// integers (value = scale_divisor * displacement). Cells with no reference
// data are masked out of every metric.
struct GroundTruth {
  MotionField field;  // stored (scaled) values, per-pixel
  int scale_divisor = 8;
  MaskXb known;

  double mh_at(int k, int l) const { return field.mh_at(k, l) / static_cast<double>(scale_divisor); }
  double mv_at(int k, int l) const { return field.mv_at(k, l) / static_cast<double>(scale_divisor); }
};

// Stereo ground truth from a Middlebury-style disparity raster
// (stored value = scale * disparity, 0 = unknown).
GroundTruth ground_truth_from_disparity(const Image& disp, int scale_divisor, int wx);

// MotionField CSV: header `granularity,block,wx,wy` (+ dims), then
// `row,col,mh,mv` records per cell.
void save_motion_csv(const std::string& path, const MotionField& f);
MotionField load_motion_csv(const std::string& path);

GroundTruth ground_truth_from_motion(const MotionField& f, int scale_divisor);

}  // namespace cdce
