#pragma once

#include <Eigen/Dense>
#include <string>

namespace cdce {

// Grayscale raster, intensities in [0, 255], N1 rows x N2 columns.
using Image = Eigen::MatrixXd;

// Row-major flattening: x(k*N2 + l) = I(k, l). This is the vectorization the
// stacked row-measurement model uses throughout.
inline Eigen::VectorXd vec_rows(const Image& img) {
  return img.reshaped<Eigen::RowMajor>();
}

inline Image unvec_rows(const Eigen::VectorXd& x, Eigen::Index rows,
                        Eigen::Index cols) {
  return x.reshaped<Eigen::RowMajor>(rows, cols);
}

inline Image clamp255(const Image& img) {
  return img.cwiseMax(0.0).cwiseMin(255.0);
}

// PGM (P5, maxval 255) and 8-bit grayscale PNG.
Image load_image(const std::string& path);
void save_pgm(const std::string& path, const Image& img);
void save_png(const std::string& path, const Image& img);

}  // namespace cdce
