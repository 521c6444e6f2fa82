#pragma once

#include <Eigen/Dense>

#include "cdce/image.hpp"

namespace cdce {

enum class WaveletFamily { Haar, Daubechies4 };
WaveletFamily wavelet_from_name(const std::string& name);

// Separable orthonormal 2-D wavelet with periodic boundaries. Dims must be
// divisible by 2^levels; analysis/synthesis are exact inverses (Parseval).
struct SparsityBasis {
  WaveletFamily family = WaveletFamily::Haar;
  int levels = 4;
  int rows = 0, cols = 0;

  Eigen::MatrixXd analysis(const Image& img) const;  // psi* I
  Image synthesis(const Eigen::MatrixXd& coeffs) const;  // psi c
};

SparsityBasis make_basis(WaveletFamily family, int levels, int rows, int cols);

// Smallest dim >= n divisible by 2^levels.
int padded_dim(int n, int levels);

}  // namespace cdce
