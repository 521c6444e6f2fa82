#pragma once

#include <utility>

#include "cdce/image.hpp"
#include "cdce/sensing.hpp"
#include "cdce/warp.hpp"
#include "cdce/wavelet.hpp"

namespace cdce {

struct ReconParams {
  double epsilon = 14.0;      // correlation ball, squared-norm units
  double gamma = 1.0;         // soft-threshold weight
  double gamma_decay = 0.99;  // applied every decay_every iterations (ISTA path)
  int decay_every = 10;
  int max_iters = 400;
  double rel_tol = 1e-6;
  WaveletFamily family = WaveletFamily::Haar;
  int levels = 4;

  void validate() const;
};

Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& c, double t);

// Euclidean projection onto {I : Phi I = Y}. Exact single step for
// orthonormal-row matrices; otherwise an iterative normal-equations solve
// (flagged through used_iterative).
Image project_measurements(const Image& img, const SensingMatrix& S,
                           const MeasurementSet& Y, bool* used_iterative = nullptr);

// Euclidean projection of the stacked pair onto {(u,v): ||v - A u||^2 <= eps}.
// The KKT system (Identity + mu L^T L) z = x with L = [-A, Identity] is solved
// exactly per mu (A^T A is diagonal for one-hot-row warps); mu >= 0 found by
// bisection on the monotone map mu -> ||L z(mu)||^2 - eps.
std::pair<Image, Image> project_correlation(const Image& I1, const Image& I2,
                                            const WarpOperator& A, double eps);

struct ReconReport {
  int iterations = 0;
  bool converged = true;
  double meas_violation = 0.0;  // max over images of ||Y - Phi I|| / max(1, ||Y||)
  double corr_excess = 0.0;     // max(0, ||I2 - A I1||^2 - eps)
};

// Parallel proximal scheme over two l1-in-psi terms, two measurement-set
// indicators and the correlation ball; uniform averaging. Returned images are
// clamped to [0, 255] (iterates stay unclamped internally).
std::pair<Image, Image> joint_reconstruct(const MeasurementSet& Y1, const MeasurementSet& Y2,
                                          const SensingMatrix& S1, const SensingMatrix& S2,
                                          const WarpOperator& A, const ReconParams& P,
                                          ReconReport* report = nullptr);

// Iterative soft-thresholding with unit step and decaying threshold, plus a
// final measurement projection.
Image independent_reconstruct(const MeasurementSet& Y, const SensingMatrix& S,
                              const ReconParams& P, ReconReport* report = nullptr);

}  // namespace cdce
