#pragma once

#include <string>
#include <vector>

#include "cdce/config.hpp"
#include "cdce/datasets.hpp"
#include "cdce/metrics.hpp"
#include "cdce/optimizer.hpp"
#include "cdce/reconstruct.hpp"

namespace cdce {

struct SensingPair {
  SensingMatrix S1, S2;
};

// M = round(rate * N2); the second image gets its own derived sub-seed unless
// the shared-matrix experiment is requested.
SensingPair build_sensing_pair(int N1, int N2, double rate, std::uint64_t seed,
                               MatrixKind kind, bool same_matrix);

struct MeasuredPair {
  MeasurementSet Y1, Y2;
};
MeasuredPair measure_pair(const Dataset& d, const SensingPair& S, int bits);

// Integer per-pixel field from stored ground truth (zero where unknown).
MotionField ground_truth_field(const GroundTruth& gt);

struct EstimateRun {
  double rate = 0.0;
  std::uint64_t seed = 0;
  int bits = 0;
  bool same_matrix = false;
  Granularity granularity = Granularity::Pixel;
  double lambda = 0.0;
  MotionField field;
  OptimizerTrace trace;
  Image prediction;
  double mse_pred_i2 = 0.0, mse_pred_i1 = 0.0, psnr_pred = 0.0;
  double error_rate = -1.0;  // -1 when no ground truth
};

EstimateRun run_estimate(const Dataset& d, const ExperimentConfig& cfg, double rate,
                         std::uint64_t seed, Granularity g, int bits,
                         OptimizeMode mode = OptimizeMode::AlphaExpansion,
                         double lambda_override = -1.0, bool same_matrix_override = false,
                         bool use_same_flag_from_cfg = true);

// Disparity-from-reconstructed-images baseline: independent reconstructions
// followed by image-domain estimation.
EstimateRun run_estimate_dfr(const Dataset& d, const ExperimentConfig& cfg, double rate,
                             std::uint64_t seed, Granularity g, int bits);

// Image-domain estimate from the original images (the reconstruction
// benchmark's correlation source); cached per dataset.
MotionField benchmark_field(const Dataset& d, const ExperimentConfig& cfg, Granularity g);

struct ReconRun {
  std::string scheme;
  double rate = 0.0;
  std::uint64_t seed = 0;
  double psnr1 = 0.0, psnr2 = 0.0, mean_psnr = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;
};

// scheme: independent | joint-estimated-A | joint-groundtruth-A | dfr-sparsity
ReconRun run_reconstruction(const Dataset& d, const ExperimentConfig& cfg, double rate,
                            std::uint64_t seed, const std::string& scheme);

// Named figure suites; each writes one restartable CSV under cfg.out_dir.
// Names: fig2_venus, fig4_regularization, fig5_tsukuba_dfr, fig7_quantization,
// fig9_joint.
void run_bench_suite(const ExperimentConfig& cfg, const std::string& suite);
std::vector<std::string> bench_suite_names();

// Work pool over independent grid points.
void run_parallel(int threads, std::vector<std::function<void()>> tasks);

}  // namespace cdce
