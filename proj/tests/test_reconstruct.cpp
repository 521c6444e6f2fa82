#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cdce/errors.hpp"
#include "cdce/metrics.hpp"
#include "cdce/reconstruct.hpp"
#include "test_util.hpp"

using namespace cdce;

TEST_CASE("soft threshold closed forms") {
  Eigen::MatrixXd c(1, 3);
  c << 5.0, -1.0, 0.5;
  const Eigen::MatrixXd s = soft_threshold(c, 2.0);
  CHECK(s(0, 0) == doctest::Approx(3.0));
  CHECK(s(0, 1) == doctest::Approx(0.0));
  CHECK(s(0, 2) == doctest::Approx(0.0));

  // t -> 0+ approaches the identity
  CHECK((soft_threshold(c, 1e-12) - c).cwiseAbs().maxCoeff() < 1e-11);
  CHECK_THROWS_AS(soft_threshold(c, 0.0), ConfigError);
}

TEST_CASE("wavelet round trip and Parseval within 1e-9") {
  for (WaveletFamily fam : {WaveletFamily::Haar, WaveletFamily::Daubechies4}) {
    const SparsityBasis psi = make_basis(fam, 3, 24, 40);
    const Image img = testutil::random_image(24, 40, 3);
    const Eigen::MatrixXd c = psi.analysis(img);
    CHECK(std::abs(c.norm() - img.norm()) < 1e-9 * std::max(1.0, img.norm()));
    CHECK((psi.synthesis(c) - img).cwiseAbs().maxCoeff() < 1e-9);
    // synthesis-then-analysis too (psi* psi = Id)
    CHECK((psi.analysis(psi.synthesis(c)) - c).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("wavelets annihilate their polynomial order away from the wrap seam") {
  // Haar kills constants everywhere.
  const SparsityBasis haar = make_basis(WaveletFamily::Haar, 3, 32, 32);
  const Eigen::MatrixXd ch = haar.analysis(Image::Constant(32, 32, 77.0));
  int big = 0;
  for (int i = 0; i < ch.size(); ++i)
    if (std::abs(ch(i)) > 1e-9) ++big;
  CHECK(big == 16);  // the 4x4 approximation band only

  // db4 has two vanishing moments: a ramp leaves detail only where the
  // periodic wrap introduces a jump.
  const SparsityBasis db4 = make_basis(WaveletFamily::Daubechies4, 3, 32, 32);
  Image ramp(32, 32);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) ramp(r, c) = 100.0 + r + 2.0 * c;
  const Eigen::MatrixXd cd = db4.analysis(ramp);
  big = 0;
  for (int i = 0; i < cd.size(); ++i)
    if (std::abs(cd(i)) > 1e-6) ++big;
  CHECK(big < cd.size() / 4);
}

TEST_CASE("padded_dim and basis constraints") {
  CHECK(padded_dim(383, 4) == 384);
  CHECK(padded_dim(434, 4) == 448);
  CHECK(padded_dim(64, 3) == 64);
  CHECK_THROWS_AS(make_basis(WaveletFamily::Haar, 3, 20, 24), ConfigError);
  CHECK_THROWS_AS(make_basis(WaveletFamily::Haar, 0, 16, 16), ConfigError);
}

TEST_CASE("measurement projection: exactness, idempotence, preimage at zero") {
  const int rows = 6, cols = 16;
  const SensingMatrix S = build_sensing(MatrixKind::ScrambledOrthonormal, 7, rows, cols, 21);
  const Image truth = testutil::random_image(rows, cols, 4);
  const MeasurementSet Y = measure(truth, S);

  CHECK((project_measurements(truth, S, Y) - truth).cwiseAbs().maxCoeff() < 1e-10);

  const Image z = project_measurements(Image::Zero(rows, cols), S, Y);
  CHECK((z - preimage(Y, S)).cwiseAbs().maxCoeff() < 1e-12);

  const Image x = testutil::random_image(rows, cols, 5);
  const Image p1 = project_measurements(x, S, Y);
  const Image p2 = project_measurements(p1, S, Y);
  CHECK((p2 - p1).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((measure(p1, S).y - Y.y).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("measurement projection by normal equations for bernoulli rows") {
  const int rows = 3, cols = 12;
  const SensingMatrix S = build_sensing(MatrixKind::Bernoulli, 5, rows, cols, 31);
  const MeasurementSet Y = measure(testutil::random_image(rows, cols, 6), S);
  bool iterative = false;
  const Image p = project_measurements(testutil::random_image(rows, cols, 7), S, Y, &iterative);
  CHECK(iterative);
  CHECK((measure(p, S).y - Y.y).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("projections are non-expansive on sampled pairs") {
  const int rows = 5, cols = 8;
  const SensingMatrix S = build_sensing(MatrixKind::ScrambledOrthonormal, 3, rows, cols, 41);
  const MeasurementSet Y = measure(testutil::random_image(rows, cols, 8), S);
  const WarpOperator A =
      build_warp(testutil::random_field(Granularity::Pixel, 1, rows, cols, 2, 1, 51));
  for (std::uint64_t s = 0; s < 6; ++s) {
    const Image x1 = testutil::random_image(rows, cols, 60 + s);
    const Image y1 = testutil::random_image(rows, cols, 70 + s);
    CHECK((project_measurements(x1, S, Y) - project_measurements(y1, S, Y)).norm() <=
          (x1 - y1).norm() + 1e-9);

    const Image x2 = testutil::random_image(rows, cols, 80 + s);
    const Image y2 = testutil::random_image(rows, cols, 90 + s);
    const auto [px1, px2] = project_correlation(x1, x2, A, 25.0);
    const auto [py1, py2] = project_correlation(y1, y2, A, 25.0);
    const double dp = std::sqrt((px1 - py1).squaredNorm() + (px2 - py2).squaredNorm());
    const double dx = std::sqrt((x1 - y1).squaredNorm() + (x2 - y2).squaredNorm());
    CHECK(dp <= dx + 1e-9);
  }
}

TEST_CASE("correlation projection: feasible input unchanged, constraint met after") {
  const int rows = 6, cols = 9;
  const WarpOperator A =
      build_warp(testutil::random_field(Granularity::Pixel, 1, rows, cols, 2, 2, 61));
  const Image I1 = testutil::random_image(rows, cols, 9);
  const Image feas = predict(A, I1);
  const auto [f1, f2] = project_correlation(I1, feas, A, 1.0);
  CHECK((f1 - I1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f2 - feas).cwiseAbs().maxCoeff() == 0.0);

  const Image I2 = testutil::random_image(rows, cols, 10);
  const double eps = 9.0;
  const auto [p1, p2] = project_correlation(I1, I2, A, eps);
  CHECK((p2 - predict(A, p1)).squaredNorm() <= eps * (1.0 + 1e-4));

  // projecting the projection is (nearly) the identity
  const auto [q1, q2] = project_correlation(p1, p2, A, eps);
  CHECK((q1 - p1).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((q2 - p2).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("identity-warp correlation projection matches the closed form") {
  const int rows = 7, cols = 8;
  const WarpOperator A = build_warp(MotionField::zero(Granularity::Pixel, 1, rows, cols, 1, 1));
  const Image I1 = testutil::random_image(rows, cols, 11);
  const Image I2 = testutil::random_image(rows, cols, 12);
  const double eps = 16.0;

  const Image d = I2 - I1;
  REQUIRE(d.squaredNorm() > eps);
  const double c = (d.norm() - std::sqrt(eps)) / (2.0 * d.norm());
  const Image u_exact = I1 + c * d;
  const Image v_exact = I2 - c * d;

  const auto [u, v] = project_correlation(I1, I2, A, eps);
  CHECK((u - u_exact).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((v - v_exact).cwiseAbs().maxCoeff() < 1e-6);

  // eps = 0 collapses both onto the average
  const auto [a1, a2] = project_correlation(I1, I2, A, 0.0);
  const Image avg = 0.5 * (I1 + I2);
  CHECK((a1 - avg).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((a2 - avg).cwiseAbs().maxCoeff() < 1e-9);
}

namespace {
ReconParams small_params() {
  ReconParams P;
  P.levels = 3;
  P.max_iters = 300;
  P.rel_tol = 1e-9;
  return P;
}
}  // namespace

TEST_CASE("full-rate reconstructions are exact within 1e-6") {
  const int rows = 16, cols = 24;
  const Image truth1 = testutil::textured_image(rows, cols, 13).array().round().max(0.0).min(255.0);
  const Image truth2 = testutil::textured_image(rows, cols, 14).array().round().max(0.0).min(255.0);
  const SensingMatrix S1 = build_sensing(MatrixKind::ScrambledOrthonormal, cols, rows, cols, 1);
  const SensingMatrix S2 = build_sensing(MatrixKind::ScrambledOrthonormal, cols, rows, cols, 2);
  const MeasurementSet Y1 = measure(truth1, S1), Y2 = measure(truth2, S2);

  ReconParams P = small_params();
  P.max_iters = 40;

  const Image ind = independent_reconstruct(Y1, S1, P);
  CHECK((ind - truth1).cwiseAbs().maxCoeff() < 1e-6);

  const WarpOperator A = build_warp(MotionField::zero(Granularity::Pixel, 1, rows, cols, 1, 0));
  ReconReport rep;
  const auto [r1, r2] = joint_reconstruct(Y1, Y2, S1, S2, A, P, &rep);
  CHECK((r1 - truth1).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((r2 - truth2).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(rep.meas_violation < 1e-8);
}

TEST_CASE("huge threshold weight collapses the iterate; output is its projection") {
  const int rows = 16, cols = 16;
  const SensingMatrix S = build_sensing(MatrixKind::ScrambledOrthonormal, 8, rows, cols, 3);
  const MeasurementSet Y = measure(testutil::textured_image(rows, cols, 15), S);
  ReconParams P = small_params();
  P.gamma = 1e9;
  P.gamma_decay = 1.0;
  P.max_iters = 30;
  const Image out = independent_reconstruct(Y, S, P);
  // total shrinkage leaves the constant zero iterate; the returned image is
  // its exact measurement projection, i.e. the pre-image
  CHECK((out - clamp255(preimage(Y, S))).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("epsilon = +inf joint matches independent within solver tolerance") {
  const int rows = 16, cols = 24;
  const Image truth1 = testutil::smooth_image(rows, cols, 23);
  const Image truth2 = testutil::smooth_image(rows, cols, 24);
  const int M = 14;
  const SensingMatrix S1 = build_sensing(MatrixKind::ScrambledOrthonormal, M, rows, cols, 4);
  const SensingMatrix S2 = build_sensing(MatrixKind::ScrambledOrthonormal, M, rows, cols, 5);
  const MeasurementSet Y1 = measure(truth1, S1), Y2 = measure(truth2, S2);

  ReconParams P = small_params();
  P.max_iters = 3000;  // both solvers near their common limit
  P.epsilon = std::numeric_limits<double>::infinity();
  const WarpOperator A = build_warp(MotionField::zero(Granularity::Pixel, 1, rows, cols, 1, 0));
  const auto [j1, j2] = joint_reconstruct(Y1, Y2, S1, S2, A, P);
  const Image i1 = independent_reconstruct(Y1, S1, P);
  const Image i2 = independent_reconstruct(Y2, S2, P);

  CHECK(std::abs(psnr(j1, truth1) - psnr(i1, truth1)) < 0.75);
  CHECK(std::abs(psnr(j2, truth2) - psnr(i2, truth2)) < 0.75);
  CHECK(mse(j1, i1) < 60.0);
  CHECK(mse(j2, i2) < 60.0);
}

TEST_CASE("joint reconstruction with a good warp beats independent at low rate") {
  const int rows = 24, cols = 32, shift = 2;
  const Image truth1 = testutil::textured_image(rows, cols, 31);
  Image truth2(rows, cols);
  for (int k = 0; k < rows; ++k)
    for (int l = 0; l < cols; ++l) truth2(k, l) = truth1(k, (l + shift) % cols);

  const int M = 8;  // rate 0.25
  const SensingMatrix S1 = build_sensing(MatrixKind::ScrambledOrthonormal, M, rows, cols, 6);
  const SensingMatrix S2 = build_sensing(MatrixKind::ScrambledOrthonormal, M, rows, cols, 7);
  const MeasurementSet Y1 = measure(truth1, S1), Y2 = measure(truth2, S2);

  MotionField f = MotionField::zero(Granularity::Pixel, 1, rows, cols, 3, 0);
  f.mh.setConstant(shift);
  const WarpOperator A = build_warp(f);

  ReconParams P = small_params();
  P.max_iters = 400;
  P.epsilon = 50.0;
  ReconReport rep;
  const auto [j1, j2] = joint_reconstruct(Y1, Y2, S1, S2, A, P, &rep);
  const Image i1 = independent_reconstruct(Y1, S1, P);
  const Image i2 = independent_reconstruct(Y2, S2, P);

  const double joint_mean = 0.5 * (psnr(j1, truth1) + psnr(j2, truth2));
  const double indep_mean = 0.5 * (psnr(i1, truth1) + psnr(i2, truth2));
  CHECK(joint_mean > indep_mean + 0.5);
  CHECK(rep.meas_violation < 1e-5);
  CHECK(rep.corr_excess <= 1e-4 * P.epsilon);
}
