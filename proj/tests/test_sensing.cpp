#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "cdce/errors.hpp"
#include "cdce/rng.hpp"
#include "cdce/sensing.hpp"
#include "test_util.hpp"

using namespace cdce;

namespace {
const MatrixKind kAllKinds[] = {MatrixKind::ScrambledOrthonormal,
                                MatrixKind::GaussianOrthonormalized, MatrixKind::Bernoulli};
}

TEST_CASE("row blocks of orthonormal kinds satisfy phi phi^T = I within 1e-10") {
  for (MatrixKind kind : {MatrixKind::ScrambledOrthonormal, MatrixKind::GaussianOrthonormalized}) {
    const SensingMatrix S = build_sensing(kind, 9, 4, 17, 42);
    for (int k = 0; k < S.N1; ++k) {
      const Eigen::MatrixXd b = S.dense_row_block(k);
      const Eigen::MatrixXd gram = b * b.transpose();
      CHECK((gram - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff() < 1e-10);
    }
    CHECK(S.orthonormal_rows);
  }
  CHECK_FALSE(build_sensing(MatrixKind::Bernoulli, 4, 2, 10, 1).orthonormal_rows);
}

TEST_CASE("blocks differ across rows but are deterministic in the seed") {
  for (MatrixKind kind : kAllKinds) {
    const SensingMatrix a = build_sensing(kind, 6, 3, 12, 7);
    const SensingMatrix b = build_sensing(kind, 6, 3, 12, 7);
    const SensingMatrix c = build_sensing(kind, 6, 3, 12, 8);
    for (int k = 0; k < 3; ++k) {
      CHECK(a.dense_row_block(k) == b.dense_row_block(k));  // bit-identical
      CHECK((a.dense_row_block(k) - c.dense_row_block(k)).cwiseAbs().maxCoeff() > 0.0);
    }
    CHECK((a.dense_row_block(0) - a.dense_row_block(1)).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("M bounds are enforced") {
  CHECK_THROWS_AS(build_sensing(MatrixKind::ScrambledOrthonormal, 18, 2, 17, 1), ConfigError);
  CHECK_THROWS_AS(build_sensing(MatrixKind::ScrambledOrthonormal, 0, 2, 17, 1), ConfigError);
}

TEST_CASE("full-rate scrambled matrix is a square isometry") {
  const SensingMatrix S = build_sensing(MatrixKind::ScrambledOrthonormal, 16, 5, 16, 3);
  const Image img = testutil::random_image(5, 16, 10);
  const MeasurementSet Y = measure(img, S);
  CHECK(Y.y.size() == 5 * 16);
  CHECK(Y.y.norm() == doctest::Approx(img.norm()).epsilon(1e-12));
  CHECK((preimage(Y, S) - img).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("measurement rate bookkeeping") {
  const SensingMatrix S = build_sensing(MatrixKind::ScrambledOrthonormal, 20, 7, 100, 3);
  CHECK(S.rate() == doctest::Approx(0.2));
  CHECK(S.measurement_count() == 140);
}

TEST_CASE("zero image measures to zero; block diagonality localizes rows") {
  const SensingMatrix S = build_sensing(MatrixKind::ScrambledOrthonormal, 5, 4, 11, 9);
  CHECK(measure(Image::Zero(4, 11), S).y.cwiseAbs().maxCoeff() == 0.0);

  Image img = testutil::random_image(4, 11, 3);
  const MeasurementSet y0 = measure(img, S);
  img.row(2).array() += 5.0;  // perturb one row
  const MeasurementSet y1 = measure(img, S);
  for (int k = 0; k < 4; ++k) {
    const double diff = (y1.row_segment(k) - y0.row_segment(k)).cwiseAbs().maxCoeff();
    if (k == 2)
      CHECK(diff > 0.0);
    else
      CHECK(diff == 0.0);
  }
}

TEST_CASE("pre-image is row-wise non-expanding for orthonormal kinds") {
  const SensingMatrix S = build_sensing(MatrixKind::GaussianOrthonormalized, 5, 6, 14, 21);
  const Image img = testutil::random_image(6, 14, 4);
  const Image pre = preimage(measure(img, S), S);
  for (int k = 0; k < 6; ++k) CHECK(pre.row(k).norm() <= img.row(k).norm() + 1e-12);
}

TEST_CASE("measure-preimage composition is a projection") {
  const SensingMatrix S = build_sensing(MatrixKind::ScrambledOrthonormal, 7, 5, 19, 77);
  const Image img = testutil::random_image(5, 19, 8);
  const Image once = preimage(measure(img, S), S);
  const Image twice = preimage(measure(once, S), S);
  CHECK((twice - once).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pre-image error decreases monotonically with M (median over 10 seeds)") {
  const Image img = testutil::textured_image(12, 40, 5);
  std::vector<double> med_err;
  for (int M : {4, 8, 12, 16, 20, 24, 28, 32, 36, 40}) {
    std::vector<double> errs;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const SensingMatrix S = build_sensing(MatrixKind::ScrambledOrthonormal, M, 12, 40, seed);
      errs.push_back((preimage(measure(img, S), S) - img).norm());
    }
    std::sort(errs.begin(), errs.end());
    med_err.push_back(0.5 * (errs[4] + errs[5]));
  }
  for (size_t i = 1; i < med_err.size(); ++i) CHECK(med_err[i] <= med_err[i - 1] + 1e-9);
  CHECK(med_err.back() < 1e-8);  // full rate
}

TEST_CASE("empirical JL distortion stays well below one") {
  const SensingMatrix S = build_sensing(MatrixKind::ScrambledOrthonormal, 64, 1, 128, 12);
  Rng rng(99);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd u(128), v(128);
    for (int i = 0; i < 128; ++i) {
      u(i) = rng.next_normal();
      v(i) = rng.next_normal();
    }
    const double ratio = S.apply_row(0, u - v).norm() / (u - v).norm();
    worst = std::max(worst, std::abs(ratio - 1.0));
  }
  CHECK(worst < 1.0);
  CHECK(worst > 0.0);
}

TEST_CASE("quantizer: levels, midpoint round trip, degenerate range") {
  const SensingMatrix S = build_sensing(MatrixKind::ScrambledOrthonormal, 6, 3, 10, 5);
  const MeasurementSet Y = measure(testutil::random_image(3, 10, 6), S);

  const MeasurementSet Q = quantize(Y, 2);
  std::set<double> levels(Q.y.begin(), Q.y.end());
  CHECK(levels.size() <= 4);
  CHECK(Q.quantizer.bits == 2);
  const double step = Q.quantizer.step();
  CHECK(((Q.y - Y.y).cwiseAbs().array() <= step / 2 + 1e-12).all());

  // already on grid midpoints: exact round trip
  const MeasurementSet Q2 = quantize(Q, 2);
  CHECK((Q2.y - Q.y).cwiseAbs().maxCoeff() < 1e-12);

  MeasurementSet C = Y;
  C.y.setConstant(3.25);
  CHECK(quantize(C, 4).y == C.y);

  CHECK_THROWS_AS(quantize(Y, 1), ConfigError);
  CHECK_THROWS_AS(quantize(Y, 17), ConfigError);
}

TEST_CASE("measurement file round trip, quantized and not") {
  const auto dir = std::filesystem::temp_directory_path() / "cdce_sensing_tests";
  std::filesystem::create_directories(dir);
  const SensingMatrix S = build_sensing(MatrixKind::ScrambledOrthonormal, 6, 4, 12, 31);
  const MeasurementSet Y = measure(testutil::random_image(4, 12, 9), S);

  const auto p1 = (dir / "raw.cdce").string();
  save_measurements(p1, Y);
  const MeasurementSet L1 = load_measurements(p1);
  CHECK(L1.y == Y.y);  // bit-exact f64 payload
  CHECK(L1.matches(S));
  CHECK(L1.quantizer.bits == 0);

  const MeasurementSet Q = quantize(Y, 3);
  const auto p2 = (dir / "q3.cdce").string();
  save_measurements(p2, Q);
  const MeasurementSet L2 = load_measurements(p2);
  CHECK(L2.quantizer.bits == 3);
  CHECK((L2.y - Q.y).cwiseAbs().maxCoeff() < 1e-12);

  // determinism of the writer: same content twice is byte-identical
  const auto p3 = (dir / "raw2.cdce").string();
  save_measurements(p3, Y);
  std::ifstream f1(p1, std::ios::binary), f3(p3, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b3((std::istreambuf_iterator<char>(f3)), std::istreambuf_iterator<char>());
  CHECK(b1 == b3);

  CHECK_THROWS_AS(load_measurements((dir / "missing.cdce").string()), ParseError);
}

TEST_CASE("provenance mismatches are rejected") {
  const SensingMatrix S1 = build_sensing(MatrixKind::ScrambledOrthonormal, 6, 4, 12, 31);
  const SensingMatrix S2 = build_sensing(MatrixKind::ScrambledOrthonormal, 6, 4, 12, 32);
  const MeasurementSet Y = measure(testutil::random_image(4, 12, 9), S1);
  CHECK_THROWS_AS(preimage(Y, S2), ConfigError);
  CHECK_THROWS_AS(measure(testutil::random_image(3, 12, 9), S1), ShapeError);
}
