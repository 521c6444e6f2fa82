#include "cdce/energy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cdce/errors.hpp"

namespace cdce {

void EnergyParams::validate() const {
  if (lambda < 0.0) throw ConfigError("EnergyParams: lambda must be >= 0");
  if (tau < 1.0) throw ConfigError("EnergyParams: tau must be >= 1");
}

double smoothness_cost(const MotionField& field, const EnergyParams& p) {
  const double tau = p.tau;
  double e = 0.0;
  const auto& mh = field.mh;
  const auto& mv = field.mv;
  for (Eigen::Index r = 0; r < mh.rows(); ++r)
    for (Eigen::Index c = 0; c < mh.cols(); ++c) {
      if (c + 1 < mh.cols())
        e += std::min<double>(std::abs(mh(r, c) - mh(r, c + 1)) + std::abs(mv(r, c) - mv(r, c + 1)), tau);
      if (r + 1 < mh.rows())
        e += std::min<double>(std::abs(mh(r, c) - mh(r + 1, c)) + std::abs(mv(r, c) - mv(r + 1, c)), tau);
    }
  return e;
}

double data_cost_image(const MotionField& field, const Image& I1, const Image& I2) {
  if (I1.rows() != I2.rows() || I1.cols() != I2.cols())
    throw ShapeError("data_cost_image: image dimensions differ");
  if (I1.rows() != field.rows || I1.cols() != field.cols)
    throw ShapeError("data_cost_image: field does not match images");
  const WarpOperator A = build_warp(field);
  return (I2 - predict(A, I1)).squaredNorm();
}

CompressedEval::CompressedEval(const MeasurementSet& Y1, const MeasurementSet& Y2,
                               const SensingMatrix& S1, const SensingMatrix& S2)
    : Y2_(&Y2), S2_(&S2), preimage1_(preimage(Y1, S1)) {
  if (!Y2.matches(S2)) throw ConfigError("CompressedEval: Y2/S2 provenance mismatch");
  if (S1.N1 != S2.N1 || S1.N2 != S2.N2)
    throw ConfigError("CompressedEval: S1/S2 dims differ");
}

double CompressedEval::data_cost(const MotionField& field) const {
  const WarpOperator A = build_warp(field);
  const MeasurementSet pred = measure(predict(A, preimage1_), *S2_);
  return (Y2_->y - pred.y).squaredNorm();
}

double CompressedEval::total(const MotionField& field, const EnergyParams& p) const {
  p.validate();
  return data_cost(field) + p.lambda * smoothness_cost(field, p);
}

double data_cost_compressed(const MotionField& field, const MeasurementSet& Y1,
                            const MeasurementSet& Y2, const SensingMatrix& S1,
                            const SensingMatrix& S2) {
  return CompressedEval(Y1, Y2, S1, S2).data_cost(field);
}

double total_energy(const MotionField& field, const MeasurementSet& Y1,
                    const MeasurementSet& Y2, const SensingMatrix& S1,
                    const SensingMatrix& S2, const EnergyParams& p) {
  return CompressedEval(Y1, Y2, S1, S2).total(field, p);
}

BoundReport bound_report(const MotionField& field, const Image& I1, const Image& I2,
                         const SensingMatrix& S1, const SensingMatrix& S2) {
  if (I1.rows() != I2.rows() || I1.cols() != I2.cols())
    throw ShapeError("bound_report: image dimensions differ");
  if (I1.rows() != S1.N1 || I1.cols() != S1.N2)
    throw ShapeError("bound_report: images do not match sensing dims");

  const WarpOperator A = build_warp(field);
  const Image pred = predict(A, I1);
  const MeasurementSet Y1 = measure(I1, S1);
  const MeasurementSet Y2 = measure(I2, S2);
  const Image pre1 = preimage(Y1, S1);

  BoundReport r;
  r.rate = S1.rate();
  r.Ed_image = (I2 - pred).squaredNorm();
  r.Ed_compressed = (Y2.y - measure(predict(A, pre1), S2).y).squaredNorm();

  const int n1 = static_cast<int>(I1.rows());
  Eigen::VectorXd pre_err(n1);  // || (pre-image - I1) row p ||
  for (int p = 0; p < n1; ++p) pre_err(p) = (pre1.row(p) - I1.row(p)).norm();

  double alpha = 0.0, eta = 0.0, delta = 0.0;
  for (int k = 0; k < n1; ++k) {
    const Eigen::VectorXd rk = (I2.row(k) - pred.row(k)).transpose();
    const double rn = rk.norm();
    alpha += rn;
    if (rn > 1e-12) {
      const double ratio = S2.apply_row(k, rk).norm() / rn;
      delta = std::max(delta, std::abs(ratio - 1.0));
    }
    double window_err = 0.0;
    for (int p = std::max(0, k - field.wy); p <= std::min(n1 - 1, k + field.wy); ++p)
      window_err += pre_err(p);
    eta += A.sigma_max_row(k) * window_err;
  }
  r.alpha = alpha;
  r.eta = eta;
  r.delta_emp = delta;
  r.C_u = eta * eta + 2.0 * (1.0 + delta) * eta * alpha;
  r.C_l = eta * eta + 2.0 * (1.0 - delta) * eta * alpha;

  const double lower = std::max(0.0, (1.0 - delta) * (1.0 - delta) * r.Ed_image - r.C_l);
  const double upper = (1.0 + delta) * (1.0 + delta) * r.Ed_image + r.C_u;
  const double slack = 1e-9 * std::max(1.0, upper);  // pure FP slack
  r.sandwich_holds = lower <= r.Ed_compressed + slack && r.Ed_compressed <= upper + slack;
  return r;
}

std::string bound_report_csv_header() {
  return "rate,Ed_image,Ed_compressed,alpha,eta,delta_emp,C_l,C_u,sandwich_holds";
}

std::string bound_report_csv_row(const BoundReport& r) {
  std::ostringstream os;
  os.precision(12);
  os << r.rate << "," << r.Ed_image << "," << r.Ed_compressed << "," << r.alpha << ","
     << r.eta << "," << r.delta_emp << "," << r.C_l << "," << r.C_u << ","
     << (r.sandwich_holds ? 1 : 0);
  return os.str();
}

}  // namespace cdce
