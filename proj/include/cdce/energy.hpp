#pragma once

#include <string>

#include "cdce/motion.hpp"
#include "cdce/sensing.hpp"
#include "cdce/warp.hpp"

namespace cdce {

struct EnergyParams {
  double lambda = 1.0;  // smoothness weight, >= 0
  double tau = 2.0;     // truncation level, >= 1
  int wx = 0, wy = 0;   // search window
  Granularity granularity = Granularity::Pixel;
  int block = 1;

  void validate() const;
};

// Truncated-linear pairwise sum over the 4-connected cell grid:
// sum min(|dmh| + |dmv|, tau). Block fields pair adjacent blocks.
double smoothness_cost(const MotionField& field, const EnergyParams& p);

// sum_k || I2 row k - A^k vec(I1) ||^2 evaluated in the pixel domain.
double data_cost_image(const MotionField& field, const Image& I1, const Image& I2);

// Caches the pre-image of Y1 so that every candidate-field evaluation against
// one measurement pair reuses it.
class CompressedEval {
 public:
  CompressedEval(const MeasurementSet& Y1, const MeasurementSet& Y2,
                 const SensingMatrix& S1, const SensingMatrix& S2);

  double data_cost(const MotionField& field) const;
  double total(const MotionField& field, const EnergyParams& p) const;

  const Image& preimage1() const { return preimage1_; }
  const MeasurementSet& y2() const { return *Y2_; }
  const SensingMatrix& s2() const { return *S2_; }

 private:
  const MeasurementSet* Y2_;
  const SensingMatrix* S2_;
  Image preimage1_;
};

double data_cost_compressed(const MotionField& field, const MeasurementSet& Y1,
                            const MeasurementSet& Y2, const SensingMatrix& S1,
                            const SensingMatrix& S2);

double total_energy(const MotionField& field, const MeasurementSet& Y1,
                    const MeasurementSet& Y2, const SensingMatrix& S1,
                    const SensingMatrix& S2, const EnergyParams& p);

// Diagnostics for the compressed-domain data-cost penalty: with
// r_k = I2 row k - A^k I1 and e = preimage(Phi1 I1) - I1,
//   alpha     = sum_k ||r_k||
//   eta       = sum_k sigma_max(A^k) * sum_{p=k-wy..k+wy, clamped} ||e row p||
//   delta_emp = max over rows with ||r_k|| > 1e-12 of | ||phi2^k r_k||/||r_k|| - 1 |
//   C_u = eta^2 + 2 (1+delta) eta alpha,  C_l = eta^2 + 2 (1-delta) eta alpha
// and the provable sandwich
//   max(0, (1-delta)^2 Ed_image - C_l) <= Ed_compressed <= (1+delta)^2 Ed_image + C_u.
struct BoundReport {
  double rate = 0.0;
  double Ed_image = 0.0;
  double Ed_compressed = 0.0;
  double alpha = 0.0;
  double eta = 0.0;
  double delta_emp = 0.0;
  double C_l = 0.0;
  double C_u = 0.0;
  bool sandwich_holds = false;
};

BoundReport bound_report(const MotionField& field, const Image& I1, const Image& I2,
                         const SensingMatrix& S1, const SensingMatrix& S2);

std::string bound_report_csv_header();
std::string bound_report_csv_row(const BoundReport& r);

}  // namespace cdce
