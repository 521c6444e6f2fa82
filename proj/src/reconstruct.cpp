#include "cdce/reconstruct.hpp"

#include <cmath>
#include <functional>
#include <vector>

#include "cdce/errors.hpp"

namespace cdce {

void ReconParams::validate() const {
  if (epsilon < 0.0) throw ConfigError("ReconParams: epsilon must be >= 0");
  if (gamma <= 0.0) throw ConfigError("ReconParams: gamma must be > 0");
  if (max_iters < 1) throw ConfigError("ReconParams: max_iters must be >= 1");
}

Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& c, double t) {
  if (t <= 0.0) throw ConfigError("soft_threshold: t must be > 0");
  return c.array().sign() * (c.array().abs() - t).max(0.0);
}

Image project_measurements(const Image& img, const SensingMatrix& S,
                           const MeasurementSet& Y, bool* used_iterative) {
  if (!Y.matches(S)) throw ConfigError("project_measurements: provenance mismatch");
  if (img.rows() != S.N1 || img.cols() != S.N2)
    throw ShapeError("project_measurements: image does not match sensing dims");
  if (used_iterative) *used_iterative = false;

  const Eigen::MatrixXd y_rows = Y.y.reshaped(S.M, S.N1);
  if (S.orthonormal_rows) {
    const Eigen::MatrixXd res = y_rows - measure(img, S).y.reshaped(S.M, S.N1);
    return img + preimage_rows(res, S);
  }

  // Normal equations per row: solve (phi phi^T) z = y - phi x by CG, then
  // correct with phi^T z.
  if (used_iterative) *used_iterative = true;
  Image out = img;
  for (int k = 0; k < S.N1; ++k) {
    const Eigen::VectorXd x = img.row(k).transpose();
    const Eigen::VectorXd r0 = y_rows.col(k) - S.apply_row(k, x);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(S.M);
    Eigen::VectorXd r = r0, p = r0;
    double rs = r.squaredNorm();
    const double tol = 1e-20 * std::max(1.0, r0.squaredNorm());
    for (int it = 0; it < 4 * S.M && rs > tol; ++it) {
      const Eigen::VectorXd ap = S.apply_row(k, S.adjoint_row(k, p));
      const double alpha = rs / p.dot(ap);
      z += alpha * p;
      r -= alpha * ap;
      const double rs2 = r.squaredNorm();
      p = r + (rs2 / rs) * p;
      rs = rs2;
    }
    if (rs > 1e-12 * std::max(1.0, r0.squaredNorm()))
      throw NumericalError("project_measurements: normal-equations CG stalled", std::sqrt(rs));
    out.row(k) += S.adjoint_row(k, z).transpose();
  }
  return out;
}

namespace {

// Multiplicity of each source pixel under A (diagonal of A^T A).
Eigen::MatrixXd source_multiplicity(const WarpOperator& A) {
  Eigen::MatrixXd mult = Eigen::MatrixXd::Zero(A.rows, A.cols);
  for (int k = 0; k < A.rows; ++k)
    for (int l = 0; l < A.cols; ++l) mult(A.src_row(k, l), A.src_col(k, l)) += 1.0;
  return mult;
}

Image warp_adjoint(const WarpOperator& A, const Image& w) {
  Image out = Image::Zero(A.rows, A.cols);
  for (int k = 0; k < A.rows; ++k)
    for (int l = 0; l < A.cols; ++l) out(A.src_row(k, l), A.src_col(k, l)) += w(k, l);
  return out;
}

}  // namespace

std::pair<Image, Image> project_correlation(const Image& I1, const Image& I2,
                                            const WarpOperator& A, double eps) {
  if (eps < 0.0) throw ConfigError("project_correlation: eps must be >= 0");
  if (I1.rows() != I2.rows() || I1.cols() != I2.cols())
    throw ShapeError("project_correlation: image dimensions differ");
  if (I1.rows() != A.rows || I1.cols() != A.cols)
    throw ShapeError("project_correlation: images do not match warp dims");
  if (!I1.allFinite() || !I2.allFinite())
    throw NumericalError("project_correlation: non-finite input");

  if (std::isinf(eps)) return {I1, I2};
  const double c0 = (I2 - predict(A, I1)).squaredNorm();
  if (c0 <= eps) return {I1, I2};

  const Eigen::MatrixXd mult = source_multiplicity(A);
  const Image at_x2 = warp_adjoint(A, I2);

  // Block elimination of (Identity + mu L^T L) z = x with rho = mu/(1+mu):
  //   u = (x1 + rho A^T x2) / (1 + rho mult),  v = (x2 + mu A u) / (1 + mu).
  auto solve_u = [&](double rho) -> Image {
    return (I1 + rho * at_x2).cwiseQuotient(Eigen::MatrixXd::Constant(A.rows, A.cols, 1.0) +
                                            rho * mult);
  };
  auto constraint_at = [&](double mu) -> double {
    const Image u = solve_u(mu / (1.0 + mu));
    return (I2 - predict(A, u)).squaredNorm() / ((1.0 + mu) * (1.0 + mu));
  };

  if (eps == 0.0) {  // limit rho -> 1: exact projection onto {v = A u}
    const Image u = solve_u(1.0);
    return {u, predict(A, u)};
  }

  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (constraint_at(hi) > eps) {
    lo = hi;
    hi *= 4.0;
    if (++guard > 200)
      throw NumericalError("project_correlation: bracket expansion failed", constraint_at(hi));
  }
  double mu = hi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double h = constraint_at(mid) - eps;
    if (std::abs(h) <= 1e-6 * eps) {
      mu = h <= 0.0 ? mid : hi;
      break;
    }
    (h > 0.0 ? lo : hi) = mid;
    mu = hi;  // feasible side of the bracket
  }
  if (constraint_at(mu) > eps * (1.0 + 1e-4)) mu = hi;

  const Image u = solve_u(mu / (1.0 + mu));
  const Image v = (I2 + mu * predict(A, u)) / (1.0 + mu);
  return {u, v};
}

namespace {

// The reconstruction variables live on a wavelet-friendly padded canvas; the
// measurement and correlation constraints act on the top-left crop.
struct PaddedDomain {
  int n1, n2, pr, pc;
  SparsityBasis basis;

  Image crop(const Image& z) const { return z.topLeftCorner(n1, n2); }
  Image embed(const Image& img) const {
    // Symmetric-extension fill keeps the l1 prior from seeing a fake edge.
    Image z(pr, pc);
    for (int r = 0; r < pr; ++r) {
      const int sr = r < n1 ? r : 2 * n1 - 2 - r;
      for (int c = 0; c < pc; ++c) {
        const int sc = c < n2 ? c : 2 * n2 - 2 - c;
        z(r, c) = img(std::max(sr, 0), std::max(sc, 0));
      }
    }
    return z;
  }
  Image replace_crop(const Image& z, const Image& crop_new) const {
    Image out = z;
    out.topLeftCorner(n1, n2) = crop_new;
    return out;
  }
};

PaddedDomain make_domain(int n1, int n2, const ReconParams& P) {
  const int pr = padded_dim(n1, P.levels), pc = padded_dim(n2, P.levels);
  return PaddedDomain{n1, n2, pr, pc, make_basis(P.family, P.levels, pr, pc)};
}

double meas_violation(const Image& img, const SensingMatrix& S, const MeasurementSet& Y) {
  return (Y.y - measure(img, S).y).norm() / std::max(1.0, Y.y.norm());
}

}  // namespace

Image independent_reconstruct(const MeasurementSet& Y, const SensingMatrix& S,
                              const ReconParams& P, ReconReport* report) {
  P.validate();
  const PaddedDomain dom = make_domain(S.N1, S.N2, P);
  Image z = dom.embed(preimage(Y, S));
  double gamma = P.gamma;
  int iters = 0;
  bool converged = false;
  for (int n = 1; n <= P.max_iters; ++n) {
    iters = n;
    const Image grad_step =
        dom.replace_crop(z, project_measurements(dom.crop(z), S, Y));
    const Image next = dom.basis.synthesis(soft_threshold(dom.basis.analysis(grad_step), gamma));
    const double rel = (next - z).norm() / std::max(1.0, z.norm());
    z = next;
    if (n % P.decay_every == 0) gamma *= P.gamma_decay;
    if (rel < P.rel_tol) {
      converged = true;
      break;
    }
  }
  Image out = dom.crop(z);
  if (S.orthonormal_rows) out = project_measurements(out, S, Y);
  if (report) {
    report->iterations = iters;
    report->converged = converged;
    report->meas_violation = meas_violation(out, S, Y);
    report->corr_excess = 0.0;
  }
  return clamp255(out);
}

std::pair<Image, Image> joint_reconstruct(const MeasurementSet& Y1, const MeasurementSet& Y2,
                                          const SensingMatrix& S1, const SensingMatrix& S2,
                                          const WarpOperator& A, const ReconParams& P,
                                          ReconReport* report) {
  P.validate();
  if (S1.N1 != S2.N1 || S1.N2 != S2.N2)
    throw ConfigError("joint_reconstruct: S1/S2 dims differ");
  if (A.rows != S1.N1 || A.cols != S1.N2)
    throw ShapeError("joint_reconstruct: warp does not match sensing dims");

  const PaddedDomain dom = make_domain(S1.N1, S1.N2, P);
  using Pair = std::pair<Image, Image>;

  // The constraints are enforced exactly, so the minimizer is invariant to
  // the l1 scale; a fixed threshold keeps the averaging scheme's fixed point
  // stationary (a decaying one demonstrably degrades it).
  const double gamma = P.gamma;
  const Pair x0{dom.embed(preimage(Y1, S1)), dom.embed(preimage(Y2, S2))};

  // Five proximity maps over the stacked pair.
  auto prox_l1_1 = [&](const Pair& z) -> Pair {
    return {dom.basis.synthesis(soft_threshold(dom.basis.analysis(z.first), gamma)), z.second};
  };
  auto prox_l1_2 = [&](const Pair& z) -> Pair {
    return {z.first, dom.basis.synthesis(soft_threshold(dom.basis.analysis(z.second), gamma))};
  };
  auto prox_meas_1 = [&](const Pair& z) -> Pair {
    return {dom.replace_crop(z.first, project_measurements(dom.crop(z.first), S1, Y1)), z.second};
  };
  auto prox_meas_2 = [&](const Pair& z) -> Pair {
    return {z.first, dom.replace_crop(z.second, project_measurements(dom.crop(z.second), S2, Y2))};
  };
  auto prox_corr = [&](const Pair& z) -> Pair {
    const auto [c1, c2] = project_correlation(dom.crop(z.first), dom.crop(z.second), A, P.epsilon);
    return {dom.replace_crop(z.first, c1), dom.replace_crop(z.second, c2)};
  };

  std::vector<std::function<Pair(const Pair&)>> prox{prox_l1_1, prox_l1_2, prox_meas_1,
                                                     prox_meas_2, prox_corr};
  std::vector<Pair> y(prox.size(), x0);
  Pair x = x0;

  int iters = 0;
  bool converged = false;
  for (int n = 1; n <= P.max_iters; ++n) {
    iters = n;
    Pair pbar{Image::Zero(dom.pr, dom.pc), Image::Zero(dom.pr, dom.pc)};
    std::vector<Pair> p(prox.size());
    for (size_t i = 0; i < prox.size(); ++i) {
      p[i] = prox[i](y[i]);
      pbar.first += p[i].first;
      pbar.second += p[i].second;
    }
    pbar.first /= static_cast<double>(prox.size());
    pbar.second /= static_cast<double>(prox.size());
    for (size_t i = 0; i < prox.size(); ++i) {
      y[i].first += 2.0 * pbar.first - x.first - p[i].first;
      y[i].second += 2.0 * pbar.second - x.second - p[i].second;
    }
    const double rel = ((pbar.first - x.first).norm() + (pbar.second - x.second).norm()) /
                       std::max(1.0, x.first.norm() + x.second.norm());
    x = std::move(pbar);
    if (rel < P.rel_tol) {
      converged = true;
      break;
    }
  }

  // Feasibility polish: alternate the correlation and (exact) measurement
  // projections until the output sits in the intersection, measurements last.
  for (int round = 0; round < 100; ++round) {
    x = prox_corr(x);
    x = prox_meas_1(x);
    x = prox_meas_2(x);
    const double excess =
        (dom.crop(x.second) - predict(A, dom.crop(x.first))).squaredNorm() - P.epsilon;
    if (!(excess > 1e-4 * P.epsilon)) break;
  }

  Image out1 = dom.crop(x.first), out2 = dom.crop(x.second);
  if (report) {
    report->iterations = iters;
    report->converged = converged;
    report->meas_violation =
        std::max(meas_violation(out1, S1, Y1), meas_violation(out2, S2, Y2));
    report->corr_excess = std::max(0.0, (out2 - predict(A, out1)).squaredNorm() - P.epsilon);
  }
  return {clamp255(out1), clamp255(out2)};
}

}  // namespace cdce
