#include "cdce/metrics.hpp"

#include <cmath>
#include <limits>

#include "cdce/errors.hpp"

namespace cdce {

double mse(const Image& a, const Image& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("mse: image dimensions differ");
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

double psnr(const Image& a, const Image& b) {
  const double e = mse(a, b);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / e);
}

double disparity_error_rate(const MotionField& est, const GroundTruth& gt, bool stereo) {
  const MotionField f = est.to_pixel();
  if (f.rows != gt.field.rows || f.cols != gt.field.cols)
    throw ShapeError("disparity_error_rate: raster sizes differ");
  long total = 0, bad = 0;
  for (int k = 0; k < f.rows; ++k)
    for (int l = 0; l < f.cols; ++l) {
      if (!gt.known(k, l)) continue;
      ++total;
      const double eh = std::abs(f.mh(k, l) - gt.mh_at(k, l));
      const double ev = stereo ? 0.0 : std::abs(f.mv(k, l) - gt.mv_at(k, l));
      if (std::max(eh, ev) > 1.0) ++bad;
    }
  if (total == 0) return 0.0;
  return static_cast<double>(bad) / static_cast<double>(total);
}

}  // namespace cdce
