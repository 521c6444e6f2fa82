#pragma once

#include "cdce/image.hpp"
#include "cdce/motion.hpp"

namespace cdce {

double mse(const Image& a, const Image& b);

// 10*log10(255^2 / mse); +inf when the images are identical.
double psnr(const Image& a, const Image& b);

// Fraction of unmasked pixels whose absolute displacement error exceeds one
// pixel. Stereo mode compares the horizontal component only.
double disparity_error_rate(const MotionField& est, const GroundTruth& gt,
                            bool stereo = true);

}  // namespace cdce
