#pragma once

#include <vector>

namespace nsplat {

// PSNR on [0,1] floats, MAX = 1; returns +infinity when MSE is zero.
double psnr(const std::vector<double>& pred, const std::vector<double>& gt);

// SSIM with the same 11x11 window and constants as the D-SSIM loss.
double ssim(const std::vector<double>& pred, const std::vector<double>& gt, int width, int height,
            int channels);

}  // namespace nsplat
