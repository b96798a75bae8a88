#include "metrics.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"
#include "losses.hpp"

namespace nsplat {

double psnr(const std::vector<double>& pred, const std::vector<double>& gt) {
    if (pred.size() != gt.size() || pred.empty())
        fail(ErrorCode::shape_mismatch, "psnr: image shapes differ");
    double mse = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        double d = pred[i] - gt[i];
        mse += d * d;
    }
    mse /= static_cast<double>(pred.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const std::vector<double>& pred, const std::vector<double>& gt, int width, int height,
            int channels) {
    return ssim_value(pred, gt, width, height, channels);
}

}  // namespace nsplat
