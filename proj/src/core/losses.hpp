#pragma once

#include <cstdint>
#include <vector>

#include "math.hpp"

namespace nsplat {

struct LossWeights {
    double w_rgb = 0.8;
    double w_dssim = 0.2;
    double w_dn = 0.05;
    double gamma = 0.1;  // confidence sharpness of the depth-normal weight
};

struct ScalarLoss {
    double value = 0;
    std::vector<double> grad;  // same layout as the predicted input
};

// Mean absolute error over all elements.
ScalarLoss loss_rgb(const std::vector<double>& pred, const std::vector<double>& gt, int width, int height);

// (1 - SSIM)/2 with an 11x11 Gaussian window (sigma 1.5), C1=0.01^2,
// C2=0.03^2, evaluated on the valid (fully covered) region.
ScalarLoss loss_dssim(const std::vector<double>& pred, const std::vector<double>& gt, int width, int height);

// Plain SSIM value (shared kernel with loss_dssim); used by the metrics path.
double ssim_value(const std::vector<double>& a, const std::vector<double>& b, int width, int height,
                  int channels);

// L1 + (1 - dot) over masked pixels; gradients w.r.t. the rendered map only.
ScalarLoss loss_normal(const std::vector<double>& rendered, const std::vector<double>& prior,
                       const std::vector<uint8_t>& mask, int width, int height);

// Per-pixel confidence weights exp((dot-1)/gamma); detached from the
// gradient by design, so callers compute them once per step and pass them in.
std::vector<double> dn_confidence_weights(const std::vector<double>& depth_normals,
                                          const std::vector<double>& prior,
                                          const std::vector<uint8_t>& mask, double gamma);

// Confidence-weighted variant for depth-derived normals; weights are treated
// as constants.
ScalarLoss loss_depth_normal(const std::vector<double>& depth_normals, const std::vector<double>& prior,
                             const std::vector<uint8_t>& mask, const std::vector<double>& weights,
                             int width, int height);

struct LossBreakdown {
    double rgb = 0, dssim = 0, normal = 0, depth_normal = 0;
    double total = 0;
};

double total_loss(const LossBreakdown& parts, const LossWeights& w);

}  // namespace nsplat
