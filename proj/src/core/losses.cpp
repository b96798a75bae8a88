#include "losses.hpp"

#include <cmath>

#include "error.hpp"

namespace nsplat {

ScalarLoss loss_rgb(const std::vector<double>& pred, const std::vector<double>& gt, int width, int height) {
    size_t n = static_cast<size_t>(width) * height * 3;
    if (pred.size() != n || gt.size() != n)
        fail(ErrorCode::shape_mismatch, "loss_rgb: image shapes differ");
    ScalarLoss out;
    out.grad.assign(n, 0.0);
    double acc = 0;
    double inv = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        double d = pred[i] - gt[i];
        acc += std::abs(d);
        out.grad[i] = (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) * inv;
    }
    out.value = acc * inv;
    return out;
}

namespace {

constexpr int kWin = 11;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const double* window() {
    static double w[kWin * kWin];
    static bool init = false;
    if (!init) {
        double g[kWin];
        double sum = 0;
        for (int i = 0; i < kWin; ++i) {
            double d = i - kWin / 2;
            g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
            sum += g[i];
        }
        for (int i = 0; i < kWin; ++i) g[i] /= sum;
        for (int i = 0; i < kWin; ++i)
            for (int j = 0; j < kWin; ++j) w[i * kWin + j] = g[i] * g[j];
        init = true;
    }
    return w;
}

struct SsimStats {
    double mu_x, mu_y, var_x, var_y, cov;
};

SsimStats window_stats(const std::vector<double>& x, const std::vector<double>& y, int width,
                       int cx, int cy, int ch, int channels) {
    const double* w = window();
    SsimStats s{0, 0, 0, 0, 0};
    int half = kWin / 2;
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx) {
            double wt = w[(dy + half) * kWin + (dx + half)];
            size_t idx = (static_cast<size_t>(cy + dy) * width + (cx + dx)) * channels + ch;
            s.mu_x += wt * x[idx];
            s.mu_y += wt * y[idx];
            s.var_x += wt * x[idx] * x[idx];
            s.var_y += wt * y[idx] * y[idx];
            s.cov += wt * x[idx] * y[idx];
        }
    s.var_x -= s.mu_x * s.mu_x;
    s.var_y -= s.mu_y * s.mu_y;
    s.cov -= s.mu_x * s.mu_y;
    return s;
}

double ssim_point(const SsimStats& s) {
    double a1 = 2 * s.mu_x * s.mu_y + kC1;
    double a2 = 2 * s.cov + kC2;
    double b1 = s.mu_x * s.mu_x + s.mu_y * s.mu_y + kC1;
    double b2 = s.var_x + s.var_y + kC2;
    return (a1 * a2) / (b1 * b2);
}

}  // namespace

double ssim_value(const std::vector<double>& a, const std::vector<double>& b, int width, int height,
                  int channels) {
    if (a.size() != b.size() || a.size() != static_cast<size_t>(width) * height * channels)
        fail(ErrorCode::shape_mismatch, "ssim: image shapes differ");
    if (width < kWin || height < kWin)
        fail(ErrorCode::invalid_arg, "ssim: image smaller than the 11x11 window");
    int half = kWin / 2;
    double acc = 0;
    size_t count = 0;
    for (int cy = half; cy < height - half; ++cy)
        for (int cx = half; cx < width - half; ++cx)
            for (int ch = 0; ch < channels; ++ch) {
                acc += ssim_point(window_stats(a, b, width, cx, cy, ch, channels));
                ++count;
            }
    return acc / static_cast<double>(count);
}

ScalarLoss loss_dssim(const std::vector<double>& pred, const std::vector<double>& gt, int width,
                      int height) {
    size_t n = static_cast<size_t>(width) * height * 3;
    if (pred.size() != n || gt.size() != n)
        fail(ErrorCode::shape_mismatch, "loss_dssim: image shapes differ");
    if (width < kWin || height < kWin)
        fail(ErrorCode::invalid_arg, "loss_dssim: image smaller than the 11x11 window");

    ScalarLoss out;
    out.grad.assign(n, 0.0);
    const double* w = window();
    int half = kWin / 2;
    size_t count = static_cast<size_t>(width - 2 * half) * (height - 2 * half) * 3;
    double d_s = -0.5 / static_cast<double>(count);  // d((1-mean)/2)/dS_p

    double acc = 0;
    for (int cy = half; cy < height - half; ++cy) {
        for (int cx = half; cx < width - half; ++cx) {
            for (int ch = 0; ch < 3; ++ch) {
                SsimStats s = window_stats(pred, gt, width, cx, cy, ch, 3);
                double a1 = 2 * s.mu_x * s.mu_y + kC1;
                double a2 = 2 * s.cov + kC2;
                double b1 = s.mu_x * s.mu_x + s.mu_y * s.mu_y + kC1;
                double b2 = s.var_x + s.var_y + kC2;
                double val = (a1 * a2) / (b1 * b2);
                acc += val;

                // Partials of S w.r.t. the window statistics.
                double d_a1 = a2 / (b1 * b2);
                double d_a2 = a1 / (b1 * b2);
                double d_b1 = -val / b1;
                double d_b2 = -val / b2;
                double d_mux = d_a1 * 2 * s.mu_y + d_b1 * 2 * s.mu_x;
                double d_cov = d_a2 * 2;
                double d_varx = d_b2;

                for (int dy = -half; dy <= half; ++dy)
                    for (int dx = -half; dx <= half; ++dx) {
                        double wt = w[(dy + half) * kWin + (dx + half)];
                        size_t idx = (static_cast<size_t>(cy + dy) * width + (cx + dx)) * 3 + ch;
                        double xv = pred[idx], yv = gt[idx];
                        double g = d_mux + 2.0 * (xv - s.mu_x) * d_varx + (yv - s.mu_y) * d_cov;
                        out.grad[idx] += d_s * wt * g;
                    }
            }
        }
    }
    out.value = (1.0 - acc / static_cast<double>(count)) / 2.0;
    return out;
}

ScalarLoss loss_normal(const std::vector<double>& rendered, const std::vector<double>& prior,
                       const std::vector<uint8_t>& mask, int width, int height) {
    size_t px = static_cast<size_t>(width) * height;
    if (rendered.size() != px * 3 || prior.size() != px * 3 || mask.size() != px)
        fail(ErrorCode::shape_mismatch, "loss_normal: map shapes differ");
    ScalarLoss out;
    out.grad.assign(px * 3, 0.0);
    size_t count = 0;
    for (size_t i = 0; i < px; ++i) count += mask[i] ? 1 : 0;
    if (count == 0) return out;
    double inv = 1.0 / static_cast<double>(count);

    double acc = 0;
    for (size_t i = 0; i < px; ++i) {
        if (!mask[i]) continue;
        double dotv = 0, l1 = 0;
        for (int c = 0; c < 3; ++c) {
            double d = rendered[i * 3 + c] - prior[i * 3 + c];
            l1 += std::abs(d);
            dotv += rendered[i * 3 + c] * prior[i * 3 + c];
        }
        acc += l1 + (1.0 - dotv);
        for (int c = 0; c < 3; ++c) {
            double d = rendered[i * 3 + c] - prior[i * 3 + c];
            double sgn = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
            out.grad[i * 3 + c] = (sgn - prior[i * 3 + c]) * inv;
        }
    }
    out.value = acc * inv;
    return out;
}

std::vector<double> dn_confidence_weights(const std::vector<double>& depth_normals,
                                          const std::vector<double>& prior,
                                          const std::vector<uint8_t>& mask, double gamma) {
    std::vector<double> w(mask.size(), 0.0);
    for (size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        double dotv = 0;
        for (int c = 0; c < 3; ++c) dotv += depth_normals[i * 3 + c] * prior[i * 3 + c];
        w[i] = std::exp((dotv - 1.0) / gamma);
    }
    return w;
}

ScalarLoss loss_depth_normal(const std::vector<double>& depth_normals, const std::vector<double>& prior,
                             const std::vector<uint8_t>& mask, const std::vector<double>& weights,
                             int width, int height) {
    size_t px = static_cast<size_t>(width) * height;
    if (depth_normals.size() != px * 3 || prior.size() != px * 3 || mask.size() != px ||
        weights.size() != px)
        fail(ErrorCode::shape_mismatch, "loss_depth_normal: map shapes differ");
    ScalarLoss out;
    out.grad.assign(px * 3, 0.0);
    size_t count = 0;
    for (size_t i = 0; i < px; ++i) count += mask[i] ? 1 : 0;
    if (count == 0) return out;
    double inv = 1.0 / static_cast<double>(count);

    double acc = 0;
    for (size_t i = 0; i < px; ++i) {
        if (!mask[i]) continue;
        double dotv = 0, l1 = 0;
        for (int c = 0; c < 3; ++c) {
            double d = depth_normals[i * 3 + c] - prior[i * 3 + c];
            l1 += std::abs(d);
            dotv += depth_normals[i * 3 + c] * prior[i * 3 + c];
        }
        acc += weights[i] * (l1 + (1.0 - dotv));
        for (int c = 0; c < 3; ++c) {
            double d = depth_normals[i * 3 + c] - prior[i * 3 + c];
            double sgn = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
            out.grad[i * 3 + c] = weights[i] * (sgn - prior[i * 3 + c]) * inv;
        }
    }
    out.value = acc * inv;
    return out;
}

double total_loss(const LossBreakdown& parts, const LossWeights& w) {
    return w.w_rgb * parts.rgb + w.w_dssim * parts.dssim + w.w_dn * (parts.depth_normal + parts.normal);
}

}  // namespace nsplat
