#include "raster.hpp"

#include <algorithm>
#include <numeric>

namespace nsplat {

namespace {

struct CamSpace {
    Mat3 r_wc;
    Vec3 p_cam;
    double lim_x, lim_y;
};

CamSpace to_camera(const ResolvedGaussian& g, const CameraModel& cam) {
    CamSpace c;
    Se3Pose wc = cam.world_to_cam();
    c.r_wc = quat_to_mat(wc.rotation);
    c.p_cam = c.r_wc * g.mu + wc.translation;
    c.lim_x = 1.3 * cam.width / (2.0 * cam.fx);
    c.lim_y = 1.3 * cam.height / (2.0 * cam.fy);
    return c;
}

constexpr double kNearPlane = 0.01;
constexpr double kLowPass = 0.3;

}  // namespace

std::optional<Splat2D> project_gaussian(const ResolvedGaussian& g, const CameraModel& cam,
                                        const RasterOptions& opt) {
    CamSpace cs = to_camera(g, cam);
    double x = cs.p_cam.x, y = cs.p_cam.y, z = cs.p_cam.z;
    if (z <= kNearPlane) return std::nullopt;

    Vec3 scale{std::exp(g.src->log_scale.x), std::exp(g.src->log_scale.y), std::exp(g.src->log_scale.z)};
    Mat3 sigma = build_covariance(normalized(g.rot), scale);

    double tx = std::clamp(x / z, -cs.lim_x, cs.lim_x);
    double ty = std::clamp(y / z, -cs.lim_y, cs.lim_y);
    // J rows give d(mean2d)/d(p_cam); T = J * R_wc.
    double j00 = cam.fx / z, j02 = -cam.fx * tx / z;
    double j11 = cam.fy / z, j12 = -cam.fy * ty / z;
    Vec3 t0 = cs.r_wc.row(0) * j00 + cs.r_wc.row(2) * j02;
    Vec3 t1 = cs.r_wc.row(1) * j11 + cs.r_wc.row(2) * j12;

    Vec3 st0 = sigma * t0, st1 = sigma * t1;
    Splat2D s;
    s.cov_a = dot(t0, st0) + kLowPass;
    s.cov_b = dot(t0, st1);
    s.cov_c = dot(t1, st1) + kLowPass;

    double det = s.cov_a * s.cov_c - s.cov_b * s.cov_b;
    if (det <= 0) return std::nullopt;
    s.inv_a = s.cov_c / det;
    s.inv_b = -s.cov_b / det;
    s.inv_c = s.cov_a / det;

    s.mean2d = {cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy};
    s.depth = z;

    double mid = 0.5 * (s.cov_a + s.cov_c);
    double disc = std::sqrt(std::max(0.0, mid * mid - det));
    double radius = opt.sigma_radius * std::sqrt(std::max(1e-12, mid + disc));

    s.x0 = std::clamp(static_cast<int>(std::floor(s.mean2d.x - radius)), 0, cam.width);
    s.x1 = std::clamp(static_cast<int>(std::ceil(s.mean2d.x + radius)) + 1, 0, cam.width);
    s.y0 = std::clamp(static_cast<int>(std::floor(s.mean2d.y - radius)), 0, cam.height);
    s.y1 = std::clamp(static_cast<int>(std::ceil(s.mean2d.y + radius)) + 1, 0, cam.height);
    if (s.x0 >= s.x1 || s.y0 >= s.y1) return std::nullopt;
    return s;
}

ProjectionGrads project_gaussian_backward(const ResolvedGaussian& g, const CameraModel& cam,
                                          const Vec2& d_mean2d, const double d_cov[3], double d_depth) {
    ProjectionGrads out;
    CamSpace cs = to_camera(g, cam);
    double x = cs.p_cam.x, y = cs.p_cam.y, z = cs.p_cam.z;

    Vec3 scale{std::exp(g.src->log_scale.x), std::exp(g.src->log_scale.y), std::exp(g.src->log_scale.z)};
    Vec4 q_unit = normalized(g.rot);
    Mat3 sigma = build_covariance(q_unit, scale);

    double txr = x / z, tyr = y / z;
    double tx = std::clamp(txr, -cs.lim_x, cs.lim_x);
    double ty = std::clamp(tyr, -cs.lim_y, cs.lim_y);
    double j00 = cam.fx / z, j02 = -cam.fx * tx / z;
    double j11 = cam.fy / z, j12 = -cam.fy * ty / z;
    Vec3 t0 = cs.r_wc.row(0) * j00 + cs.r_wc.row(2) * j02;
    Vec3 t1 = cs.r_wc.row(1) * j11 + cs.r_wc.row(2) * j12;

    // cov2d entries: a = t0 S t0, b = t0 S t1, c = t1 S t1.
    Vec3 st0 = sigma * t0, st1 = sigma * t1;
    double da = d_cov[0], db = d_cov[1], dc = d_cov[2];

    Vec3 d_t0 = st0 * (2.0 * da) + st1 * db;
    Vec3 d_t1 = st1 * (2.0 * dc) + st0 * db;

    // dL/dSigma = da t0 t0^T + db sym(t0 t1^T) + dc t1 t1^T.
    Mat3 d_sigma;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            d_sigma.m[i][j] = da * t0[i] * t0[j] + dc * t1[i] * t1[j] +
                              db * 0.5 * (t0[i] * t1[j] + t1[i] * t0[j]);

    Vec4 d_q{0, 0, 0, 0};
    Vec3 d_s{0, 0, 0};
    build_covariance_backward(q_unit, scale, d_sigma, d_q, d_s);
    out.d_rot_raw = normalize_backward(g.rot, d_q);
    out.d_log_scale = {d_s.x * scale.x, d_s.y * scale.y, d_s.z * scale.z};

    // T rows: t0 = j00 r0 + j02 r2; t1 = j11 r1 + j12 r2.
    double d_j00 = dot(d_t0, cs.r_wc.row(0));
    double d_j02 = dot(d_t0, cs.r_wc.row(2));
    double d_j11 = dot(d_t1, cs.r_wc.row(1));
    double d_j12 = dot(d_t1, cs.r_wc.row(2));

    double d_x = 0, d_y = 0, d_z = 0;
    // j00 = fx/z, j02 = -fx tx / z with tx = clamp(x/z).
    d_z += d_j00 * (-cam.fx / (z * z));
    d_z += d_j11 * (-cam.fy / (z * z));
    double d_tx = d_j02 * (-cam.fx / z);
    double d_ty = d_j12 * (-cam.fy / z);
    d_z += d_j02 * (cam.fx * tx / (z * z));
    d_z += d_j12 * (cam.fy * ty / (z * z));
    if (txr > -cs.lim_x && txr < cs.lim_x) {
        d_x += d_tx / z;
        d_z += -d_tx * x / (z * z);
    }
    if (tyr > -cs.lim_y && tyr < cs.lim_y) {
        d_y += d_ty / z;
        d_z += -d_ty * y / (z * z);
    }

    // mean2d = (fx x/z + cx, fy y/z + cy).
    d_x += d_mean2d.x * cam.fx / z;
    d_z += -d_mean2d.x * cam.fx * x / (z * z);
    d_y += d_mean2d.y * cam.fy / z;
    d_z += -d_mean2d.y * cam.fy * y / (z * z);

    d_z += d_depth;

    out.d_mu_world = mul_transposed(cs.r_wc, Vec3{d_x, d_y, d_z});
    return out;
}

namespace {

struct TileBins {
    int tiles_x = 0, tiles_y = 0, tile = 16;
    std::vector<std::vector<int>> bins;
};

TileBins bin_splats(const std::vector<Splat2D>& splats, int width, int height, int tile) {
    TileBins tb;
    tb.tile = tile;
    tb.tiles_x = (width + tile - 1) / tile;
    tb.tiles_y = (height + tile - 1) / tile;
    tb.bins.resize(static_cast<size_t>(tb.tiles_x) * tb.tiles_y);

    // Global (depth, source) order first, so every bin list is sorted.
    std::vector<int> order(splats.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (splats[a].depth != splats[b].depth) return splats[a].depth < splats[b].depth;
        return splats[a].source_index < splats[b].source_index;
    });

    for (int idx : order) {
        const Splat2D& s = splats[idx];
        int tx0 = s.x0 / tile, tx1 = (s.x1 - 1) / tile;
        int ty0 = s.y0 / tile, ty1 = (s.y1 - 1) / tile;
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx)
                tb.bins[static_cast<size_t>(ty) * tb.tiles_x + tx].push_back(idx);
    }
    return tb;
}

struct Contribution {
    int splat = 0;
    double alpha = 0;
    double t_before = 0;
};

// Replays the per-pixel compositing sequence; shared by forward and backward.
template <typename Fn>
double composite_pixel(const std::vector<Splat2D>& splats, const std::vector<int>& bin, int px, int py,
                       const RasterOptions& opt, Fn&& emit) {
    double t = 1.0;
    double cx = px + 0.5, cy = py + 0.5;
    for (int idx : bin) {
        const Splat2D& s = splats[idx];
        if (px < s.x0 || px >= s.x1 || py < s.y0 || py >= s.y1) continue;
        double dx = cx - s.mean2d.x, dy = cy - s.mean2d.y;
        double q = s.inv_a * dx * dx + 2.0 * s.inv_b * dx * dy + s.inv_c * dy * dy;
        double alpha = s.opacity * std::exp(-0.5 * q);
        if (alpha < opt.min_alpha) continue;
        alpha = std::min(alpha, opt.alpha_clamp);
        emit(idx, alpha, t);
        t *= 1.0 - alpha;
        if (opt.early_termination && t < opt.transmittance_floor) break;
    }
    return t;
}

}  // namespace

RenderOutput rasterize(const std::vector<Splat2D>& splats, const std::vector<double>* sky_ldr,
                       const CameraModel& cam, const RasterOptions& opt) {
    int w = cam.width, h = cam.height;
    RenderOutput out;
    out.width = w;
    out.height = h;
    out.rgb.assign(static_cast<size_t>(w) * h * 3, 0.0);
    out.alpha.assign(static_cast<size_t>(w) * h, 0.0);
    out.depth.assign(static_cast<size_t>(w) * h, 0.0);
    out.normal.assign(static_cast<size_t>(w) * h * 3, 0.0);
    out.albedo.assign(static_cast<size_t>(w) * h * 3, 0.0);
    out.diffuse_hdr.assign(static_cast<size_t>(w) * h * 3, 0.0);
    out.specular_hdr.assign(static_cast<size_t>(w) * h * 3, 0.0);

    TileBins tb = bin_splats(splats, w, h, opt.tile);

    for (int ty = 0; ty < tb.tiles_y; ++ty) {
        for (int tx = 0; tx < tb.tiles_x; ++tx) {
            const std::vector<int>& bin = tb.bins[static_cast<size_t>(ty) * tb.tiles_x + tx];
            int px1 = std::min(w, (tx + 1) * opt.tile);
            int py1 = std::min(h, (ty + 1) * opt.tile);
            for (int py = ty * opt.tile; py < py1; ++py) {
                for (int px = tx * opt.tile; px < px1; ++px) {
                    size_t pix = static_cast<size_t>(py) * w + px;
                    Vec3 rgb{0, 0, 0}, m{0, 0, 0}, alb{0, 0, 0}, dif{0, 0, 0}, spc{0, 0, 0};
                    double weight = 0, draw = 0;
                    double t_final = composite_pixel(
                        splats, bin, px, py, opt, [&](int idx, double alpha, double t) {
                            const Splat2D& s = splats[idx];
                            double wgt = alpha * t;
                            rgb += s.color * wgt;
                            m += s.normal_cam * wgt;
                            alb += s.albedo * wgt;
                            dif += s.ldr_diffuse * wgt;
                            spc += s.ldr_specular * wgt;
                            weight += wgt;
                            draw += s.depth * wgt;
                        });

                    if (sky_ldr) {
                        Vec3 sky{(*sky_ldr)[pix * 3], (*sky_ldr)[pix * 3 + 1], (*sky_ldr)[pix * 3 + 2]};
                        rgb += sky * t_final;
                        dif += sky * t_final;
                    }

                    out.rgb[pix * 3] = rgb.x;
                    out.rgb[pix * 3 + 1] = rgb.y;
                    out.rgb[pix * 3 + 2] = rgb.z;
                    out.alpha[pix] = weight;
                    out.depth[pix] = weight > 1e-12 ? draw / weight : 0.0;
                    for (int c = 0; c < 3; ++c) out.albedo[pix * 3 + c] = alb[c];

                    double mn = norm(m);
                    if (weight > opt.normal_gate && mn > 1e-12) {
                        out.normal[pix * 3] = m.x / mn;
                        out.normal[pix * 3 + 1] = m.y / mn;
                        out.normal[pix * 3 + 2] = m.z / mn;
                    }

                    // HDR split consistent with per-Gaussian tone mapping:
                    // diffuse_hdr + specular_hdr maps back through Reinhard to rgb.
                    for (int c = 0; c < 3; ++c) {
                        double denom = std::max(1e-9, 1.0 - rgb[c]);
                        out.diffuse_hdr[pix * 3 + c] = dif[c] / denom;
                        out.specular_hdr[pix * 3 + c] = spc[c] / denom;
                    }
                }
            }
        }
    }
    return out;
}

RasterBackwardResult rasterize_backward(const std::vector<Splat2D>& splats,
                                        const std::vector<double>* sky_ldr, const CameraModel& cam,
                                        const RasterOptions& opt, const MapGrads& grads) {
    int w = cam.width, h = cam.height;
    RasterBackwardResult out;
    out.splats.assign(splats.size(), {});
    out.d_sky_ldr.assign(static_cast<size_t>(w) * h * 3, 0.0);

    TileBins tb = bin_splats(splats, w, h, opt.tile);
    std::vector<Contribution> contribs;
    contribs.reserve(256);

    for (int ty = 0; ty < tb.tiles_y; ++ty) {
        for (int tx = 0; tx < tb.tiles_x; ++tx) {
            const std::vector<int>& bin = tb.bins[static_cast<size_t>(ty) * tb.tiles_x + tx];
            int px1 = std::min(w, (tx + 1) * opt.tile);
            int py1 = std::min(h, (ty + 1) * opt.tile);
            for (int py = ty * opt.tile; py < py1; ++py) {
                for (int px = tx * opt.tile; px < px1; ++px) {
                    size_t pix = static_cast<size_t>(py) * w + px;

                    contribs.clear();
                    Vec3 m{0, 0, 0};
                    double weight = 0, draw = 0;
                    double t_final = composite_pixel(
                        splats, bin, px, py, opt, [&](int idx, double alpha, double t) {
                            contribs.push_back({idx, alpha, t});
                            const Splat2D& s = splats[idx];
                            m += s.normal_cam * (alpha * t);
                            weight += alpha * t;
                            draw += s.depth * (alpha * t);
                        });

                    Vec3 g_rgb{grads.d_rgb[pix * 3], grads.d_rgb[pix * 3 + 1], grads.d_rgb[pix * 3 + 2]};
                    Vec3 sky{0, 0, 0};
                    if (sky_ldr)
                        sky = {(*sky_ldr)[pix * 3], (*sky_ldr)[pix * 3 + 1], (*sky_ldr)[pix * 3 + 2]};

                    // Sky receives the residual transmittance.
                    if (sky_ldr) {
                        out.d_sky_ldr[pix * 3] += t_final * g_rgb.x;
                        out.d_sky_ldr[pix * 3 + 1] += t_final * g_rgb.y;
                        out.d_sky_ldr[pix * 3 + 2] += t_final * g_rgb.z;
                    }
                    if (contribs.empty()) continue;

                    // Normal map: N = M/|M| gated on accumulated weight.
                    Vec3 g_m{0, 0, 0};
                    double mn = norm(m);
                    if (weight > opt.normal_gate && mn > 1e-12) {
                        Vec3 g_n{grads.d_normal[pix * 3], grads.d_normal[pix * 3 + 1],
                                 grads.d_normal[pix * 3 + 2]};
                        g_m = normalize_backward(m, g_n);
                    }

                    // Depth map: D = draw/weight.
                    double g_depth = grads.d_depth[pix];
                    double g_draw = 0, g_weight = 0;
                    if (weight > 1e-12 && g_depth != 0.0) {
                        g_draw = g_depth / weight;
                        g_weight = -g_depth * draw / (weight * weight);
                    }

                    // Suffix accumulators; sky behaves like a terminal contribution.
                    Vec3 s_rgb = sky * t_final;
                    Vec3 s_m{0, 0, 0};
                    double s_draw = 0, s_w = 0;

                    for (int i = static_cast<int>(contribs.size()) - 1; i >= 0; --i) {
                        const Contribution& c = contribs[i];
                        const Splat2D& s = splats[c.splat];
                        SplatGrad& sg = out.splats[c.splat];
                        double wgt = c.alpha * c.t_before;

                        sg.d_color += g_rgb * wgt;
                        sg.d_normal_cam += g_m * wgt;
                        sg.d_depth += g_draw * wgt;

                        double inv_om = 1.0 / (1.0 - c.alpha);
                        double d_alpha = dot(g_rgb, s.color * c.t_before - s_rgb * inv_om) +
                                         dot(g_m, s.normal_cam * c.t_before - s_m * inv_om) +
                                         g_draw * (s.depth * c.t_before - s_draw * inv_om) +
                                         g_weight * (c.t_before - s_w * inv_om);

                        s_rgb += s.color * wgt;
                        s_m += s.normal_cam * wgt;
                        s_draw += s.depth * wgt;
                        s_w += wgt;

                        // alpha = min(opacity * exp(-q/2), clamp); clamped region has zero slope.
                        double cxp = px + 0.5, cyp = py + 0.5;
                        double dx = cxp - s.mean2d.x, dy = cyp - s.mean2d.y;
                        double q = s.inv_a * dx * dx + 2.0 * s.inv_b * dx * dy + s.inv_c * dy * dy;
                        double raw = s.opacity * std::exp(-0.5 * q);
                        if (raw > opt.alpha_clamp) continue;

                        double g_exp = std::exp(-0.5 * q);
                        sg.d_opacity += d_alpha * g_exp;
                        double d_q = d_alpha * s.opacity * g_exp * -0.5;
                        double d_ia = d_q * dx * dx;
                        double d_ib = d_q * 2.0 * dx * dy;
                        double d_ic = d_q * dy * dy;
                        double d_dx = d_q * (2.0 * s.inv_a * dx + 2.0 * s.inv_b * dy);
                        double d_dy = d_q * (2.0 * s.inv_b * dx + 2.0 * s.inv_c * dy);
                        sg.d_mean2d.x += -d_dx;
                        sg.d_mean2d.y += -d_dy;

                        // d(inv) -> d(cov): dL/dC = -Cinv G Cinv with G from (d_ia, d_ib, d_ic).
                        double g00 = d_ia, g01 = 0.5 * d_ib, g11 = d_ic;
                        double ia = s.inv_a, ib = s.inv_b, ic = s.inv_c;
                        double t00 = ia * g00 + ib * g01, t01 = ia * g01 + ib * g11;
                        double t10 = ib * g00 + ic * g01, t11 = ib * g01 + ic * g11;
                        double c00 = -(t00 * ia + t01 * ib);
                        double c01 = -(t00 * ib + t01 * ic);
                        double c11 = -(t10 * ib + t11 * ic);
                        sg.d_cov[0] += c00;
                        sg.d_cov[1] += 2.0 * c01;
                        sg.d_cov[2] += c11;
                    }
                }
            }
        }
    }
    return out;
}

std::vector<double> depth_to_normals(const std::vector<double>& depth_map,
                                     const std::vector<uint8_t>& valid, const CameraModel& cam) {
    int w = cam.width, h = cam.height;
    std::vector<double> out(static_cast<size_t>(w) * h * 3, 0.0);

    auto point = [&](int px, int py) {
        double d = depth_map[static_cast<size_t>(py) * w + px];
        return Vec3{d * (px + 0.5 - cam.cx) / cam.fx, d * (py + 0.5 - cam.cy) / cam.fy, d};
    };

    for (int py = 1; py < h - 1; ++py) {
        for (int px = 1; px < w - 1; ++px) {
            size_t pix = static_cast<size_t>(py) * w + px;
            if (!valid[pix] || !valid[pix - 1] || !valid[pix + 1] || !valid[pix - w] || !valid[pix + w])
                continue;
            Vec3 ddx = (point(px + 1, py) - point(px - 1, py)) * 0.5;
            Vec3 ddy = (point(px, py + 1) - point(px, py - 1)) * 0.5;
            Vec3 c = cross(ddx, ddy);
            double n = norm(c);
            if (n < 1e-12) continue;
            Vec3 nv = c / n;
            if (nv.z > 0) nv = -nv;  // orient toward the camera
            out[pix * 3] = nv.x;
            out[pix * 3 + 1] = nv.y;
            out[pix * 3 + 2] = nv.z;
        }
    }
    return out;
}

std::vector<double> depth_to_normals_backward(const std::vector<double>& depth_map,
                                              const std::vector<uint8_t>& valid, const CameraModel& cam,
                                              const std::vector<double>& d_normals) {
    int w = cam.width, h = cam.height;
    std::vector<double> d_depth(static_cast<size_t>(w) * h, 0.0);

    auto ray = [&](int px, int py) {
        return Vec3{(px + 0.5 - cam.cx) / cam.fx, (py + 0.5 - cam.cy) / cam.fy, 1.0};
    };
    auto point = [&](int px, int py) {
        return ray(px, py) * depth_map[static_cast<size_t>(py) * w + px];
    };

    for (int py = 1; py < h - 1; ++py) {
        for (int px = 1; px < w - 1; ++px) {
            size_t pix = static_cast<size_t>(py) * w + px;
            if (!valid[pix] || !valid[pix - 1] || !valid[pix + 1] || !valid[pix - w] || !valid[pix + w])
                continue;
            Vec3 g{d_normals[pix * 3], d_normals[pix * 3 + 1], d_normals[pix * 3 + 2]};
            if (g.x == 0 && g.y == 0 && g.z == 0) continue;

            Vec3 ddx = (point(px + 1, py) - point(px - 1, py)) * 0.5;
            Vec3 ddy = (point(px, py + 1) - point(px, py - 1)) * 0.5;
            Vec3 c = cross(ddx, ddy);
            double n = norm(c);
            if (n < 1e-12) continue;
            Vec3 nv = c / n;
            bool flipped = nv.z > 0;
            if (flipped) g = -g;

            Vec3 g_c = normalize_backward(c, g);
            Vec3 g_ddx = cross(ddy, g_c);
            Vec3 g_ddy = cross(g_c, ddx);

            d_depth[pix + 1] += 0.5 * dot(ray(px + 1, py), g_ddx);
            d_depth[pix - 1] -= 0.5 * dot(ray(px - 1, py), g_ddx);
            d_depth[pix + w] += 0.5 * dot(ray(px, py + 1), g_ddy);
            d_depth[pix - w] -= 0.5 * dot(ray(px, py - 1), g_ddy);
        }
    }
    return d_depth;
}

}  // namespace nsplat
