#pragma once

#include <optional>
#include <vector>

#include "math.hpp"
#include "scene.hpp"
#include "shading.hpp"

namespace nsplat {

struct RasterOptions {
    bool early_termination = true;
    double min_alpha = 1e-5;          // contributions below this are skipped
    double alpha_clamp = 0.99;
    double transmittance_floor = 1e-4;
    double normal_gate = 0.05;        // accumulated weight below which the normal map is zeroed
    double sigma_radius = 3.0;        // screen-space footprint radius in sigmas
    int tile = 16;
};

struct Splat2D {
    Vec2 mean2d;
    double cov_a = 0, cov_b = 0, cov_c = 0;  // 2D covariance (xx, xy, yy), low-pass included
    double inv_a = 0, inv_b = 0, inv_c = 0;
    double depth = 0;
    double opacity = 0;
    Vec3 color;         // LDR, fed to compositing
    Vec3 ldr_diffuse;   // color == ldr_diffuse + ldr_specular
    Vec3 ldr_specular;
    Vec3 albedo;
    Vec3 normal_cam;    // unit, camera frame
    int source_index = -1;  // position in the resolved render list
    int x0 = 0, x1 = 0, y0 = 0, y1 = 0;  // pixel bbox, [x0,x1) x [y0,y1)
};

// Perspective projection of one resolved Gaussian. Returns nullopt when the
// splat is culled (behind the near plane at 0.01 m or its sigma_radius
// footprint misses the image).
std::optional<Splat2D> project_gaussian(const ResolvedGaussian& g, const CameraModel& cam,
                                        const RasterOptions& opt = {});

struct ProjectionGrads {
    Vec3 d_mu_world;
    Vec4 d_rot_raw;     // at the raw (unnormalized) world-frame quaternion
    Vec3 d_log_scale;
};

// Chains gradients on (mean2d, cov2d, depth) back to the Gaussian parameters.
ProjectionGrads project_gaussian_backward(const ResolvedGaussian& g, const CameraModel& cam,
                                          const Vec2& d_mean2d, const double d_cov[3], double d_depth);

struct RenderOutput {
    int width = 0, height = 0;
    std::vector<double> rgb;           // H*W*3, [0,1]
    std::vector<double> alpha;         // H*W
    std::vector<double> depth;         // H*W, alpha-weighted mean
    std::vector<double> normal;        // H*W*3, unit where alpha > normal_gate, else zero
    std::vector<double> albedo;        // H*W*3
    std::vector<double> diffuse_hdr;   // H*W*3, tone_map(diffuse_hdr+specular_hdr) == rgb
    std::vector<double> specular_hdr;  // H*W*3
};

// sky_ldr: H*W*3 tone-mapped sky image composited behind residual
// transmittance; null renders onto black.
RenderOutput rasterize(const std::vector<Splat2D>& splats, const std::vector<double>* sky_ldr,
                       const CameraModel& cam, const RasterOptions& opt);

struct SplatGrad {
    Vec3 d_color;
    Vec3 d_normal_cam;
    double d_depth = 0;
    double d_opacity = 0;
    Vec2 d_mean2d;
    double d_cov[3] = {0, 0, 0};
};

struct MapGrads {
    std::vector<double> d_rgb;     // H*W*3
    std::vector<double> d_normal;  // H*W*3, w.r.t. the unit-normalized map
    std::vector<double> d_depth;   // H*W
};

struct RasterBackwardResult {
    std::vector<SplatGrad> splats;      // parallel to the input splat list
    std::vector<double> d_sky_ldr;      // H*W*3
};

RasterBackwardResult rasterize_backward(const std::vector<Splat2D>& splats,
                                        const std::vector<double>* sky_ldr, const CameraModel& cam,
                                        const RasterOptions& opt, const MapGrads& grads);

// Camera-space normals from the rendered depth map via central differences of
// back-projected points. Pixels failing the validity mask produce zeros.
std::vector<double> depth_to_normals(const std::vector<double>& depth_map,
                                     const std::vector<uint8_t>& valid, const CameraModel& cam);

std::vector<double> depth_to_normals_backward(const std::vector<double>& depth_map,
                                              const std::vector<uint8_t>& valid, const CameraModel& cam,
                                              const std::vector<double>& d_normals);

}  // namespace nsplat
