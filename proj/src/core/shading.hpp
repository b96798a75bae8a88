#pragma once

#include <array>
#include <optional>

#include "asg.hpp"
#include "illum.hpp"
#include "math.hpp"
#include "scene.hpp"

namespace nsplat {

// Per-Gaussian viewing configuration. Degenerate when the camera is behind
// the surface (n_dot_wo <= 0); the specular term is skipped there.
struct ShadingContext {
    Vec3 w_o;  // surface-to-camera, unit
    Vec3 n;    // unit normal
    Vec3 w_r;  // reflection of w_o about n
    double n_dot_wo = 0;
    bool degenerate() const { return n_dot_wo <= 0; }
};

ShadingContext make_context(const Vec3& normal_unit, const Vec3& gaussian_pos, const Vec3& cam_pos);

// Schlick Fresnel with metalness-blended F0.
Vec3 fresnel_schlick(double h_dot_wo, const Vec3& albedo, double metallic);

// Height-correlated Smith GGX masking-shadowing, alpha = r^2. Requires both
// cosines positive.
double smith_geometry(double n_dot_wi, double n_dot_wo, double roughness);

// Lighting-model switches (ablation configurations).
struct ShadeSwitches {
    bool diffuse = true;
    bool specular = true;
    bool brdf_constraint = true;
    bool sh_specular = false;  // replace ASG incident lighting with per-Gaussian SH
};

struct ShadeResult {
    Vec3 diffuse_hdr;   // clamped L_d
    Vec3 specular_hdr;  // L_s
    Vec3 hdr;           // L_d + L_s
    Vec3 ldr;           // Reinhard, per channel
    Vec3 ldr_diffuse;   // L_d / (1 + hdr); ldr_diffuse + ldr_specular == ldr
    Vec3 ldr_specular;
};

// Specular radiance for one Gaussian. g carries raw parameters already in the
// world frame (resolved); material activations happen inside.
Vec3 specular_shade(const ResolvedGaussian& g, const ActivatedMaterial& mat, const ShadingContext& ctx,
                    const ShadeSwitches& sw);

ShadeResult shade_gaussian(const ResolvedGaussian& g, const ActivatedMaterial& mat,
                           const ShadingContext& ctx, const ShEnv& env, const ShadeSwitches& sw);

inline Vec3 reinhard(const Vec3& hdr) {
    return {hdr.x / (1 + hdr.x), hdr.y / (1 + hdr.y), hdr.z / (1 + hdr.z)};
}

// Gradients of shade_gaussian at the activated level, plus the geometric
// inputs. The caller chains activations, frame rotations and w_o(mu).
struct ShadeGrads {
    Vec3 d_albedo;
    double d_roughness = 0;  // at the sigmoid output, floor subgradient applied
    double d_metallic = 0;
    Vec3 d_normal;  // w.r.t. the unit normal
    Vec3 d_w_o;     // w.r.t. the unit view direction
    std::array<Vec4, kAsgLobes> d_lobe_q{};     // at the unit world-frame quaternion
    std::array<double, kAsgLobes> d_sharp_x{};  // at the activated (exp) level
    std::array<double, kAsgLobes> d_sharp_y{};
    std::array<Vec3, kAsgLobes> d_amp{};  // at the activated (softplus) level
    std::array<Vec3, kShCount> d_env{};
    std::array<double, kSpecShCoeffs> d_spec_sh{};
};

// Reverse-mode pass; recomputes forward intermediates from the same inputs.
ShadeGrads shade_gaussian_backward(const ResolvedGaussian& g, const ActivatedMaterial& mat,
                                   const ShadingContext& ctx, const ShEnv& env, const ShadeSwitches& sw,
                                   const Vec3& d_ldr);

inline constexpr double kRoughnessFloor = 0.04;

}  // namespace nsplat
