#pragma once

#include <array>
#include <string>
#include <vector>

#include "asg.hpp"
#include "illum.hpp"
#include "math.hpp"
#include "se3.hpp"

namespace nsplat {

inline constexpr int kAsgLobes = 4;
inline constexpr int kSpecShCoeffs = kShCount * 3;

// Raw (unconstrained) per-lobe storage; activated on use.
struct AsgLobeRaw {
    Vec4 frame_q{1, 0, 0, 0};  // normalized on use
    double log_sharp_x = 0;    // exp on use
    double log_sharp_y = 0;
    Vec3 amp_raw{-6, -6, -6};  // softplus on use
};

struct GaussianPrimitive {
    Vec3 mu;
    Vec4 rot{1, 0, 0, 0};  // normalized on use
    Vec3 log_scale{0, 0, 0};
    double opacity_logit = 0;
    Vec3 albedo_logit{0, 0, 0};
    double roughness_logit = 0;
    double metallic_logit = 0;
    Vec3 normal_raw{0, 0, 1};  // normalized on use
    std::array<AsgLobeRaw, kAsgLobes> asg;
    // Per-Gaussian SH coefficients for the SH-specular variant; empty unless
    // that variant is enabled (kSpecShCoeffs values when present).
    std::vector<double> spec_sh;
};

struct RigidActor {
    std::string id;
    std::vector<GaussianPrimitive> gaussians;  // object frame
    std::vector<std::pair<double, Se3Pose>> trajectory;
    Vec3 bbox_min{0, 0, 0}, bbox_max{0, 0, 0};

    const Se3Pose* pose_at(double t) const;
};

struct CubeMap {
    int face_resolution = 0;
    std::vector<double> texels;  // 6 * R * R * 3, face-major, rows top-down, RGB

    static CubeMap constant(int resolution, const Vec3& value);
    double& at(int face, int row, int col, int ch) {
        return texels[((static_cast<size_t>(face) * face_resolution + row) * face_resolution + col) * 3 + ch];
    }
    double at(int face, int row, int col, int ch) const {
        return texels[((static_cast<size_t>(face) * face_resolution + row) * face_resolution + col) * 3 + ch];
    }
};

struct CameraModel {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    Se3Pose pose;  // camera-to-world
    int camera_id = 0;
    double timestep = 0;

    Vec3 position() const { return pose.translation; }
    Se3Pose world_to_cam() const { return se3_inverse(pose); }
    // Ray through the center of pixel (px, py), world frame, unit length.
    Vec3 pixel_ray(double px, double py) const;
};

struct SceneGraph {
    std::vector<GaussianPrimitive> background;  // world frame
    std::vector<RigidActor> actors;
    CubeMap sky;
    std::vector<double> timeline;
    std::vector<CameraModel> cameras;
    IllumNet illum;

    size_t gaussian_count() const;
    double normalized_timestep(double t) const;
};

// Activated (constrained) view of one primitive's material block.
struct ActivatedMaterial {
    double opacity = 0;
    Vec3 albedo;
    double roughness = 0;  // sigmoid value, before the 0.04 floor
    double metallic = 0;
};

ActivatedMaterial activate_material(const GaussianPrimitive& g);

// One entry of the per-timestep render list: raw parameters carried into the
// world frame, plus provenance for gradient routing.
struct ResolvedGaussian {
    const GaussianPrimitive* src = nullptr;
    int node = -1;   // -1 background, otherwise actor index in SceneGraph::actors
    int index = 0;   // index within the node
    Vec3 mu;
    Vec4 rot;
    Vec3 normal_raw;
    std::array<Vec4, kAsgLobes> lobe_frame;
    Vec4 actor_q{1, 0, 0, 0};  // rotation applied (identity for background)
};

// Flattens the graph at timestep t: background verbatim, actor Gaussians
// transformed by the actor pose. Output order: background first, then actors
// sorted by id.
std::vector<ResolvedGaussian> resolve_scene(const SceneGraph& scene, double t);

// Dominant-axis face selection + clamped bilinear fetch.
Vec3 sample_cubemap(const CubeMap& sky, const Vec3& dir);

// Texel footprint of one sample, for the backward pass.
struct CubemapTap {
    int face = 0;
    int texel[4][2];     // (row, col) of the 4 bilinear taps
    double weight[4]{};  // matching weights
};

CubemapTap cubemap_tap(const CubeMap& sky, const Vec3& dir);

}  // namespace nsplat
