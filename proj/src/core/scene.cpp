#include "scene.hpp"

#include <algorithm>
#include <numeric>

#include "error.hpp"

namespace nsplat {

const Se3Pose* RigidActor::pose_at(double t) const {
    for (const auto& [tt, pose] : trajectory)
        if (std::abs(tt - t) <= 1e-9) return &pose;
    return nullptr;
}

CubeMap CubeMap::constant(int resolution, const Vec3& value) {
    CubeMap c;
    c.face_resolution = resolution;
    c.texels.resize(static_cast<size_t>(6) * resolution * resolution * 3);
    for (size_t i = 0; i < c.texels.size(); i += 3) {
        c.texels[i] = value.x;
        c.texels[i + 1] = value.y;
        c.texels[i + 2] = value.z;
    }
    return c;
}

Vec3 CameraModel::pixel_ray(double px, double py) const {
    Vec3 d{(px - cx) / fx, (py - cy) / fy, 1.0};
    return normalized(quat_to_mat(pose.rotation) * d);
}

size_t SceneGraph::gaussian_count() const {
    size_t n = background.size();
    for (const auto& a : actors) n += a.gaussians.size();
    return n;
}

double SceneGraph::normalized_timestep(double t) const {
    if (timeline.size() < 2) return 0.0;
    double lo = timeline.front(), hi = timeline.back();
    if (hi <= lo) return 0.0;
    return (t - lo) / (hi - lo);
}

ActivatedMaterial activate_material(const GaussianPrimitive& g) {
    ActivatedMaterial m;
    m.opacity = sigmoid(g.opacity_logit);
    m.albedo = {sigmoid(g.albedo_logit.x), sigmoid(g.albedo_logit.y), sigmoid(g.albedo_logit.z)};
    m.roughness = sigmoid(g.roughness_logit);
    m.metallic = sigmoid(g.metallic_logit);
    return m;
}

std::vector<ResolvedGaussian> resolve_scene(const SceneGraph& scene, double t) {
    std::vector<ResolvedGaussian> out;
    out.reserve(scene.gaussian_count());

    for (size_t i = 0; i < scene.background.size(); ++i) {
        const auto& g = scene.background[i];
        ResolvedGaussian r;
        r.src = &g;
        r.node = -1;
        r.index = static_cast<int>(i);
        r.mu = g.mu;
        r.rot = g.rot;
        r.normal_raw = g.normal_raw;
        for (int l = 0; l < kAsgLobes; ++l) r.lobe_frame[l] = g.asg[l].frame_q;
        out.push_back(r);
    }

    std::vector<int> order(scene.actors.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return scene.actors[a].id < scene.actors[b].id; });

    for (int ai : order) {
        const RigidActor& actor = scene.actors[ai];
        const Se3Pose* pose = actor.pose_at(t);
        if (!pose)
            fail(ErrorCode::missing_pose, "actor '" + actor.id + "' has no pose at t=" + std::to_string(t));
        Mat3 rot = quat_to_mat(pose->rotation);
        for (size_t i = 0; i < actor.gaussians.size(); ++i) {
            const auto& g = actor.gaussians[i];
            ResolvedGaussian r;
            r.src = &g;
            r.node = ai;
            r.index = static_cast<int>(i);
            r.mu = rot * g.mu + pose->translation;
            r.rot = quat_mul(pose->rotation, g.rot);
            r.normal_raw = rot * g.normal_raw;
            for (int l = 0; l < kAsgLobes; ++l)
                r.lobe_frame[l] = quat_mul(pose->rotation, g.asg[l].frame_q);
            r.actor_q = pose->rotation;
            out.push_back(r);
        }
    }
    return out;
}

namespace {
// OpenGL cube map convention; faces ordered +X, -X, +Y, -Y, +Z, -Z.
void face_uv(const Vec3& d, int& face, double& u, double& v) {
    double ax = std::abs(d.x), ay = std::abs(d.y), az = std::abs(d.z);
    if (ax >= ay && ax >= az) {
        if (d.x > 0) { face = 0; u = -d.z / ax; v = -d.y / ax; }
        else         { face = 1; u =  d.z / ax; v = -d.y / ax; }
    } else if (ay >= az) {
        if (d.y > 0) { face = 2; u =  d.x / ay; v =  d.z / ay; }
        else         { face = 3; u =  d.x / ay; v = -d.z / ay; }
    } else {
        if (d.z > 0) { face = 4; u =  d.x / az; v = -d.y / az; }
        else         { face = 5; u = -d.x / az; v = -d.y / az; }
    }
}
}  // namespace

CubemapTap cubemap_tap(const CubeMap& sky, const Vec3& dir) {
    CubemapTap tap;
    double u, v;
    face_uv(dir, tap.face, u, v);
    int r = sky.face_resolution;
    double s = (u * 0.5 + 0.5) * r - 0.5;
    double t = (v * 0.5 + 0.5) * r - 0.5;
    int c0 = static_cast<int>(std::floor(s));
    int r0 = static_cast<int>(std::floor(t));
    double fs = s - c0, ft = t - r0;
    auto clampi = [r](int i) { return std::clamp(i, 0, r - 1); };
    int cols[2] = {clampi(c0), clampi(c0 + 1)};
    int rows[2] = {clampi(r0), clampi(r0 + 1)};
    double wc[2] = {1.0 - fs, fs};
    double wr[2] = {1.0 - ft, ft};
    int k = 0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j, ++k) {
            tap.texel[k][0] = rows[i];
            tap.texel[k][1] = cols[j];
            tap.weight[k] = wr[i] * wc[j];
        }
    return tap;
}

Vec3 sample_cubemap(const CubeMap& sky, const Vec3& dir) {
    CubemapTap tap = cubemap_tap(sky, dir);
    Vec3 out{0, 0, 0};
    for (int k = 0; k < 4; ++k) {
        out.x += tap.weight[k] * sky.at(tap.face, tap.texel[k][0], tap.texel[k][1], 0);
        out.y += tap.weight[k] * sky.at(tap.face, tap.texel[k][0], tap.texel[k][1], 1);
        out.z += tap.weight[k] * sky.at(tap.face, tap.texel[k][0], tap.texel[k][1], 2);
    }
    return out;
}

}  // namespace nsplat
