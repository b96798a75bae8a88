#pragma once

#include <array>
#include <vector>

#include "illum.hpp"
#include "scene.hpp"

namespace nsplat {

// Learnable parameter groups; each carries its own learning rate.
enum class ParamGroup : int {
    mu = 0,
    rot,
    log_scale,
    opacity,
    albedo,
    roughness,
    metallic,
    normal,
    asg_frame,
    asg_sharp,
    asg_amp,
    spec_sh,
    sky,
    illum_net,
    embedding,
    count
};

inline constexpr int kParamGroups = static_cast<int>(ParamGroup::count);

struct AsgLobeGrad {
    Vec4 frame_q{0, 0, 0, 0};
    double log_sharp_x = 0, log_sharp_y = 0;
    Vec3 amp_raw{0, 0, 0};
};

// Mirrors the learnable block of one GaussianPrimitive.
struct GaussianGrad {
    Vec3 mu;
    Vec4 rot{0, 0, 0, 0};
    Vec3 log_scale;
    double opacity_logit = 0;
    Vec3 albedo_logit;
    double roughness_logit = 0;
    double metallic_logit = 0;
    Vec3 normal_raw;
    std::array<AsgLobeGrad, kAsgLobes> asg{};
    std::vector<double> spec_sh;
};

struct GradientBuffer {
    std::vector<GaussianGrad> background;
    std::vector<std::vector<GaussianGrad>> actors;
    std::vector<double> sky;
    IllumNetGrad illum;
};

GradientBuffer make_gradient_buffer(const SceneGraph& scene);
void zero_gradients(GradientBuffer& g);

// Visits every learnable scalar of the scene paired with its gradient slot,
// in a fixed order shared by the optimizer and the finite-difference checks.
template <typename Fn>
void for_each_param(SceneGraph& scene, GradientBuffer& grads, Fn&& fn) {
    auto visit_gaussian = [&fn](GaussianPrimitive& g, GaussianGrad& gg) {
        fn(ParamGroup::mu, g.mu.x, gg.mu.x);
        fn(ParamGroup::mu, g.mu.y, gg.mu.y);
        fn(ParamGroup::mu, g.mu.z, gg.mu.z);
        fn(ParamGroup::rot, g.rot.w, gg.rot.w);
        fn(ParamGroup::rot, g.rot.x, gg.rot.x);
        fn(ParamGroup::rot, g.rot.y, gg.rot.y);
        fn(ParamGroup::rot, g.rot.z, gg.rot.z);
        fn(ParamGroup::log_scale, g.log_scale.x, gg.log_scale.x);
        fn(ParamGroup::log_scale, g.log_scale.y, gg.log_scale.y);
        fn(ParamGroup::log_scale, g.log_scale.z, gg.log_scale.z);
        fn(ParamGroup::opacity, g.opacity_logit, gg.opacity_logit);
        fn(ParamGroup::albedo, g.albedo_logit.x, gg.albedo_logit.x);
        fn(ParamGroup::albedo, g.albedo_logit.y, gg.albedo_logit.y);
        fn(ParamGroup::albedo, g.albedo_logit.z, gg.albedo_logit.z);
        fn(ParamGroup::roughness, g.roughness_logit, gg.roughness_logit);
        fn(ParamGroup::metallic, g.metallic_logit, gg.metallic_logit);
        fn(ParamGroup::normal, g.normal_raw.x, gg.normal_raw.x);
        fn(ParamGroup::normal, g.normal_raw.y, gg.normal_raw.y);
        fn(ParamGroup::normal, g.normal_raw.z, gg.normal_raw.z);
        for (int l = 0; l < kAsgLobes; ++l) {
            fn(ParamGroup::asg_frame, g.asg[l].frame_q.w, gg.asg[l].frame_q.w);
            fn(ParamGroup::asg_frame, g.asg[l].frame_q.x, gg.asg[l].frame_q.x);
            fn(ParamGroup::asg_frame, g.asg[l].frame_q.y, gg.asg[l].frame_q.y);
            fn(ParamGroup::asg_frame, g.asg[l].frame_q.z, gg.asg[l].frame_q.z);
            fn(ParamGroup::asg_sharp, g.asg[l].log_sharp_x, gg.asg[l].log_sharp_x);
            fn(ParamGroup::asg_sharp, g.asg[l].log_sharp_y, gg.asg[l].log_sharp_y);
            fn(ParamGroup::asg_amp, g.asg[l].amp_raw.x, gg.asg[l].amp_raw.x);
            fn(ParamGroup::asg_amp, g.asg[l].amp_raw.y, gg.asg[l].amp_raw.y);
            fn(ParamGroup::asg_amp, g.asg[l].amp_raw.z, gg.asg[l].amp_raw.z);
        }
        for (size_t i = 0; i < g.spec_sh.size(); ++i)
            fn(ParamGroup::spec_sh, g.spec_sh[i], gg.spec_sh[i]);
    };

    for (size_t i = 0; i < scene.background.size(); ++i)
        visit_gaussian(scene.background[i], grads.background[i]);
    for (size_t a = 0; a < scene.actors.size(); ++a)
        for (size_t i = 0; i < scene.actors[a].gaussians.size(); ++i)
            visit_gaussian(scene.actors[a].gaussians[i], grads.actors[a][i]);

    for (size_t i = 0; i < scene.sky.texels.size(); ++i)
        fn(ParamGroup::sky, scene.sky.texels[i], grads.sky[i]);

    IllumNet& net = scene.illum;
    for (int l = 0; l < net.depth; ++l) {
        for (size_t i = 0; i < net.weights[l].size(); ++i)
            fn(ParamGroup::illum_net, net.weights[l][i], grads.illum.weights[l][i]);
        for (size_t i = 0; i < net.biases[l].size(); ++i)
            fn(ParamGroup::illum_net, net.biases[l][i], grads.illum.biases[l][i]);
    }
    for (int band = 0; band < 3; ++band) {
        for (size_t i = 0; i < net.head_w[band].size(); ++i)
            fn(ParamGroup::illum_net, net.head_w[band][i], grads.illum.head_w[band][i]);
        for (size_t i = 0; i < net.head_b[band].size(); ++i)
            fn(ParamGroup::illum_net, net.head_b[band][i], grads.illum.head_b[band][i]);
    }
    for (size_t e = 0; e < net.embeddings.size(); ++e)
        for (size_t i = 0; i < net.embeddings[e].size(); ++i)
            fn(ParamGroup::embedding, net.embeddings[e][i], grads.illum.embeddings[e][i]);
}

size_t count_params(SceneGraph& scene);

}  // namespace nsplat
