#include "adam.hpp"

#include "error.hpp"

namespace nsplat {

GradientBuffer make_gradient_buffer(const SceneGraph& scene) {
    GradientBuffer g;
    auto mirror = [](const GaussianPrimitive& p) {
        GaussianGrad gg;
        gg.spec_sh.assign(p.spec_sh.size(), 0.0);
        return gg;
    };
    g.background.reserve(scene.background.size());
    for (const auto& p : scene.background) g.background.push_back(mirror(p));
    g.actors.resize(scene.actors.size());
    for (size_t a = 0; a < scene.actors.size(); ++a) {
        g.actors[a].reserve(scene.actors[a].gaussians.size());
        for (const auto& p : scene.actors[a].gaussians) g.actors[a].push_back(mirror(p));
    }
    g.sky.assign(scene.sky.texels.size(), 0.0);
    g.illum = make_illum_grad(scene.illum);
    return g;
}

void zero_gradients(GradientBuffer& g) {
    auto zero_gaussian = [](GaussianGrad& gg) {
        std::vector<double> spec(gg.spec_sh.size(), 0.0);
        gg = GaussianGrad{};
        gg.spec_sh = std::move(spec);
    };
    for (auto& gg : g.background) zero_gaussian(gg);
    for (auto& a : g.actors)
        for (auto& gg : a) zero_gaussian(gg);
    std::fill(g.sky.begin(), g.sky.end(), 0.0);
    for (auto& e : g.illum.embeddings) std::fill(e.begin(), e.end(), 0.0);
    for (auto& w : g.illum.weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : g.illum.biases) std::fill(b.begin(), b.end(), 0.0);
    for (int band = 0; band < 3; ++band) {
        std::fill(g.illum.head_w[band].begin(), g.illum.head_w[band].end(), 0.0);
        std::fill(g.illum.head_b[band].begin(), g.illum.head_b[band].end(), 0.0);
    }
}

size_t count_params(SceneGraph& scene) {
    GradientBuffer g = make_gradient_buffer(scene);
    size_t n = 0;
    for_each_param(scene, g, [&n](ParamGroup, double&, double&) { ++n; });
    return n;
}

void adam_step(SceneGraph& scene, GradientBuffer& grads, AdamState& state,
               const std::array<double, kParamGroups>& lr, const AdamHyper& hyper) {
    state.step += 1;
    double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
    size_t i = 0;
    for_each_param(scene, grads, [&](ParamGroup group, double& value, double& grad) {
        if (i >= state.m.size())
            fail(ErrorCode::shape_mismatch, "adam state smaller than parameter count");
        double g = grad;
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        value -= lr[static_cast<int>(group)] * mhat / (std::sqrt(vhat) + hyper.eps);
        ++i;
    });
    if (i != state.m.size())
        fail(ErrorCode::shape_mismatch, "adam state larger than parameter count");
}

}  // namespace nsplat
