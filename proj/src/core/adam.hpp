#pragma once

#include <array>
#include <cstdint>

#include "params.hpp"

namespace nsplat {

struct AdamState {
    std::vector<double> m, v;
    int64_t step = 0;

    static AdamState make(size_t param_count) {
        AdamState s;
        s.m.assign(param_count, 0.0);
        s.v.assign(param_count, 0.0);
        return s;
    }
};

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One optimizer step over every learnable scalar; lr indexed by ParamGroup.
void adam_step(SceneGraph& scene, GradientBuffer& grads, AdamState& state,
               const std::array<double, kParamGroups>& lr, const AdamHyper& hyper = {});

}  // namespace nsplat
