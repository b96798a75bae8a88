#pragma once

#include <string>

#include "scene.hpp"

namespace nsplat {

struct SynthConfig {
    uint64_t seed = 7;
    std::string preset = "desk";  // "desk" or "headlight"
    int gaussians = 200;          // total budget including actors
    int actors = 1;
    int actor_gaussians = 40;
    int cameras = 8;
    int timesteps = 12;
    int width = 128, height = 96;
    int sky_resolution = 16;
    double illum_variation = 0.25;     // temporal/camera variation of the reference lighting
    double init_mu_noise = 0.01;       // meters
    double init_normal_noise = 0.05;
    double init_amp_scale = 1.0;       // specular amplitude retained by the init scene
    double init_material_noise = 0.5;  // logit noise on roughness/metallic
};

SynthConfig parse_synth_config(const std::string& json_text);
SynthConfig load_synth_config(const std::string& path);

struct SynthResult {
    SceneGraph gt;
    SceneGraph init;
};

// Deterministic scene pair (reference + training initialization).
SynthResult synth_scene(const SynthConfig& cfg);

// Full dataset emission: scene_gt.json, scene_init.json, frames/*.png,
// frames/*_normal.pfm and frames.json under out_dir.
void synth_run(const SynthConfig& cfg, const std::string& out_dir);

}  // namespace nsplat
