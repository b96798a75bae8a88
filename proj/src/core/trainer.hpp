#pragma once

#include <string>

#include "adam.hpp"
#include "losses.hpp"
#include "raster.hpp"
#include "scene.hpp"
#include "shading.hpp"

namespace nsplat {

struct TrainLearningRates {
    double mu = 1.6e-4;
    double mu_decay = 0.01;  // multiplier reached at the final iteration
    double rot = 1e-3;
    double log_scale = 5e-3;
    double opacity = 5e-2;
    double albedo = 2.5e-3;
    double roughness = 1e-3;
    double metallic = 1e-3;
    double normal = 1e-3;
    double asg = 1e-5;
    double spec_sh = 1e-5;
    double sky = 5e-2;
    double illum = 5e-4;
};

struct TrainConfig {
    int iterations = 2000;
    uint64_t seed = 0;
    LossWeights weights;
    TrainLearningRates lr;
    ShadeSwitches shade;
    bool early_termination = true;
    int snapshot_every = 100;
};

// JSON config with every default above overridable; empty path keeps defaults.
TrainConfig load_train_config(const std::string& path);
TrainConfig parse_train_config(const std::string& json_text);

struct TrainFrame {
    CameraModel cam;
    std::vector<double> gt_rgb;        // H*W*3
    std::vector<double> prior_normal;  // H*W*3, unit rows where valid, zeros elsewhere
};

// frames.json: {"frames": [{"camera": i, "image": "...", "normal": "..."}]};
// paths resolve relative to the manifest location.
std::vector<TrainFrame> load_frames(const SceneGraph& scene, const std::string& manifest_path);

// Every eighth frame is reserved for novel-view evaluation.
inline bool is_holdout(size_t frame_index) { return frame_index % 8 == 0; }

struct PipelineConfig {
    ShadeSwitches shade;
    RasterOptions raster;
    LossWeights weights;
};

struct FrameRender {
    std::vector<ResolvedGaussian> resolved;
    std::vector<Splat2D> splats;  // survivors of projection; source_index points into resolved
    ShEnv env;
    IllumCache illum_cache;
    double t_norm = 0;
    std::vector<double> sky_hdr;  // per-pixel cubemap samples (empty when no sky)
    std::vector<double> sky_ldr;
    RenderOutput out;
};

FrameRender render_frame(const SceneGraph& scene, const CameraModel& cam, const ShadeSwitches& sw,
                         const RasterOptions& opt);

// Loss masks and the detached depth-normal confidence weights, frozen across
// evaluations for finite-difference checks.
struct FrameMasks {
    std::vector<uint8_t> normal_mask;  // pixels entering loss_normal
    std::vector<uint8_t> dn_valid;     // pixels usable by depth_to_normals
    std::vector<uint8_t> dn_mask;      // pixels entering loss_depth_normal
    std::vector<double> dn_weight;     // confidence weights at the expansion point
};

struct FrameLossResult {
    LossBreakdown parts;
    FrameMasks masks;
};

FrameLossResult frame_loss(const SceneGraph& scene, const TrainFrame& frame, const PipelineConfig& cfg,
                           const FrameMasks* frozen);

FrameLossResult frame_gradients(const SceneGraph& scene, const TrainFrame& frame,
                                const PipelineConfig& cfg, const FrameMasks* frozen,
                                GradientBuffer& grads);

void train(SceneGraph& scene, const std::vector<TrainFrame>& frames, const TrainConfig& config,
           const std::string& log_path);

struct EvalRow {
    int frame = 0;
    bool holdout = false;
    double psnr = 0;
    double ssim = 0;
};

std::vector<EvalRow> evaluate(const SceneGraph& scene, const std::vector<TrainFrame>& frames,
                              const ShadeSwitches& sw = {});

}  // namespace nsplat
