#include "trainer.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "error.hpp"
#include "image.hpp"
#include "metrics.hpp"

namespace nsplat {

using nlohmann::json;

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig c;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("config parse error: ") + e.what());
    }
    c.iterations = j.value("iterations", c.iterations);
    c.seed = j.value("seed", c.seed);
    c.snapshot_every = j.value("snapshot_every", c.snapshot_every);
    c.early_termination = j.value("early_termination", c.early_termination);
    if (j.contains("loss")) {
        const json& l = j["loss"];
        c.weights.w_rgb = l.value("w_rgb", c.weights.w_rgb);
        c.weights.w_dssim = l.value("w_dssim", c.weights.w_dssim);
        c.weights.w_dn = l.value("w_dn", c.weights.w_dn);
        c.weights.gamma = l.value("gamma", c.weights.gamma);
    }
    if (j.contains("lr")) {
        const json& l = j["lr"];
        c.lr.mu = l.value("mu", c.lr.mu);
        c.lr.mu_decay = l.value("mu_decay", c.lr.mu_decay);
        c.lr.rot = l.value("rot", c.lr.rot);
        c.lr.log_scale = l.value("log_scale", c.lr.log_scale);
        c.lr.opacity = l.value("opacity", c.lr.opacity);
        c.lr.albedo = l.value("albedo", c.lr.albedo);
        c.lr.roughness = l.value("roughness", c.lr.roughness);
        c.lr.metallic = l.value("metallic", c.lr.metallic);
        c.lr.normal = l.value("normal", c.lr.normal);
        c.lr.asg = l.value("asg", c.lr.asg);
        c.lr.spec_sh = l.value("spec_sh", c.lr.spec_sh);
        c.lr.sky = l.value("sky", c.lr.sky);
        c.lr.illum = l.value("illum", c.lr.illum);
    }
    if (j.contains("ablation")) {
        const json& a = j["ablation"];
        c.shade.diffuse = a.value("diffuse", c.shade.diffuse);
        c.shade.specular = a.value("specular", c.shade.specular);
        c.shade.brdf_constraint = a.value("brdf_constraint", c.shade.brdf_constraint);
        c.shade.sh_specular = a.value("sh_specular", c.shade.sh_specular);
    }
    return c;
}

TrainConfig load_train_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open config '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_train_config(text);
}

std::vector<TrainFrame> load_frames(const SceneGraph& scene, const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) fail(ErrorCode::io, "cannot open frames manifest '" + manifest_path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("frames manifest parse error: ") + e.what());
    }
    if (!j.contains("frames") || !j["frames"].is_array())
        fail(ErrorCode::parse, "frames manifest missing 'frames' array");

    std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
    std::vector<TrainFrame> frames;
    for (const json& f : j["frames"]) {
        if (!f.contains("camera") || !f.contains("image") || !f.contains("normal"))
            fail(ErrorCode::parse, "frame record needs 'camera', 'image' and 'normal'");
        int ci = f["camera"].get<int>();
        if (ci < 0 || ci >= static_cast<int>(scene.cameras.size()))
            fail(ErrorCode::invalid_arg, "frame camera index out of range: " + std::to_string(ci));
        TrainFrame tf;
        tf.cam = scene.cameras[ci];
        ImageBuffer img = read_png((base / f["image"].get<std::string>()).string());
        if (img.channels != 3 || img.width != tf.cam.width || img.height != tf.cam.height)
            fail(ErrorCode::shape_mismatch, "frame image does not match camera dimensions");
        tf.gt_rgb = to_double(img);
        ImageBuffer prior = read_pfm((base / f["normal"].get<std::string>()).string());
        if (prior.channels != 3 || prior.width != tf.cam.width || prior.height != tf.cam.height)
            fail(ErrorCode::shape_mismatch, "normal prior does not match camera dimensions");
        tf.prior_normal = to_double(prior);
        frames.push_back(std::move(tf));
    }
    return frames;
}

FrameRender render_frame(const SceneGraph& scene, const CameraModel& cam, const ShadeSwitches& sw,
                         const RasterOptions& opt) {
    FrameRender fr;
    fr.resolved = resolve_scene(scene, cam.timestep);
    fr.t_norm = scene.normalized_timestep(cam.timestep);
    fr.env = predict_sh(scene.illum, fr.t_norm, cam.camera_id, &fr.illum_cache);

    size_t px_count = static_cast<size_t>(cam.width) * cam.height;
    bool has_sky = scene.sky.face_resolution > 0;
    if (has_sky) {
        fr.sky_hdr.resize(px_count * 3);
        fr.sky_ldr.resize(px_count * 3);
        for (int py = 0; py < cam.height; ++py)
            for (int px = 0; px < cam.width; ++px) {
                Vec3 dir = cam.pixel_ray(px + 0.5, py + 0.5);
                Vec3 hdr = sample_cubemap(scene.sky, dir);
                Vec3 ldr = reinhard(hdr);
                size_t i = (static_cast<size_t>(py) * cam.width + px) * 3;
                fr.sky_hdr[i] = hdr.x;
                fr.sky_hdr[i + 1] = hdr.y;
                fr.sky_hdr[i + 2] = hdr.z;
                fr.sky_ldr[i] = ldr.x;
                fr.sky_ldr[i + 1] = ldr.y;
                fr.sky_ldr[i + 2] = ldr.z;
            }
    }

    Mat3 r_wc = quat_to_mat(cam.world_to_cam().rotation);
    Vec3 cam_pos = cam.position();
    fr.splats.reserve(fr.resolved.size());
    for (size_t i = 0; i < fr.resolved.size(); ++i) {
        const ResolvedGaussian& g = fr.resolved[i];
        auto splat = project_gaussian(g, cam, opt);
        if (!splat) continue;
        ActivatedMaterial mat = activate_material(*g.src);
        Vec3 n_unit = normalized(g.normal_raw);
        ShadingContext ctx = make_context(n_unit, g.mu, cam_pos);
        ShadeResult shade = shade_gaussian(g, mat, ctx, fr.env, sw);
        splat->color = shade.ldr;
        splat->ldr_diffuse = shade.ldr_diffuse;
        splat->ldr_specular = shade.ldr_specular;
        splat->albedo = mat.albedo;
        splat->normal_cam = r_wc * n_unit;
        splat->opacity = mat.opacity;
        splat->source_index = static_cast<int>(i);
        fr.splats.push_back(*splat);
    }

    fr.out = rasterize(fr.splats, has_sky ? &fr.sky_ldr : nullptr, cam, opt);
    return fr;
}

namespace {

FrameMasks compute_masks(const FrameRender& fr, const TrainFrame& frame, const RasterOptions& opt,
                         const CameraModel& cam) {
    // Loss masks always use the 0.05 coverage threshold; opt.normal_gate only
    // controls where the rasterizer zeroes its normal output and must sit at
    // or below this value.
    constexpr double kMaskAlpha = 0.05;
    FrameMasks m;
    size_t px = static_cast<size_t>(cam.width) * cam.height;
    m.normal_mask.assign(px, 0);
    m.dn_valid.assign(px, 0);
    m.dn_mask.assign(px, 0);
    for (size_t i = 0; i < px; ++i) {
        double nx = frame.prior_normal[i * 3], ny = frame.prior_normal[i * 3 + 1],
               nz = frame.prior_normal[i * 3 + 2];
        bool prior_ok = nx * nx + ny * ny + nz * nz > 0.25;
        bool covered = fr.out.alpha[i] > std::max(kMaskAlpha, opt.normal_gate);
        m.normal_mask[i] = prior_ok && covered;
        m.dn_valid[i] = covered;
    }
    std::vector<double> nd = depth_to_normals(fr.out.depth, m.dn_valid, cam);
    for (size_t i = 0; i < px; ++i) {
        bool nd_ok = nd[i * 3] != 0 || nd[i * 3 + 1] != 0 || nd[i * 3 + 2] != 0;
        m.dn_mask[i] = m.normal_mask[i] && nd_ok;
    }
    return m;
}

LossBreakdown assemble_losses(const FrameRender& fr, const TrainFrame& frame, const PipelineConfig& cfg,
                              FrameMasks& masks, ScalarLoss* rgb_out, ScalarLoss* dssim_out,
                              ScalarLoss* normal_out, ScalarLoss* dn_out, std::vector<double>* nd_out) {
    const CameraModel& cam = frame.cam;
    ScalarLoss l_rgb = loss_rgb(fr.out.rgb, frame.gt_rgb, cam.width, cam.height);
    ScalarLoss l_dssim = loss_dssim(fr.out.rgb, frame.gt_rgb, cam.width, cam.height);
    ScalarLoss l_normal =
        loss_normal(fr.out.normal, frame.prior_normal, masks.normal_mask, cam.width, cam.height);
    std::vector<double> nd = depth_to_normals(fr.out.depth, masks.dn_valid, cam);
    if (masks.dn_weight.empty())
        masks.dn_weight = dn_confidence_weights(nd, frame.prior_normal, masks.dn_mask, cfg.weights.gamma);
    ScalarLoss l_dn = loss_depth_normal(nd, frame.prior_normal, masks.dn_mask, masks.dn_weight,
                                        cam.width, cam.height);

    LossBreakdown parts;
    parts.rgb = l_rgb.value;
    parts.dssim = l_dssim.value;
    parts.normal = l_normal.value;
    parts.depth_normal = l_dn.value;
    parts.total = total_loss(parts, cfg.weights);

    if (rgb_out) *rgb_out = std::move(l_rgb);
    if (dssim_out) *dssim_out = std::move(l_dssim);
    if (normal_out) *normal_out = std::move(l_normal);
    if (dn_out) *dn_out = std::move(l_dn);
    if (nd_out) *nd_out = std::move(nd);
    return parts;
}

}  // namespace

FrameLossResult frame_loss(const SceneGraph& scene, const TrainFrame& frame, const PipelineConfig& cfg,
                           const FrameMasks* frozen) {
    FrameRender fr = render_frame(scene, frame.cam, cfg.shade, cfg.raster);
    FrameLossResult res;
    res.masks = frozen ? *frozen : compute_masks(fr, frame, cfg.raster, frame.cam);
    res.parts = assemble_losses(fr, frame, cfg, res.masks, nullptr, nullptr, nullptr, nullptr, nullptr);
    return res;
}

FrameLossResult frame_gradients(const SceneGraph& scene, const TrainFrame& frame,
                                const PipelineConfig& cfg, const FrameMasks* frozen,
                                GradientBuffer& grads) {
    const CameraModel& cam = frame.cam;
    FrameRender fr = render_frame(scene, cam, cfg.shade, cfg.raster);

    FrameLossResult res;
    res.masks = frozen ? *frozen : compute_masks(fr, frame, cfg.raster, cam);

    ScalarLoss l_rgb, l_dssim, l_normal, l_dn;
    std::vector<double> nd;
    res.parts = assemble_losses(fr, frame, cfg, res.masks, &l_rgb, &l_dssim, &l_normal, &l_dn, &nd);

    size_t px = static_cast<size_t>(cam.width) * cam.height;
    MapGrads mg;
    mg.d_rgb.assign(px * 3, 0.0);
    mg.d_normal.assign(px * 3, 0.0);
    mg.d_depth.assign(px, 0.0);
    for (size_t i = 0; i < px * 3; ++i) {
        mg.d_rgb[i] = cfg.weights.w_rgb * l_rgb.grad[i] + cfg.weights.w_dssim * l_dssim.grad[i];
        mg.d_normal[i] = cfg.weights.w_dn * l_normal.grad[i];
    }
    std::vector<double> d_nd(px * 3, 0.0);
    for (size_t i = 0; i < px * 3; ++i) d_nd[i] = cfg.weights.w_dn * l_dn.grad[i];
    mg.d_depth = depth_to_normals_backward(fr.out.depth, res.masks.dn_valid, cam, d_nd);

    RasterBackwardResult rb = rasterize_backward(fr.splats, fr.sky_ldr.empty() ? nullptr : &fr.sky_ldr,
                                                 cam, cfg.raster, mg);

    // Sky texels: through Reinhard, then the bilinear cubemap footprint.
    if (!fr.sky_ldr.empty()) {
        for (int py = 0; py < cam.height; ++py)
            for (int pxx = 0; pxx < cam.width; ++pxx) {
                size_t i = (static_cast<size_t>(py) * cam.width + pxx) * 3;
                Vec3 g{rb.d_sky_ldr[i], rb.d_sky_ldr[i + 1], rb.d_sky_ldr[i + 2]};
                if (g.x == 0 && g.y == 0 && g.z == 0) continue;
                Vec3 hdr{fr.sky_hdr[i], fr.sky_hdr[i + 1], fr.sky_hdr[i + 2]};
                Vec3 d_hdr{g.x / ((1 + hdr.x) * (1 + hdr.x)), g.y / ((1 + hdr.y) * (1 + hdr.y)),
                           g.z / ((1 + hdr.z) * (1 + hdr.z))};
                Vec3 dir = cam.pixel_ray(pxx + 0.5, py + 0.5);
                CubemapTap tap = cubemap_tap(scene.sky, dir);
                int r = scene.sky.face_resolution;
                for (int k = 0; k < 4; ++k) {
                    size_t base =
                        ((static_cast<size_t>(tap.face) * r + tap.texel[k][0]) * r + tap.texel[k][1]) * 3;
                    grads.sky[base] += tap.weight[k] * d_hdr.x;
                    grads.sky[base + 1] += tap.weight[k] * d_hdr.y;
                    grads.sky[base + 2] += tap.weight[k] * d_hdr.z;
                }
            }
    }

    // Per-splat chains back to the raw object-frame parameters.
    Mat3 r_wc = quat_to_mat(cam.world_to_cam().rotation);
    Vec3 cam_pos = cam.position();
    std::array<Vec3, kShCount> d_env_total{};

    for (size_t si = 0; si < fr.splats.size(); ++si) {
        const Splat2D& s = fr.splats[si];
        const SplatGrad& sg = rb.splats[si];
        const ResolvedGaussian& g = fr.resolved[s.source_index];
        GaussianGrad& slot = g.node < 0 ? grads.background[g.index] : grads.actors[g.node][g.index];

        ActivatedMaterial mat = activate_material(*g.src);
        Vec3 n_unit = normalized(g.normal_raw);
        ShadingContext ctx = make_context(n_unit, g.mu, cam_pos);

        ShadeGrads sh = shade_gaussian_backward(g, mat, ctx, fr.env, cfg.shade, sg.d_color);
        ProjectionGrads pg = project_gaussian_backward(g, cam, sg.d_mean2d, sg.d_cov, sg.d_depth);

        // Material activations.
        slot.opacity_logit += sg.d_opacity * mat.opacity * (1 - mat.opacity);
        slot.albedo_logit += Vec3{sh.d_albedo.x * mat.albedo.x * (1 - mat.albedo.x),
                                  sh.d_albedo.y * mat.albedo.y * (1 - mat.albedo.y),
                                  sh.d_albedo.z * mat.albedo.z * (1 - mat.albedo.z)};
        slot.roughness_logit += sh.d_roughness * mat.roughness * (1 - mat.roughness);
        slot.metallic_logit += sh.d_metallic * mat.metallic * (1 - mat.metallic);

        // Normal: shading + the composited normal channel, then unnormalize
        // and rotate back into the object frame.
        Vec3 d_n_unit = sh.d_normal + mul_transposed(r_wc, sg.d_normal_cam);
        Vec3 d_raw_w = normalize_backward(g.normal_raw, d_n_unit);
        Mat3 actor_rot = quat_to_mat(g.actor_q);
        slot.normal_raw += mul_transposed(actor_rot, d_raw_w);

        // Position: projection plus the view-direction dependence of shading.
        Vec3 d_mu_w = pg.d_mu_world - normalize_backward(cam_pos - g.mu, sh.d_w_o);
        slot.mu += mul_transposed(actor_rot, d_mu_w);

        // Covariance rotation: world raw quaternion back through the actor frame.
        slot.rot += quat_mul_backward_b(g.actor_q, pg.d_rot_raw);
        slot.log_scale += pg.d_log_scale;

        for (int l = 0; l < kAsgLobes; ++l) {
            const AsgLobeRaw& raw = g.src->asg[l];
            slot.asg[l].log_sharp_x += sh.d_sharp_x[l] * std::exp(raw.log_sharp_x);
            slot.asg[l].log_sharp_y += sh.d_sharp_y[l] * std::exp(raw.log_sharp_y);
            slot.asg[l].amp_raw += Vec3{sh.d_amp[l].x * sigmoid(raw.amp_raw.x),
                                        sh.d_amp[l].y * sigmoid(raw.amp_raw.y),
                                        sh.d_amp[l].z * sigmoid(raw.amp_raw.z)};
            Vec4 d_world_raw = normalize_backward(g.lobe_frame[l], sh.d_lobe_q[l]);
            slot.asg[l].frame_q += quat_mul_backward_b(g.actor_q, d_world_raw);
        }

        if (!slot.spec_sh.empty())
            for (int k = 0; k < kSpecShCoeffs; ++k) slot.spec_sh[k] += sh.d_spec_sh[k];

        for (int k = 0; k < kShCount; ++k) d_env_total[k] += sh.d_env[k];
    }

    illum_backward(scene.illum, fr.illum_cache, fr.t_norm, cam.camera_id, d_env_total, grads.illum);
    return res;
}

namespace {

std::array<double, kParamGroups> lr_schedule(const TrainLearningRates& lr, int iter, int total) {
    std::array<double, kParamGroups> out{};
    double decay = std::pow(lr.mu_decay, total > 1 ? static_cast<double>(iter) / (total - 1) : 0.0);
    out[static_cast<int>(ParamGroup::mu)] = lr.mu * decay;
    out[static_cast<int>(ParamGroup::rot)] = lr.rot;
    out[static_cast<int>(ParamGroup::log_scale)] = lr.log_scale;
    out[static_cast<int>(ParamGroup::opacity)] = lr.opacity;
    out[static_cast<int>(ParamGroup::albedo)] = lr.albedo;
    out[static_cast<int>(ParamGroup::roughness)] = lr.roughness;
    out[static_cast<int>(ParamGroup::metallic)] = lr.metallic;
    out[static_cast<int>(ParamGroup::normal)] = lr.normal;
    out[static_cast<int>(ParamGroup::asg_frame)] = lr.asg;
    out[static_cast<int>(ParamGroup::asg_sharp)] = lr.asg;
    out[static_cast<int>(ParamGroup::asg_amp)] = lr.asg;
    out[static_cast<int>(ParamGroup::spec_sh)] = lr.spec_sh;
    out[static_cast<int>(ParamGroup::sky)] = lr.sky;
    out[static_cast<int>(ParamGroup::illum_net)] = lr.illum;
    out[static_cast<int>(ParamGroup::embedding)] = lr.illum;
    return out;
}

void ensure_spec_sh(SceneGraph& scene) {
    auto init = [](GaussianPrimitive& g) {
        if (g.spec_sh.size() == kSpecShCoeffs) return;
        g.spec_sh.assign(kSpecShCoeffs, 0.0);
        g.spec_sh[0] = g.spec_sh[1] = g.spec_sh[2] = 0.05;  // faint uniform start
    };
    for (auto& g : scene.background) init(g);
    for (auto& a : scene.actors)
        for (auto& g : a.gaussians) init(g);
}

}  // namespace

void train(SceneGraph& scene, const std::vector<TrainFrame>& frames, const TrainConfig& config,
           const std::string& log_path) {
    if (frames.empty()) fail(ErrorCode::invalid_arg, "train: no frames");
    if (config.shade.sh_specular) ensure_spec_sh(scene);

    std::vector<int> train_idx, holdout_idx;
    for (size_t i = 0; i < frames.size(); ++i)
        (is_holdout(i) ? holdout_idx : train_idx).push_back(static_cast<int>(i));
    if (train_idx.empty()) fail(ErrorCode::invalid_arg, "train: every frame fell into the holdout split");

    PipelineConfig cfg;
    cfg.shade = config.shade;
    cfg.weights = config.weights;
    cfg.raster.early_termination = config.early_termination;

    GradientBuffer grads = make_gradient_buffer(scene);
    AdamState adam = AdamState::make(count_params(scene));
    Rng rng(config.seed);

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path, std::ios::trunc);
        if (!log) fail(ErrorCode::io, "cannot open log '" + log_path + "'");
    }

    for (int iter = 0; iter < config.iterations; ++iter) {
        int fi = train_idx[rng.uniform_int(static_cast<int>(train_idx.size()))];
        zero_gradients(grads);
        FrameLossResult res = frame_gradients(scene, frames[fi], cfg, nullptr, grads);

        if (!std::isfinite(res.parts.total) || !std::isfinite(res.parts.rgb) ||
            !std::isfinite(res.parts.dssim) || !std::isfinite(res.parts.normal) ||
            !std::isfinite(res.parts.depth_normal))
            fail(ErrorCode::numeric,
                 "non-finite loss at iteration " + std::to_string(iter) + " (rgb=" +
                     std::to_string(res.parts.rgb) + ", dssim=" + std::to_string(res.parts.dssim) +
                     ", n=" + std::to_string(res.parts.normal) +
                     ", dn=" + std::to_string(res.parts.depth_normal) + ")");

        adam_step(scene, grads, adam, lr_schedule(config.lr, iter, config.iterations));
        // Projection step for the sky: texels are non-negative HDR values,
        // and Reinhard is only stable on that domain.
        for (auto& v : scene.sky.texels)
            if (v < 0.0) v = 0.0;

        if (log) {
            json line;
            line["iter"] = iter;
            line["frame"] = fi;
            line["rgb"] = res.parts.rgb;
            line["dssim"] = res.parts.dssim;
            line["normal"] = res.parts.normal;
            line["depth_normal"] = res.parts.depth_normal;
            line["total"] = res.parts.total;
            bool snapshot = config.snapshot_every > 0 &&
                            (iter % config.snapshot_every == 0 || iter + 1 == config.iterations);
            if (snapshot && !holdout_idx.empty()) {
                const TrainFrame& hf = frames[holdout_idx[0]];
                FrameRender fr = render_frame(scene, hf.cam, cfg.shade, cfg.raster);
                line["psnr_holdout"] = psnr(fr.out.rgb, hf.gt_rgb);
            }
            log << line.dump() << "\n";
        }
    }
}

std::vector<EvalRow> evaluate(const SceneGraph& scene, const std::vector<TrainFrame>& frames,
                              const ShadeSwitches& sw) {
    std::vector<EvalRow> rows;
    RasterOptions opt;
    for (size_t i = 0; i < frames.size(); ++i) {
        FrameRender fr = render_frame(scene, frames[i].cam, sw, opt);
        EvalRow row;
        row.frame = static_cast<int>(i);
        row.holdout = is_holdout(i);
        row.psnr = psnr(fr.out.rgb, frames[i].gt_rgb);
        row.ssim = ssim(fr.out.rgb, frames[i].gt_rgb, frames[i].cam.width, frames[i].cam.height, 3);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace nsplat
