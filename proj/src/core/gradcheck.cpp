#include "gradcheck.hpp"

#include <algorithm>
#include <map>

namespace nsplat {

const char* param_group_name(ParamGroup g) {
    switch (g) {
        case ParamGroup::mu: return "mu";
        case ParamGroup::rot: return "rot";
        case ParamGroup::log_scale: return "log_scale";
        case ParamGroup::opacity: return "opacity";
        case ParamGroup::albedo: return "albedo";
        case ParamGroup::roughness: return "roughness";
        case ParamGroup::metallic: return "metallic";
        case ParamGroup::normal: return "normal";
        case ParamGroup::asg_frame: return "asg_frame";
        case ParamGroup::asg_sharp: return "asg_sharp";
        case ParamGroup::asg_amp: return "asg_amp";
        case ParamGroup::spec_sh: return "spec_sh";
        case ParamGroup::sky: return "sky";
        case ParamGroup::illum_net: return "illum_net";
        case ParamGroup::embedding: return "embedding";
        default: return "?";
    }
}

namespace {

GaussianPrimitive random_gaussian(Rng& rng) {
    GaussianPrimitive g;
    g.mu = {rng.uniform(-1.8, 1.8), rng.uniform(-1.8, 1.8), rng.uniform(4.0, 7.0)};
    Vec3 axis = rng.unit_vec();
    double ang = rng.uniform(0.0, kPi);
    g.rot = {std::cos(ang / 2), axis.x * std::sin(ang / 2), axis.y * std::sin(ang / 2),
             axis.z * std::sin(ang / 2)};
    g.log_scale = {std::log(rng.uniform(0.3, 0.8)), std::log(rng.uniform(0.3, 0.8)),
                   std::log(rng.uniform(0.3, 0.8))};
    g.opacity_logit = logit(rng.uniform(0.3, 0.8));
    g.albedo_logit = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    g.roughness_logit = rng.uniform(-0.8, 0.8);
    g.metallic_logit = rng.uniform(-1.5, 0.5);

    Vec3 to_cam = normalized(-g.mu);
    Vec3 n = to_cam + Vec3{rng.normal(), rng.normal(), rng.normal()} * 0.25;
    if (dot(normalized(n), to_cam) < 0.4) n = to_cam;  // keep the camera well above the surface
    g.normal_raw = n;

    for (auto& l : g.asg) {
        Vec3 d = normalized(to_cam + Vec3{rng.normal(), rng.normal(), rng.normal()} * 0.4);
        l.frame_q = quat_from_to(Vec3{0, 0, 1}, d);
        // A touch of twist so frame gradients are exercised in all components.
        Vec4 twist{std::cos(rng.uniform(0.0, 1.5) / 2), 0, 0, std::sin(rng.uniform(0.0, 1.5) / 2)};
        l.frame_q = quat_mul(l.frame_q, twist);
        l.log_sharp_x = rng.uniform(std::log(5.0), std::log(40.0));
        l.log_sharp_y = rng.uniform(std::log(5.0), std::log(40.0));
        l.amp_raw = {softplus_inv(rng.uniform(0.2, 1.0)), softplus_inv(rng.uniform(0.2, 1.0)),
                     softplus_inv(rng.uniform(0.2, 1.0))};
    }
    return g;
}

}  // namespace

GradcheckProblem gradcheck_problem(const GradcheckSetup& setup) {
    GradcheckProblem p;
    Rng rng(setup.seed);

    SceneGraph& scene = p.scene;
    scene.timeline = {0.0, 0.5, 1.0};

    CameraModel cam;
    cam.fx = cam.fy = 35.0;
    cam.cx = cam.cy = setup.image / 2.0;
    cam.width = cam.height = setup.image;
    cam.camera_id = 0;
    cam.timestep = 0.5;
    scene.cameras.push_back(cam);

    // Sky with texel-scale structure so the bilinear taps carry gradients.
    scene.sky.face_resolution = 8;
    scene.sky.texels.resize(6 * 8 * 8 * 3);
    for (auto& t : scene.sky.texels) t = rng.uniform(0.02, 0.2);

    int n_actor = std::min(3, setup.gaussians / 3);
    int n_bg = setup.gaussians - n_actor;
    for (int i = 0; i < n_bg; ++i) scene.background.push_back(random_gaussian(rng));

    if (n_actor > 0) {
        RigidActor actor;
        actor.id = "rig";
        double yaw = 0.4;
        Se3Pose pose;
        pose.rotation = {std::cos(yaw / 2), 0, 0, std::sin(yaw / 2)};
        pose.translation = {0.3, -0.2, 0.1};
        for (double t : scene.timeline) actor.trajectory.emplace_back(t, pose);
        Se3Pose inv = se3_inverse(pose);
        for (int i = 0; i < n_actor; ++i) {
            GaussianPrimitive g = random_gaussian(rng);
            // Park the object-frame Gaussian where the pose puts it back in view.
            g.mu = se3_apply(inv, g.mu);
            g.normal_raw = quat_to_mat(inv.rotation) * g.normal_raw;
            g.rot = quat_mul(inv.rotation, g.rot);
            for (auto& l : g.asg) l.frame_q = quat_mul(inv.rotation, l.frame_q);
            actor.gaussians.push_back(g);
        }
        actor.bbox_min = {-10, -10, -10};
        actor.bbox_max = {10, 10, 10};
        scene.actors.push_back(std::move(actor));
    }

    // Lighting stays comfortably positive so no draw sits on the diffuse
    // clamp boundary during the finite-difference probes.
    scene.illum.camera_ids = {0};
    illum_init(scene.illum, setup.seed * 5 + 1);
    for (int band = 0; band < 3; ++band)
        for (auto& w : scene.illum.head_w[band]) w = rng.normal() * 0.01;
    scene.illum.head_b[0][0] = 0.8;
    scene.illum.head_b[0][1] = 0.75;
    scene.illum.head_b[0][2] = 0.85;

    if (setup.sh_specular) {
        auto fill = [&](GaussianPrimitive& g) {
            g.spec_sh.assign(kSpecShCoeffs, 0.0);
            for (auto& v : g.spec_sh) v = rng.uniform(-0.1, 0.3);
            g.spec_sh[0] = g.spec_sh[1] = g.spec_sh[2] = rng.uniform(0.3, 0.6);
        };
        for (auto& g : scene.background) fill(g);
        for (auto& a : scene.actors)
            for (auto& g : a.gaussians) fill(g);
    }

    p.cfg.shade.sh_specular = setup.sh_specular;
    p.cfg.raster.early_termination = false;
    p.cfg.raster.sigma_radius = 5.0;
    p.cfg.raster.normal_gate = 1e-3;

    // Target: a perturbed copy of the scene rendered through the same
    // pipeline, so every loss term is active and smooth.
    SceneGraph target = scene;
    Rng prng(setup.seed ^ 0xabcdef12u);
    auto jiggle = [&](GaussianPrimitive& g) {
        g.mu += Vec3{prng.normal(), prng.normal(), prng.normal()} * 0.03;
        g.albedo_logit += Vec3{prng.normal(), prng.normal(), prng.normal()} * 0.3;
        g.normal_raw += Vec3{prng.normal(), prng.normal(), prng.normal()} * 0.25;
        g.opacity_logit += prng.normal() * 0.2;
    };
    for (auto& g : target.background) jiggle(g);
    for (auto& a : target.actors)
        for (auto& g : a.gaussians) jiggle(g);
    target.illum.head_b[0][0] += 0.05;
    // Shift the sky as well: the pixel L1 term must not sit on its kink
    // anywhere a finite-difference probe can reach.
    for (auto& t : target.sky.texels) t = std::max(0.0, t + 0.03 + 0.01 * prng.normal());

    RasterOptions target_opt;
    target_opt.early_termination = false;
    FrameRender fr = render_frame(target, cam, p.cfg.shade, target_opt);
    p.frame.cam = cam;
    p.frame.gt_rgb = fr.out.rgb;
    p.frame.prior_normal = fr.out.normal;
    return p;
}

std::vector<GradcheckRow> run_gradcheck(const GradcheckSetup& setup) {
    GradcheckProblem p = gradcheck_problem(setup);

    FrameMasks masks = frame_loss(p.scene, p.frame, p.cfg, nullptr).masks;

    GradientBuffer grads = make_gradient_buffer(p.scene);
    zero_gradients(grads);
    frame_gradients(p.scene, p.frame, p.cfg, &masks, grads);

    struct Entry {
        double* value;
        double analytic;
    };
    std::map<ParamGroup, std::vector<Entry>> buckets;
    for_each_param(p.scene, grads, [&](ParamGroup g, double& v, double& gr) {
        buckets[g].push_back({&v, gr});
    });

    Rng rng(setup.seed * 131 + 7);
    std::vector<GradcheckRow> rows;
    for (auto& [group, entries] : buckets) {
        GradcheckRow row;
        row.group = group;
        row.name = param_group_name(group);

        size_t n = entries.size();
        std::vector<size_t> picks;
        if (n <= static_cast<size_t>(setup.samples_per_group)) {
            for (size_t i = 0; i < n; ++i) picks.push_back(i);
        } else {
            while (picks.size() < static_cast<size_t>(setup.samples_per_group)) {
                size_t k = static_cast<size_t>(rng.uniform_int(static_cast<int>(n)));
                if (std::find(picks.begin(), picks.end(), k) == picks.end()) picks.push_back(k);
            }
            std::sort(picks.begin(), picks.end());
        }

        for (size_t k : picks) {
            double* pv = entries[k].value;
            double v0 = *pv;
            *pv = v0 + setup.step;
            double fp = frame_loss(p.scene, p.frame, p.cfg, &masks).parts.total;
            *pv = v0 - setup.step;
            double fm = frame_loss(p.scene, p.frame, p.cfg, &masks).parts.total;
            *pv = v0;
            double fd = (fp - fm) / (2.0 * setup.step);
            double a = entries[k].analytic;
            double denom = std::max({std::abs(a), std::abs(fd), 1e-6});
            double rel = std::abs(a - fd) / denom;
            row.max_rel_err = std::max(row.max_rel_err, rel);
            ++row.checked;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace nsplat
