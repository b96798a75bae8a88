#include "synth.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "error.hpp"
#include "image.hpp"
#include "scene_io.hpp"
#include "trainer.hpp"

namespace nsplat {

using nlohmann::json;

SynthConfig parse_synth_config(const std::string& text) {
    SynthConfig c;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("synth config parse error: ") + e.what());
    }
    c.seed = j.value("seed", c.seed);
    c.preset = j.value("preset", c.preset);
    c.gaussians = j.value("gaussians", c.gaussians);
    c.actors = j.value("actors", c.actors);
    c.actor_gaussians = j.value("actor_gaussians", c.actor_gaussians);
    c.cameras = j.value("cameras", c.cameras);
    c.timesteps = j.value("timesteps", c.timesteps);
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.sky_resolution = j.value("sky_resolution", c.sky_resolution);
    c.illum_variation = j.value("illum_variation", c.illum_variation);
    c.init_mu_noise = j.value("init_mu_noise", c.init_mu_noise);
    c.init_normal_noise = j.value("init_normal_noise", c.init_normal_noise);
    c.init_amp_scale = j.value("init_amp_scale", c.init_amp_scale);
    c.init_material_noise = j.value("init_material_noise", c.init_material_noise);
    if (c.preset != "desk" && c.preset != "headlight")
        fail(ErrorCode::invalid_arg, "unknown synth preset '" + c.preset + "'");
    return c;
}

SynthConfig load_synth_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open synth config '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_synth_config(text);
}

namespace {

// Camera frame: x right, y down, z forward (world up is +z).
Se3Pose look_at(const Vec3& eye, const Vec3& target) {
    Vec3 fwd = normalized(target - eye);
    Vec3 right = normalized(cross(fwd, Vec3{0, 0, 1}));
    Vec3 down = cross(fwd, right);
    Mat3 r;  // columns are the camera axes in world coordinates
    for (int i = 0; i < 3; ++i) {
        r.m[i][0] = right[i];
        r.m[i][1] = down[i];
        r.m[i][2] = fwd[i];
    }
    Se3Pose pose;
    pose.rotation = mat_to_quat(r);
    pose.translation = eye;
    return pose;
}

Vec3 texel_dir(int face, int row, int col, int res) {
    double u = (col + 0.5) / res * 2.0 - 1.0;
    double v = (row + 0.5) / res * 2.0 - 1.0;
    switch (face) {
        case 0: return normalized(Vec3{1, -v, -u});
        case 1: return normalized(Vec3{-1, -v, u});
        case 2: return normalized(Vec3{u, 1, v});
        case 3: return normalized(Vec3{u, -1, -v});
        case 4: return normalized(Vec3{u, -v, 1});
        default: return normalized(Vec3{-u, -v, -1});
    }
}

CubeMap night_sky(int res) {
    CubeMap sky;
    sky.face_resolution = res;
    sky.texels.resize(static_cast<size_t>(6) * res * res * 3);
    Vec3 zenith{0.015, 0.02, 0.045};
    Vec3 horizon{0.10, 0.075, 0.055};
    for (int f = 0; f < 6; ++f)
        for (int r = 0; r < res; ++r)
            for (int c = 0; c < res; ++c) {
                Vec3 d = texel_dir(f, r, c, res);
                double k = std::clamp(d.z, 0.0, 1.0);
                Vec3 v = horizon * (1.0 - k) + zenith * k;
                sky.at(f, r, c, 0) = v.x;
                sky.at(f, r, c, 1) = v.y;
                sky.at(f, r, c, 2) = v.z;
            }
    return sky;
}

void set_material(GaussianPrimitive& g, const Vec3& albedo, double rough, double metal, double opacity) {
    g.albedo_logit = {logit(albedo.x), logit(albedo.y), logit(albedo.z)};
    g.roughness_logit = logit(rough);
    g.metallic_logit = logit(metal);
    g.opacity_logit = logit(opacity);
}

void set_lobe(AsgLobeRaw& lobe, const Vec3& dir, double sharp, double amp) {
    lobe.frame_q = quat_from_to(Vec3{0, 0, 1}, normalized(dir));
    lobe.log_sharp_x = std::log(sharp);
    lobe.log_sharp_y = std::log(sharp);
    double raw = softplus_inv(std::max(amp, 1e-4));
    lobe.amp_raw = {raw, raw, raw};
}

void dim_lobes(GaussianPrimitive& g, Rng& rng) {
    for (auto& l : g.asg) {
        Vec3 d = rng.unit_vec();
        d.z = std::abs(d.z) + 0.3;
        set_lobe(l, normalized(d), rng.uniform(5.0, 40.0), rng.uniform(0.02, 0.1));
    }
}

}  // namespace

SynthResult synth_scene(const SynthConfig& cfg) {
    Rng rng(cfg.seed);
    SceneGraph gt;

    gt.sky = night_sky(cfg.sky_resolution);

    for (int t = 0; t < cfg.timesteps; ++t)
        gt.timeline.push_back(cfg.timesteps > 1 ? static_cast<double>(t) / (cfg.timesteps - 1) : 0.0);

    // Camera ring, frames ordered camera-major so the every-8th holdout
    // never empties a physical camera.
    double focal = 0.9 * cfg.width;
    for (int c = 0; c < cfg.cameras; ++c) {
        double az = 2.0 * kPi * c / cfg.cameras;
        Vec3 eye{9.0 * std::cos(az), 9.0 * std::sin(az), 3.5};
        Se3Pose pose = look_at(eye, Vec3{0, 0, 0.4});
        for (double t : gt.timeline) {
            CameraModel cam;
            cam.fx = cam.fy = focal;
            cam.cx = cfg.width / 2.0;
            cam.cy = cfg.height / 2.0;
            cam.width = cfg.width;
            cam.height = cfg.height;
            cam.pose = pose;
            cam.camera_id = c;
            cam.timestep = t;
            gt.cameras.push_back(cam);
        }
    }

    int actor_total = cfg.actors * cfg.actor_gaussians;
    int n_background = std::max(0, cfg.gaussians - actor_total);
    int n_plane = n_background * 11 / 16;
    int n_clutter = n_background - n_plane;

    bool headlight = cfg.preset == "headlight";
    double cam_elev = std::atan2(3.5, 9.0);

    // Ground plane: flat disks with upward normals.
    int grid = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_plane)))));
    for (int i = 0; i < n_plane; ++i) {
        GaussianPrimitive g;
        int gx = i % grid, gy = i / grid;
        double span = 11.0;
        g.mu = {(gx + 0.5) / grid * span - span / 2 + rng.uniform(-0.2, 0.2),
                (gy + 0.5) / grid * span - span / 2 + rng.uniform(-0.2, 0.2),
                rng.uniform(-0.02, 0.02)};
        g.rot = {1, 0, 0, 0};
        double rad = span / grid * 0.75;
        g.log_scale = {std::log(rad), std::log(rad), std::log(0.03)};
        g.normal_raw = {0, 0, 1};
        double shade = rng.uniform(0.2, 0.42);
        set_material(g, {shade * rng.uniform(0.9, 1.1), shade, shade * rng.uniform(0.85, 1.0)},
                     rng.uniform(0.45, 0.75), 0.05, rng.uniform(0.88, 0.96));
        dim_lobes(g, rng);

        bool in_glint_strip = headlight && std::abs(g.mu.y + 1.5) < 1.6 && std::abs(g.mu.x) < 5.5;
        if (in_glint_strip) {
            set_material(g, {0.25, 0.24, 0.22}, 0.25, 0.7, 0.94);
            for (int l = 0; l < kAsgLobes; ++l) {
                double az = 2.0 * kPi * l / kAsgLobes + rng.uniform(-0.25, 0.25);
                Vec3 d{std::cos(cam_elev) * std::cos(az), std::cos(cam_elev) * std::sin(az),
                       std::sin(cam_elev)};
                set_lobe(g.asg[l], d, rng.uniform(8.0, 22.0), rng.uniform(3.5, 7.0));
            }
        }
        gt.background.push_back(g);
    }

    // Clutter: building- and prop-like blobs around the ring.
    for (int i = 0; i < n_clutter; ++i) {
        GaussianPrimitive g;
        double az = rng.uniform(0.0, 2.0 * kPi);
        double rad = rng.uniform(3.0, 6.0);
        g.mu = {rad * std::cos(az), rad * std::sin(az), rng.uniform(0.2, 2.2)};
        Vec3 axis = rng.unit_vec();
        double ang = rng.uniform(0.0, kPi);
        g.rot = {std::cos(ang / 2), axis.x * std::sin(ang / 2), axis.y * std::sin(ang / 2),
                 axis.z * std::sin(ang / 2)};
        g.log_scale = {std::log(rng.uniform(0.25, 0.7)), std::log(rng.uniform(0.25, 0.7)),
                       std::log(rng.uniform(0.25, 0.9))};
        g.normal_raw = normalized(Vec3{-g.mu.x + rng.normal() * 0.5, -g.mu.y + rng.normal() * 0.5,
                                       rng.uniform(0.5, 2.0)});
        set_material(g,
                     {rng.uniform(0.15, 0.7), rng.uniform(0.15, 0.7), rng.uniform(0.15, 0.7)},
                     rng.uniform(0.3, 0.8), rng.uniform(0.0, 0.35), rng.uniform(0.85, 0.97));
        dim_lobes(g, rng);
        gt.background.push_back(g);
    }

    // Rigid actors crossing the scene.
    for (int a = 0; a < cfg.actors; ++a) {
        RigidActor actor;
        actor.id = "actor" + std::to_string(a);
        double lane = -1.5 + 1.2 * a;
        for (double t : gt.timeline) {
            Se3Pose pose;
            double x = -4.0 + 8.0 * t;
            double yaw = 0.12 * std::sin(t * kPi);
            pose.rotation = {std::cos(yaw / 2), 0, 0, std::sin(yaw / 2)};
            pose.translation = {x, lane, 0.0};
            actor.trajectory.emplace_back(t, pose);
        }

        int n = cfg.actor_gaussians;
        int n_head = headlight ? std::min(8, n / 4) : 0;
        for (int i = 0; i < n - n_head; ++i) {
            GaussianPrimitive g;
            g.mu = {rng.uniform(-1.0, 1.0), rng.uniform(-0.45, 0.45), rng.uniform(0.25, 0.85)};
            g.rot = {1, 0, 0, 0};
            g.log_scale = {std::log(rng.uniform(0.15, 0.3)), std::log(rng.uniform(0.12, 0.22)),
                           std::log(rng.uniform(0.1, 0.2))};
            Vec3 out = normalized(Vec3{g.mu.x, g.mu.y * 2.0, std::max(0.3, g.mu.z)});
            g.normal_raw = out;
            set_material(g, {0.45, 0.1, 0.08}, 0.3, 0.5, rng.uniform(0.88, 0.97));
            for (auto& l : g.asg) {
                Vec3 d = normalized(out + Vec3{0, 0, rng.uniform(0.3, 1.0)});
                set_lobe(l, d, rng.uniform(8.0, 30.0), rng.uniform(0.3, 1.2));
            }
            actor.gaussians.push_back(g);
        }
        for (int i = 0; i < n_head; ++i) {
            GaussianPrimitive g;
            double side = i % 2 == 0 ? 0.3 : -0.3;
            g.mu = {1.0 + 0.02 * (i / 2), side, 0.45 + 0.05 * (i / 2)};
            g.rot = {1, 0, 0, 0};
            g.log_scale = {std::log(0.08), std::log(0.08), std::log(0.08)};
            g.normal_raw = {1, 0, 0.1};
            set_material(g, {0.9, 0.85, 0.7}, 0.2, 0.1, 0.97);
            for (int l = 0; l < kAsgLobes; ++l) {
                Vec3 d = normalized(Vec3{1.0, side * 0.4 + 0.25 * (l - 1.5), 0.15 + 0.1 * l});
                set_lobe(g.asg[l], d, 5.0 + 2.0 * l, 10.0);
            }
            actor.gaussians.push_back(g);
        }

        Vec3 lo{1e9, 1e9, 1e9}, hi{-1e9, -1e9, -1e9};
        for (const auto& g : actor.gaussians) {
            lo = {std::min(lo.x, g.mu.x), std::min(lo.y, g.mu.y), std::min(lo.z, g.mu.z)};
            hi = {std::max(hi.x, g.mu.x), std::max(hi.y, g.mu.y), std::max(hi.z, g.mu.z)};
        }
        actor.bbox_min = lo - Vec3{0.5, 0.5, 0.5};
        actor.bbox_max = hi + Vec3{0.5, 0.5, 0.5};
        gt.actors.push_back(std::move(actor));
    }

    // Reference lighting: a seeded network with mild (t, camera) variation.
    IllumNet& net = gt.illum;
    net.camera_ids.clear();
    for (int c = 0; c < cfg.cameras; ++c) net.camera_ids.push_back(c);
    illum_init(net, cfg.seed * 77 + 3);
    double hv[3] = {0.03, 0.02, 0.012};
    for (int band = 0; band < 3; ++band)
        for (auto& w : net.head_w[band]) w = rng.normal() * hv[band] * cfg.illum_variation;
    net.head_b[0][0] = 0.55;
    net.head_b[0][1] = 0.6;
    net.head_b[0][2] = 0.78;

    // Training initialization: reference geometry under noise, neutral
    // materials, fresh lighting.
    SynthResult res;
    res.gt = std::move(gt);
    res.init = res.gt;
    SceneGraph& init = res.init;
    Rng nrng(cfg.seed * 31 + 11);
    // Albedo and lighting restart from neutral; roughness/metallic keep a
    // noisy memory of the reference; lobe shapes stay (their learning rate is
    // tiny, so they act as a slowly refined specular prior).
    auto perturb = [&](GaussianPrimitive& g) {
        g.mu += Vec3{nrng.normal(), nrng.normal(), nrng.normal()} * cfg.init_mu_noise;
        g.log_scale += Vec3{nrng.normal(), nrng.normal(), nrng.normal()} * 0.02;
        g.opacity_logit = logit(0.8);
        g.albedo_logit = {0, 0, 0};
        g.roughness_logit += nrng.normal() * cfg.init_material_noise;
        g.metallic_logit += nrng.normal() * cfg.init_material_noise;
        g.normal_raw = normalized(g.normal_raw) +
                       Vec3{nrng.normal(), nrng.normal(), nrng.normal()} * cfg.init_normal_noise;
        for (auto& l : g.asg) {
            Vec3 amp{softplus(l.amp_raw.x), softplus(l.amp_raw.y), softplus(l.amp_raw.z)};
            l.amp_raw = {softplus_inv(std::max(1e-4, amp.x * cfg.init_amp_scale)),
                         softplus_inv(std::max(1e-4, amp.y * cfg.init_amp_scale)),
                         softplus_inv(std::max(1e-4, amp.z * cfg.init_amp_scale))};
        }
    };
    for (auto& g : init.background) perturb(g);
    for (auto& a : init.actors)
        for (auto& g : a.gaussians) perturb(g);
    init.sky = CubeMap::constant(cfg.sky_resolution, {0.05, 0.05, 0.06});
    illum_init(init.illum, cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    quantize_to_storage(res.gt);
    quantize_to_storage(res.init);
    return res;
}

void synth_run(const SynthConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "frames");

    SynthResult res = synth_scene(cfg);
    save_scene(res.gt, (fs::path(out_dir) / "scene_gt.json").string());
    save_scene(res.init, (fs::path(out_dir) / "scene_init.json").string());

    RasterOptions opt;
    opt.early_termination = false;  // reference renders composite everything
    ShadeSwitches sw;

    json frames = json::array();
    char name[64];
    for (size_t i = 0; i < res.gt.cameras.size(); ++i) {
        FrameRender fr = render_frame(res.gt, res.gt.cameras[i], sw, opt);
        std::snprintf(name, sizeof(name), "frames/f_%04zu.png", i);
        std::string img_rel = name;
        std::snprintf(name, sizeof(name), "frames/f_%04zu_n.pfm", i);
        std::string nrm_rel = name;

        write_png((fs::path(out_dir) / img_rel).string(),
                  from_double(fr.out.rgb, fr.out.width, fr.out.height, 3));
        write_pfm((fs::path(out_dir) / nrm_rel).string(),
                  from_double(fr.out.normal, fr.out.width, fr.out.height, 3));

        json f;
        f["camera"] = i;
        f["image"] = img_rel;
        f["normal"] = nrm_rel;
        frames.push_back(f);
    }

    json manifest;
    manifest["frames"] = frames;
    std::ofstream out(fs::path(out_dir) / "frames.json");
    if (!out) fail(ErrorCode::io, "cannot write frames manifest in '" + out_dir + "'");
    out << manifest.dump(2) << "\n";
}

}  // namespace nsplat
