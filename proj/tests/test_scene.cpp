#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/scene_io.hpp"
#include "core/synth.hpp"
#include "core/trainer.hpp"
#include "support/oracles.hpp"

using namespace nsplat;
namespace fs = std::filesystem;
namespace ts = nsplat::testsupport;

namespace {

fs::path temp_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("nsplat_test_" + tag);
    fs::create_directories(p);
    return p;
}

SceneGraph tiny_scene() {
    SynthConfig cfg;
    cfg.gaussians = 24;
    cfg.actors = 1;
    cfg.actor_gaussians = 6;
    cfg.cameras = 2;
    cfg.timesteps = 3;
    cfg.width = 32;
    cfg.height = 24;
    cfg.sky_resolution = 4;
    return synth_scene(cfg).gt;
}

}  // namespace

TEST_CASE("resolve_scene identity and transforms") {
    SceneGraph scene = tiny_scene();
    double t0 = scene.timeline[0];

    // Identity pose leaves actor Gaussians verbatim.
    SceneGraph ident = scene;
    for (auto& [t, pose] : ident.actors[0].trajectory) pose = Se3Pose{};
    auto list = resolve_scene(ident, t0);
    CHECK(list.size() == ident.gaussian_count());
    const auto& actor = ident.actors[0];
    size_t base = ident.background.size();
    for (size_t i = 0; i < actor.gaussians.size(); ++i) {
        CHECK(norm(list[base + i].mu - actor.gaussians[i].mu) < 1e-12);
        CHECK(norm(list[base + i].normal_raw - actor.gaussians[i].normal_raw) < 1e-12);
    }

    // Pure translation shifts mu only.
    SceneGraph trans = scene;
    for (auto& [t, pose] : trans.actors[0].trajectory) {
        pose.rotation = {1, 0, 0, 0};
        pose.translation = {0, 0, 5};
    }
    auto tlist = resolve_scene(trans, t0);
    for (size_t i = 0; i < actor.gaussians.size(); ++i) {
        Vec3 want = trans.actors[0].gaussians[i].mu + Vec3{0, 0, 5};
        CHECK(norm(tlist[base + i].mu - want) < 1e-12);
        CHECK(norm(tlist[base + i].normal_raw - trans.actors[0].gaussians[i].normal_raw) < 1e-12);
    }

    // 90-degree yaw: normals rotate, covariance eigenvalues unchanged.
    SceneGraph yaw = scene;
    double half = kPi / 4.0;  // quaternion for a 90 degree rotation about z
    for (auto& [t, pose] : yaw.actors[0].trajectory) {
        pose.rotation = {std::cos(half), 0, 0, std::sin(half)};
        pose.translation = {0, 0, 0};
    }
    auto ylist = resolve_scene(yaw, t0);
    Mat3 rot = quat_to_mat(Vec4{std::cos(half), 0, 0, std::sin(half)});
    for (size_t i = 0; i < actor.gaussians.size(); ++i) {
        const auto& src = yaw.actors[0].gaussians[i];
        CHECK(norm(ylist[base + i].normal_raw - rot * src.normal_raw) < 1e-12);

        Vec3 s{std::exp(src.log_scale.x), std::exp(src.log_scale.y), std::exp(src.log_scale.z)};
        auto before = ts::sym3_eigenvalues(build_covariance(normalized(src.rot), s));
        auto after = ts::sym3_eigenvalues(build_covariance(normalized(ylist[base + i].rot), s));
        for (int k = 0; k < 3; ++k) CHECK(before[k] == doctest::Approx(after[k]).epsilon(1e-6));
    }

    // Rigid transforms preserve pairwise distances.
    for (size_t i = 1; i < actor.gaussians.size(); ++i) {
        double before = norm(actor.gaussians[i].mu - actor.gaussians[0].mu);
        double after = norm(ylist[base + i].mu - ylist[base].mu);
        CHECK(std::abs(before - after) < 1e-5);
    }

    // Missing pose.
    SceneGraph broken = scene;
    broken.actors[0].trajectory.erase(broken.actors[0].trajectory.begin());
    CHECK_THROWS_AS(resolve_scene(broken, t0), Error);
}

TEST_CASE("resolve_scene output order is deterministic") {
    SceneGraph scene = tiny_scene();
    RigidActor second = scene.actors[0];
    second.id = "aardvark";  // sorts before "actor0"
    scene.actors.push_back(second);
    auto list = resolve_scene(scene, scene.timeline[0]);
    size_t base = scene.background.size();
    CHECK(list[base].node == 1);       // "aardvark" first
    CHECK(list[base + second.gaussians.size()].node == 0);
}

TEST_CASE("cubemap sampling") {
    CubeMap sky = CubeMap::constant(8, {0.3, 0.4, 0.5});
    Vec3 v = sample_cubemap(sky, {0, 0, 1});
    CHECK(v.x == doctest::Approx(0.3).epsilon(1e-12));

    Rng rng(61);
    for (int i = 0; i < 50; ++i) {
        Vec3 s = sample_cubemap(sky, rng.unit_vec());
        CHECK(s.y == doctest::Approx(0.4).epsilon(1e-12));
    }

    // Face-center fetch hits a single texel row/col pattern; +Z face value.
    CubeMap patterned = CubeMap::constant(4, {0, 0, 0});
    patterned.at(4, 1, 1, 0) = 1.0;
    patterned.at(4, 1, 2, 0) = 2.0;
    patterned.at(4, 2, 1, 0) = 3.0;
    patterned.at(4, 2, 2, 0) = 4.0;
    // Direction mapping to s = t = 1.5 exactly: u = v = 0 -> s = 1.5.
    Vec3 mid = sample_cubemap(patterned, {0, 0, 1});
    CHECK(mid.x == doctest::Approx(0.25 * (1 + 2 + 3 + 4)).epsilon(1e-12));

    // Hand-computed bilinear blend: u = v = -0.125 lands at s = t = 1.25,
    // weights (0.75, 0.25) against the same four texels.
    Vec3 q = sample_cubemap(patterned, normalized(Vec3{-0.125, 0.125, 1}));
    double want = 0.5625 * 1 + 0.1875 * 2 + 0.1875 * 3 + 0.0625 * 4;
    CHECK(q.x == doctest::Approx(want).epsilon(1e-12));

    // Seam continuity: nearby directions across a face boundary stay close.
    CubeMap smooth = CubeMap::constant(16, {0, 0, 0});
    for (int f = 0; f < 6; ++f)
        for (int r = 0; r < 16; ++r)
            for (int c = 0; c < 16; ++c) {
                // slowly varying function of direction
                Vec3 d;
                {
                    double uu = (c + 0.5) / 16 * 2 - 1, vv = (r + 0.5) / 16 * 2 - 1;
                    switch (f) {
                        case 0: d = normalized(Vec3{1, -vv, -uu}); break;
                        case 1: d = normalized(Vec3{-1, -vv, uu}); break;
                        case 2: d = normalized(Vec3{uu, 1, vv}); break;
                        case 3: d = normalized(Vec3{uu, -1, -vv}); break;
                        case 4: d = normalized(Vec3{uu, -vv, 1}); break;
                        default: d = normalized(Vec3{-uu, -vv, -1}); break;
                    }
                }
                double val = 0.5 + 0.3 * d.x + 0.2 * d.y * d.z;
                smooth.at(f, r, c, 0) = smooth.at(f, r, c, 1) = smooth.at(f, r, c, 2) = val;
            }
    for (int i = 0; i < 200; ++i) {
        double eps = 1e-3;
        Vec3 a = normalized(Vec3{1.0, rng.uniform(-1, 1), 1.0});  // near the +X/+Z seam
        Vec3 b = normalized(Vec3{1.0 + 2 * eps, a.y * (1.0 + eps), 1.0 - eps});
        double da = sample_cubemap(smooth, a).x;
        double db = sample_cubemap(smooth, b).x;
        CHECK(std::abs(da - db) < 0.15);  // bounded by the texel gradient scale
    }
}

TEST_CASE("scene file round trip is bit exact") {
    SceneGraph scene = tiny_scene();
    fs::path dir = temp_dir("roundtrip");
    fs::path m1 = dir / "scene.json";
    save_scene(scene, m1.string());
    SceneGraph loaded = load_scene(m1.string());

    CHECK(loaded.background.size() == scene.background.size());
    CHECK(loaded.actors.size() == scene.actors.size());
    CHECK(loaded.cameras.size() == scene.cameras.size());
    for (size_t i = 0; i < scene.background.size(); ++i) {
        CHECK(loaded.background[i].mu.x == scene.background[i].mu.x);
        CHECK(loaded.background[i].opacity_logit == scene.background[i].opacity_logit);
        CHECK(loaded.background[i].asg[2].amp_raw.z == scene.background[i].asg[2].amp_raw.z);
    }
    CHECK(loaded.illum.weights[3][100] == scene.illum.weights[3][100]);
    CHECK(loaded.sky.texels[17] == scene.sky.texels[17]);
    CHECK(loaded.cameras[1].fx == scene.cameras[1].fx);
    CHECK(loaded.actors[0].trajectory[1].second.translation.x ==
          scene.actors[0].trajectory[1].second.translation.x);

    // Saving the loaded scene reproduces both files byte for byte.
    fs::path m2 = dir / "scene2.json";
    save_scene(loaded, m2.string());
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    CHECK(slurp(dir / "scene.bin") == slurp(dir / "scene2.bin"));
}

TEST_CASE("scene load error paths") {
    SceneGraph scene = tiny_scene();
    fs::path dir = temp_dir("errors");
    fs::path m = dir / "scene.json";
    save_scene(scene, m.string());

    // Remove a required array: the error names the field.
    {
        std::ifstream in(m);
        nlohmann::json j;
        in >> j;
        j["background"]["arrays"].erase("opacity");
        std::ofstream out(dir / "missing.json");
        out << j.dump();
        std::ofstream blob(dir / "missing.bin", std::ios::binary);
        std::ifstream src(dir / "scene.bin", std::ios::binary);
        blob << src.rdbuf();
    }
    try {
        load_scene((dir / "missing.json").string());
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse);
        CHECK(std::string(e.what()).find("opacity") != std::string::npos);
    }

    // Version mismatch.
    {
        std::ifstream in(m);
        nlohmann::json j;
        in >> j;
        j["version"] = 999;
        std::ofstream out(dir / "badver.json");
        out << j.dump();
    }
    try {
        load_scene((dir / "badver.json").string());
        FAIL("expected a version error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse);
        CHECK(std::string(e.what()).find("version") != std::string::npos);
    }

    CHECK_THROWS_AS(load_scene((dir / "nonexistent.json").string()), Error);
}

TEST_CASE("empty scene renders sky only") {
    SceneGraph scene;
    scene.timeline = {0.0};
    CameraModel cam;
    cam.fx = cam.fy = 20;
    cam.cx = 8;
    cam.cy = 8;
    cam.width = cam.height = 16;
    cam.camera_id = 0;
    scene.cameras.push_back(cam);
    scene.sky = CubeMap::constant(4, {0.4, 0.4, 0.4});
    scene.illum.camera_ids = {0};
    illum_init(scene.illum, 1);

    fs::path dir = temp_dir("empty");
    save_scene(scene, (dir / "empty.json").string());
    SceneGraph loaded = load_scene((dir / "empty.json").string());

    FrameRender fr = render_frame(loaded, loaded.cameras[0], {}, {});
    double want = 0.4 / 1.4;  // Reinhard of the constant sky (float32 storage)
    for (size_t i = 0; i < fr.out.rgb.size(); ++i)
        CHECK(fr.out.rgb[i] == doctest::Approx(want).epsilon(1e-6));
    for (double a : fr.out.alpha) CHECK(a == 0.0);
}

TEST_CASE("synth determinism and headlight preset") {
    SynthConfig cfg;
    cfg.gaussians = 60;
    cfg.actor_gaussians = 16;
    cfg.cameras = 4;
    cfg.timesteps = 4;
    cfg.width = 48;
    cfg.height = 36;
    cfg.preset = "headlight";
    cfg.sky_resolution = 8;

    SynthResult a = synth_scene(cfg);
    SynthResult b = synth_scene(cfg);
    CHECK(a.gt.background.size() == b.gt.background.size());
    for (size_t i = 0; i < a.gt.background.size(); ++i) {
        CHECK(a.gt.background[i].mu.x == b.gt.background[i].mu.x);
        CHECK(a.gt.background[i].asg[1].log_sharp_x == b.gt.background[i].asg[1].log_sharp_x);
    }
    CHECK(a.gt.illum.weights[2][5] == b.gt.illum.weights[2][5]);

    // Zero actors yields a static scene.
    SynthConfig stat = cfg;
    stat.actors = 0;
    SceneGraph s = synth_scene(stat).gt;
    CHECK(s.actors.empty());
    CHECK(s.gaussian_count() > 0);

    // Headlight preset: the specular channel lights up somewhere on the
    // ground strip in at least one frame.
    RasterOptions opt;
    double max_spec = 0;
    for (size_t ci = 0; ci < a.gt.cameras.size(); ci += 7) {
        FrameRender fr = render_frame(a.gt, a.gt.cameras[ci], {}, opt);
        for (double v : fr.out.specular_hdr) max_spec = std::max(max_spec, v);
    }
    CHECK(max_spec > 0.05);
}
