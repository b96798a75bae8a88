// Exercises the public shared-library surface only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nightsplat.h"

namespace fs = std::filesystem;

namespace {
fs::path workdir() {
    fs::path p = fs::temp_directory_path() / "nsplat_test_capi";
    fs::create_directories(p);
    return p;
}

fs::path synth_once() {
    static fs::path dir;
    if (!dir.empty()) return dir;
    dir = workdir() / "data";
    fs::create_directories(dir);
    fs::path cfg = workdir() / "synth.json";
    std::ofstream out(cfg);
    out << R"({"gaussians": 40, "actor_gaussians": 10, "cameras": 3, "timesteps": 3,
               "width": 48, "height": 36, "sky_resolution": 4, "seed": 5})";
    out.close();
    REQUIRE(ns_synth(cfg.string().c_str(), dir.string().c_str()) == NS_OK);
    return dir;
}
}  // namespace

TEST_CASE("version and error reporting") {
    CHECK(std::strlen(ns_version()) > 0);
    ns_scene* scene = nullptr;
    ns_status s = ns_scene_load("/nonexistent/path.json", &scene);
    CHECK(s == NS_ERR_IO);
    CHECK(std::strlen(ns_last_error()) > 0);
    CHECK(ns_scene_load(nullptr, &scene) == NS_ERR_INVALID_ARG);
}

TEST_CASE("synth, load, render, image io, metrics") {
    fs::path dir = synth_once();
    CHECK(fs::exists(dir / "scene_gt.json"));
    CHECK(fs::exists(dir / "frames.json"));

    ns_scene* scene = nullptr;
    REQUIRE(ns_scene_load((dir / "scene_gt.json").string().c_str(), &scene) == NS_OK);
    CHECK(ns_scene_camera_count(scene) == 9);
    CHECK(ns_scene_gaussian_count(scene) == 40);

    int32_t w = 0, h = 0;
    REQUIRE(ns_scene_camera_size(scene, 0, &w, &h) == NS_OK);
    CHECK(w == 48);
    CHECK(h == 36);
    CHECK(ns_scene_camera_size(scene, 99, &w, &h) == NS_ERR_INVALID_ARG);

    ns_render* render = nullptr;
    REQUIRE(ns_render_camera(scene, 0, nullptr, &render) == NS_OK);
    const float* data = nullptr;
    int32_t rw, rh, rc;
    REQUIRE(ns_render_channel(render, NS_CHANNEL_RGB, &data, &rw, &rh, &rc) == NS_OK);
    CHECK(rw == 48);
    CHECK(rc == 3);
    for (int i = 0; i < rw * rh * rc; ++i) {
        CHECK(data[i] >= 0.0f);
        CHECK(data[i] <= 1.0f);
    }
    REQUIRE(ns_render_channel(render, NS_CHANNEL_DEPTH, &data, &rw, &rh, &rc) == NS_OK);
    CHECK(rc == 1);

    // Round-trip the rendering through the image API and compare to the
    // stored ground-truth frame.
    const float* rgb = nullptr;
    ns_render_channel(render, NS_CHANNEL_RGB, &rgb, &rw, &rh, &rc);
    ns_image* img = nullptr;
    REQUIRE(ns_image_create(rw, rh, 3, rgb, &img) == NS_OK);
    fs::path png = workdir() / "render.png";
    REQUIRE(ns_image_write_png(png.string().c_str(), img) == NS_OK);

    ns_image* reread = nullptr;
    REQUIRE(ns_image_read_png(png.string().c_str(), &reread) == NS_OK);
    CHECK(ns_image_width(reread) == rw);

    ns_image* gt = nullptr;
    REQUIRE(ns_image_read_png((dir / "frames/f_0000.png").string().c_str(), &gt) == NS_OK);
    double psnr_val = 0;
    REQUIRE(ns_metric_psnr(reread, gt, &psnr_val) == NS_OK);
    CHECK(psnr_val > 40.0);  // same engine, same scene; only 8-bit rounding differs
    double ssim_val = 0;
    REQUIRE(ns_metric_ssim(reread, gt, &ssim_val) == NS_OK);
    CHECK(ssim_val > 0.95);

    ns_image_destroy(img);
    ns_image_destroy(reread);
    ns_image_destroy(gt);
    ns_render_destroy(render);
    ns_scene_destroy(scene);
}

TEST_CASE("pfm io through the c api") {
    fs::path dir = synth_once();
    ns_image* prior = nullptr;
    REQUIRE(ns_image_read_pfm((dir / "frames/f_0000_n.pfm").string().c_str(), &prior) == NS_OK);
    CHECK(ns_image_channels(prior) == 3);
    fs::path copy = workdir() / "copy.pfm";
    REQUIRE(ns_image_write_pfm(copy.string().c_str(), prior) == NS_OK);
    ns_image* back = nullptr;
    REQUIRE(ns_image_read_pfm(copy.string().c_str(), &back) == NS_OK);
    const float* a = ns_image_data(prior);
    const float* b = ns_image_data(back);
    int n = ns_image_width(prior) * ns_image_height(prior) * 3;
    for (int i = 0; i < n; ++i) CHECK(a[i] == b[i]);
    ns_image_destroy(prior);
    ns_image_destroy(back);
}

TEST_CASE("eval and zero-iteration train through the c api") {
    fs::path dir = synth_once();
    ns_scene* scene = nullptr;
    REQUIRE(ns_scene_load((dir / "scene_gt.json").string().c_str(), &scene) == NS_OK);

    int32_t count = 0;
    REQUIRE(ns_eval(scene, (dir / "frames.json").string().c_str(), nullptr, 0, &count) == NS_OK);
    REQUIRE(count == 9);
    std::vector<ns_eval_row> rows(count);
    REQUIRE(ns_eval(scene, (dir / "frames.json").string().c_str(), rows.data(), count, &count) == NS_OK);
    CHECK(rows[0].holdout == 1);
    CHECK(rows[1].holdout == 0);
    CHECK(rows[8].holdout == 1);
    for (const auto& r : rows) CHECK(r.psnr > 35.0);  // gt scene against its own frames

    // Zero iterations leave the scene unchanged on disk.
    fs::path cfg = workdir() / "train0.json";
    {
        std::ofstream out(cfg);
        out << R"({"iterations": 0})";
    }
    REQUIRE(ns_train(scene, (dir / "frames.json").string().c_str(), cfg.string().c_str(), nullptr) ==
            NS_OK);
    fs::path resaved = workdir() / "resaved.json";
    REQUIRE(ns_scene_save(scene, resaved.string().c_str()) == NS_OK);
    auto slurp = [](const fs::path& f) {
        std::ifstream in(f, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    CHECK(slurp(workdir() / "resaved.bin") == slurp(dir / "scene_gt.bin"));

    ns_scene_destroy(scene);
}

TEST_CASE("nan guard reports a numeric error") {
    fs::path dir = synth_once();
    ns_scene* scene = nullptr;
    REQUIRE(ns_scene_load((dir / "scene_init.json").string().c_str(), &scene) == NS_OK);

    // Poison one background opacity logit with NaN via the blob, using the
    // array offset declared in the manifest.
    fs::path bad = workdir() / "bad.json";
    REQUIRE(ns_scene_save(scene, bad.string().c_str()) == NS_OK);
    {
        std::ifstream min(bad);
        nlohmann::json j;
        min >> j;
        size_t offset = j["background"]["arrays"]["opacity"]["offset"].get<size_t>();
        std::fstream blob(workdir() / "bad.bin", std::ios::binary | std::ios::in | std::ios::out);
        blob.seekp(static_cast<std::streamoff>(offset * sizeof(float)));
        float nan = std::nanf("");
        blob.write(reinterpret_cast<char*>(&nan), sizeof(nan));
    }
    ns_scene* poisoned = nullptr;
    REQUIRE(ns_scene_load(bad.string().c_str(), &poisoned) == NS_OK);
    fs::path cfg = workdir() / "train1.json";
    {
        std::ofstream out(cfg);
        out << R"({"iterations": 3})";
    }
    ns_status s = ns_train(poisoned, (dir / "frames.json").string().c_str(), cfg.string().c_str(),
                           nullptr);
    CHECK(s == NS_ERR_NUMERIC);
    CHECK(std::strlen(ns_last_error()) > 0);
    ns_scene_destroy(poisoned);
    ns_scene_destroy(scene);
}

TEST_CASE("gradcheck rows through the c api") {
    int32_t count = 0;
    REQUIRE(ns_gradcheck(11, nullptr, 0, &count) == NS_OK);
    REQUIRE(count > 0);
    std::vector<ns_gradcheck_row> rows(count);
    REQUIRE(ns_gradcheck(11, rows.data(), count, &count) == NS_OK);
    for (const auto& r : rows) {
        CHECK(std::strlen(r.group) > 0);
        CHECK(r.max_rel_err <= 1e-3);
    }
}
