// Command-line front end over the nightsplat C API.
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nightsplat.h"

namespace {

int bail(ns_status status, const std::string& what) {
    std::fprintf(stderr, "error: %s: %s\n", what.c_str(), ns_last_error());
    return static_cast<int>(status);
}

struct SceneHandle {
    ns_scene* scene = nullptr;
    ~SceneHandle() { ns_scene_destroy(scene); }
};

struct RenderHandle {
    ns_render* render = nullptr;
    ~RenderHandle() { ns_render_destroy(render); }
};

struct ImageHandle {
    ns_image* image = nullptr;
    ~ImageHandle() { ns_image_destroy(image); }
};

int write_channel_pfm(const ns_render* render, ns_channel channel, const std::string& path) {
    const float* data = nullptr;
    int32_t w, h, c;
    if (ns_status s = ns_render_channel(render, channel, &data, &w, &h, &c))
        return bail(s, "reading channel");
    ImageHandle img;
    if (ns_status s = ns_image_create(w, h, c, data, &img.image)) return bail(s, "creating image");
    if (ns_status s = ns_image_write_pfm(path.c_str(), img.image)) return bail(s, "writing " + path);
    return 0;
}

int write_channel_png(const ns_render* render, ns_channel channel, const std::string& path,
                      bool tonemap, bool remap_normals) {
    const float* data = nullptr;
    int32_t w, h, c;
    if (ns_status s = ns_render_channel(render, channel, &data, &w, &h, &c))
        return bail(s, "reading channel");
    std::vector<float> ldr(data, data + static_cast<size_t>(w) * h * c);
    if (tonemap)
        for (auto& v : ldr) v = v / (1.0f + v);
    if (remap_normals)
        for (auto& v : ldr) v = 0.5f * (v + 1.0f);
    ImageHandle img;
    if (ns_status s = ns_image_create(w, h, c, ldr.data(), &img.image))
        return bail(s, "creating image");
    if (ns_status s = ns_image_write_png(path.c_str(), img.image)) return bail(s, "writing " + path);
    return 0;
}

ns_render_options make_options(bool no_diffuse, bool no_specular, bool no_brdf, bool sh_spec) {
    ns_render_options o{};
    o.disable_diffuse = no_diffuse ? 1 : 0;
    o.disable_specular = no_specular ? 1 : 0;
    o.no_brdf_constraint = no_brdf ? 1 : 0;
    o.sh_specular = sh_spec ? 1 : 0;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nightsplat: physically based splatting for low-light scene reconstruction"};
    app.require_subcommand(1);

    // render
    auto* render_cmd = app.add_subcommand("render", "Render one camera to a PNG");
    std::string r_scene, r_out, r_depth, r_normal;
    int r_camera = 0;
    bool r_no_diffuse = false, r_no_specular = false, r_no_brdf = false, r_sh_spec = false;
    render_cmd->add_option("--scene", r_scene, "Scene manifest")->required();
    render_cmd->add_option("--camera", r_camera, "Camera index")->required();
    render_cmd->add_option("--out", r_out, "Output PNG")->required();
    render_cmd->add_option("--depth", r_depth, "Optional depth PFM");
    render_cmd->add_option("--normal", r_normal, "Optional normal PFM");
    render_cmd->add_flag("--no-diffuse", r_no_diffuse, "Disable the diffuse term");
    render_cmd->add_flag("--no-specular", r_no_specular, "Disable the specular term");
    render_cmd->add_flag("--no-brdf-constraint", r_no_brdf, "Evaluate ASGs directly");
    render_cmd->add_flag("--sh-specular", r_sh_spec, "SH incident specular variant");

    // train
    auto* train_cmd = app.add_subcommand("train", "Optimize a scene against posed frames");
    std::string t_scene, t_frames, t_out, t_config, t_log;
    train_cmd->add_option("--scene", t_scene, "Initial scene manifest")->required();
    train_cmd->add_option("--frames", t_frames, "frames.json manifest")->required();
    train_cmd->add_option("--out", t_out, "Optimized scene manifest")->required();
    train_cmd->add_option("--config", t_config, "Training config JSON");
    train_cmd->add_option("--log", t_log, "JSONL training log");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM over train and holdout splits");
    std::string e_scene, e_frames;
    eval_cmd->add_option("--scene", e_scene, "Scene manifest")->required();
    eval_cmd->add_option("--frames", e_frames, "frames.json manifest")->required();

    // decompose
    auto* dec_cmd = app.add_subcommand("decompose", "Emit albedo/diffuse/specular/normal maps");
    std::string d_scene, d_dir, d_base = "decomp";
    int d_camera = 0;
    dec_cmd->add_option("--scene", d_scene, "Scene manifest")->required();
    dec_cmd->add_option("--camera", d_camera, "Camera index")->required();
    dec_cmd->add_option("--out", d_dir, "Output directory")->required();
    dec_cmd->add_option("--basename", d_base, "Output file stem");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scene and dataset");
    std::string s_config, s_out;
    synth_cmd->add_option("--config", s_config, "Generator config JSON");
    synth_cmd->add_option("--out", s_out, "Output directory")->required();

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference audit of the gradients");
    uint64_t g_seed = 11;
    grad_cmd->add_option("--seed", g_seed, "Scene seed");

    CLI11_PARSE(app, argc, argv);

    if (render_cmd->parsed()) {
        SceneHandle scene;
        if (ns_status s = ns_scene_load(r_scene.c_str(), &scene.scene)) return bail(s, "loading scene");
        ns_render_options opts = make_options(r_no_diffuse, r_no_specular, r_no_brdf, r_sh_spec);
        RenderHandle render;
        if (ns_status s = ns_render_camera(scene.scene, r_camera, &opts, &render.render))
            return bail(s, "rendering");
        if (int rc = write_channel_png(render.render, NS_CHANNEL_RGB, r_out, false, false)) return rc;
        if (!r_depth.empty())
            if (int rc = write_channel_pfm(render.render, NS_CHANNEL_DEPTH, r_depth)) return rc;
        if (!r_normal.empty())
            if (int rc = write_channel_pfm(render.render, NS_CHANNEL_NORMAL, r_normal)) return rc;
        return 0;
    }

    if (train_cmd->parsed()) {
        SceneHandle scene;
        if (ns_status s = ns_scene_load(t_scene.c_str(), &scene.scene)) return bail(s, "loading scene");
        if (ns_status s = ns_train(scene.scene, t_frames.c_str(),
                                   t_config.empty() ? nullptr : t_config.c_str(),
                                   t_log.empty() ? nullptr : t_log.c_str()))
            return bail(s, "training");
        if (ns_status s = ns_scene_save(scene.scene, t_out.c_str()))
            return bail(s, "saving optimized scene");
        return 0;
    }

    if (eval_cmd->parsed()) {
        SceneHandle scene;
        if (ns_status s = ns_scene_load(e_scene.c_str(), &scene.scene)) return bail(s, "loading scene");
        int32_t count = 0;
        if (ns_status s = ns_eval(scene.scene, e_frames.c_str(), nullptr, 0, &count))
            return bail(s, "evaluating");
        std::vector<ns_eval_row> rows(count);
        if (ns_status s = ns_eval(scene.scene, e_frames.c_str(), rows.data(), count, &count))
            return bail(s, "evaluating");

        std::printf("%-6s %-12s %10s %10s\n", "frame", "split", "psnr", "ssim");
        double train_psnr = 0, train_ssim = 0, novel_psnr = 0, novel_ssim = 0;
        int train_n = 0, novel_n = 0;
        for (const auto& r : rows) {
            std::printf("%-6d %-12s %10.4f %10.4f\n", r.frame,
                        r.holdout ? "novel" : "reconstruction", r.psnr, r.ssim);
            if (r.holdout) {
                novel_psnr += r.psnr;
                novel_ssim += r.ssim;
                ++novel_n;
            } else {
                train_psnr += r.psnr;
                train_ssim += r.ssim;
                ++train_n;
            }
        }
        if (train_n)
            std::printf("mean   %-12s %10.4f %10.4f\n", "reconstruction", train_psnr / train_n,
                        train_ssim / train_n);
        if (novel_n)
            std::printf("mean   %-12s %10.4f %10.4f\n", "novel", novel_psnr / novel_n,
                        novel_ssim / novel_n);
        return 0;
    }

    if (dec_cmd->parsed()) {
        SceneHandle scene;
        if (ns_status s = ns_scene_load(d_scene.c_str(), &scene.scene)) return bail(s, "loading scene");
        RenderHandle render;
        if (ns_status s = ns_render_camera(scene.scene, d_camera, nullptr, &render.render))
            return bail(s, "rendering");
        std::string stem = d_dir + "/" + d_base;
        if (int rc = write_channel_png(render.render, NS_CHANNEL_RGB, stem + "_rgb.png", false, false))
            return rc;
        if (int rc = write_channel_pfm(render.render, NS_CHANNEL_ALBEDO, stem + "_albedo.pfm")) return rc;
        if (int rc = write_channel_pfm(render.render, NS_CHANNEL_DIFFUSE_HDR, stem + "_diffuse.pfm"))
            return rc;
        if (int rc = write_channel_pfm(render.render, NS_CHANNEL_SPECULAR_HDR, stem + "_specular.pfm"))
            return rc;
        if (int rc = write_channel_pfm(render.render, NS_CHANNEL_NORMAL, stem + "_normal.pfm")) return rc;
        // 8-bit previews: albedo as-is, HDR parts tone-mapped, normals remapped.
        if (int rc = write_channel_png(render.render, NS_CHANNEL_ALBEDO, stem + "_albedo.png", false, false))
            return rc;
        if (int rc = write_channel_png(render.render, NS_CHANNEL_DIFFUSE_HDR, stem + "_diffuse.png", true, false))
            return rc;
        if (int rc = write_channel_png(render.render, NS_CHANNEL_SPECULAR_HDR, stem + "_specular.png", true, false))
            return rc;
        if (int rc = write_channel_png(render.render, NS_CHANNEL_NORMAL, stem + "_normal.png", false, true))
            return rc;
        return 0;
    }

    if (synth_cmd->parsed()) {
        if (ns_status s = ns_synth(s_config.empty() ? nullptr : s_config.c_str(), s_out.c_str()))
            return bail(s, "synthesizing");
        return 0;
    }

    if (grad_cmd->parsed()) {
        int32_t count = 0;
        if (ns_status s = ns_gradcheck(g_seed, nullptr, 0, &count)) return bail(s, "gradcheck");
        std::vector<ns_gradcheck_row> rows(count);
        if (ns_status s = ns_gradcheck(g_seed, rows.data(), count, &count)) return bail(s, "gradcheck");
        bool ok = true;
        for (const auto& r : rows) {
            std::printf("%-12s checked %4lld  max rel err %.3e\n", r.group,
                        static_cast<long long>(r.checked), r.max_rel_err);
            ok &= r.max_rel_err <= 1e-3;
        }
        std::printf("gradcheck: %s\n", ok ? "PASS" : "FAIL");
        return ok ? 0 : 1;
    }

    return 0;
}
