#include "nightsplat.h"

#include <cstring>
#include <string>

#include "core/error.hpp"
#include "core/gradcheck.hpp"
#include "core/image.hpp"
#include "core/metrics.hpp"
#include "core/scene_io.hpp"
#include "core/synth.hpp"
#include "core/trainer.hpp"

struct ns_scene {
    nsplat::SceneGraph graph;
};

struct ns_render {
    int width = 0, height = 0;
    std::vector<float> rgb, alpha, depth, normal, albedo, diffuse_hdr, specular_hdr;
};

struct ns_image {
    nsplat::ImageBuffer buf;
};

namespace {

thread_local std::string g_last_error;

ns_status to_status(nsplat::ErrorCode code) {
    switch (code) {
        case nsplat::ErrorCode::ok: return NS_OK;
        case nsplat::ErrorCode::io: return NS_ERR_IO;
        case nsplat::ErrorCode::parse: return NS_ERR_PARSE;
        case nsplat::ErrorCode::invalid_arg: return NS_ERR_INVALID_ARG;
        case nsplat::ErrorCode::missing_pose: return NS_ERR_MISSING_POSE;
        case nsplat::ErrorCode::unknown_camera: return NS_ERR_UNKNOWN_CAMERA;
        case nsplat::ErrorCode::shape_mismatch: return NS_ERR_SHAPE_MISMATCH;
        case nsplat::ErrorCode::numeric: return NS_ERR_NUMERIC;
        case nsplat::ErrorCode::stale_cache: return NS_ERR_STALE_CACHE;
    }
    return NS_ERR_UNKNOWN;
}

template <typename Fn>
ns_status guarded(Fn&& fn) {
    try {
        fn();
        return NS_OK;
    } catch (const nsplat::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return NS_ERR_UNKNOWN;
    }
}

ns_status need(bool cond, const char* msg) {
    if (cond) return NS_OK;
    g_last_error = msg;
    return NS_ERR_INVALID_ARG;
}

std::vector<float> to_float(const std::vector<double>& v) {
    return std::vector<float>(v.begin(), v.end());
}

}  // namespace

extern "C" {

const char* ns_version(void) { return "0.1.0"; }

const char* ns_last_error(void) { return g_last_error.c_str(); }

ns_status ns_scene_load(const char* manifest_path, ns_scene** out) {
    if (ns_status s = need(manifest_path && out, "ns_scene_load: null argument")) return s;
    return guarded([&] {
        auto* scene = new ns_scene{nsplat::load_scene(manifest_path)};
        *out = scene;
    });
}

ns_status ns_scene_save(const ns_scene* scene, const char* manifest_path) {
    if (ns_status s = need(scene && manifest_path, "ns_scene_save: null argument")) return s;
    return guarded([&] { nsplat::save_scene(scene->graph, manifest_path); });
}

void ns_scene_destroy(ns_scene* scene) { delete scene; }

int32_t ns_scene_camera_count(const ns_scene* scene) {
    return scene ? static_cast<int32_t>(scene->graph.cameras.size()) : 0;
}

int64_t ns_scene_gaussian_count(const ns_scene* scene) {
    return scene ? static_cast<int64_t>(scene->graph.gaussian_count()) : 0;
}

ns_status ns_scene_camera_size(const ns_scene* scene, int32_t camera, int32_t* width,
                               int32_t* height) {
    if (ns_status s = need(scene && width && height, "ns_scene_camera_size: null argument")) return s;
    if (ns_status s = need(camera >= 0 && camera < ns_scene_camera_count(scene),
                           "ns_scene_camera_size: camera index out of range"))
        return s;
    *width = scene->graph.cameras[camera].width;
    *height = scene->graph.cameras[camera].height;
    return NS_OK;
}

ns_status ns_render_camera(ns_scene* scene, int32_t camera, const ns_render_options* opts,
                           ns_render** out) {
    if (ns_status s = need(scene && out, "ns_render_camera: null argument")) return s;
    if (ns_status s = need(camera >= 0 && camera < ns_scene_camera_count(scene),
                           "ns_render_camera: camera index out of range"))
        return s;
    return guarded([&] {
        nsplat::ShadeSwitches sw;
        nsplat::RasterOptions ro;
        if (opts) {
            sw.diffuse = !opts->disable_diffuse;
            sw.specular = !opts->disable_specular;
            sw.brdf_constraint = !opts->no_brdf_constraint;
            sw.sh_specular = opts->sh_specular != 0;
            ro.early_termination = !opts->no_early_termination;
        }
        nsplat::FrameRender fr =
            nsplat::render_frame(scene->graph, scene->graph.cameras[camera], sw, ro);
        auto* r = new ns_render;
        r->width = fr.out.width;
        r->height = fr.out.height;
        r->rgb = to_float(fr.out.rgb);
        r->alpha = to_float(fr.out.alpha);
        r->depth = to_float(fr.out.depth);
        r->normal = to_float(fr.out.normal);
        r->albedo = to_float(fr.out.albedo);
        r->diffuse_hdr = to_float(fr.out.diffuse_hdr);
        r->specular_hdr = to_float(fr.out.specular_hdr);
        *out = r;
    });
}

void ns_render_destroy(ns_render* render) { delete render; }

ns_status ns_render_channel(const ns_render* render, ns_channel channel, const float** data,
                            int32_t* width, int32_t* height, int32_t* channels) {
    if (ns_status s = need(render && data && width && height && channels,
                           "ns_render_channel: null argument"))
        return s;
    const std::vector<float>* v = nullptr;
    int ch = 3;
    switch (channel) {
        case NS_CHANNEL_RGB: v = &render->rgb; break;
        case NS_CHANNEL_ALPHA: v = &render->alpha; ch = 1; break;
        case NS_CHANNEL_DEPTH: v = &render->depth; ch = 1; break;
        case NS_CHANNEL_NORMAL: v = &render->normal; break;
        case NS_CHANNEL_ALBEDO: v = &render->albedo; break;
        case NS_CHANNEL_DIFFUSE_HDR: v = &render->diffuse_hdr; break;
        case NS_CHANNEL_SPECULAR_HDR: v = &render->specular_hdr; break;
    }
    if (ns_status s = need(v != nullptr, "ns_render_channel: unknown channel")) return s;
    *data = v->data();
    *width = render->width;
    *height = render->height;
    *channels = ch;
    return NS_OK;
}

ns_status ns_image_create(int32_t width, int32_t height, int32_t channels, const float* data,
                          ns_image** out) {
    if (ns_status s = need(out && width > 0 && height > 0 && (channels == 1 || channels == 3),
                           "ns_image_create: bad dimensions"))
        return s;
    auto* img = new ns_image{nsplat::ImageBuffer::make(width, height, channels)};
    if (data) std::memcpy(img->buf.data.data(), data, img->buf.data.size() * sizeof(float));
    *out = img;
    return NS_OK;
}

ns_status ns_image_read_png(const char* path, ns_image** out) {
    if (ns_status s = need(path && out, "ns_image_read_png: null argument")) return s;
    return guarded([&] { *out = new ns_image{nsplat::read_png(path)}; });
}

ns_status ns_image_read_pfm(const char* path, ns_image** out) {
    if (ns_status s = need(path && out, "ns_image_read_pfm: null argument")) return s;
    return guarded([&] { *out = new ns_image{nsplat::read_pfm(path)}; });
}

ns_status ns_image_write_png(const char* path, const ns_image* image) {
    if (ns_status s = need(path && image, "ns_image_write_png: null argument")) return s;
    return guarded([&] { nsplat::write_png(path, image->buf); });
}

ns_status ns_image_write_pfm(const char* path, const ns_image* image) {
    if (ns_status s = need(path && image, "ns_image_write_pfm: null argument")) return s;
    return guarded([&] { nsplat::write_pfm(path, image->buf); });
}

void ns_image_destroy(ns_image* image) { delete image; }

const float* ns_image_data(const ns_image* image) { return image ? image->buf.data.data() : nullptr; }
int32_t ns_image_width(const ns_image* image) { return image ? image->buf.width : 0; }
int32_t ns_image_height(const ns_image* image) { return image ? image->buf.height : 0; }
int32_t ns_image_channels(const ns_image* image) { return image ? image->buf.channels : 0; }

ns_status ns_metric_psnr(const ns_image* pred, const ns_image* gt, double* out) {
    if (ns_status s = need(pred && gt && out, "ns_metric_psnr: null argument")) return s;
    return guarded([&] { *out = nsplat::psnr(nsplat::to_double(pred->buf), nsplat::to_double(gt->buf)); });
}

ns_status ns_metric_ssim(const ns_image* pred, const ns_image* gt, double* out) {
    if (ns_status s = need(pred && gt && out, "ns_metric_ssim: null argument")) return s;
    return guarded([&] {
        *out = nsplat::ssim(nsplat::to_double(pred->buf), nsplat::to_double(gt->buf), pred->buf.width,
                            pred->buf.height, pred->buf.channels);
    });
}

ns_status ns_train(ns_scene* scene, const char* frames_manifest, const char* config_path,
                   const char* log_path) {
    if (ns_status s = need(scene && frames_manifest, "ns_train: null argument")) return s;
    return guarded([&] {
        nsplat::TrainConfig cfg = nsplat::load_train_config(config_path ? config_path : "");
        auto frames = nsplat::load_frames(scene->graph, frames_manifest);
        nsplat::train(scene->graph, frames, cfg, log_path ? log_path : "");
    });
}

ns_status ns_eval(ns_scene* scene, const char* frames_manifest, ns_eval_row* rows,
                  int32_t capacity, int32_t* count) {
    if (ns_status s = need(scene && frames_manifest && count, "ns_eval: null argument")) return s;
    return guarded([&] {
        auto frames = nsplat::load_frames(scene->graph, frames_manifest);
        auto result = nsplat::evaluate(scene->graph, frames);
        *count = static_cast<int32_t>(result.size());
        if (!rows) return;
        int32_t n = std::min(capacity, *count);
        for (int32_t i = 0; i < n; ++i) {
            rows[i].frame = result[i].frame;
            rows[i].holdout = result[i].holdout ? 1 : 0;
            rows[i].psnr = result[i].psnr;
            rows[i].ssim = result[i].ssim;
        }
    });
}

ns_status ns_synth(const char* config_path, const char* out_dir) {
    if (ns_status s = need(out_dir, "ns_synth: null out_dir")) return s;
    return guarded([&] {
        nsplat::SynthConfig cfg = nsplat::load_synth_config(config_path ? config_path : "");
        nsplat::synth_run(cfg, out_dir);
    });
}

ns_status ns_gradcheck(uint64_t seed, ns_gradcheck_row* rows, int32_t capacity, int32_t* count) {
    if (ns_status s = need(count != nullptr, "ns_gradcheck: null count")) return s;
    return guarded([&] {
        nsplat::GradcheckSetup setup;
        setup.seed = seed;
        auto result = nsplat::run_gradcheck(setup);
        *count = static_cast<int32_t>(result.size());
        if (!rows) return;
        int32_t n = std::min(capacity, *count);
        for (int32_t i = 0; i < n; ++i) {
            std::snprintf(rows[i].group, sizeof(rows[i].group), "%s", result[i].name.c_str());
            rows[i].max_rel_err = result[i].max_rel_err;
            rows[i].checked = static_cast<int64_t>(result[i].checked);
        }
    });
}

}  // extern "C"
