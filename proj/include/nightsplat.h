/* nightsplat: physically based shading and reconstruction for explicit
 * 3D Gaussian scenes under low light. C API over the core engine; every
 * handle is opaque and every call reports an ns_status. On failure,
 * ns_last_error() returns a thread-local description of what went wrong.
 */
#ifndef NIGHTSPLAT_H
#define NIGHTSPLAT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ns_status {
    NS_OK = 0,
    NS_ERR_IO = 1,
    NS_ERR_PARSE = 2,
    NS_ERR_INVALID_ARG = 3,
    NS_ERR_MISSING_POSE = 4,
    NS_ERR_UNKNOWN_CAMERA = 5,
    NS_ERR_SHAPE_MISMATCH = 6,
    NS_ERR_NUMERIC = 7,
    NS_ERR_STALE_CACHE = 8,
    NS_ERR_UNKNOWN = 127
} ns_status;

typedef struct ns_scene ns_scene;
typedef struct ns_render ns_render;
typedef struct ns_image ns_image;

const char* ns_version(void);
const char* ns_last_error(void);

/* Scenes (JSON manifest + float32 blob; see docs/scene_format.md). */
ns_status ns_scene_load(const char* manifest_path, ns_scene** out);
ns_status ns_scene_save(const ns_scene* scene, const char* manifest_path);
void ns_scene_destroy(ns_scene* scene);
int32_t ns_scene_camera_count(const ns_scene* scene);
int64_t ns_scene_gaussian_count(const ns_scene* scene);
ns_status ns_scene_camera_size(const ns_scene* scene, int32_t camera, int32_t* width,
                               int32_t* height);

/* Rendering. Channels are row-major float maps owned by the render handle. */
typedef enum ns_channel {
    NS_CHANNEL_RGB = 0,
    NS_CHANNEL_ALPHA = 1,
    NS_CHANNEL_DEPTH = 2,
    NS_CHANNEL_NORMAL = 3,
    NS_CHANNEL_ALBEDO = 4,
    NS_CHANNEL_DIFFUSE_HDR = 5,
    NS_CHANNEL_SPECULAR_HDR = 6
} ns_channel;

typedef struct ns_render_options {
    int32_t disable_diffuse;
    int32_t disable_specular;
    int32_t no_brdf_constraint;
    int32_t sh_specular;
    int32_t no_early_termination;
} ns_render_options;

ns_status ns_render_camera(ns_scene* scene, int32_t camera, const ns_render_options* opts,
                           ns_render** out);
void ns_render_destroy(ns_render* render);
ns_status ns_render_channel(const ns_render* render, ns_channel channel, const float** data,
                            int32_t* width, int32_t* height, int32_t* channels);

/* Images: 8-bit PNG (byte <-> v/255) and little-endian PFM. */
ns_status ns_image_create(int32_t width, int32_t height, int32_t channels, const float* data,
                          ns_image** out);
ns_status ns_image_read_png(const char* path, ns_image** out);
ns_status ns_image_read_pfm(const char* path, ns_image** out);
ns_status ns_image_write_png(const char* path, const ns_image* image);
ns_status ns_image_write_pfm(const char* path, const ns_image* image);
void ns_image_destroy(ns_image* image);
const float* ns_image_data(const ns_image* image);
int32_t ns_image_width(const ns_image* image);
int32_t ns_image_height(const ns_image* image);
int32_t ns_image_channels(const ns_image* image);

/* Metrics on [0,1] floats; PSNR returns +inf when the images match. */
ns_status ns_metric_psnr(const ns_image* pred, const ns_image* gt, double* out);
ns_status ns_metric_ssim(const ns_image* pred, const ns_image* gt, double* out);

/* Optimization against a frames manifest (frames.json next to its images).
 * config_path may be NULL for defaults; log_path may be NULL to skip the
 * JSONL training log. The scene is updated in place. */
ns_status ns_train(ns_scene* scene, const char* frames_manifest, const char* config_path,
                   const char* log_path);

typedef struct ns_eval_row {
    int32_t frame;
    int32_t holdout; /* 1 when the frame is in the every-8th novel-view split */
    double psnr;
    double ssim;
} ns_eval_row;

/* Two-call pattern: pass rows == NULL to query the row count. */
ns_status ns_eval(ns_scene* scene, const char* frames_manifest, ns_eval_row* rows,
                  int32_t capacity, int32_t* count);

/* Synthetic scene + dataset generation (config NULL -> defaults). */
ns_status ns_synth(const char* config_path, const char* out_dir);

typedef struct ns_gradcheck_row {
    char group[32];
    double max_rel_err;
    int64_t checked;
} ns_gradcheck_row;

/* Finite-difference audit of the analytic gradients. */
ns_status ns_gradcheck(uint64_t seed, ns_gradcheck_row* rows, int32_t capacity, int32_t* count);

#ifdef __cplusplus
}
#endif

#endif /* NIGHTSPLAT_H */
