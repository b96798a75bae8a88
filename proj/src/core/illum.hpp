#pragma once

#include <vector>

#include "math.hpp"
#include "sh.hpp"

namespace nsplat {

// Degree-2 SH environment, RGB per coefficient, fixed (l,m) ordering.
struct ShEnv {
    std::array<Vec3, kShCount> coeffs{};
};

// Small fully connected network predicting SH lighting coefficients from a
// normalized timestep and a learnable per-camera embedding. Trunk of `depth`
// linear layers with ReLU between them, then one linear head per SH band.
struct IllumNet {
    int embed_dim = 16;
    int hidden = 64;
    int depth = 8;
    std::vector<int> camera_ids;                  // sorted, row i owns embeddings[i]
    std::vector<std::vector<double>> embeddings;  // [cams][embed_dim]
    std::vector<std::vector<double>> weights;     // trunk, row-major [out*in]
    std::vector<std::vector<double>> biases;
    std::vector<double> head_w[3];  // band l head: [(2l+1)*3 x hidden]
    std::vector<double> head_b[3];

    int input_dim() const { return 1 + embed_dim; }
    int embedding_row(int camera_id) const;  // -1 if unknown
};

void illum_init(IllumNet& net, uint64_t seed);

// Mirrors the learnable tensors of IllumNet.
struct IllumNetGrad {
    std::vector<std::vector<double>> embeddings;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    std::vector<double> head_w[3];
    std::vector<double> head_b[3];
};

IllumNetGrad make_illum_grad(const IllumNet& net);

struct IllumCache {
    double t_norm = 0;
    int camera_id = -1;
    std::vector<double> input;
    std::vector<std::vector<double>> acts;  // post-ReLU activations per trunk layer
};

ShEnv predict_sh(const IllumNet& net, double t_norm, int camera_id, IllumCache* cache = nullptr);

// Exact reverse-mode pass; requires the cache of a matching forward call.
void illum_backward(const IllumNet& net, const IllumCache& cache, double t_norm, int camera_id,
                    const std::array<Vec3, kShCount>& d_env, IllumNetGrad& grad);

// Lambertian shading against the SH environment. Returns the pre-clamp value;
// callers clamp at zero before HDR combination.
Vec3 diffuse_shade_preclamp(const Vec3& albedo, const Vec3& normal, const ShEnv& env);
Vec3 diffuse_shade(const Vec3& albedo, const Vec3& normal, const ShEnv& env);

struct DiffuseGrad {
    Vec3 d_albedo;
    Vec3 d_normal;
    std::array<Vec3, kShCount> d_env{};
};

// Backward through clamp + Eq-style weighted SH sum; upstream is dL/dL_d.
DiffuseGrad diffuse_shade_backward(const Vec3& albedo, const Vec3& normal, const ShEnv& env,
                                   const Vec3& upstream);

}  // namespace nsplat
