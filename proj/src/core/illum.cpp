#include "illum.hpp"

#include <algorithm>

#include "error.hpp"

namespace nsplat {

int IllumNet::embedding_row(int camera_id) const {
    auto it = std::lower_bound(camera_ids.begin(), camera_ids.end(), camera_id);
    if (it == camera_ids.end() || *it != camera_id) return -1;
    return static_cast<int>(it - camera_ids.begin());
}

namespace {
int head_out(int band) { return (2 * band + 1) * 3; }
}  // namespace

void illum_init(IllumNet& net, uint64_t seed) {
    Rng rng(seed);
    net.weights.assign(net.depth, {});
    net.biases.assign(net.depth, {});
    for (int l = 0; l < net.depth; ++l) {
        int in = l == 0 ? net.input_dim() : net.hidden;
        int out = net.hidden;
        double bound = std::sqrt(6.0 / in);
        net.weights[l].resize(static_cast<size_t>(out) * in);
        for (auto& w : net.weights[l]) w = rng.uniform(-bound, bound);
        net.biases[l].assign(out, 0.0);
    }
    for (int band = 0; band < 3; ++band) {
        net.head_w[band].assign(static_cast<size_t>(head_out(band)) * net.hidden, 0.0);
        net.head_b[band].assign(head_out(band), 0.0);
    }
    // Start from dim uniform light: positive band-0 bias, zero elsewhere.
    net.head_b[0][0] = net.head_b[0][1] = net.head_b[0][2] = 0.5;
    net.embeddings.assign(net.camera_ids.size(), std::vector<double>(net.embed_dim));
    for (auto& e : net.embeddings)
        for (auto& v : e) v = 0.1 * rng.normal();
}

IllumNetGrad make_illum_grad(const IllumNet& net) {
    IllumNetGrad g;
    g.embeddings.assign(net.embeddings.size(), std::vector<double>(net.embed_dim, 0.0));
    g.weights.resize(net.depth);
    g.biases.resize(net.depth);
    for (int l = 0; l < net.depth; ++l) {
        g.weights[l].assign(net.weights[l].size(), 0.0);
        g.biases[l].assign(net.biases[l].size(), 0.0);
    }
    for (int band = 0; band < 3; ++band) {
        g.head_w[band].assign(net.head_w[band].size(), 0.0);
        g.head_b[band].assign(net.head_b[band].size(), 0.0);
    }
    return g;
}

ShEnv predict_sh(const IllumNet& net, double t_norm, int camera_id, IllumCache* cache) {
    int row = net.embedding_row(camera_id);
    if (row < 0) fail(ErrorCode::unknown_camera, "unknown camera id " + std::to_string(camera_id));

    std::vector<double> x(net.input_dim());
    x[0] = t_norm;
    for (int i = 0; i < net.embed_dim; ++i) x[1 + i] = net.embeddings[row][i];

    if (cache) {
        cache->t_norm = t_norm;
        cache->camera_id = camera_id;
        cache->input = x;
        cache->acts.assign(net.depth, {});
    }

    std::vector<double> cur = x;
    for (int l = 0; l < net.depth; ++l) {
        int in = static_cast<int>(cur.size());
        std::vector<double> next(net.hidden);
        const double* w = net.weights[l].data();
        for (int o = 0; o < net.hidden; ++o) {
            double acc = net.biases[l][o];
            const double* wr = w + static_cast<size_t>(o) * in;
            for (int i = 0; i < in; ++i) acc += wr[i] * cur[i];
            next[o] = acc;
        }
        if (l + 1 < net.depth)
            for (auto& v : next) v = std::max(v, 0.0);
        if (cache) cache->acts[l] = next;
        cur = std::move(next);
    }

    ShEnv env;
    int coeff = 0;
    for (int band = 0; band < 3; ++band) {
        int n = 2 * band + 1;
        for (int k = 0; k < n; ++k, ++coeff) {
            Vec3 c;
            for (int ch = 0; ch < 3; ++ch) {
                int o = k * 3 + ch;
                double acc = net.head_b[band][o];
                const double* wr = net.head_w[band].data() + static_cast<size_t>(o) * net.hidden;
                for (int i = 0; i < net.hidden; ++i) acc += wr[i] * cur[i];
                (ch == 0 ? c.x : ch == 1 ? c.y : c.z) = acc;
            }
            env.coeffs[coeff] = c;
        }
    }
    return env;
}

void illum_backward(const IllumNet& net, const IllumCache& cache, double t_norm, int camera_id,
                    const std::array<Vec3, kShCount>& d_env, IllumNetGrad& grad) {
    if (cache.t_norm != t_norm || cache.camera_id != camera_id || cache.acts.empty())
        fail(ErrorCode::stale_cache, "illum backward inputs do not match cached forward pass");

    const std::vector<double>& latent = cache.acts[net.depth - 1];
    std::vector<double> d_latent(net.hidden, 0.0);

    int coeff = 0;
    for (int band = 0; band < 3; ++band) {
        int n = 2 * band + 1;
        for (int k = 0; k < n; ++k, ++coeff) {
            for (int ch = 0; ch < 3; ++ch) {
                double up = ch == 0 ? d_env[coeff].x : ch == 1 ? d_env[coeff].y : d_env[coeff].z;
                if (up == 0.0) continue;
                int o = k * 3 + ch;
                grad.head_b[band][o] += up;
                double* gw = grad.head_w[band].data() + static_cast<size_t>(o) * net.hidden;
                const double* wr = net.head_w[band].data() + static_cast<size_t>(o) * net.hidden;
                for (int i = 0; i < net.hidden; ++i) {
                    gw[i] += up * latent[i];
                    d_latent[i] += up * wr[i];
                }
            }
        }
    }

    std::vector<double> d_cur = std::move(d_latent);
    for (int l = net.depth - 1; l >= 0; --l) {
        const std::vector<double>& in_act = l == 0 ? cache.input : cache.acts[l - 1];
        int in = static_cast<int>(in_act.size());
        // ReLU applied on layers 0..depth-2 outputs.
        if (l + 1 < net.depth)
            for (int o = 0; o < net.hidden; ++o)
                if (cache.acts[l][o] <= 0.0) d_cur[o] = 0.0;
        std::vector<double> d_in(in, 0.0);
        for (int o = 0; o < net.hidden; ++o) {
            double up = d_cur[o];
            grad.biases[l][o] += up;
            if (up == 0.0) continue;
            double* gw = grad.weights[l].data() + static_cast<size_t>(o) * in;
            const double* wr = net.weights[l].data() + static_cast<size_t>(o) * in;
            for (int i = 0; i < in; ++i) {
                gw[i] += up * in_act[i];
                d_in[i] += up * wr[i];
            }
        }
        d_cur = std::move(d_in);
    }

    int row = net.embedding_row(camera_id);
    for (int i = 0; i < net.embed_dim; ++i) grad.embeddings[row][i] += d_cur[1 + i];
}

Vec3 diffuse_shade_preclamp(const Vec3& albedo, const Vec3& normal, const ShEnv& env) {
    auto basis = eval_sh_basis(normal);
    auto a = cosine_lobe_factors();
    Vec3 s{0, 0, 0};
    for (int k = 0; k < kShCount; ++k) s += env.coeffs[k] * (a[kShBand[k]] * basis[k]);
    return cmul(albedo, s) / kPi;
}

Vec3 diffuse_shade(const Vec3& albedo, const Vec3& normal, const ShEnv& env) {
    return cmax(diffuse_shade_preclamp(albedo, normal, env), 0.0);
}

DiffuseGrad diffuse_shade_backward(const Vec3& albedo, const Vec3& normal, const ShEnv& env,
                                   const Vec3& upstream) {
    DiffuseGrad g;
    auto basis = eval_sh_basis(normal);
    auto basis_grad = eval_sh_basis_grad(normal);
    auto a = cosine_lobe_factors();

    Vec3 s{0, 0, 0};
    for (int k = 0; k < kShCount; ++k) s += env.coeffs[k] * (a[kShBand[k]] * basis[k]);
    Vec3 pre = cmul(albedo, s) / kPi;

    // Clamp subgradient: channels clamped at zero receive nothing.
    Vec3 up{pre.x > 0 ? upstream.x : 0, pre.y > 0 ? upstream.y : 0, pre.z > 0 ? upstream.z : 0};

    g.d_albedo = cmul(up, s) / kPi;
    Vec3 ab = cmul(up, albedo) / kPi;
    for (int k = 0; k < kShCount; ++k) {
        double w = a[kShBand[k]];
        g.d_env[k] = ab * (w * basis[k]);
        g.d_normal += basis_grad[k] * (w * dot(ab, env.coeffs[k]));
    }
    return g;
}

}  // namespace nsplat
