#include "shading.hpp"

namespace nsplat {

ShadingContext make_context(const Vec3& normal_unit, const Vec3& gaussian_pos, const Vec3& cam_pos) {
    ShadingContext ctx;
    ctx.n = normal_unit;
    ctx.w_o = normalized(cam_pos - gaussian_pos);
    ctx.n_dot_wo = dot(ctx.n, ctx.w_o);
    ctx.w_r = 2.0 * ctx.n_dot_wo * ctx.n - ctx.w_o;
    return ctx;
}

Vec3 fresnel_schlick(double h_dot_wo, const Vec3& albedo, double metallic) {
    Vec3 f0 = Vec3{0.04, 0.04, 0.04} * (1.0 - metallic) + albedo * metallic;
    double p = std::pow(1.0 - h_dot_wo, 5.0);
    return f0 + (Vec3{1, 1, 1} - f0) * p;
}

double smith_geometry(double n_dot_wi, double n_dot_wo, double roughness) {
    double a = roughness * roughness;
    double a2 = a * a;
    double di = std::sqrt(a2 + (1.0 - a2) * n_dot_wi * n_dot_wi);
    double dd = std::sqrt(a2 + (1.0 - a2) * n_dot_wo * n_dot_wo);
    return 2.0 * n_dot_wi * n_dot_wo / (n_dot_wo * di + n_dot_wi * dd);
}

namespace {

struct LobeActivated {
    Vec4 q;  // unit
    Vec3 ax, ay, az;
    double lam, mu;
    Vec3 amp;
};

LobeActivated activate_lobe(const AsgLobeRaw& raw, const Vec4& world_q) {
    LobeActivated l;
    l.q = normalized(world_q);
    Mat3 r = quat_to_mat(l.q);
    l.ax = r.col(0);
    l.ay = r.col(1);
    l.az = r.col(2);
    l.lam = std::exp(raw.log_sharp_x);
    l.mu = std::exp(raw.log_sharp_y);
    l.amp = {softplus(raw.amp_raw.x), softplus(raw.amp_raw.y), softplus(raw.amp_raw.z)};
    return l;
}

Vec3 sh_incident(const GaussianPrimitive& g, const Vec3& w_r) {
    Vec3 acc{0, 0, 0};
    if (g.spec_sh.size() != kSpecShCoeffs) return acc;
    auto basis = eval_sh_basis(w_r);
    for (int k = 0; k < kShCount; ++k) {
        acc.x += g.spec_sh[k * 3 + 0] * basis[k];
        acc.y += g.spec_sh[k * 3 + 1] * basis[k];
        acc.z += g.spec_sh[k * 3 + 2] * basis[k];
    }
    return acc;
}

}  // namespace

Vec3 specular_shade(const ResolvedGaussian& g, const ActivatedMaterial& mat, const ShadingContext& ctx,
                    const ShadeSwitches& sw) {
    if (!sw.specular || ctx.degenerate()) return {0, 0, 0};

    if (!sw.brdf_constraint) {
        Vec3 acc{0, 0, 0};
        for (int i = 0; i < kAsgLobes; ++i) {
            LobeActivated l = activate_lobe(g.src->asg[i], g.lobe_frame[i]);
            double s = asg_scalar(ctx.w_r, l.ax, l.ay, l.az, l.lam, l.mu);
            acc += l.amp * s;
        }
        return acc;
    }

    double r_eff = std::max(mat.roughness, kRoughnessFloor);
    auto sg = ndf_as_sg(r_eff, ctx.n_dot_wo);
    if (!sg) return {0, 0, 0};

    Vec3 h = normalized(ctx.w_o + ctx.w_r);
    double c_h = std::clamp(dot(h, ctx.w_o), 0.0, 1.0);
    Vec3 f = fresnel_schlick(c_h, mat.albedo, mat.metallic);
    double n_dot_wr = dot(ctx.n, ctx.w_r);
    if (n_dot_wr <= 0) return {0, 0, 0};
    double geom = smith_geometry(n_dot_wr, ctx.n_dot_wo, r_eff);

    Vec3 acc{0, 0, 0};
    if (sw.sh_specular) {
        acc = cmax(sh_incident(*g.src, ctx.w_r), 0.0);
    } else {
        for (int i = 0; i < kAsgLobes; ++i) {
            LobeActivated l = activate_lobe(g.src->asg[i], g.lobe_frame[i]);
            double lam_w = sg->nu * l.lam / (sg->nu + l.lam);
            double mu_w = sg->nu * l.mu / (sg->nu + l.mu);
            double p = kPi / std::sqrt((sg->nu + l.lam) * (sg->nu + l.mu));
            double s = asg_scalar(ctx.w_r, l.ax, l.ay, l.az, lam_w, mu_w);
            acc += l.amp * (sg->a_ndf * p * s);
        }
    }
    return cmul(f, acc) * geom;
}

ShadeResult shade_gaussian(const ResolvedGaussian& g, const ActivatedMaterial& mat,
                           const ShadingContext& ctx, const ShEnv& env, const ShadeSwitches& sw) {
    ShadeResult r;
    r.diffuse_hdr = sw.diffuse ? diffuse_shade(mat.albedo, ctx.n, env) : Vec3{0, 0, 0};
    r.specular_hdr = specular_shade(g, mat, ctx, sw);
    r.hdr = r.diffuse_hdr + r.specular_hdr;
    r.ldr = reinhard(r.hdr);
    Vec3 denom{1 + r.hdr.x, 1 + r.hdr.y, 1 + r.hdr.z};
    r.ldr_diffuse = {r.diffuse_hdr.x / denom.x, r.diffuse_hdr.y / denom.y, r.diffuse_hdr.z / denom.z};
    r.ldr_specular = {r.specular_hdr.x / denom.x, r.specular_hdr.y / denom.y, r.specular_hdr.z / denom.z};
    return r;
}

ShadeGrads shade_gaussian_backward(const ResolvedGaussian& g, const ActivatedMaterial& mat,
                                   const ShadingContext& ctx, const ShEnv& env, const ShadeSwitches& sw,
                                   const Vec3& d_ldr) {
    ShadeGrads out;

    Vec3 l_d = sw.diffuse ? diffuse_shade(mat.albedo, ctx.n, env) : Vec3{0, 0, 0};
    Vec3 l_s = specular_shade(g, mat, ctx, sw);
    Vec3 hdr = l_d + l_s;

    // Reinhard: d(x/(1+x))/dx = 1/(1+x)^2.
    Vec3 d_hdr{d_ldr.x / ((1 + hdr.x) * (1 + hdr.x)), d_ldr.y / ((1 + hdr.y) * (1 + hdr.y)),
               d_ldr.z / ((1 + hdr.z) * (1 + hdr.z))};

    if (sw.diffuse) {
        DiffuseGrad dg = diffuse_shade_backward(mat.albedo, ctx.n, env, d_hdr);
        out.d_albedo += dg.d_albedo;
        out.d_normal += dg.d_normal;
        for (int k = 0; k < kShCount; ++k) out.d_env[k] += dg.d_env[k];
    }

    Vec3 d_wr{0, 0, 0};
    double d_ndw = 0;  // gradient on n_dot_wo as a separate intermediate

    if (sw.specular && !ctx.degenerate()) {
        const Vec3& d_ls = d_hdr;

        if (!sw.brdf_constraint) {
            for (int i = 0; i < kAsgLobes; ++i) {
                LobeActivated l = activate_lobe(g.src->asg[i], g.lobe_frame[i]);
                double s = asg_scalar(ctx.w_r, l.ax, l.ay, l.az, l.lam, l.mu);
                out.d_amp[i] += d_ls * s;
                double d_s = dot(d_ls, l.amp);
                AsgScalarGrad ag = asg_scalar_backward(ctx.w_r, l.ax, l.ay, l.az, l.lam, l.mu, d_s);
                d_wr += ag.d_v;
                out.d_sharp_x[i] += ag.d_lam;
                out.d_sharp_y[i] += ag.d_mu;
                Mat3 d_r;
                for (int row = 0; row < 3; ++row) {
                    d_r.m[row][0] = ag.d_ax[row];
                    d_r.m[row][1] = ag.d_ay[row];
                    d_r.m[row][2] = ag.d_az[row];
                }
                out.d_lobe_q[i] += rotation_backward(l.q, d_r);
            }
        } else {
            double r_eff = std::max(mat.roughness, kRoughnessFloor);
            auto sg = ndf_as_sg(r_eff, ctx.n_dot_wo);
            if (sg) {
                double nu = sg->nu, a_ndf = sg->a_ndf;
                Vec3 h_raw = ctx.w_o + ctx.w_r;
                Vec3 h = normalized(h_raw);
                double c_h_raw = dot(h, ctx.w_o);
                double c_h = std::clamp(c_h_raw, 0.0, 1.0);
                Vec3 f = fresnel_schlick(c_h, mat.albedo, mat.metallic);
                double mu_i = dot(ctx.n, ctx.w_r);
                double mu_o = ctx.n_dot_wo;
                double geom = mu_i > 0 ? smith_geometry(mu_i, mu_o, r_eff) : 0.0;

                if (mu_i > 0) {
                    Vec3 acc{0, 0, 0};
                    double d_nu = 0, d_andf = 0;

                    if (sw.sh_specular) {
                        Vec3 inc = sh_incident(*g.src, ctx.w_r);
                        Vec3 incp = cmax(inc, 0.0);
                        acc = incp;
                        Vec3 d_acc = cmul(d_ls, f) * geom;
                        Vec3 d_inc{inc.x > 0 ? d_acc.x : 0, inc.y > 0 ? d_acc.y : 0, inc.z > 0 ? d_acc.z : 0};
                        if (g.src->spec_sh.size() == kSpecShCoeffs) {
                            auto basis = eval_sh_basis(ctx.w_r);
                            auto basis_grad = eval_sh_basis_grad(ctx.w_r);
                            for (int k = 0; k < kShCount; ++k) {
                                out.d_spec_sh[k * 3 + 0] += d_inc.x * basis[k];
                                out.d_spec_sh[k * 3 + 1] += d_inc.y * basis[k];
                                out.d_spec_sh[k * 3 + 2] += d_inc.z * basis[k];
                                Vec3 coeff{g.src->spec_sh[k * 3 + 0], g.src->spec_sh[k * 3 + 1],
                                           g.src->spec_sh[k * 3 + 2]};
                                d_wr += basis_grad[k] * dot(d_inc, coeff);
                            }
                        }
                    } else {
                        for (int i = 0; i < kAsgLobes; ++i) {
                            LobeActivated l = activate_lobe(g.src->asg[i], g.lobe_frame[i]);
                            double lam_w = nu * l.lam / (nu + l.lam);
                            double mu_w = nu * l.mu / (nu + l.mu);
                            double p = kPi / std::sqrt((nu + l.lam) * (nu + l.mu));
                            double s = asg_scalar(ctx.w_r, l.ax, l.ay, l.az, lam_w, mu_w);
                            acc += l.amp * (a_ndf * p * s);

                            Vec3 d_acc = cmul(d_ls, f) * geom;
                            out.d_amp[i] += d_acc * (a_ndf * p * s);
                            double common = dot(d_acc, l.amp);
                            d_andf += common * p * s;
                            double d_p = common * a_ndf * s;
                            double d_s = common * a_ndf * p;

                            AsgScalarGrad ag =
                                asg_scalar_backward(ctx.w_r, l.ax, l.ay, l.az, lam_w, mu_w, d_s);
                            d_wr += ag.d_v;
                            Mat3 d_r;
                            for (int row = 0; row < 3; ++row) {
                                d_r.m[row][0] = ag.d_ax[row];
                                d_r.m[row][1] = ag.d_ay[row];
                                d_r.m[row][2] = ag.d_az[row];
                            }
                            out.d_lobe_q[i] += rotation_backward(l.q, d_r);

                            // Warp: lam_w = nu*lam/(nu+lam), p = pi/sqrt((nu+lam)(nu+mu)).
                            double sl = nu + l.lam, sm = nu + l.mu;
                            double d_lam = ag.d_lam * (nu * nu) / (sl * sl) - d_p * p / (2 * sl);
                            double d_mu = ag.d_mu * (nu * nu) / (sm * sm) - d_p * p / (2 * sm);
                            d_nu += ag.d_lam * (l.lam * l.lam) / (sl * sl) +
                                    ag.d_mu * (l.mu * l.mu) / (sm * sm) -
                                    d_p * p * 0.5 * (1.0 / sl + 1.0 / sm);
                            out.d_sharp_x[i] += d_lam;
                            out.d_sharp_y[i] += d_mu;
                        }
                    }

                    // L_s = geom * f * acc (componentwise in f, acc).
                    double d_geom = dot(d_ls, cmul(f, acc));
                    Vec3 d_f = cmul(d_ls, acc) * geom;

                    // Fresnel.
                    double pow5 = std::pow(1.0 - c_h, 5.0);
                    Vec3 f0 = Vec3{0.04, 0.04, 0.04} * (1.0 - mat.metallic) + mat.albedo * mat.metallic;
                    Vec3 d_f0 = d_f * (1.0 - pow5);
                    double d_ch = 0;
                    if (c_h_raw > 0.0 && c_h_raw < 1.0)
                        d_ch = -5.0 * std::pow(1.0 - c_h, 4.0) * hsum(cmul(d_f, Vec3{1, 1, 1} - f0));
                    out.d_metallic += hsum(cmul(d_f0, mat.albedo - Vec3{0.04, 0.04, 0.04}));
                    out.d_albedo += d_f0 * mat.metallic;

                    // c_h = dot(h, w_o); h = normalize(w_o + w_r).
                    Vec3 d_h = ctx.w_o * d_ch;
                    out.d_w_o += h * d_ch;
                    Vec3 d_hraw = normalize_backward(h_raw, d_h);
                    out.d_w_o += d_hraw;
                    d_wr += d_hraw;

                    // Smith gradient.
                    {
                        double a = r_eff * r_eff;
                        double a2 = a * a;
                        double di = std::sqrt(a2 + (1 - a2) * mu_i * mu_i);
                        double dd = std::sqrt(a2 + (1 - a2) * mu_o * mu_o);
                        double den = mu_o * di + mu_i * dd;
                        double d_den = -geom / den * d_geom;
                        double d_mui = 2.0 * mu_o / den * d_geom + d_den * (mu_o * (1 - a2) * mu_i / di + dd);
                        double d_muo = 2.0 * mu_i / den * d_geom + d_den * (mu_i * (1 - a2) * mu_o / dd + di);
                        double d_a2 = d_den * (mu_o * (1 - mu_i * mu_i) / (2 * di) +
                                               mu_i * (1 - mu_o * mu_o) / (2 * dd));
                        // mu_i = dot(n, w_r).
                        out.d_normal += ctx.w_r * d_mui;
                        d_wr += ctx.n * d_mui;
                        d_ndw += d_muo;
                        // alpha2 = r_eff^4; nu = 1/(2 a2 c); a_ndf = 1/(pi a2).
                        double c = ctx.n_dot_wo;
                        d_a2 += d_nu * (-1.0 / (2.0 * a2 * a2 * c)) + d_andf * (-1.0 / (kPi * a2 * a2));
                        d_ndw += d_nu * (-nu / c);
                        if (mat.roughness > kRoughnessFloor)
                            out.d_roughness += d_a2 * 4.0 * r_eff * r_eff * r_eff;
                    }
                }
            }
        }

        // w_r = 2 (n.w_o) n - w_o.
        double c = ctx.n_dot_wo;
        out.d_normal += 2.0 * c * d_wr + 2.0 * dot(d_wr, ctx.n) * ctx.w_o;
        out.d_w_o += 2.0 * dot(d_wr, ctx.n) * ctx.n - d_wr;
    }

    // n_dot_wo as an explicit intermediate.
    out.d_normal += ctx.w_o * d_ndw;
    out.d_w_o += ctx.n * d_ndw;
    return out;
}

}  // namespace nsplat
