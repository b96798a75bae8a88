#include "oracles.hpp"

#include <algorithm>

namespace nsplat::testsupport {

double eval_sg_ndf(const Vec3& v, const SgNdf& sg, const Vec3& axis) {
    double c = dot(v, axis);
    if (c <= 0) return 0.0;
    double sin2 = std::max(0.0, 1.0 - c * c);
    return sg.a_ndf * std::exp(-sg.nu * sin2);
}

double sg_asg_product_integral(const SgNdf& sg, const Vec3& sg_axis, const AsgLobe& lobe,
                               int theta_steps, int phi_steps) {
    Vec3 t1, t2;
    tangent_frame(sg_axis, t1, t2);
    double sin_cap = std::sqrt(std::min(1.0, 34.0 / sg.nu));
    double theta_cap = std::min(kPi / 2.0, std::asin(sin_cap));

    Mat3 frame = quat_to_mat(normalized(lobe.frame_q));
    Vec3 ax = frame.col(0), ay = frame.col(1), az = frame.col(2);

    double dt = theta_cap / theta_steps;
    double dp = 2.0 * kPi / phi_steps;
    double acc = 0;
    for (int it = 0; it < theta_steps; ++it) {
        double theta = (it + 0.5) * dt;
        double st = std::sin(theta), ct = std::cos(theta);
        double sgv = sg.a_ndf * std::exp(-sg.nu * st * st);
        double ring = 0;
        for (int ip = 0; ip < phi_steps; ++ip) {
            double phi = (ip + 0.5) * dp;
            Vec3 v = sg_axis * ct + (t1 * std::cos(phi) + t2 * std::sin(phi)) * st;
            ring += asg_scalar(v, ax, ay, az, lobe.sharp_x, lobe.sharp_y);
        }
        acc += sgv * ring * st * dt * dp;
    }
    return acc;  // per unit lobe amplitude
}

Vec3 diffuse_mc(const Vec3& albedo, const Vec3& normal, const ShEnv& env, int samples, uint64_t seed) {
    Rng rng(seed);
    Vec3 t1, t2;
    tangent_frame(normal, t1, t2);
    Vec3 acc{0, 0, 0};
    for (int i = 0; i < samples; ++i) {
        double z = rng.uniform();  // uniform hemisphere
        double phi = rng.uniform(0.0, 2.0 * kPi);
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        Vec3 w = normal * z + (t1 * std::cos(phi) + t2 * std::sin(phi)) * r;
        auto basis = eval_sh_basis(w);
        Vec3 radiance{0, 0, 0};
        for (int k = 0; k < kShCount; ++k) radiance += env.coeffs[k] * basis[k];
        acc += radiance * z;
    }
    acc *= 2.0 * kPi / samples;
    return cmul(albedo, acc) / kPi;
}

std::array<double, 3> sym3_eigenvalues(const Mat3& m) {
    Mat3 a = m;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a.m[0][1]) + std::abs(a.m[0][2]) + std::abs(a.m[1][2]);
        if (off < 1e-14) break;
        for (int p = 0; p < 3; ++p)
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(a.m[p][q]) < 1e-18) continue;
                double theta = (a.m[q][q] - a.m[p][p]) / (2.0 * a.m[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                Mat3 r = Mat3::identity();
                r.m[p][p] = c;
                r.m[q][q] = c;
                r.m[p][q] = s;
                r.m[q][p] = -s;
                a = r.transposed() * a * r;
            }
    }
    std::array<double, 3> ev{a.m[0][0], a.m[1][1], a.m[2][2]};
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace nsplat::testsupport
