#include "asg.hpp"

namespace nsplat {

double asg_scalar(const Vec3& v, const Vec3& ax, const Vec3& ay, const Vec3& az, double lam, double mu) {
    double s = dot(v, az);
    if (s <= 0) return 0.0;
    double dx = dot(v, ax), dy = dot(v, ay);
    return s * std::exp(-lam * dx * dx - mu * dy * dy);
}

AsgScalarGrad asg_scalar_backward(const Vec3& v, const Vec3& ax, const Vec3& ay, const Vec3& az,
                                  double lam, double mu, double upstream) {
    AsgScalarGrad g;
    double s = dot(v, az);
    if (s <= 0 || upstream == 0.0) return g;
    double dx = dot(v, ax), dy = dot(v, ay);
    double e = std::exp(-lam * dx * dx - mu * dy * dy);
    double f = s * e;

    // f = s * e;  de/d(dx) = -2 lam dx e, etc.
    double gf = upstream;
    double gs = gf * e;
    double gdx = gf * s * e * (-2.0 * lam * dx);
    double gdy = gf * s * e * (-2.0 * mu * dy);
    g.d_lam = gf * f * (-dx * dx);
    g.d_mu = gf * f * (-dy * dy);
    g.d_v = az * gs + ax * gdx + ay * gdy;
    g.d_az = v * gs;
    g.d_ax = v * gdx;
    g.d_ay = v * gdy;
    return g;
}

Vec3 eval_asg(const Vec3& v, const AsgLobe& lobe) {
    Mat3 frame = quat_to_mat(lobe.frame_q);
    double s = asg_scalar(v, frame.col(0), frame.col(1), frame.col(2), lobe.sharp_x, lobe.sharp_y);
    return lobe.amplitude * s;
}

std::optional<SgNdf> ndf_as_sg(double roughness, double n_dot_wo) {
    if (n_dot_wo <= 0) return std::nullopt;
    double alpha = roughness * roughness;
    double a2 = alpha * alpha;
    SgNdf sg;
    sg.nu = (2.0 / a2) / (4.0 * n_dot_wo);
    sg.a_ndf = 1.0 / (kPi * a2);
    return sg;
}

}  // namespace nsplat
