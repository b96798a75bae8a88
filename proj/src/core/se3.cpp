#include "se3.hpp"

namespace nsplat {

Vec3 se3_apply(const Se3Pose& pose, const Vec3& p) {
    return quat_to_mat(pose.rotation) * p + pose.translation;
}

Se3Pose se3_compose(const Se3Pose& a, const Se3Pose& b) {
    Se3Pose r;
    r.rotation = normalized(quat_mul(a.rotation, b.rotation));
    r.translation = quat_to_mat(a.rotation) * b.translation + a.translation;
    return r;
}

Se3Pose se3_inverse(const Se3Pose& pose) {
    Se3Pose r;
    r.rotation = quat_conj(pose.rotation);
    r.translation = -(quat_to_mat(r.rotation) * pose.translation);
    return r;
}

Mat3 build_covariance(const Vec4& q, const Vec3& s) {
    Mat3 r = quat_to_mat(q);
    Mat3 sigma;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            sigma.m[i][j] = r.m[i][0] * r.m[j][0] * s.x * s.x + r.m[i][1] * r.m[j][1] * s.y * s.y +
                            r.m[i][2] * r.m[j][2] * s.z * s.z;
    return sigma;
}

Vec4 rotation_backward(const Vec4& q, const Mat3& g) {
    double w = q.w, x = q.x, y = q.y, z = q.z;
    Vec4 d;
    d.w = 2 * (-z * g.m[0][1] + y * g.m[0][2] + z * g.m[1][0] - x * g.m[1][2] - y * g.m[2][0] + x * g.m[2][1]);
    d.x = 2 * (y * g.m[0][1] + z * g.m[0][2] + y * g.m[1][0] - 2 * x * g.m[1][1] - w * g.m[1][2] +
               z * g.m[2][0] + w * g.m[2][1] - 2 * x * g.m[2][2]);
    d.y = 2 * (-2 * y * g.m[0][0] + x * g.m[0][1] + w * g.m[0][2] + x * g.m[1][0] + z * g.m[1][2] -
               w * g.m[2][0] + z * g.m[2][1] - 2 * y * g.m[2][2]);
    d.z = 2 * (-2 * z * g.m[0][0] - w * g.m[0][1] + x * g.m[0][2] + w * g.m[1][0] - 2 * z * g.m[1][1] +
               y * g.m[1][2] + x * g.m[2][0] + y * g.m[2][1]);
    return d;
}

void build_covariance_backward(const Vec4& q, const Vec3& s, const Mat3& d_sigma,
                               Vec4& d_q, Vec3& d_s) {
    Mat3 r = quat_to_mat(q);
    // M = R diag(s); Sigma = M M^T; dL/dM = (G + G^T) M.
    Mat3 gsym;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            gsym.m[i][j] = d_sigma.m[i][j] + d_sigma.m[j][i];
    double sv[3] = {s.x, s.y, s.z};
    Mat3 d_m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double mv = 0;
            for (int k = 0; k < 3; ++k) mv += gsym.m[i][k] * r.m[k][j] * sv[j];
            d_m.m[i][j] = mv;
        }
    // dL/dR = dL/dM diag(s); dL/ds_j = sum_i R_ij dL/dM_ij.
    Mat3 d_r;
    double ds[3] = {0, 0, 0};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            d_r.m[i][j] = d_m.m[i][j] * sv[j];
            ds[j] += r.m[i][j] * d_m.m[i][j];
        }
    d_q += rotation_backward(q, d_r);
    d_s += Vec3{ds[0], ds[1], ds[2]};
}

}  // namespace nsplat
