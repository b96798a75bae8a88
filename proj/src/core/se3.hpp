#pragma once

#include "math.hpp"

namespace nsplat {

struct Se3Pose {
    Vec4 rotation{1, 0, 0, 0};  // unit quaternion
    Vec3 translation{0, 0, 0};
};

Vec3 se3_apply(const Se3Pose& pose, const Vec3& p);
Se3Pose se3_compose(const Se3Pose& a, const Se3Pose& b);
Se3Pose se3_inverse(const Se3Pose& pose);

// Sigma = R diag(s) diag(s) R^T for a unit quaternion q and positive scales s.
Mat3 build_covariance(const Vec4& q, const Vec3& s);

// Accumulates dL/dq and dL/ds from dL/dSigma (full 3x3, not symmetrized).
void build_covariance_backward(const Vec4& q, const Vec3& s, const Mat3& d_sigma,
                               Vec4& d_q, Vec3& d_s);

// dL/dq from dL/dR for R = quat_to_mat(q), q unit.
Vec4 rotation_backward(const Vec4& q, const Mat3& d_r);

}  // namespace nsplat
