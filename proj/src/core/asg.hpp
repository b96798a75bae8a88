#pragma once

#include <optional>

#include "math.hpp"

namespace nsplat {

// Anisotropic spherical Gaussian lobe in activated form: orthonormal frame
// encoded as a unit quaternion (columns x, y, z of the rotation matrix),
// positive sharpness along x and y, non-negative RGB amplitude.
struct AsgLobe {
    Vec4 frame_q{1, 0, 0, 0};
    double sharp_x = 1;
    double sharp_y = 1;
    Vec3 amplitude{0, 0, 0};
};

// amplitude * max(v.z', 0) * exp(-sharp_x*(v.x')^2 - sharp_y*(v.y')^2)
// with primes denoting lobe-frame components of v.
Vec3 eval_asg(const Vec3& v, const AsgLobe& lobe);

// Scalar part of the ASG (everything except the amplitude), with the frame
// given explicitly. Shared by forward shading and its backward pass.
double asg_scalar(const Vec3& v, const Vec3& ax, const Vec3& ay, const Vec3& az, double lam, double mu);

struct AsgScalarGrad {
    Vec3 d_v;
    Vec3 d_ax, d_ay, d_az;
    double d_lam = 0, d_mu = 0;
};

AsgScalarGrad asg_scalar_backward(const Vec3& v, const Vec3& ax, const Vec3& ay, const Vec3& az,
                                  double lam, double mu, double upstream);

// Spherical-Gaussian stand-in for the microfacet normal distribution, warped
// to the reflection direction. Sharpness uses the quadratic-exponent
// convention of the ASG above, which is what the closed-form ASG product
// integral expects.
struct SgNdf {
    double nu = 0;
    double a_ndf = 0;
};

// roughness in [0.04, 1] (callers clamp), n_dot_wo > 0; returns nullopt for a
// degenerate viewing configuration.
std::optional<SgNdf> ndf_as_sg(double roughness, double n_dot_wo);

}  // namespace nsplat
