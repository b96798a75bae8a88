#pragma once

#include <array>

#include "math.hpp"

namespace nsplat {

// Real spherical harmonics up to band 2, graphics normalization, no
// Condon-Shortley phase. Fixed coefficient ordering:
//   (0,0), (1,-1), (1,0), (1,1), (2,-2), (2,-1), (2,0), (2,1), (2,2)
inline constexpr int kShCount = 9;

using ShBasis2 = std::array<double, kShCount>;

ShBasis2 eval_sh_basis(const Vec3& dir);

// d(basis[k])/d(dir) for all k; rows follow the coefficient ordering.
std::array<Vec3, kShCount> eval_sh_basis_grad(const Vec3& dir);

// Clamped-cosine convolution factors A_0, A_1, A_2 turning incident-radiance
// SH into irradiance SH for a Lambertian surface.
std::array<double, 3> cosine_lobe_factors();

// Band index l for each coefficient slot.
inline constexpr int kShBand[kShCount] = {0, 1, 1, 1, 2, 2, 2, 2, 2};

}  // namespace nsplat
