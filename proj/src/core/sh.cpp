#include "sh.hpp"

namespace nsplat {

namespace {
// sqrt(1/(4pi)), sqrt(3/(4pi)), sqrt(15/(4pi)), sqrt(5/(16pi)), sqrt(15/(16pi))
constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2 = 1.0925484305920792;
constexpr double kC3 = 0.31539156525252005;
constexpr double kC4 = 0.5462742152960396;
}  // namespace

ShBasis2 eval_sh_basis(const Vec3& d) {
    return {
        kC0,
        kC1 * d.y,
        kC1 * d.z,
        kC1 * d.x,
        kC2 * d.x * d.y,
        kC2 * d.y * d.z,
        kC3 * (3.0 * d.z * d.z - 1.0),
        kC2 * d.x * d.z,
        kC4 * (d.x * d.x - d.y * d.y),
    };
}

std::array<Vec3, kShCount> eval_sh_basis_grad(const Vec3& d) {
    return {{
        {0, 0, 0},
        {0, kC1, 0},
        {0, 0, kC1},
        {kC1, 0, 0},
        {kC2 * d.y, kC2 * d.x, 0},
        {0, kC2 * d.z, kC2 * d.y},
        {0, 0, kC3 * 6.0 * d.z},
        {kC2 * d.z, 0, kC2 * d.x},
        {kC4 * 2.0 * d.x, -kC4 * 2.0 * d.y, 0},
    }};
}

std::array<double, 3> cosine_lobe_factors() {
    return {kPi, 2.0 * kPi / 3.0, kPi / 4.0};
}

}  // namespace nsplat
