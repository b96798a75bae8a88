#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace nsplat {

constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
    double x = 0, y = 0;
};

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline Vec3 cmul(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) { return v / norm(v); }
inline Vec3 cmax(const Vec3& v, double s) { return {std::max(v.x, s), std::max(v.y, s), std::max(v.z, s)}; }
inline double hsum(const Vec3& v) { return v.x + v.y + v.z; }

// d/dv of normalized(v), applied to an upstream gradient g.
inline Vec3 normalize_backward(const Vec3& v, const Vec3& g) {
    double n = norm(v);
    Vec3 u = v / n;
    return (g - u * dot(u, g)) / n;
}

struct Vec4 {
    double w = 0, x = 0, y = 0, z = 0;

    Vec4 operator+(const Vec4& o) const { return {w + o.w, x + o.x, y + o.y, z + o.z}; }
    Vec4 operator*(double s) const { return {w * s, x * s, y * s, z * s}; }
    Vec4& operator+=(const Vec4& o) { w += o.w; x += o.x; y += o.y; z += o.z; return *this; }
};

inline double dot(const Vec4& a, const Vec4& b) { return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec4& v) { return std::sqrt(dot(v, v)); }
inline Vec4 normalized(const Vec4& v) { double n = norm(v); return {v.w / n, v.x / n, v.y / n, v.z / n}; }

inline Vec4 normalize_backward(const Vec4& v, const Vec4& g) {
    double n = norm(v);
    Vec4 u = normalized(v);
    double ug = dot(u, g);
    return {(g.w - u.w * ug) / n, (g.x - u.x * ug) / n, (g.y - u.y * ug) / n, (g.z - u.z * ug) / n};
}

// Row-major 3x3.
struct Mat3 {
    double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};

    static Mat3 identity() {
        Mat3 r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = 1;
        return r;
    }

    Vec3 row(int i) const { return {m[i][0], m[i][1], m[i][2]}; }
    Vec3 col(int j) const { return {m[0][j], m[1][j], m[2][j]}; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[i][j] = m[j][i];
        return r;
    }
};

// Multiply by the transpose without materializing it.
inline Vec3 mul_transposed(const Mat3& a, const Vec3& v) {
    return {a.m[0][0] * v.x + a.m[1][0] * v.y + a.m[2][0] * v.z,
            a.m[0][1] * v.x + a.m[1][1] * v.y + a.m[2][1] * v.z,
            a.m[0][2] * v.x + a.m[1][2] * v.y + a.m[2][2] * v.z};
}

// Quaternion (w, x, y, z); rotation helpers assume unit input unless noted.
inline Mat3 quat_to_mat(const Vec4& q) {
    double w = q.w, x = q.x, y = q.y, z = q.z;
    Mat3 r;
    r.m[0][0] = 1 - 2 * (y * y + z * z);
    r.m[0][1] = 2 * (x * y - w * z);
    r.m[0][2] = 2 * (x * z + w * y);
    r.m[1][0] = 2 * (x * y + w * z);
    r.m[1][1] = 1 - 2 * (x * x + z * z);
    r.m[1][2] = 2 * (y * z - w * x);
    r.m[2][0] = 2 * (x * z - w * y);
    r.m[2][1] = 2 * (y * z + w * x);
    r.m[2][2] = 1 - 2 * (x * x + y * y);
    return r;
}

inline Vec4 quat_mul(const Vec4& a, const Vec4& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline Vec4 quat_conj(const Vec4& q) { return {q.w, -q.x, -q.y, -q.z}; }

// Gradient of quat_mul(a, b) w.r.t. b for fixed a (left multiplication is linear in b).
inline Vec4 quat_mul_backward_b(const Vec4& a, const Vec4& g) {
    // dL/db = M_a^T * g where quat_mul(a, b) = M_a * b.
    return {a.w * g.w + a.x * g.x + a.y * g.y + a.z * g.z,
            -a.x * g.w + a.w * g.x + a.z * g.y - a.y * g.z,
            -a.y * g.w - a.z * g.x + a.w * g.y + a.x * g.z,
            -a.z * g.w + a.y * g.x - a.x * g.y + a.w * g.z};
}

// Orthonormal basis completion: returns two vectors spanning the plane normal to n.
inline void tangent_frame(const Vec3& n, Vec3& t1, Vec3& t2) {
    Vec3 a = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    t1 = normalized(cross(a, n));
    t2 = cross(n, t1);
}

// Rotation matrix (orthonormal, det 1) to quaternion, w >= 0.
inline Vec4 mat_to_quat(const Mat3& m) {
    Vec4 q;
    double tr = m.m[0][0] + m.m[1][1] + m.m[2][2];
    if (tr > 0) {
        double s = std::sqrt(tr + 1.0) * 2;
        q = {0.25 * s, (m.m[2][1] - m.m[1][2]) / s, (m.m[0][2] - m.m[2][0]) / s,
             (m.m[1][0] - m.m[0][1]) / s};
    } else if (m.m[0][0] > m.m[1][1] && m.m[0][0] > m.m[2][2]) {
        double s = std::sqrt(1.0 + m.m[0][0] - m.m[1][1] - m.m[2][2]) * 2;
        q = {(m.m[2][1] - m.m[1][2]) / s, 0.25 * s, (m.m[0][1] + m.m[1][0]) / s,
             (m.m[0][2] + m.m[2][0]) / s};
    } else if (m.m[1][1] > m.m[2][2]) {
        double s = std::sqrt(1.0 + m.m[1][1] - m.m[0][0] - m.m[2][2]) * 2;
        q = {(m.m[0][2] - m.m[2][0]) / s, (m.m[0][1] + m.m[1][0]) / s, 0.25 * s,
             (m.m[1][2] + m.m[2][1]) / s};
    } else {
        double s = std::sqrt(1.0 + m.m[2][2] - m.m[0][0] - m.m[1][1]) * 2;
        q = {(m.m[1][0] - m.m[0][1]) / s, (m.m[0][2] + m.m[2][0]) / s, (m.m[1][2] + m.m[2][1]) / s,
             0.25 * s};
    }
    if (q.w < 0) q = q * -1.0;
    return normalized(q);
}

// Smallest rotation taking unit vector a onto unit vector b.
inline Vec4 quat_from_to(const Vec3& a, const Vec3& b) {
    double d = dot(a, b);
    if (d > 1.0 - 1e-12) return {1, 0, 0, 0};
    if (d < -1.0 + 1e-12) {
        Vec3 t1, t2;
        tangent_frame(a, t1, t2);
        return {0, t1.x, t1.y, t1.z};  // 180 degrees about any perpendicular axis
    }
    Vec3 c = cross(a, b);
    Vec4 q{1.0 + d, c.x, c.y, c.z};
    return normalized(q);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double softplus(double x) { return x > 30 ? x : std::log1p(std::exp(x)); }
inline double softplus_inv(double y) { return y > 30 ? y : std::log(std::expm1(y)); }

// Deterministic RNG helpers. std::mt19937 raw output is pinned by the standard;
// the distributions below are hand-rolled so streams do not depend on the
// standard library implementation.
struct Rng {
    std::mt19937 gen;
    explicit Rng(uint64_t seed) : gen(static_cast<uint32_t>(seed ^ (seed >> 32))) {}

    double uniform() {  // [0, 1), 53-bit
        uint64_t a = gen() >> 5, b = gen() >> 6;
        return (a * 67108864.0 + b) * (1.0 / 9007199254740992.0);
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int n) { return static_cast<int>(uniform() * n) % n; }
    double normal() {  // Box-Muller
        double u1 = std::max(uniform(), 1e-12), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }
    Vec3 unit_vec() {
        double z = uniform(-1.0, 1.0);
        double phi = uniform(0.0, 2.0 * kPi);
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        return {r * std::cos(phi), r * std::sin(phi), z};
    }
};

}  // namespace nsplat
