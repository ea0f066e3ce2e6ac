#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace anisolab {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Outcome of an inequality check: pass iff lhs <= rhs*(1+tol) + abs_tol,
/// with tol and abs_tol recorded in detail.
struct Report {
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  // rhs - lhs
    bool pass = false;
    std::map<std::string, double> detail;
};

inline Report makeLeqReport(double lhs, double rhs, double tol, double absTol) {
    Report r;
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = rhs - lhs;
    r.pass = lhs <= rhs * (1.0 + tol) + absTol;
    r.detail["tol"] = tol;
    r.detail["abs_tol"] = absTol;
    return r;
}

/// Deterministic RNG wrapper used by all seeded generators and samplers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(eng_);
    }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
    int uniformInt(int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(eng_);
    }

    Vec3 unitVec3() {
        Vec3 v;
        do {
            v = Vec3(normal(), normal(), normal());
        } while (v.norm() < 1e-12);
        return v.normalized();
    }
    Vec2 unitVec2() {
        Vec2 v;
        do {
            v = Vec2(normal(), normal());
        } while (v.norm() < 1e-12);
        return v.normalized();
    }

private:
    std::mt19937_64 eng_;
};

/// Quasi-uniform sphere sample (Fibonacci lattice), deterministic.
inline std::vector<Vec3> fibonacciSphere(int n) {
    std::vector<Vec3> pts;
    pts.reserve(n);
    const double golden = M_PI * (1.0 + std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) / n;
        const double phi = std::acos(1.0 - 2.0 * t);
        const double theta = golden * (i + 0.5);
        pts.emplace_back(std::cos(theta) * std::sin(phi),
                         std::sin(theta) * std::sin(phi), std::cos(phi));
    }
    return pts;
}

inline double sqr(double x) { return x * x; }

inline double posPart(double x) { return x > 0.0 ? x : 0.0; }
inline double negPart(double x) { return x < 0.0 ? -x : 0.0; }

inline double relGap(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

}  // namespace anisolab
