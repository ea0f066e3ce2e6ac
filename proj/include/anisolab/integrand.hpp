#pragma once

#include "anisolab/core.hpp"

#include <functional>
#include <utility>

namespace anisolab {

/// An anisotropic codimension-one integrand: a positive, even, 1-homogeneous
/// function of the surface normal, with gradient access. Immutable after
/// construction; all operations on it are pure.
struct Integrand {
    std::function<double(const Vec3&)> value;
    std::function<Vec3(const Vec3&)> gradient;
    std::string label;
};

inline double eval(const Integrand& F, const Vec3& v) { return F.value(v); }

inline Vec3 grad(const Integrand& F, const Vec3& v) {
    if (v.norm() == 0.0)
        throw std::domain_error("grad: gradient undefined at the zero vector");
    return F.gradient(v);
}

inline Integrand areaIntegrand() {
    Integrand F;
    F.value = [](const Vec3& v) { return v.norm(); };
    F.gradient = [](const Vec3& v) { return Vec3(v / v.norm()); };
    F.label = "area";
    return F;
}

/// l^p norm integrand, p in (1, inf). At points with a zero coordinate the
/// gradient component is the one-sided limit 0 (subgradient selection),
/// which keeps the gradient total and 0-homogeneous a.e.
inline Integrand lpIntegrand(double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("lpIntegrand: need p >= 1");
    Integrand F;
    F.value = [p](const Vec3& v) {
        return std::pow(std::pow(std::abs(v.x()), p) + std::pow(std::abs(v.y()), p) +
                            std::pow(std::abs(v.z()), p),
                        1.0 / p);
    };
    F.gradient = [p, val = F.value](const Vec3& v) {
        const double f = val(v);
        Vec3 g;
        for (int i = 0; i < 3; ++i) {
            const double c = v[i];
            g[i] = c == 0.0 ? 0.0
                            : std::copysign(std::pow(std::abs(c) / f, p - 1.0), c);
        }
        return g;
    };
    F.label = "lp(p=" + std::to_string(p) + ")";
    return F;
}

inline Integrand scaledIntegrand(const Integrand& F, double factor) {
    if (!(factor > 0.0)) throw std::invalid_argument("scaledIntegrand: factor must be positive");
    Integrand G;
    G.value = [f = F.value, factor](const Vec3& v) { return factor * f(v); };
    G.gradient = [g = F.gradient, factor](const Vec3& v) { return Vec3(factor * g(v)); };
    G.label = "scaled(" + F.label + ", " + std::to_string(factor) + ")";
    return G;
}

/// (1+eps)*F, the C^1 perturbation used when probing closeness to the area.
inline Integrand perturbedIntegrand(const Integrand& F, double eps) {
    return scaledIntegrand(F, 1.0 + eps);
}

/// Pushforward under a linear map: (L_*F)(v) = F(L^T v), gradient L grad F(L^T v).
inline Integrand pushforward(const Integrand& F, const Mat3& L) {
    const double d = L.determinant();
    if (std::abs(d) < 1e-12) throw std::invalid_argument("pushforward: singular map");
    Integrand G;
    G.value = [f = F.value, L](const Vec3& v) { return f(L.transpose() * v); };
    G.gradient = [g = F.gradient, L](const Vec3& v) { return Vec3(L * g(L.transpose() * v)); };
    G.label = "pushforward(" + F.label + ")";
    return G;
}

/// B_F(nu) = F(nu) I - nu (x) dF(nu). Annihilates nu by the Euler identity,
/// and is even in nu.
inline Mat3 bMatrix(const Integrand& F, const Vec3& nu) {
    if (std::abs(nu.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("bMatrix: normal must be a unit vector");
    return eval(F, nu) * Mat3::Identity() - nu * grad(F, nu).transpose();
}

/// Sampled surrogate for the C^1 distance of F to the isotropic area:
/// max over a Fibonacci-sphere sample of |F(nu)-1| + |grad F(nu) - nu|.
inline double c1DistanceToArea(const Integrand& F, int nSamples = 4096) {
    if (nSamples < 100)
        throw std::invalid_argument("c1DistanceToArea: need at least 100 samples");
    double worst = 0.0;
    for (const Vec3& nu : fibonacciSphere(nSamples)) {
        const double d = std::abs(eval(F, nu) - 1.0) + (grad(F, nu) - nu).norm();
        worst = std::max(worst, d);
    }
    return worst;
}

/// Midpoint strict-convexity probe. Samples non-parallel pairs on the sphere
/// and requires F((u+v)/2) < (F(u)+F(v))/2 - delta with the relative margin
/// delta = 1e-9 (F(u)+F(v)). Non-convex F yields pass=false, not an error.
inline Report checkConvexityAC(const Integrand& F, int nSamples = 2000,
                               std::uint64_t seed = 20240901ull) {
    Rng rng(seed);
    double worst = -std::numeric_limits<double>::infinity();
    int tested = 0;
    while (tested < nSamples) {
        const Vec3 u = rng.unitVec3();
        const Vec3 v = rng.unitVec3();
        if (u.cross(v).norm() < 1e-3) continue;  // exclude (anti)parallel pairs
        ++tested;
        const double fu = eval(F, u), fv = eval(F, v);
        const double delta = 1e-9 * (fu + fv);
        const double violation = eval(F, 0.5 * (u + v)) - (0.5 * (fu + fv) - delta);
        worst = std::max(worst, violation);
    }
    Report r = makeLeqReport(worst, 0.0, 0.0, 0.0);
    r.detail["n_samples"] = tested;
    r.detail["delta_rel"] = 1e-9;
    r.detail["worst_violation"] = worst;
    return r;
}

namespace detail {

/// Rotational monotonicity of the projected gradient, for one index pair:
/// cross of projected normals times cross of projected gradients.
inline double rotMonoExpr(const Vec3& nu, const Vec3& gnu, const Vec3& nut,
                          const Vec3& gnut, int i, int j) {
    return (nu[i] * nut[j] - nu[j] * nut[i]) * (gnu[i] * gnut[j] - gnu[j] * gnut[i]);
}

/// Symmetrized two-point determinant integrand minus its lower bound
/// nu^z dzF(nu) * nut^z dzF(nut); nonnegative under rotational monotonicity.
inline double symDetMargin(const Integrand& F, const Vec3& nu, const Vec3& nut) {
    const Vec3 g = grad(F, nu), gt = grad(F, nut);
    const double fn = eval(F, nu), fnt = eval(F, nut);
    const double a1 = nu.x() * g.x(), a2 = nu.y() * g.y(), a3 = nu.z() * g.z();
    const double b1 = nut.x() * gt.x(), b2 = nut.y() * gt.y(), b3 = nut.z() * gt.z();
    const double sym = 0.5 * (fn * b3 + fnt * a3) +
                       0.5 * (a2 * b1 + a1 * b2 - nu.x() * g.y() * nut.y() * gt.x() -
                              nut.x() * gt.y() * nu.y() * g.x());
    return sym - a3 * b3;
}

}  // namespace detail

/// Checks the coordinate-plane condition of the l^p-type theorem on sampled
/// pairs of normals: the rotational-monotonicity expression for every index
/// pair, and the symmetrized determinant lower bound. Pass iff every sampled
/// value is >= -1e-10. Requires F even in each coordinate (checked on samples).
inline Report checkTrisCondition(const Integrand& F, int nSamples = 10000,
                                 std::uint64_t seed = 20240902ull,
                                 bool requireEvenness = true) {
    Rng rng(seed);
    // precondition: F even in each coordinate (skippable for exploratory probes)
    if (requireEvenness)
        for (int t = 0; t < 64; ++t) {
            const Vec3 v = rng.unitVec3();
            for (int i = 0; i < 3; ++i) {
                Vec3 w = v;
                w[i] = -w[i];
                if (relGap(eval(F, v), eval(F, w)) > 1e-10)
                    throw std::invalid_argument(
                        "checkTrisCondition: integrand is not even in each coordinate");
            }
        }
    double minRot = std::numeric_limits<double>::infinity();
    double minSym = std::numeric_limits<double>::infinity();
    for (int s = 0; s < nSamples; ++s) {
        const Vec3 nu = rng.unitVec3();
        const Vec3 nut = rng.unitVec3();
        const Vec3 g = grad(F, nu), gt = grad(F, nut);
        for (auto [i, j] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}})
            minRot = std::min(minRot, detail::rotMonoExpr(nu, g, nut, gt, i, j));
        minSym = std::min(minSym, detail::symDetMargin(F, nu, nut));
    }
    const double margin = std::min(minRot, minSym);
    Report r = makeLeqReport(-margin, 1e-10, 0.0, 0.0);
    r.detail["min_rot_mono"] = minRot;
    r.detail["min_sym_bound"] = minSym;
    r.detail["n_samples"] = nSamples;
    return r;
}

struct ScalarLemmaResult {
    double minPos;  // min{(b^2+c^2-ab)^+, (a^2+c^2-ab)^+} >= c^2 - (a^2+b^2)/4
    double negSum;  // (b^2+c^2-ab)^- + (a^2+c^2-ab)^-     <= (a^2+b^2)/4
};

inline ScalarLemmaResult scalarLemma(double a, double b, double c) {
    const double x = b * b + c * c - a * b;
    const double y = a * a + c * c - a * b;
    return {std::min(posPart(x), posPart(y)), negPart(x) + negPart(y)};
}

/// gamma_hat = 1 / sup over a unit-sphere grid of negSum/(a^2+b^2).
/// The true supremum is (sqrt(2)-1)/2, attained on the c=0 slice, so the
/// returned value is always > 4 (it approaches 2 + 2 sqrt(2) from above).
inline double gammaEstimate(int nGrid = 400) {
    if (nGrid < 200) throw std::invalid_argument("gammaEstimate: need nGrid >= 200");
    double sup = 0.0;
    for (int it = 0; it < nGrid; ++it) {
        const double th = M_PI * (it + 0.5) / nGrid;
        const double st = std::sin(th), ct = std::cos(th);
        for (int ip = 0; ip < 2 * nGrid; ++ip) {
            const double ph = 2.0 * M_PI * ip / (2 * nGrid);
            const double a = st * std::cos(ph), b = st * std::sin(ph), c = ct;
            const double den = a * a + b * b;
            if (den < 1e-12) continue;
            sup = std::max(sup, scalarLemma(a, b, c).negSum / den);
        }
    }
    return 1.0 / sup;
}

}  // namespace anisolab
