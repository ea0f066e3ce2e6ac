#pragma once

#include "anisolab/integrand.hpp"

#include <array>

namespace anisolab {

/// Result of the normalizing linear change of coordinates. L has det 1 and
/// pushforward(F, L) satisfies the diagonal-nonnegativity (geo) condition.
/// rows holds the converged rows of the box map T (points of the dual unit
/// sphere); T(K) is the maximal-volume image of K = {F <= 1} inside [-1,1]^3,
/// and L = det(T)^{1/3} T^{-T}.
struct Normalization {
    Mat3 L;
    std::array<Vec3, 3> rows;
    double achievedDet = 0.0;  // det(T) before the unit-det rescale
    double geoMargin = 0.0;
    int iterations = 0;
};

struct NormalizationError : std::runtime_error {
    Normalization lastIterate;
    NormalizationError(const std::string& msg, Normalization last)
        : std::runtime_error(msg), lastIterate(std::move(last)) {}
};

/// Maximizer of <u, v> over the dual unit ball {u : <u,p> <= 1 for F(p) <= 1}.
/// For convex differentiable F this is grad F(v), which satisfies
/// <u*, v> = F(v) by the Euler identity and lies on the dual unit sphere.
inline Vec3 dualArgmax(const Integrand& F, const Vec3& v) {
    if (v.norm() == 0.0) throw std::domain_error("dualArgmax: zero vector");
    return grad(F, v);
}

/// Minimum over sphere samples of dG(nu)[nu - nu^1 e1] and dG(nu)[nu - nu^2 e2].
inline double geoMarginOf(const Integrand& G, int nSamples = 4096) {
    double worst = std::numeric_limits<double>::infinity();
    for (const Vec3& nu : fibonacciSphere(nSamples)) {
        const Vec3 g = grad(G, nu);
        const double gn = g.dot(nu);
        worst = std::min({worst, gn - nu.x() * g.x(), gn - nu.y() * g.y()});
    }
    return worst;
}

inline Report checkGeoCondition(const Integrand& G, int nSamples = 4096) {
    const double margin = geoMarginOf(G, nSamples);
    Report r = makeLeqReport(-margin, 1e-8, 0.0, 0.0);
    r.detail["geo_margin"] = margin;
    r.detail["n_samples"] = nSamples;
    return r;
}

/// Coordinate ascent for the volume-maximizing map T with T(K) inside the
/// cube: with two rows fixed, det(T) = <r_i, r_j x r_k> is maximized over the
/// dual ball by r_i = dualArgmax(F, r_j x r_k), so each sweep is monotone in
/// det(T). At a fixed point T(K) touches all six cube faces, which is exactly
/// the supporting-hyperplane property the geo condition needs.
inline Normalization computeNormalization(const Integrand& F, int maxIter = 200,
                                          double tol = 1e-12) {
    if (maxIter < 10) throw std::invalid_argument("computeNormalization: maxIter >= 10");

    std::array<Vec3, 3> r = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
    Rng restartRng(0x5eedu);

    auto detOf = [](const std::array<Vec3, 3>& rows) {
        return rows[0].dot(rows[1].cross(rows[2]));
    };

    auto buildResult = [&](int iters) {
        Normalization n;
        n.rows = r;
        Mat3 T;
        for (int i = 0; i < 3; ++i) T.row(i) = r[i];
        n.achievedDet = T.determinant();
        n.L = std::cbrt(n.achievedDet) * T.inverse().transpose();
        n.iterations = iters;
        return n;
    };

    double det = detOf(r);
    int iter = 0;
    bool converged = false;
    for (; iter < maxIter; ++iter) {
        bool degenerate = false;
        for (int i = 0; i < 3 && !degenerate; ++i) {
            const int j = (i + 1) % 3, k = (i + 2) % 3;
            const Vec3 w = r[j].cross(r[k]);
            if (w.norm() < 1e-9) {
                degenerate = true;
                break;
            }
            r[i] = dualArgmax(F, w);
        }
        if (degenerate) {
            // restart from a perturbed orthonormal seed (deterministic schedule)
            Mat3 Q = Mat3::Identity();
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) Q(a, b) += 0.05 * restartRng.normal();
            Eigen::HouseholderQR<Mat3> qr(Q);
            Mat3 orth = qr.householderQ();
            if (orth.determinant() < 0) orth.col(0) *= -1.0;
            for (int a = 0; a < 3; ++a) r[a] = orth.row(a);
            det = detOf(r);
            continue;
        }
        const double detNew = detOf(r);
        if (detNew < det - 1e-12 * std::max(1.0, std::abs(det)))
            throw NormalizationError("computeNormalization: ascent not monotone",
                                     buildResult(iter));
        const double gain = detNew - det;
        det = detNew;
        if (gain < tol * std::max(1.0, std::abs(det))) {
            converged = true;
            ++iter;
            break;
        }
    }
    Normalization n = buildResult(iter);
    if (!converged)
        throw NormalizationError("computeNormalization: no convergence within maxIter", n);

    // fixed-point consequence: T(K) touches all six cube faces
    Mat3 T;
    for (int i = 0; i < 3; ++i) T.row(i) = n.rows[i];
    const Mat3 Tinv = T.inverse();
    for (int i = 0; i < 3; ++i) {
        const double touch = eval(F, Tinv * Vec3::Unit(i));
        if (touch > 1.0 + 1e-8 || touch < 1.0 - 1e-6)
            throw NormalizationError(
                "computeNormalization: cube-face touching violated at axis " +
                    std::to_string(i) + " (value " + std::to_string(touch) + ")",
                n);
    }
    n.geoMargin = geoMarginOf(pushforward(F, n.L));
    return n;
}

}  // namespace anisolab
