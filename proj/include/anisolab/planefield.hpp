#pragma once

#include "anisolab/core.hpp"

#include <algorithm>
#include <optional>

namespace anisolab {

struct GridSpec {
    int nx = 0, ny = 0;
    double hx = 0.0, hy = 0.0;
    Vec2 origin = Vec2::Zero();

    void validate() const {
        if (nx < 4 || ny < 4) throw std::invalid_argument("GridSpec: need nx, ny >= 4");
        if (!(hx > 0.0) || !(hy > 0.0))
            throw std::invalid_argument("GridSpec: need hx, hy > 0");
    }
    double cellArea() const { return hx * hy; }
    double xAt(int i) const { return origin.x() + i * hx; }
    double yAt(int j) const { return origin.y() + j * hy; }
    bool sameAs(const GridSpec& o) const {
        return nx == o.nx && ny == o.ny && hx == o.hx && hy == o.hy &&
               origin == o.origin;
    }
};

/// Planar vector-field measure on a staggered (MAC) grid. fx lives on
/// vertical faces, fy on horizontal faces; values are densities, so the flux
/// through a face is value * face length and the discrete divergence theorem
/// is exact. Boundary faces are kept at zero (compact support).
struct GridField {
    GridSpec grid;
    std::vector<double> fx;  // (nx+1) x ny, index i + (nx+1)*j
    std::vector<double> fy;  // nx x (ny+1), index i + nx*j

    static GridField zeros(const GridSpec& g) {
        g.validate();
        GridField f;
        f.grid = g;
        f.fx.assign(static_cast<size_t>(g.nx + 1) * g.ny, 0.0);
        f.fy.assign(static_cast<size_t>(g.nx) * (g.ny + 1), 0.0);
        return f;
    }

    double& fxAt(int i, int j) { return fx[i + static_cast<size_t>(grid.nx + 1) * j]; }
    double fxAt(int i, int j) const { return fx[i + static_cast<size_t>(grid.nx + 1) * j]; }
    double& fyAt(int i, int j) { return fy[i + static_cast<size_t>(grid.nx) * j]; }
    double fyAt(int i, int j) const { return fy[i + static_cast<size_t>(grid.nx) * j]; }

    Vec2 cellValue(int i, int j) const {
        return {0.5 * (fxAt(i, j) + fxAt(i + 1, j)),
                0.5 * (fyAt(i, j) + fyAt(i, j + 1))};
    }

    double vectorMass() const {  // integral of |S|
        double m = 0.0;
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) m += cellValue(i, j).norm();
        return m * grid.cellArea();
    }

    double maxAbsFace() const {
        double m = 0.0;
        for (double v : fx) m = std::max(m, std::abs(v));
        for (double v : fy) m = std::max(m, std::abs(v));
        return m;
    }

    double maxAbsBoundaryFace() const {
        double m = 0.0;
        for (int j = 0; j < grid.ny; ++j)
            m = std::max({m, std::abs(fxAt(0, j)), std::abs(fxAt(grid.nx, j))});
        for (int i = 0; i < grid.nx; ++i)
            m = std::max({m, std::abs(fyAt(i, 0)), std::abs(fyAt(i, grid.ny))});
        return m;
    }

    /// Splits a point vector mass (mx, my) onto the adjacent faces with
    /// bilinear (hat) weights: the x-mass goes to the four x-faces around p,
    /// linear in x toward the two face planes and linear in y toward the two
    /// face rows; symmetrically for the y-mass. Total mass is preserved
    /// exactly and the deposited field varies smoothly with p.
    void deposit(const Vec2& p, double mx, double my) {
        const double cx = (p.x() - grid.origin.x()) / grid.hx;
        const double cy = (p.y() - grid.origin.y()) / grid.hy;
        const int i = static_cast<int>(std::floor(cx));
        const int j = static_cast<int>(std::floor(cy));
        if (i < 1 || i > grid.nx - 2 || j < 1 || j > grid.ny - 2)
            throw std::out_of_range("GridField::deposit: point outside interior cells");
        const double inv = 1.0 / grid.cellArea();
        {
            const double tx = cx - i;
            const double u = cy - 0.5;
            const int j0 = static_cast<int>(std::floor(u));
            const double ty = u - j0;
            const int ja = std::clamp(j0, 0, grid.ny - 1);
            const int jb = std::clamp(j0 + 1, 0, grid.ny - 1);
            fxAt(i, ja) += (1.0 - tx) * (1.0 - ty) * mx * inv;
            fxAt(i + 1, ja) += tx * (1.0 - ty) * mx * inv;
            fxAt(i, jb) += (1.0 - tx) * ty * mx * inv;
            fxAt(i + 1, jb) += tx * ty * mx * inv;
        }
        {
            const double ty = cy - j;
            const double u = cx - 0.5;
            const int i0 = static_cast<int>(std::floor(u));
            const double tx = u - i0;
            const int ia = std::clamp(i0, 0, grid.nx - 1);
            const int ib = std::clamp(i0 + 1, 0, grid.nx - 1);
            fyAt(ia, j) += (1.0 - tx) * (1.0 - ty) * my * inv;
            fyAt(ib, j) += tx * (1.0 - ty) * my * inv;
            fyAt(ia, j + 1) += (1.0 - tx) * ty * my * inv;
            fyAt(ib, j + 1) += tx * ty * my * inv;
        }
    }

    /// Restriction to a grid coarsened by 2 in each direction (nx, ny even).
    GridField coarsen2x() const {
        if (grid.nx % 2 || grid.ny % 2)
            throw std::invalid_argument("coarsen2x: nx, ny must be even");
        GridSpec cg{grid.nx / 2, grid.ny / 2, 2.0 * grid.hx, 2.0 * grid.hy, grid.origin};
        GridField c = zeros(cg);
        for (int J = 0; J < cg.ny; ++J)
            for (int I = 0; I <= cg.nx; ++I)
                c.fxAt(I, J) = 0.5 * (fxAt(2 * I, 2 * J) + fxAt(2 * I, 2 * J + 1));
        for (int J = 0; J <= cg.ny; ++J)
            for (int I = 0; I < cg.nx; ++I)
                c.fyAt(I, J) = 0.5 * (fyAt(2 * I, 2 * J) + fyAt(2 * I + 1, 2 * J));
        return c;
    }
};

/// Cell-centered scalar density.
struct ScalarField {
    GridSpec grid;
    std::vector<double> values;  // nx * ny, index i + nx*j

    static ScalarField zeros(const GridSpec& g) {
        g.validate();
        ScalarField s;
        s.grid = g;
        s.values.assign(static_cast<size_t>(g.nx) * g.ny, 0.0);
        return s;
    }
    double& at(int i, int j) { return values[i + static_cast<size_t>(grid.nx) * j]; }
    double at(int i, int j) const { return values[i + static_cast<size_t>(grid.nx) * j]; }

    double integral() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * grid.cellArea();
    }
    double absIntegral() const {
        double s = 0.0;
        for (double v : values) s += std::abs(v);
        return s * grid.cellArea();
    }
    double l2Norm() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return std::sqrt(s * grid.cellArea());
    }
};

/// Exact flux-balance divergence. Requires compact support (zero boundary
/// faces); then the discrete divergence theorem holds exactly.
inline ScalarField divergence(const GridField& S) {
    const double scale = std::max(1.0, S.maxAbsFace());
    if (S.maxAbsBoundaryFace() > 1e-12 * scale)
        throw std::invalid_argument("divergence: field is not compactly supported");
    ScalarField d = ScalarField::zeros(S.grid);
    for (int j = 0; j < S.grid.ny; ++j)
        for (int i = 0; i < S.grid.nx; ++i)
            d.at(i, j) = (S.fxAt(i + 1, j) - S.fxAt(i, j)) / S.grid.hx +
                         (S.fyAt(i, j + 1) - S.fyAt(i, j)) / S.grid.hy;
    return d;
}

inline double divTV(const GridField& S) { return divergence(S).absIntegral(); }

inline double detIntegral(const GridField& S, const GridField& T) {
    if (!S.grid.sameAs(T.grid)) throw std::invalid_argument("detIntegral: grid mismatch");
    double sum = 0.0;
    for (int j = 0; j < S.grid.ny; ++j)
        for (int i = 0; i < S.grid.nx; ++i) {
            const Vec2 s = S.cellValue(i, j), t = T.cellValue(i, j);
            sum += s.x() * t.y() - s.y() * t.x();
        }
    return sum * S.grid.cellArea();
}

enum class Axis { X, Y };

/// P = (S^axis - |S^other|)^+, N = (S^axis - |S^other|)^-, cellwise.
inline std::pair<ScalarField, ScalarField> posNegParts(const GridField& S, Axis axis) {
    ScalarField P = ScalarField::zeros(S.grid), N = ScalarField::zeros(S.grid);
    for (int j = 0; j < S.grid.ny; ++j)
        for (int i = 0; i < S.grid.nx; ++i) {
            const Vec2 v = S.cellValue(i, j);
            const double w = axis == Axis::X ? v.x() - std::abs(v.y())
                                             : v.y() - std::abs(v.x());
            P.at(i, j) = posPart(w);
            N.at(i, j) = negPart(w);
        }
    return {P, N};
}

inline ScalarField minMeasure(const ScalarField& mu, const ScalarField& nu) {
    if (!mu.grid.sameAs(nu.grid)) throw std::invalid_argument("minMeasure: grid mismatch");
    ScalarField m = ScalarField::zeros(mu.grid);
    for (size_t n = 0; n < m.values.size(); ++n) {
        const double a = mu.values[n], b = nu.values[n];
        m.values[n] = 0.5 * (a + b - std::abs(a - b));
    }
    return m;
}

namespace detail {

struct WorstCell {
    int i = -1, j = -1;
    double value = 0.0;
};

/// Throws unless S^x, T^y and det(S,T) are cellwise nonnegative up to tiny
/// numerical tolerances, naming the violated constraint and the worst cell.
/// The det floor combines a cell-relative term (exact data) with a dust term
/// relative to the global field scale: face averaging of a smooth admissible
/// field can leave O(dust) negative dets in cells straddling the support
/// edge, where the two component stencils see different tails.
inline void requireDetAdmissible(const GridField& S, const GridField& T,
                                 bool requireDet, double dustTol = 1e-7) {
    if (!S.grid.sameAs(T.grid))
        throw std::invalid_argument("admissibility: grid mismatch");
    const double tolS = 1e-12 * std::max(1.0, S.maxAbsFace());
    const double tolT = 1e-12 * std::max(1.0, T.maxAbsFace());
    const double dust = dustTol * std::max(1e-300, S.maxAbsFace() * T.maxAbsFace());
    WorstCell wx, wy, wd;
    for (int j = 0; j < S.grid.ny; ++j)
        for (int i = 0; i < S.grid.nx; ++i) {
            const Vec2 s = S.cellValue(i, j), t = T.cellValue(i, j);
            if (s.x() < wx.value) wx = {i, j, s.x()};
            if (t.y() < wy.value) wy = {i, j, t.y()};
            if (requireDet) {
                const double det = s.x() * t.y() - s.y() * t.x();
                const double floor = -std::max(1e-12 * s.norm() * t.norm(), dust);
                if (det - floor < wd.value) wd = {i, j, det - floor};
            }
        }
    auto fail = [](const char* what, const WorstCell& w) {
        throw std::invalid_argument(std::string("admissibility violated: ") + what +
                                    " at cell (" + std::to_string(w.i) + "," +
                                    std::to_string(w.j) + "), value " +
                                    std::to_string(w.value));
    };
    if (wx.value < -tolS) fail("S^x >= 0", wx);
    if (wy.value < -tolT) fail("T^y >= 0", wy);
    if (requireDet && wd.value < 0.0) fail("det(S,T) >= 0", wd);
}

inline double detTolerance(const GridField& S, const GridField& T) {
    return 1e-10 * std::max(1.0, S.vectorMass() * T.vectorMass());
}

}  // namespace detail

/// Sharp determinant bound: integral of det(S,T) against (1/4) divTV(S) divTV(T).
/// Inputs must be cellwise admissible. detail carries the coarse-grid ratio as
/// a refinement-convergence flag (gap should not grow when resolution drops).
inline Report checkDetSimple(const GridField& S, const GridField& T,
                             double slack = 1.05) {
    detail::requireDetAdmissible(S, T, /*requireDet=*/true);
    const double lhs = detIntegral(S, T);
    const double dS = divTV(S), dT = divTV(T);
    const double rhs = 0.25 * dS * dT;
    Report r = makeLeqReport(lhs, rhs, slack - 1.0, detail::detTolerance(S, T));
    r.detail["div_tv_s"] = dS;
    r.detail["div_tv_t"] = dT;
    r.detail["ratio"] = rhs > 0.0 ? lhs / rhs : 0.0;
    if (S.grid.nx % 2 == 0 && S.grid.ny % 2 == 0 && S.grid.nx >= 8 && S.grid.ny >= 8) {
        const GridField Sc = S.coarsen2x(), Tc = T.coarsen2x();
        const double lc = detIntegral(Sc, Tc);
        const double rc = 0.25 * divTV(Sc) * divTV(Tc);
        const double ratioCoarse = rc > 0.0 ? lc / rc : 0.0;
        r.detail["ratio_coarse"] = ratioCoarse;
        r.detail["refinement_ok"] =
            (r.detail["ratio"] <= std::max(1.0, ratioCoarse) + 0.01) ? 1.0 : 0.0;
    }
    return r;
}

/// Kakeya-type bound with sqrt(det): integral of chi sqrt(det^+(S,T)) against
/// (1/2) ||chi||_L2 sqrt(divTV S) sqrt(divTV T).
inline Report checkKakTris(const GridField& S, const GridField& T,
                           const ScalarField& chi, double slack = 1.05) {
    detail::requireDetAdmissible(S, T, /*requireDet=*/true);
    if (!chi.grid.sameAs(S.grid)) throw std::invalid_argument("checkKakTris: grid mismatch");
    for (double c : chi.values)
        if (c < -1e-12 || c > 1.0 + 1e-12)
            throw std::invalid_argument("checkKakTris: chi must take values in [0,1]");
    double lhs = 0.0;
    for (int j = 0; j < S.grid.ny; ++j)
        for (int i = 0; i < S.grid.nx; ++i) {
            const Vec2 s = S.cellValue(i, j), t = T.cellValue(i, j);
            const double det = s.x() * t.y() - s.y() * t.x();
            lhs += chi.at(i, j) * std::sqrt(posPart(det));
        }
    lhs *= S.grid.cellArea();
    const double dS = divTV(S), dT = divTV(T);
    const double rhs = 0.5 * chi.l2Norm() * std::sqrt(dS) * std::sqrt(dT);
    Report r = makeLeqReport(lhs, rhs, slack - 1.0, detail::detTolerance(S, T));
    r.detail["div_tv_s"] = dS;
    r.detail["div_tv_t"] = dT;
    r.detail["chi_l2"] = chi.l2Norm();
    r.detail["ratio"] = rhs > 0.0 ? lhs / rhs : 0.0;
    return r;
}

/// Two-field bound without the determinant sign constraint. Returns, in
/// detail["c_hat"], the smallest constant C such that
///   integral(chi min{S^P,T^P}) <=
///     C ||chi||_L2 [int(|S|+|div S|)]^{1/2} [int(|T|+|div T|)]^{1/2}
///     + integral(C|div S| + C|div T| + S^N + T^N);
/// the right-hand side is affine in C, so the smallest C is exact. Pass iff
/// c_hat <= cCap.
inline Report checkKakBis(const GridField& S, const GridField& T,
                          const ScalarField& chi, double cCap) {
    detail::requireDetAdmissible(S, T, /*requireDet=*/false);
    if (!chi.grid.sameAs(S.grid)) throw std::invalid_argument("checkKakBis: grid mismatch");
    auto [SP, SN] = posNegParts(S, Axis::X);
    auto [TP, TN] = posNegParts(T, Axis::Y);
    const ScalarField mn = minMeasure(SP, TP);
    double lhs = 0.0;
    for (size_t n = 0; n < mn.values.size(); ++n) lhs += chi.values[n] * mn.values[n];
    lhs *= S.grid.cellArea();

    const double dS = divTV(S), dT = divTV(T);
    const double bracketS = S.vectorMass() + dS;
    const double bracketT = T.vectorMass() + dT;
    const double affine = chi.l2Norm() * std::sqrt(bracketS) * std::sqrt(bracketT) + dS + dT;
    const double constant = SN.integral() + TN.integral();
    const double cHat = affine > 0.0 ? posPart(lhs - constant) / affine : 0.0;

    Report r = makeLeqReport(cHat, cCap, 0.0, 0.0);
    r.detail["c_hat"] = cHat;
    r.detail["lhs_integral"] = lhs;
    r.detail["bracket_s"] = bracketS;
    r.detail["bracket_t"] = bracketT;
    r.detail["div_tv_s"] = dS;
    r.detail["div_tv_t"] = dT;
    r.detail["neg_parts"] = constant;
    return r;
}

namespace detail {

/// Intersection of the convex region {inequalities c0 + cx*x + cy*y >= 0}
/// with a coordinate line, as an interval in the free coordinate.
struct HalfPlane {
    double c0, cx, cy;
};

inline double clippedLength(const std::vector<HalfPlane>& hp, bool verticalLine,
                            double fixed, double lo, double hi) {
    for (const auto& h : hp) {
        // c0' + c*t >= 0 along the line
        const double c0 = verticalLine ? h.c0 + h.cx * fixed : h.c0 + h.cy * fixed;
        const double c = verticalLine ? h.cy : h.cx;
        if (std::abs(c) < 1e-300) {
            if (c0 < 0.0) return 0.0;
        } else if (c > 0.0) {
            lo = std::max(lo, -c0 / c);
        } else {
            hi = std::min(hi, -c0 / c);
        }
        if (hi <= lo) return 0.0;
    }
    return hi - lo;
}

}  // namespace detail

/// Rasterizes an eps-fattened polyline carrying density weight * (unit
/// tangent). Each segment band is a convex quad (sides offset by eps/2,
/// ends capped by the miter bisector at interior joints, perpendicular at
/// free ends); face values are exact band-coverage averages, so the discrete
/// divergence is concentrated at the tube ends and divTV = 2 * weight * eps
/// for an open curve of constant weight.
inline GridField fromCurve(const std::vector<Vec2>& polyline, double weight,
                           double eps, const GridSpec& grid) {
    grid.validate();
    if (polyline.size() < 2) throw std::invalid_argument("fromCurve: need >= 2 points");
    if (eps < 2.0 * std::max(grid.hx, grid.hy))
        throw std::invalid_argument("fromCurve: width under-resolved by the grid");

    const bool closed = (polyline.front() - polyline.back()).norm() < 1e-14;
    const int nSeg = static_cast<int>(polyline.size()) - 1;

    auto tangentOf = [&](int s) {
        const Vec2 d = polyline[s + 1] - polyline[s];
        const double len = d.norm();
        if (len < 1e-14) throw std::invalid_argument("fromCurve: degenerate segment");
        return Vec2(d / len);
    };

    GridField f = GridField::zeros(grid);
    for (int s = 0; s < nSeg; ++s) {
        const Vec2 a = polyline[s], b = polyline[s + 1];
        const Vec2 t = tangentOf(s);
        const Vec2 n(-t.y(), t.x());
        const double len = (b - a).norm();

        // side walls
        std::vector<detail::HalfPlane> hp;
        auto addHalfPlane = [&hp](const Vec2& point, const Vec2& inwardNormal) {
            hp.push_back({-inwardNormal.dot(point), inwardNormal.x(), inwardNormal.y()});
        };
        addHalfPlane(a + 0.5 * eps * n, -n);
        addHalfPlane(a - 0.5 * eps * n, n);
        // end caps: miter bisector at interior joints, perpendicular otherwise
        const bool hasPrev = s > 0 || closed;
        const bool hasNext = s + 1 < nSeg || closed;
        const Vec2 tPrev = hasPrev ? tangentOf((s - 1 + nSeg) % nSeg) : t;
        const Vec2 tNext = hasNext ? tangentOf((s + 1) % nSeg) : t;
        Vec2 mStart = tPrev + t, mEnd = t + tNext;
        if (mStart.norm() < 1e-12 || mEnd.norm() < 1e-12)
            throw std::invalid_argument("fromCurve: curve reverses within eps");
        addHalfPlane(a, mStart.normalized());
        addHalfPlane(b, -mEnd.normalized());
        (void)len;

        // exact coverage of the band over each face's averaging segment
        const Vec2 lo = a.cwiseMin(b) - Vec2(eps, eps), hi = a.cwiseMax(b) + Vec2(eps, eps);
        const int i0 = std::max(1, static_cast<int>(std::floor((lo.x() - grid.origin.x()) / grid.hx)));
        const int i1 = std::min(grid.nx - 1, static_cast<int>(std::ceil((hi.x() - grid.origin.x()) / grid.hx)));
        const int j0 = std::max(1, static_cast<int>(std::floor((lo.y() - grid.origin.y()) / grid.hy)));
        const int j1 = std::min(grid.ny - 1, static_cast<int>(std::ceil((hi.y() - grid.origin.y()) / grid.hy)));
        if (lo.x() < grid.xAt(1) || hi.x() > grid.xAt(grid.nx - 1) ||
            lo.y() < grid.yAt(1) || hi.y() > grid.yAt(grid.ny - 1))
            throw std::invalid_argument("fromCurve: grid too small for the fattened curve");

        for (int i = i0; i <= i1; ++i)
            for (int j = std::max(0, j0 - 1); j <= std::min(grid.ny - 1, j1); ++j) {
                const double cov = detail::clippedLength(hp, true, grid.xAt(i),
                                                         grid.yAt(j), grid.yAt(j + 1));
                if (cov > 0.0) f.fxAt(i, j) += weight * t.x() * cov / grid.hy;
            }
        for (int j = j0; j <= j1; ++j)
            for (int i = std::max(0, i0 - 1); i <= std::min(grid.nx - 1, i1); ++i) {
                const double cov = detail::clippedLength(hp, false, grid.yAt(j),
                                                         grid.xAt(i), grid.xAt(i + 1));
                if (cov > 0.0) f.fyAt(i, j) += weight * t.y() * cov / grid.hx;
            }
    }
    return f;
}

/// Point-sampled tube rasterizer: supersamples the band on a lattice of
/// spacing ~ cell/overSample and deposits weight * tangent point masses.
/// First-order: divergence picks up O(h) side noise on oblique tubes, unlike
/// the coverage-exact fromCurve. Useful when probing how the inequality
/// checkers converge under refinement.
inline GridField fromCurveSampled(const std::vector<Vec2>& polyline, double weight,
                                  double eps, const GridSpec& grid, int overSample = 3) {
    grid.validate();
    if (polyline.size() < 2) throw std::invalid_argument("fromCurveSampled: need >= 2 points");
    if (eps < 2.0 * std::max(grid.hx, grid.hy))
        throw std::invalid_argument("fromCurveSampled: width under-resolved by the grid");
    GridField f = GridField::zeros(grid);
    const double hs = std::min(grid.hx, grid.hy) / overSample;
    for (size_t s = 0; s + 1 < polyline.size(); ++s) {
        const Vec2 a = polyline[s], b = polyline[s + 1];
        const double len = (b - a).norm();
        const Vec2 t = (b - a) / len;
        const Vec2 n(-t.y(), t.x());
        const int nl = std::max(1, static_cast<int>(std::ceil(len / hs)));
        const int nw = std::max(1, static_cast<int>(std::ceil(eps / hs)));
        const double dl = len / nl, dw = eps / nw;
        for (int il = 0; il < nl; ++il)
            for (int iw = 0; iw < nw; ++iw) {
                const Vec2 p = a + (il + 0.5) * dl * t + ((iw + 0.5) * dw - 0.5 * eps) * n;
                f.deposit(p, weight * t.x() * dl * dw, weight * t.y() * dl * dw);
            }
    }
    return f;
}

/// Field of a smooth function, faces set to the face-midpoint value (2-point
/// Gauss average along the face). Support must stay inside the interior.
inline GridField rasterizeSmooth(const std::function<Vec2(const Vec2&)>& field,
                                 const GridSpec& grid, int facePoints = 2) {
    grid.validate();
    GridField f = GridField::zeros(grid);
    const double g1 = 0.5 * (1.0 - 1.0 / std::sqrt(3.0));
    const double g2 = 0.5 * (1.0 + 1.0 / std::sqrt(3.0));
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 1; i < grid.nx; ++i) {
            const double x = grid.xAt(i);
            double v = 0.0;
            if (facePoints <= 1) {
                v = field(Vec2(x, grid.yAt(j) + 0.5 * grid.hy)).x();
            } else {
                v = 0.5 * (field(Vec2(x, grid.yAt(j) + g1 * grid.hy)).x() +
                           field(Vec2(x, grid.yAt(j) + g2 * grid.hy)).x());
            }
            f.fxAt(i, j) = v;
        }
    for (int j = 1; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const double y = grid.yAt(j);
            double v = 0.0;
            if (facePoints <= 1) {
                v = field(Vec2(grid.xAt(i) + 0.5 * grid.hx, y)).y();
            } else {
                v = 0.5 * (field(Vec2(grid.xAt(i) + g1 * grid.hx, y)).y() +
                           field(Vec2(grid.xAt(i) + g2 * grid.hx, y)).y());
            }
            f.fyAt(i, j) = v;
        }
    return f;
}

/// Exactly divergence-free rasterization from a stream function: face values
/// are exact face averages of grad^perp f, so the discrete divergence
/// telescopes to zero.
inline GridField rasterizeFromStream(const std::function<double(const Vec2&)>& f,
                                     const GridSpec& grid) {
    grid.validate();
    GridField S = GridField::zeros(grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 1; i < grid.nx; ++i)
            S.fxAt(i, j) = -(f(Vec2(grid.xAt(i), grid.yAt(j + 1))) -
                             f(Vec2(grid.xAt(i), grid.yAt(j)))) / grid.hy;
    for (int j = 1; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            S.fyAt(i, j) = (f(Vec2(grid.xAt(i + 1), grid.yAt(j))) -
                            f(Vec2(grid.xAt(i), grid.yAt(j)))) / grid.hx;
    return S;
}

}  // namespace anisolab
