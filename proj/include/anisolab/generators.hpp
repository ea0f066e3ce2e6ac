#pragma once

#include "anisolab/flowdecomp.hpp"
#include "anisolab/varifold.hpp"

#include <map>

namespace anisolab {

/// Icosphere of the given subdivision level: 20 * 4^subdiv triangles, all
/// vertices projected onto the sphere.
inline TriVarifold icosphere(int subdiv, double radius = 1.0,
                             const Vec3& center = Vec3::Zero()) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    for (Vec3& v : verts) v.normalize();
    std::vector<std::array<int, 3>> tris = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int s = 0; s < subdiv; ++s) {
        std::map<std::pair<int, int>, int> midCache;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midCache.find({key.first, key.second});
            if (it != midCache.end()) return it->second;
            const int idx = static_cast<int>(verts.size());
            verts.push_back((0.5 * (verts[a] + verts[b])).normalized());
            midCache[{key.first, key.second}] = idx;
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(tris.size() * 4);
        for (const auto& t : tris) {
            const int a = midpoint(t[0], t[1]);
            const int b = midpoint(t[1], t[2]);
            const int c = midpoint(t[2], t[0]);
            next.push_back({t[0], a, c});
            next.push_back({t[1], b, a});
            next.push_back({t[2], c, b});
            next.push_back({a, b, c});
        }
        tris = std::move(next);
    }
    for (Vec3& v : verts) v = center + radius * v;
    return TriVarifold::create(std::move(verts), std::move(tris));
}

inline TriVarifold torusMesh(double R, double r, int nu, int nv) {
    if (nu < 3 || nv < 3) throw std::invalid_argument("torusMesh: need nu, nv >= 3");
    std::vector<Vec3> verts;
    verts.reserve(static_cast<size_t>(nu) * nv);
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            const double u = 2.0 * M_PI * i / nu, v = 2.0 * M_PI * j / nv;
            verts.emplace_back((R + r * std::cos(v)) * std::cos(u),
                               (R + r * std::cos(v)) * std::sin(u), r * std::sin(v));
        }
    std::vector<std::array<int, 3>> tris;
    tris.reserve(static_cast<size_t>(2) * nu * nv);
    auto idx = [nv](int i, int j) { return i * nv + j; };
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            const int i1 = (i + 1) % nu, j1 = (j + 1) % nv;
            tris.push_back({idx(i, j), idx(i1, j), idx(i1, j1)});
            tris.push_back({idx(i, j), idx(i1, j1), idx(i, j1)});
        }
    return TriVarifold::create(std::move(verts), std::move(tris));
}

/// Height-field graph over [0,1]^2, open surface with boundary.
inline TriVarifold graphMesh(int n, const std::function<double(double, double)>& height) {
    if (n < 2) throw std::invalid_argument("graphMesh: need n >= 2");
    std::vector<Vec3> verts;
    verts.reserve(static_cast<size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
            const double x = static_cast<double>(i) / n, y = static_cast<double>(j) / n;
            verts.emplace_back(x, y, height(x, y));
        }
    std::vector<std::array<int, 3>> tris;
    auto idx = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            tris.push_back({idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)});
            tris.push_back({idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)});
        }
    return TriVarifold::create(std::move(verts), std::move(tris));
}

/// Unit square in a coordinate plane, split into two triangles.
/// plane: 2 -> z = const (normal e_z), 0 -> x = const, 1 -> y = const.
inline TriVarifold flatSquare(int plane = 2, double offset = 0.0) {
    auto lift = [plane, offset](double u, double v) {
        switch (plane) {
            case 0: return Vec3(offset, u, v);
            case 1: return Vec3(u, offset, v);
            default: return Vec3(u, v, offset);
        }
    };
    std::vector<Vec3> verts = {lift(0, 0), lift(1, 0), lift(1, 1), lift(0, 1)};
    std::vector<std::array<int, 3>> tris = {{0, 1, 2}, {0, 2, 3}};
    return TriVarifold::create(std::move(verts), std::move(tris));
}

/// Flat disk fan mesh in the plane with the given unit normal direction
/// (axis 0, 1 or 2).
inline TriVarifold flatDisk(int axis, int nSegments = 64, double radius = 1.0) {
    std::vector<Vec3> verts;
    auto lift = [axis](double u, double v) {
        switch (axis) {
            case 0: return Vec3(0.0, u, v);
            case 1: return Vec3(v, 0.0, u);
            default: return Vec3(u, v, 0.0);
        }
    };
    verts.push_back(lift(0, 0));
    for (int s = 0; s < nSegments; ++s) {
        const double a = 2.0 * M_PI * s / nSegments;
        verts.push_back(lift(radius * std::cos(a), radius * std::sin(a)));
    }
    std::vector<std::array<int, 3>> tris;
    for (int s = 0; s < nSegments; ++s)
        tris.push_back({0, 1 + s, 1 + (s + 1) % nSegments});
    return TriVarifold::create(std::move(verts), std::move(tris));
}

// ---------------------------------------------------------------------------
// Smooth planar fields with closed-form Jacobians
// ---------------------------------------------------------------------------

/// Scalar C^2 bump amp * (1 - |p-c|^2/R^2)^3 supported on the disk (c, R).
struct BumpSpec {
    Vec2 center;
    double radius;
    double amp;

    double value(const Vec2& p) const {
        const double r2 = (p - center).squaredNorm() / sqr(radius);
        if (r2 >= 1.0) return 0.0;
        return amp * std::pow(1.0 - r2, 3);
    }
    Vec2 grad(const Vec2& p) const {
        const double r2 = (p - center).squaredNorm() / sqr(radius);
        if (r2 >= 1.0) return Vec2::Zero();
        return amp * (-6.0 / sqr(radius)) * sqr(1.0 - r2) * (p - center);
    }
};

/// Parameters of a seeded transverse field alpha (1, z) + eps d_x (x-type)
/// or beta (w, 1) + eps d_y (y-type); z, w are bounded-slope sinusoids so
/// that transversality and the det sign survive cell averaging.
struct TransverseFieldSpec {
    std::vector<BumpSpec> bumps;
    double slopeAmp = 0.5;   // |z| <= slopeAmp
    double kx = 2.0, ky = 2.0, phx = 0.0, phy = 0.0;
    double epsBackground = 0.0;  // 0 for compactly supported fields
    int axis = 0;                // 0: x-type, 1: y-type
    Vec2 center = Vec2(0.5, 0.5);
    double supportRadius = 0.5;

    double amplitude(const Vec2& p) const {
        double a = 0.0;
        for (const auto& b : bumps) a += b.value(p);
        return a;
    }
    Vec2 amplitudeGrad(const Vec2& p) const {
        Vec2 g = Vec2::Zero();
        for (const auto& b : bumps) g += b.grad(p);
        return g;
    }
    double slope(const Vec2& p) const {
        return slopeAmp * std::sin(kx * p.x() + phx) * std::sin(ky * p.y() + phy);
    }
    Vec2 slopeGrad(const Vec2& p) const {
        return slopeAmp * Vec2(kx * std::cos(kx * p.x() + phx) * std::sin(ky * p.y() + phy),
                               ky * std::sin(kx * p.x() + phx) * std::cos(ky * p.y() + phy));
    }

    SmoothField build() const {
        SmoothField f;
        const auto spec = *this;
        if (axis == 0) {
            f.value = [spec](const Vec2& p) {
                const double a = spec.amplitude(p);
                return Vec2(spec.epsBackground + a, a * spec.slope(p));
            };
            f.jacobian = [spec](const Vec2& p) {
                const Vec2 ga = spec.amplitudeGrad(p);
                const double a = spec.amplitude(p), z = spec.slope(p);
                const Vec2 gz = spec.slopeGrad(p);
                Mat2 J;
                J.row(0) = ga;
                J.row(1) = z * ga + a * gz;
                return J;
            };
            f.background = Vec2(epsBackground, 0.0);
        } else {
            f.value = [spec](const Vec2& p) {
                const double a = spec.amplitude(p);
                return Vec2(a * spec.slope(p), spec.epsBackground + a);
            };
            f.jacobian = [spec](const Vec2& p) {
                const Vec2 ga = spec.amplitudeGrad(p);
                const double a = spec.amplitude(p), z = spec.slope(p);
                const Vec2 gz = spec.slopeGrad(p);
                Mat2 J;
                J.row(0) = z * ga + a * gz;
                J.row(1) = ga;
                return J;
            };
            f.background = Vec2(0.0, epsBackground);
        }
        f.center = center;
        f.supportRadius = supportRadius;
        return f;
    }
};

inline TransverseFieldSpec seededTransverseSpec(Rng& rng, int axis, double epsBackground,
                                                const Vec2& center = Vec2(0.5, 0.5),
                                                double maxSlope = 0.8) {
    TransverseFieldSpec s;
    s.axis = axis;
    s.epsBackground = epsBackground;
    s.center = center;
    const int nBumps = rng.uniformInt(1, 2);
    double reach = 0.0;
    for (int b = 0; b < nBumps; ++b) {
        BumpSpec bump;
        bump.center = center + Vec2(rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15));
        bump.radius = rng.uniform(0.2, 0.32);
        bump.amp = rng.uniform(0.4, 1.2);
        reach = std::max(reach, (bump.center - center).norm() + bump.radius);
        s.bumps.push_back(bump);
    }
    s.supportRadius = reach;
    s.slopeAmp = rng.uniform(0.3, maxSlope);
    s.kx = rng.uniform(1.2, 2.8);
    s.ky = rng.uniform(1.2, 2.8);
    s.phx = rng.uniform(0.0, 2.0 * M_PI);
    s.phy = rng.uniform(0.0, 2.0 * M_PI);
    return s;
}

struct TransverseFlowPair {
    SmoothField S, T;
    TransverseFieldSpec specS, specT;
};

/// Compactly supported admissible pair: S^x >= 0, T^y >= 0 and
/// det(S, T) >= (1 - maxSlope^2) S^x T^y >= 0, a margin that survives
/// cell averaging of the rasterized fields.
inline TransverseFlowPair makeTransversePair(std::uint64_t seed, double epsBackground = 0.0,
                                             double maxSlope = 0.8) {
    Rng rng(seed);
    TransverseFlowPair pair;
    pair.specS = seededTransverseSpec(rng, 0, epsBackground, Vec2(0.5, 0.5), maxSlope);
    pair.specT = seededTransverseSpec(rng, 1, epsBackground, Vec2(0.5, 0.5), maxSlope);
    pair.S = pair.specS.build();
    pair.T = pair.specT.build();
    return pair;
}

/// Adds a compact patch of steep transverse component to S, so that
/// S^x - |S^y| < 0 and det(S, T) < 0 hold somewhere while S^x stays >= 0.
inline SmoothField addSignViolation(const SmoothField& S, std::uint64_t seed,
                                    double steepness = 1.6) {
    Rng rng(seed);
    BumpSpec patch;
    patch.center = Vec2(0.5, 0.5) + Vec2(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
    patch.radius = rng.uniform(0.15, 0.25);
    patch.amp = rng.uniform(0.5, 1.0);
    const double kx = rng.uniform(1.5, 3.0), ph = rng.uniform(0.0, 2.0 * M_PI);
    SmoothField out = S;
    out.value = [S, patch, steepness, kx, ph](const Vec2& p) {
        Vec2 v = S.value(p);
        v.y() += steepness * patch.value(p) * std::sin(kx * p.x() + ph);
        return v;
    };
    out.jacobian = [S, patch, steepness, kx, ph](const Vec2& p) {
        Mat2 J = S.jacobian(p);
        const Vec2 g = patch.grad(p) * std::sin(kx * p.x() + ph) +
                       patch.value(p) * Vec2(kx * std::cos(kx * p.x() + ph), 0.0);
        J.row(1) += steepness * g.transpose();
        return J;
    };
    out.supportRadius = std::max(S.supportRadius,
                                 (patch.center - S.center).norm() + patch.radius);
    return out;
}

/// chi field in [0,1]: smoothed disk indicator sampled at cell centers.
inline ScalarField diskChi(const GridSpec& grid, const Vec2& center, double radius) {
    ScalarField chi = ScalarField::zeros(grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const Vec2 p(grid.xAt(i) + 0.5 * grid.hx, grid.yAt(j) + 0.5 * grid.hy);
            const double r = (p - center).norm() / radius;
            chi.at(i, j) = r >= 1.0 ? 0.0 : std::min(1.0, 2.0 * (1.0 - r));
        }
    return chi;
}

/// chi = exact coverage fraction of an axis-aligned box, cellwise.
inline ScalarField boxChi(const GridSpec& grid, const Vec2& lo, const Vec2& hi) {
    ScalarField chi = ScalarField::zeros(grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const double x0 = grid.xAt(i), x1 = grid.xAt(i + 1);
            const double y0 = grid.yAt(j), y1 = grid.yAt(j + 1);
            const double cx = std::max(0.0, std::min(x1, hi.x()) - std::max(x0, lo.x()));
            const double cy = std::max(0.0, std::min(y1, hi.y()) - std::max(y0, lo.y()));
            chi.at(i, j) = (cx / grid.hx) * (cy / grid.hy);
        }
    return chi;
}

/// Two crossing straight tubes: S points up-right (S^x >= 0), T up-left
/// (T^y >= 0, T^x <= 0), so det(S,T) >= 0 cellwise regardless of coverage.
struct CrossingTubes {
    GridField S, T;
    Vec2 crossing;      // intersection of the center lines
    double fluxS, fluxT;  // weight * width per tube
};

inline CrossingTubes makeCrossingTubes(const GridSpec& grid, double eps, double weight,
                                       double angleS = 0.0, double angleT = M_PI / 2.0) {
    // center lines through the domain center at the two angles
    const Vec2 c(grid.origin.x() + 0.5 * grid.nx * grid.hx,
                 grid.origin.y() + 0.5 * grid.ny * grid.hy);
    const double ext = 0.42 * std::min(grid.nx * grid.hx, grid.ny * grid.hy);
    const Vec2 dS(std::cos(angleS), std::sin(angleS));
    const Vec2 dT(std::cos(angleT), std::sin(angleT));
    CrossingTubes out;
    out.S = fromCurve({c - ext * dS, c + ext * dS}, weight, eps, grid);
    out.T = fromCurve({c - ext * dT, c + ext * dT}, weight, eps, grid);
    out.crossing = c;
    out.fluxS = weight * eps;
    out.fluxT = weight * eps;
    return out;
}

}  // namespace anisolab
