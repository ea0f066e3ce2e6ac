#pragma once

#include "anisolab/integrand.hpp"
#include "anisolab/normalize.hpp"
#include "anisolab/planefield.hpp"

#include <array>
#include <map>
#include <numeric>

namespace anisolab {

/// Discrete rectifiable 2-varifold: a triangle soup with per-triangle
/// multiplicity. Triangles with multiplicity 0 are inactive (they carry no
/// mass and do not count toward the support). Immutable after construction.
class TriVarifold {
public:
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<double> multiplicity;

    // derived per triangle
    std::vector<Vec3> normals;
    std::vector<double> areas;

    static TriVarifold create(std::vector<Vec3> verts,
                              std::vector<std::array<int, 3>> tris,
                              std::vector<double> mult = {}) {
        TriVarifold v;
        v.vertices = std::move(verts);
        v.triangles = std::move(tris);
        if (mult.empty()) mult.assign(v.triangles.size(), 1.0);
        if (mult.size() != v.triangles.size())
            throw std::invalid_argument("TriVarifold: multiplicity size mismatch");
        v.multiplicity = std::move(mult);
        for (double m : v.multiplicity)
            if (m < 0.0 || !std::isfinite(m))
                throw std::invalid_argument("TriVarifold: multiplicity must be >= 0");
        v.computeDerived();
        return v;
    }

    int triangleCount() const { return static_cast<int>(triangles.size()); }

    double bboxScale() const {
        Vec3 lo = vertices.front(), hi = vertices.front();
        for (const Vec3& p : vertices) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        return (hi - lo).norm();
    }

    /// Smallest positive multiplicity (the density lower bound theta_0).
    double minPositiveMultiplicity() const {
        double m = std::numeric_limits<double>::infinity();
        for (double t : multiplicity)
            if (t > 0.0) m = std::min(m, t);
        if (!std::isfinite(m))
            throw std::runtime_error("TriVarifold: no active triangles");
        return m;
    }

private:
    void computeDerived() {
        if (vertices.empty() || triangles.empty())
            throw std::invalid_argument("TriVarifold: empty mesh");
        normals.resize(triangles.size());
        areas.resize(triangles.size());
        const double minArea = 1e-14 * sqr(bboxScale());
        for (size_t t = 0; t < triangles.size(); ++t) {
            const auto& tri = triangles[t];
            for (int c : tri)
                if (c < 0 || c >= static_cast<int>(vertices.size()))
                    throw std::invalid_argument("TriVarifold: vertex index out of range");
            const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
            const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
            const Vec3 cr = e1.cross(e2);
            const double a = 0.5 * cr.norm();
            if (a <= minArea)
                throw std::invalid_argument("TriVarifold: degenerate triangle " +
                                            std::to_string(t));
            areas[t] = a;
            normals[t] = cr.normalized();
        }
    }
};

inline double mass(const TriVarifold& V) {
    double m = 0.0;
    for (int t = 0; t < V.triangleCount(); ++t) m += V.multiplicity[t] * V.areas[t];
    return m;
}

inline double energy(const TriVarifold& V, const Integrand& F) {
    double e = 0.0;
    for (int t = 0; t < V.triangleCount(); ++t)
        e += V.multiplicity[t] * V.areas[t] * eval(F, V.normals[t]);
    return e;
}

inline double supportArea(const TriVarifold& V) {
    double a = 0.0;
    for (int t = 0; t < V.triangleCount(); ++t)
        if (V.multiplicity[t] > 0.0) a += V.areas[t];
    return a;
}

/// Anisotropic first variation of a triangle soup, as a measure concentrated
/// on edges. Valid because B_F(nu) nu = 0: only tangential derivatives of the
/// test field contribute, and the per-triangle divergence theorem turns them
/// into conormal boundary terms. Per edge the vector density (per unit
/// length) is sum over incident triangles of theta B_F(nu) eta, with eta the
/// in-plane outward unit conormal.
struct EdgeMeasure {
    std::vector<std::pair<Vec3, Vec3>> segments;
    std::vector<Vec3> density;

    double totalVariation() const {
        double tv = 0.0;
        for (size_t e = 0; e < segments.size(); ++e)
            tv += (segments[e].second - segments[e].first).norm() * density[e].norm();
        return tv;
    }
    Vec3 totalVector() const {
        Vec3 s = Vec3::Zero();
        for (size_t e = 0; e < segments.size(); ++e)
            s += (segments[e].second - segments[e].first).norm() * density[e];
        return s;
    }
};

inline EdgeMeasure firstVariation(const TriVarifold& V, const Integrand& F) {
    std::map<std::pair<int, int>, Vec3> acc;
    for (int t = 0; t < V.triangleCount(); ++t) {
        if (V.multiplicity[t] == 0.0) continue;
        const Mat3 B = bMatrix(F, V.normals[t]);
        const auto& tri = V.triangles[t];
        for (int e = 0; e < 3; ++e) {
            const int a = tri[e], b = tri[(e + 1) % 3];
            const Vec3 edge = V.vertices[b] - V.vertices[a];
            const Vec3 eta = edge.cross(V.normals[t]).normalized();  // outward in-plane
            const auto key = std::minmax(a, b);
            auto it = acc.try_emplace({key.first, key.second}, Vec3::Zero()).first;
            it->second += V.multiplicity[t] * (B * eta);
        }
    }
    EdgeMeasure em;
    em.segments.reserve(acc.size());
    em.density.reserve(acc.size());
    for (const auto& [key, dens] : acc) {
        em.segments.emplace_back(V.vertices[key.first], V.vertices[key.second]);
        em.density.push_back(dens);
    }
    return em;
}

/// Polynomial vector field on R^3 of total degree <= 3 per component,
/// coefficients indexed by monomial exponents.
class PolyVectorField {
public:
    struct Term {
        int comp;      // 0..2
        int px, py, pz;
        double coeff;
    };

    static PolyVectorField constant(const Vec3& c) {
        PolyVectorField f;
        for (int i = 0; i < 3; ++i)
            if (c[i] != 0.0) f.terms_.push_back({i, 0, 0, 0, c[i]});
        return f;
    }
    /// The dilation field p -> p.
    static PolyVectorField dilation() {
        PolyVectorField f;
        f.terms_ = {{0, 1, 0, 0, 1.0}, {1, 0, 1, 0, 1.0}, {2, 0, 0, 1, 1.0}};
        return f;
    }
    static PolyVectorField monomial(int comp, int px, int py, int pz, double c) {
        if (px + py + pz > 3)
            throw std::invalid_argument("PolyVectorField: degree must be <= 3");
        PolyVectorField f;
        f.terms_ = {{comp, px, py, pz, c}};
        return f;
    }
    static PolyVectorField random(Rng& rng, int maxDegree = 3) {
        if (maxDegree > 3) throw std::invalid_argument("PolyVectorField: degree <= 3");
        PolyVectorField f;
        for (int comp = 0; comp < 3; ++comp)
            for (int px = 0; px <= maxDegree; ++px)
                for (int py = 0; py + px <= maxDegree; ++py)
                    for (int pz = 0; pz + py + px <= maxDegree; ++pz)
                        f.terms_.push_back({comp, px, py, pz, rng.uniform(-1.0, 1.0)});
        return f;
    }

    void add(const PolyVectorField& other) {
        terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
    }

    Vec3 value(const Vec3& p) const {
        Vec3 v = Vec3::Zero();
        for (const Term& t : terms_)
            v[t.comp] += t.coeff * ipow(p.x(), t.px) * ipow(p.y(), t.py) * ipow(p.z(), t.pz);
        return v;
    }

    /// dX(p): entry (r, c) = d X_r / d x_c.
    Mat3 jacobian(const Vec3& p) const {
        Mat3 J = Mat3::Zero();
        for (const Term& t : terms_) {
            const double mx = ipow(p.x(), t.px), my = ipow(p.y(), t.py), mz = ipow(p.z(), t.pz);
            if (t.px > 0) J(t.comp, 0) += t.coeff * t.px * ipow(p.x(), t.px - 1) * my * mz;
            if (t.py > 0) J(t.comp, 1) += t.coeff * t.py * mx * ipow(p.y(), t.py - 1) * mz;
            if (t.pz > 0) J(t.comp, 2) += t.coeff * t.pz * mx * my * ipow(p.z(), t.pz - 1);
        }
        return J;
    }

private:
    static double ipow(double x, int n) {
        double r = 1.0;
        for (int i = 0; i < n; ++i) r *= x;
        return r;
    }
    std::vector<Term> terms_;
};

/// Pairing <delta^F V, X> by per-triangle quadrature of <B_F(nu), dX>.
/// dX has polynomial degree <= 2 on each flat triangle, so the edge-midpoint
/// rule integrates it exactly.
inline double firstVariationPairing(const TriVarifold& V, const Integrand& F,
                                    const PolyVectorField& X) {
    double sum = 0.0;
    for (int t = 0; t < V.triangleCount(); ++t) {
        if (V.multiplicity[t] == 0.0) continue;
        const Mat3 B = bMatrix(F, V.normals[t]);
        const auto& tri = V.triangles[t];
        const Vec3 &p0 = V.vertices[tri[0]], &p1 = V.vertices[tri[1]], &p2 = V.vertices[tri[2]];
        const std::array<Vec3, 3> mids = {0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)};
        double local = 0.0;
        for (const Vec3& q : mids) local += B.cwiseProduct(X.jacobian(q)).sum();
        sum += V.multiplicity[t] * V.areas[t] * local / 3.0;
    }
    return sum;
}

/// The same pairing computed through the edge measure: sum over edges of the
/// line integral of <X, density>, 2-point Gauss (exact for degree <= 3).
inline double pairEdgeMeasure(const EdgeMeasure& em, const PolyVectorField& X) {
    const double g1 = 0.5 * (1.0 - 1.0 / std::sqrt(3.0));
    const double g2 = 0.5 * (1.0 + 1.0 / std::sqrt(3.0));
    double sum = 0.0;
    for (size_t e = 0; e < em.segments.size(); ++e) {
        const Vec3 &a = em.segments[e].first, &b = em.segments[e].second;
        const double len = (b - a).norm();
        const Vec3 q1 = a + g1 * (b - a), q2 = a + g2 * (b - a);
        sum += 0.5 * len * (X.value(q1) + X.value(q2)).dot(em.density[e]);
    }
    return sum;
}

inline TriVarifold transform(const TriVarifold& V, const Mat3& L) {
    if (std::abs(L.determinant()) < 1e-12)
        throw std::invalid_argument("transform: singular map");
    std::vector<Vec3> verts;
    verts.reserve(V.vertices.size());
    for (const Vec3& p : V.vertices) verts.push_back(L * p);
    return TriVarifold::create(std::move(verts), V.triangles, V.multiplicity);
}

/// Coordinate permutation (as a rotation matrix, det +1) maximizing the
/// second moment of the z-component of the normal; the three moments sum to
/// the mass, so the chosen one is >= mass/3.
inline Mat3 choosePermutation(const TriVarifold& V) {
    if (mass(V) <= 0.0) throw std::invalid_argument("choosePermutation: zero mass");
    Vec3 moments = Vec3::Zero();
    for (int t = 0; t < V.triangleCount(); ++t)
        for (int i = 0; i < 3; ++i)
            moments[i] += V.multiplicity[t] * V.areas[t] * sqr(V.normals[t][i]);
    int best = 0;
    moments.maxCoeff(&best);
    Mat3 P = Mat3::Identity();
    if (best != 2) {
        P = Mat3::Zero();
        const int other = 3 - best - 2;  // the axis not involved in the swap
        P(2, best) = 1.0;
        P(best, 2) = 1.0;
        P(other, other) = -1.0;  // keep det +1
    }
    return P;
}

inline double normalMomentZ(const TriVarifold& V) {
    double m = 0.0;
    for (int t = 0; t < V.triangleCount(); ++t)
        m += V.multiplicity[t] * V.areas[t] * sqr(V.normals[t].z());
    return m;
}

struct PlaneProjection {
    GridField S;  // rows (A_x^x, A_x^y) of the first-variation matrix measure
    GridField T;  // rows (A_y^x, A_y^y)
};

namespace detail {

template <typename DepositFn>
inline void subdivideAndDeposit(const Vec3& p0, const Vec3& p1, const Vec3& p2,
                                double maxDiam, const DepositFn& fn, int depth = 0) {
    const double diam = std::max({(p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()});
    if (diam <= maxDiam || depth >= 16) {
        const double area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
        fn((p0 + p1 + p2) / 3.0, area);
        return;
    }
    const Vec3 m01 = 0.5 * (p0 + p1), m12 = 0.5 * (p1 + p2), m20 = 0.5 * (p2 + p0);
    subdivideAndDeposit(p0, m01, m20, maxDiam, fn, depth + 1);
    subdivideAndDeposit(m01, p1, m12, maxDiam, fn, depth + 1);
    subdivideAndDeposit(m20, m12, p2, maxDiam, fn, depth + 1);
    subdivideAndDeposit(m01, m12, m20, maxDiam, fn, depth + 1);
}

}  // namespace detail

/// Pushforward of the first-variation matrix measure rows to the plane:
/// S collects (nu^y dyF + nu^z dzF, -nu^x dyF) theta dArea,
/// T collects (-nu^y dxF, nu^x dxF + nu^z dzF) theta dArea,
/// deposited at projected sub-triangle centroids. The sub-triangle diameter
/// is cell size / subdivFactor: splat granularity at the cell scale inflates
/// the discrete divergence, so deposits must stay well below it for divTV to
/// converge under grid refinement.
inline PlaneProjection projectToPlane(const TriVarifold& V, const Integrand& F,
                                      const GridSpec& grid, double subdivFactor = 4.0) {
    grid.validate();
    // the grid must cover the projected support with an interior margin
    Vec2 lo(1e300, 1e300), hi(-1e300, -1e300);
    for (const Vec3& p : V.vertices) {
        lo = lo.cwiseMin(Vec2(p.x(), p.y()));
        hi = hi.cwiseMax(Vec2(p.x(), p.y()));
    }
    if (lo.x() < grid.xAt(1) || hi.x() > grid.xAt(grid.nx - 1) || lo.y() < grid.yAt(1) ||
        hi.y() > grid.yAt(grid.ny - 1))
        throw std::invalid_argument("projectToPlane: grid too small for the support");

    PlaneProjection proj{GridField::zeros(grid), GridField::zeros(grid)};
    const double maxDiam = std::min(grid.hx, grid.hy) / std::max(1.0, subdivFactor);
    for (int t = 0; t < V.triangleCount(); ++t) {
        const double theta = V.multiplicity[t];
        if (theta == 0.0) continue;
        const Vec3 nu = V.normals[t];
        const Vec3 g = grad(F, nu);
        const double sx = nu.y() * g.y() + nu.z() * g.z();
        const double sy = -nu.x() * g.y();
        const double tx = -nu.y() * g.x();
        const double ty = nu.x() * g.x() + nu.z() * g.z();
        const auto& tri = V.triangles[t];
        detail::subdivideAndDeposit(
            V.vertices[tri[0]], V.vertices[tri[1]], V.vertices[tri[2]], maxDiam,
            [&](const Vec3& c, double area) {
                const Vec2 p(c.x(), c.y());
                const double w = theta * area;
                proj.S.deposit(p, sx * w, sy * w);
                proj.T.deposit(p, tx * w, ty * w);
            });
    }
    return proj;
}

struct MsRatioOptions {
    int normalizeMaxIter = 200;
    double normalizeTol = 1e-12;
    int geoSamples = 4096;
};

/// Full pipeline for the scale-invariant inequality
///   mass <= C(F) sqrt(supportArea) |delta^F V|:
/// normalize the integrand, transform the varifold, rotate the distinguished
/// coordinate, then report the empirical constant
///   c_hat = mass / (sqrt(supportArea) * firstVariationTV)
/// together with the density-form constant c_hat_density = mass*theta0/TV^2.
inline Report msRatio(const TriVarifold& V, const Integrand& F,
                      const MsRatioOptions& opts = {}) {
    const Normalization norm = computeNormalization(F, opts.normalizeMaxIter,
                                                    opts.normalizeTol);
    const Integrand G = pushforward(F, norm.L);
    const TriVarifold V1 = transform(V, norm.L);
    const Mat3 P = choosePermutation(V1);
    const TriVarifold V2 = transform(V1, P);
    const Integrand G2 = pushforward(G, P);

    const double m = mass(V2);
    const double area = supportArea(V2);
    const EdgeMeasure em = firstVariation(V2, G2);
    const double tv = em.totalVariation();
    if (!(tv > 0.0))
        throw std::runtime_error("msRatio: first variation has zero total variation");

    const double rhs = std::sqrt(area) * tv;
    Report r = makeLeqReport(m, rhs, 0.0, 0.0);
    r.pass = std::isfinite(m / rhs);
    r.detail["c_hat"] = m / rhs;
    r.detail["mass"] = m;
    r.detail["support_area"] = area;
    r.detail["first_variation_tv"] = tv;
    const double theta0 = V2.minPositiveMultiplicity();
    r.detail["theta0"] = theta0;
    r.detail["c_hat_density"] = m * theta0 / sqr(tv);
    r.detail["achieved_det"] = norm.achievedDet;
    r.detail["geo_margin"] = norm.geoMargin;
    r.detail["moment_ratio_z"] = normalMomentZ(V2) / m;
    return r;
}

}  // namespace anisolab
