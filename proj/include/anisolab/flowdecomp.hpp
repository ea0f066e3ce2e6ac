#pragma once

#include "anisolab/planefield.hpp"

#include <functional>
#include <optional>

namespace anisolab {

/// Smooth planar vector field with closed-form Jacobian access. Outside the
/// support disk (center, supportRadius) the field equals `background`.
struct SmoothField {
    std::function<Vec2(const Vec2&)> value;
    std::function<Mat2(const Vec2&)> jacobian;
    double supportRadius = std::numeric_limits<double>::infinity();
    Vec2 background = Vec2::Zero();
    Vec2 center = Vec2::Zero();

    double divergenceAt(const Vec2& p) const { return jacobian(p).trace(); }
};

struct TraceOptions {
    double step = 1.0 / 64.0;  // RK4 time step
    int maxSteps = 200000;
    double landingTol = 1e-10;
};

enum class StopKind { XLevel, YLevel, Time };
struct Stop {
    StopKind kind;
    double value;
    static Stop xLevel(double x) { return {StopKind::XLevel, x}; }
    static Stop yLevel(double y) { return {StopKind::YLevel, y}; }
    static Stop time(double t) { return {StopKind::Time, t}; }
};

struct TraceResult {
    std::vector<Vec2> points;
    std::vector<double> accum;  // running integral of div(field) dt from start
    std::vector<double> times;
    int steps = 0;
};

namespace detail {

// One RK4 step of the augmented system (position, integral of divergence).
inline void rk4AugStep(const SmoothField& f, Vec2& p, double& a, double dt) {
    auto eval = [&f](const Vec2& q) { return f.value(q); };
    auto dive = [&f](const Vec2& q) { return f.divergenceAt(q); };
    const Vec2 k1 = eval(p);
    const double d1 = dive(p);
    const Vec2 k2 = eval(p + 0.5 * dt * k1);
    const double d2 = dive(p + 0.5 * dt * k1);
    const Vec2 k3 = eval(p + 0.5 * dt * k2);
    const double d3 = dive(p + 0.5 * dt * k2);
    const Vec2 k4 = eval(p + dt * k3);
    const double d4 = dive(p + dt * k3);
    p += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    a += dt / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
}

}  // namespace detail

/// RK4 trajectory of gamma' = Z(gamma) from p, with fixed step and bisection
/// refinement of the final step onto the stopping level. For level stopping
/// the transverse component must keep a consistent sign; a non-transverse
/// flow exhausts the step cap and throws.
inline TraceResult integrateCurve(const SmoothField& Z, const Vec2& p0, Stop stop,
                                  const TraceOptions& opts = {}) {
    TraceResult res;
    Vec2 p = p0;
    double a = 0.0, t = 0.0;
    res.points.push_back(p);
    res.accum.push_back(a);
    res.times.push_back(t);

    if (stop.kind == StopKind::Time) {
        const double T = stop.value;
        const double dir = T >= 0.0 ? 1.0 : -1.0;
        int n = static_cast<int>(std::floor(std::abs(T) / opts.step));
        if (n > opts.maxSteps) throw std::runtime_error("integrateCurve: step cap exceeded");
        for (int i = 0; i < n; ++i) {
            detail::rk4AugStep(Z, p, a, dir * opts.step);
            t += dir * opts.step;
            res.points.push_back(p);
            res.accum.push_back(a);
            res.times.push_back(t);
        }
        const double rem = T - t;
        if (std::abs(rem) > 1e-15) {
            detail::rk4AugStep(Z, p, a, rem);
            res.points.push_back(p);
            res.accum.push_back(a);
            res.times.push_back(T);
        }
        res.steps = n;
        return res;
    }

    const int axis = stop.kind == StopKind::XLevel ? 0 : 1;
    const double level = stop.value;
    if (p[axis] == level) return res;
    const Vec2 v0 = Z.value(p);
    if (v0[axis] == 0.0)
        throw std::runtime_error("integrateCurve: flow not transverse to the level");
    // travel direction: move the axis coordinate toward the level
    const double dir = ((level > p[axis]) == (v0[axis] > 0.0)) ? 1.0 : -1.0;
    const double side = level > p[axis] ? 1.0 : -1.0;  // sign of (level - x) initially

    for (int i = 0; i < opts.maxSteps; ++i) {
        Vec2 pn = p;
        double an = a;
        detail::rk4AugStep(Z, pn, an, dir * opts.step);
        if (side * (level - pn[axis]) <= 0.0) {
            // bisection on the sub-step time
            double lo = 0.0, hi = dir * opts.step;
            Vec2 pm = pn;
            double am = an;
            for (int b = 0; b < 80; ++b) {
                const double mid = 0.5 * (lo + hi);
                pm = p;
                am = a;
                detail::rk4AugStep(Z, pm, am, mid);
                if (std::abs(pm[axis] - level) <= opts.landingTol) break;
                if (side * (level - pm[axis]) > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            t += 0.5 * (lo + hi);
            res.points.push_back(pm);
            res.accum.push_back(am);
            res.times.push_back(t);
            res.steps = i + 1;
            return res;
        }
        p = pn;
        a = an;
        t += dir * opts.step;
        res.points.push_back(p);
        res.accum.push_back(a);
        res.times.push_back(t);
    }
    throw std::runtime_error("integrateCurve: step cap exceeded (non-transverse flow)");
}

/// Flow factorization S = alpha Z with div Z = 0: alpha = 1 on the anchor
/// axis and d/dt log(alpha) = div S along integral curves of S, so
/// alpha(p) = exp(integral of div S from the axis to p) and Z = S / alpha.
/// The transverse axis is x (vertical anchor axis) when background points in
/// x, and y otherwise.
class FlowDecomposition {
public:
    SmoothField source;  // the factorized field S (with its eps background)
    TraceOptions trace;
    int transverseAxis = 0;  // 0: S^x >= eps > 0, anchor axis {x=0}; 1: y-type
    ScalarField streamF;     // cached stream function samples of Z

    double alpha(const Vec2& p) const {
        if (std::abs(p[transverseAxis]) <= trace.landingTol) return 1.0;
        const Stop stop = transverseAxis == 0 ? Stop::xLevel(0.0) : Stop::yLevel(0.0);
        const TraceResult tr = integrateCurve(source, p, stop, trace);
        const double logAlpha = -tr.accum.back();
        if (std::abs(logAlpha) > 50.0)
            throw std::runtime_error("FlowDecomposition: alpha overflow (|log alpha| > 50)");
        return std::exp(logAlpha);
    }

    Vec2 zValue(const Vec2& p) const { return source.value(p) / alpha(p); }

    /// Z as a SmoothField; the Jacobian is a fourth-order central difference
    /// (alpha is steep enough near the bump edges that a second-order stencil
    /// leaves O(1e-3) divergence residuals at usable step sizes).
    SmoothField zField(double fdStep = 2e-3) const {
        SmoothField z;
        z.value = [this](const Vec2& p) { return zValue(p); };
        z.jacobian = [this, fdStep](const Vec2& p) {
            Mat2 J;
            for (int c = 0; c < 2; ++c) {
                Vec2 dp = Vec2::Zero();
                dp[c] = fdStep;
                const Vec2 d = (-zValue(p + 2.0 * dp) + 8.0 * zValue(p + dp) -
                                8.0 * zValue(p - dp) + zValue(p - 2.0 * dp)) /
                               (12.0 * fdStep);
                J(0, c) = d.x();
                J(1, c) = d.y();
            }
            return J;
        };
        z.supportRadius = source.supportRadius;
        z.center = source.center;
        z.background = source.background;  // alpha = 1 along background curves through the axis
        return z;
    }

    /// Stream function of Z through the anchor-axis intercept: constant along
    /// integral curves by construction, with d(stream)/d(axis coordinate)
    /// equal to -Z^x (x-type) or +Z^y (y-type) on the anchor axis where
    /// alpha = 1.
    double streamAt(const Vec2& p) const {
        const Stop stop = transverseAxis == 0 ? Stop::xLevel(0.0) : Stop::yLevel(0.0);
        Vec2 hit = p;
        if (std::abs(p[transverseAxis]) > trace.landingTol)
            hit = integrateCurve(source, p, stop, trace).points.back();
        const double s = hit[1 - transverseAxis];
        // composite Simpson along the axis; alpha = 1 there, so Z = source
        const int n = std::max(8, static_cast<int>(std::ceil(std::abs(s) * 256)) * 2);
        const double h = s / n;
        double sum = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            const Vec2 q = transverseAxis == 0 ? Vec2(0.0, i * h) : Vec2(i * h, 0.0);
            const double integrand = transverseAxis == 0 ? source.value(q).x()
                                                         : source.value(q).y();
            sum += w * integrand;
        }
        const double integral = sum * h / 3.0;
        return transverseAxis == 0 ? -integral : integral;
    }
};

struct FactorizeOptions {
    TraceOptions trace;
    int streamGridN = 32;
    double minTransverse = 1e-6;  // required lower bound on the transverse component
};

inline FlowDecomposition factorize(const SmoothField& Stilde,
                                   const FactorizeOptions& opts = {}) {
    int axis;
    if (Stilde.background.x() > 0.0 && Stilde.background.y() == 0.0)
        axis = 0;
    else if (Stilde.background.y() > 0.0 && Stilde.background.x() == 0.0)
        axis = 1;
    else
        throw std::invalid_argument("factorize: background must point along +x or +y");

    // transversality probe over the support disk
    const double R = std::isfinite(Stilde.supportRadius) ? Stilde.supportRadius : 1.0;
    for (int i = 0; i < 48; ++i)
        for (int j = 0; j < 48; ++j) {
            const Vec2 p = Stilde.center +
                           Vec2((i + 0.5) / 48.0 * 2.0 - 1.0, (j + 0.5) / 48.0 * 2.0 - 1.0) * R;
            if (Stilde.value(p)[axis] < opts.minTransverse)
                throw std::invalid_argument(
                    "factorize: transverse component not bounded below on the support");
        }

    FlowDecomposition d;
    d.source = Stilde;
    d.trace = opts.trace;
    d.transverseAxis = axis;

    const int n = opts.streamGridN;
    GridSpec g{n, n, 2.0 * (R + 0.5) / n, 2.0 * (R + 0.5) / n,
               Stilde.center - Vec2(R + 0.5, R + 0.5)};
    d.streamF = ScalarField::zeros(g);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            d.streamF.at(i, j) = d.streamAt(
                Vec2(g.xAt(i) + 0.5 * g.hx, g.yAt(j) + 0.5 * g.hy));
    return d;
}

/// Stream function of a (nearly) divergence-free field by path integration of
/// Z^y dx - Z^x dy from the origin along axis-aligned paths, sampled at cell
/// centers. Path-independence is probed by integrating in the other order;
/// a residual above 1e-6 of the oscillation throws.
inline ScalarField streamFunction(const SmoothField& Z, const GridSpec& grid) {
    grid.validate();
    auto simpson1d = [](const std::function<double(double)>& f, double a, double b) {
        const int n = std::max(16, static_cast<int>(std::ceil(std::abs(b - a) * 128)) * 2);
        const double h = (b - a) / n;
        double s = 0.0;
        for (int i = 0; i <= n; ++i)
            s += ((i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0)) * f(a + i * h);
        return s * h / 3.0;
    };
    auto fXY = [&](double x, double y) {
        const double leg1 = simpson1d([&](double s) { return Z.value(Vec2(s, 0.0)).y(); }, 0.0, x);
        const double leg2 = simpson1d([&](double t) { return Z.value(Vec2(x, t)).x(); }, 0.0, y);
        return leg1 - leg2;
    };
    auto fYX = [&](double x, double y) {
        const double leg1 = simpson1d([&](double t) { return Z.value(Vec2(0.0, t)).x(); }, 0.0, y);
        const double leg2 = simpson1d([&](double s) { return Z.value(Vec2(s, y)).y(); }, 0.0, x);
        return -leg1 + leg2;
    };

    ScalarField f = ScalarField::zeros(grid);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, residual = 0.0;
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const double x = grid.xAt(i) + 0.5 * grid.hx;
            const double y = grid.yAt(j) + 0.5 * grid.hy;
            const double v = fXY(x, y);
            f.at(i, j) = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            if ((i % 8 == 0) && (j % 8 == 0)) residual = std::max(residual, std::abs(v - fYX(x, y)));
        }
    const double osc = hi - lo;
    if (residual > 1e-6 * std::max(osc, 1e-30))
        throw std::runtime_error("streamFunction: path-independence residual too large (div != 0?)");
    return f;
}

inline double streamFunctionAt(const SmoothField& Z, const Vec2& p) {
    auto simpson1d = [](const std::function<double(double)>& f, double a, double b) {
        const int n = std::max(16, static_cast<int>(std::ceil(std::abs(b - a) * 256)) * 2);
        const double h = (b - a) / n;
        double s = 0.0;
        for (int i = 0; i <= n; ++i)
            s += ((i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0)) * f(a + i * h);
        return s * h / 3.0;
    };
    return simpson1d([&](double s) { return Z.value(Vec2(s, 0.0)).y(); }, 0.0, p.x()) -
           simpson1d([&](double t) { return Z.value(Vec2(p.x(), t)).x(); }, 0.0, p.y());
}

struct Rect {
    double x0, y0, x1, y1;
};

/// One cell of the flow partition: bounded by the flow lines through
/// (0, j tau) and (0, (j+1) tau) and the vertical lines x = k tau, (k+1) tau.
struct FlowRegion {
    int j = 0, k = 0;
    std::vector<Vec2> bottom, top;  // ordered left to right
    Vec2 leftLo, leftHi, rightLo, rightHi;

    double area() const {
        // shoelace over bottom + right edge + reversed top + left edge
        std::vector<Vec2> loop = bottom;
        loop.push_back(rightHi);
        for (auto it = top.rbegin(); it != top.rend(); ++it) loop.push_back(*it);
        double a = 0.0;
        for (size_t i = 0; i < loop.size(); ++i) {
            const Vec2& p = loop[i];
            const Vec2& q = loop[(i + 1) % loop.size()];
            a += p.x() * q.y() - q.x() * p.y();
        }
        return 0.5 * std::abs(a);
    }
};

struct Partition {
    double tau = 0.0;
    Rect window{};
    int jLo = 0, jHi = 0, kLo = 0, kHi = 0;     // inclusive index ranges
    double yMin = 0.0, yMax = 0.0;               // extent of the traced bands
    std::vector<FlowRegion> regions;             // row-major in (j, k)

    const FlowRegion& at(int j, int k) const {
        const int nk = kHi - kLo + 1;
        return regions[(j - jLo) * nk + (k - kLo)];
    }
    Rect coveredRect() const {
        return {kLo * tau, yMin, (kHi + 1) * tau, yMax};
    }
};

/// Splits the window into regions bounded by flow lines of Z through
/// (0, j tau) and vertical lines x = k tau. Throws if adjacent flow lines
/// cross at the sampled resolution.
inline Partition buildPartition(const SmoothField& Z, double tau, const Rect& window,
                                const TraceOptions& opts = {}) {
    if (!(tau > 0.0)) throw std::invalid_argument("buildPartition: tau > 0 required");
    Partition part;
    part.tau = tau;
    part.window = window;
    part.kLo = static_cast<int>(std::ceil(window.x0 / tau - 1e-12));
    part.kHi = static_cast<int>(std::floor(window.x1 / tau + 1e-12)) - 1;
    if (part.kHi < part.kLo) throw std::invalid_argument("buildPartition: window too narrow");

    // conservative drift bound to pick the j range
    double maxSlope = 0.0;
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j) {
            const Vec2 p(window.x0 + (i + 0.5) / 32.0 * (window.x1 - window.x0),
                         window.y0 + (j + 0.5) / 32.0 * (window.y1 - window.y0));
            const Vec2 v = Z.value(p);
            if (v.x() <= 0.0)
                throw std::invalid_argument("buildPartition: Z^x must be positive in the window");
            maxSlope = std::max(maxSlope, std::abs(v.y() / v.x()));
        }
    const double drift = maxSlope * std::max(std::abs(window.x0), std::abs(window.x1)) + tau;
    part.jLo = static_cast<int>(std::floor((window.y0 - drift) / tau));
    part.jHi = static_cast<int>(std::ceil((window.y1 + drift) / tau));

    // trace each flow line and sample it column by column
    const int nCurves = part.jHi - part.jLo + 2;
    std::vector<std::vector<std::vector<Vec2>>> columns(nCurves);  // per curve, per column
    std::vector<std::vector<double>> crossings(nCurves);           // y at x = k tau
    for (int c = 0; c < nCurves; ++c) {
        const int j = part.jLo + c;
        Vec2 start(0.0, j * tau);
        // walk to the left edge of the window first
        TraceResult toLeft = integrateCurve(Z, start, Stop::xLevel(part.kLo * tau), opts);
        Vec2 p = toLeft.points.back();
        crossings[c].push_back(p.y());
        columns[c].resize(part.kHi - part.kLo + 1);
        for (int k = part.kLo; k <= part.kHi; ++k) {
            TraceResult seg = integrateCurve(Z, p, Stop::xLevel((k + 1) * tau), opts);
            columns[c][k - part.kLo] = seg.points;
            p = seg.points.back();
            crossings[c].push_back(p.y());
        }
    }
    // adjacent flow lines must stay ordered
    for (int c = 0; c + 1 < nCurves; ++c)
        for (size_t s = 0; s < crossings[c].size(); ++s)
            if (!(crossings[c][s] < crossings[c + 1][s]))
                throw std::runtime_error("buildPartition: flow-line crossing detected");
    part.yMin = *std::min_element(crossings.front().begin(), crossings.front().end());
    part.yMax = *std::max_element(crossings.back().begin(), crossings.back().end());

    const int nk = part.kHi - part.kLo + 1;
    part.regions.reserve(static_cast<size_t>(nCurves - 1) * nk);
    for (int c = 0; c + 1 < nCurves; ++c)
        for (int k = part.kLo; k <= part.kHi; ++k) {
            FlowRegion r;
            r.j = part.jLo + c;
            r.k = k;
            r.bottom = columns[c][k - part.kLo];
            r.top = columns[c + 1][k - part.kLo];
            r.leftLo = r.bottom.front();
            r.leftHi = r.top.front();
            r.rightLo = r.bottom.back();
            r.rightHi = r.top.back();
            part.regions.push_back(std::move(r));
        }
    part.jHi = part.jLo + nCurves - 2;  // band index range; regions rows = nCurves-1
    return part;
}

namespace detail {

/// 5-point Gauss-Legendre on [a, b].
template <typename F>
inline double gauss5(const F& f, double a, double b) {
    static const double xs[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                 0.5384693101056831, 0.9061798459386640};
    static const double ws[5] = {0.2369268850561891, 0.4786286704993665,
                                 0.5688888888888889, 0.4786286704993665,
                                 0.2369268850561891};
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 5; ++i) s += ws[i] * f(mid + half * xs[i]);
    return s * half;
}

template <typename F>
inline double gauss5Composite(const F& f, double a, double b, int pieces) {
    double s = 0.0;
    for (int i = 0; i < pieces; ++i)
        s += gauss5(f, a + (b - a) * i / pieces, a + (b - a) * (i + 1) / pieces);
    return s;
}

}  // namespace detail

struct PiecewiseApprox {
    std::vector<double> alphas;  // indexed like Partition::regions
    Report report;
};

/// Region-constant coefficients alpha_R = flux(S, left side) / flux(Z, left
/// side), and the divergence-budget check: the sum of the inter-region jump
/// fluxes (the total variation of div S_tau) must stay below the integral of
/// |div S| over the window.
inline PiecewiseApprox piecewiseApprox(const SmoothField& S, const FlowDecomposition& decomp,
                                       const Partition& part, int fluxPieces = 4,
                                       int divQuadN = 160, double slack = 1.05) {
    PiecewiseApprox out;
    const int nk = part.kHi - part.kLo + 1;
    const int nj = part.jHi - part.jLo + 1;
    out.alphas.assign(part.regions.size(), 0.0);

    std::vector<double> zFlux(part.regions.size(), 0.0);
    for (size_t r = 0; r < part.regions.size(); ++r) {
        const FlowRegion& reg = part.regions[r];
        const double x = reg.leftLo.x();
        const double sFlux = detail::gauss5Composite(
            [&](double y) { return S.value(Vec2(x, y)).x(); }, reg.leftLo.y(),
            reg.leftHi.y(), fluxPieces);
        zFlux[r] = detail::gauss5Composite(
            [&](double y) { return decomp.zValue(Vec2(x, y)).x(); }, reg.leftLo.y(),
            reg.leftHi.y(), fluxPieces);
        if (!(zFlux[r] > 0.0))
            throw std::runtime_error("piecewiseApprox: nonpositive Z flux across a left side");
        out.alphas[r] = sFlux / zFlux[r];
    }

    double jumpSum = 0.0;
    for (int j = 0; j < nj; ++j)
        for (int k = 1; k < nk; ++k) {
            const size_t r = static_cast<size_t>(j) * nk + k;
            jumpSum += std::abs(out.alphas[r] - out.alphas[r - 1]) * zFlux[r];
        }

    // the divergence budget runs over everything the bands cover, which can
    // exceed the requested window
    double divInt = 0.0;
    {
        const Rect cover = part.coveredRect();
        const double dx = (cover.x1 - cover.x0) / divQuadN;
        const double dy = (cover.y1 - cover.y0) / divQuadN;
        for (int i = 0; i < divQuadN; ++i)
            for (int j = 0; j < divQuadN; ++j)
                divInt += std::abs(S.divergenceAt(Vec2(cover.x0 + (i + 0.5) * dx,
                                                       cover.y0 + (j + 0.5) * dy)));
        divInt *= dx * dy;
    }

    out.report = makeLeqReport(jumpSum, divInt, slack - 1.0, 1e-12);
    out.report.detail["tau"] = part.tau;
    out.report.detail["n_regions"] = static_cast<double>(part.regions.size());
    out.report.detail["jump_sum"] = jumpSum;
    out.report.detail["div_integral"] = divInt;
    return out;
}

struct LatticeSpec {
    Vec2 origin;
    double dx = 0.0, dy = 0.0;
    int nx = 0, ny = 0;

    Vec2 point(int i, int j) const {
        return {origin.x() + (i + 0.5) * dx, origin.y() + (j + 0.5) * dy};
    }
    double cellArea() const { return dx * dy; }
};

/// Sampled good set. For the square version (k set) `good` is the
/// conjunction of the Z-cone and W-cone flags; strip masks carry only the
/// Z-cone flag. The cone test subtracts an inter-sample excursion margin so
/// the discrete set is an inner approximation of the true one.
struct GoodSetMask {
    int j = 0;
    int k = std::numeric_limits<int>::min();  // min() marks a strip mask
    LatticeSpec lattice;
    std::vector<std::uint8_t> goodZ, goodW, good;
    double margin = 0.0;
    int marginBindingCount = 0;

    bool isStrip() const { return k == std::numeric_limits<int>::min(); }
};

namespace detail {

struct ConeCheckResult {
    bool okShrunk = true;
    bool okPlain = true;
    double maxMargin = 0.0;
};

/// Cone membership of the forward trace from p until the strip exit level.
/// axis = 0 checks the x-cone {|dy| < dx} under Z until x = exitLevel;
/// axis = 1 checks the y-cone under W until y = exitLevel.
/// The cone is shrunk by a per-sample margin step^2 |J(q) Z(q)| (the local
/// inter-sample excursion bound), making the discrete set an inner
/// approximation; samples passing the unshrunk test but failing the shrunk
/// one are counted as margin-binding.
inline ConeCheckResult coneCheck(const SmoothField& field, const Vec2& p, int axis,
                                 double exitLevel, const TraceOptions& opts) {
    const TraceResult tr = integrateCurve(
        field, p, axis == 0 ? Stop::xLevel(exitLevel) : Stop::yLevel(exitLevel), opts);
    ConeCheckResult res;
    for (size_t s = 1; s < tr.points.size(); ++s) {
        const Vec2& q = tr.points[s];
        const double margin =
            sqr(opts.step) * (field.jacobian(q) * field.value(q)).norm();
        res.maxMargin = std::max(res.maxMargin, margin);
        const double dAlong = q[axis] - p[axis];
        const double dAcross = std::abs(q[1 - axis] - p[1 - axis]);
        if (!(dAcross < dAlong)) res.okPlain = false;
        if (!(dAcross < dAlong - margin)) res.okShrunk = false;
        if (!res.okPlain) break;
    }
    return res;
}

}  // namespace detail

/// Good set of the unit square U_j^x cap U_k^y on a cell-centered lattice:
/// samples whose forward Z-trajectory stays in the x-cone until x = j+1 and
/// whose forward W-trajectory stays in the y-cone until y = k+1.
inline GoodSetMask goodSet(const SmoothField& Z, const SmoothField& W, int j, int k,
                           int latticeN, const TraceOptions& opts = {}) {
    GoodSetMask m;
    m.j = j;
    m.k = k;
    m.lattice = {Vec2(j, k), 1.0 / latticeN, 1.0 / latticeN, latticeN, latticeN};
    m.goodZ.resize(static_cast<size_t>(latticeN) * latticeN);
    m.goodW.resize(m.goodZ.size());
    m.good.resize(m.goodZ.size());
    for (int b = 0; b < latticeN; ++b)
        for (int a = 0; a < latticeN; ++a) {
            const Vec2 p = m.lattice.point(a, b);
            const auto cz = detail::coneCheck(Z, p, 0, j + 1.0, opts);
            const auto cw = detail::coneCheck(W, p, 1, k + 1.0, opts);
            const size_t idx = a + static_cast<size_t>(latticeN) * b;
            m.goodZ[idx] = cz.okShrunk;
            m.goodW[idx] = cw.okShrunk;
            m.good[idx] = cz.okShrunk && cw.okShrunk;
            m.margin = std::max({m.margin, cz.maxMargin, cw.maxMargin});
            if ((cz.okPlain && !cz.okShrunk) || (cw.okPlain && !cw.okShrunk))
                ++m.marginBindingCount;
        }
    return m;
}

/// Strip version: G_j^x sampled over [j, j+1] x [yLo, yHi].
inline GoodSetMask goodSetStripX(const SmoothField& Z, int j, double yLo, double yHi,
                                 int latticeNx, int latticeNy,
                                 const TraceOptions& opts = {}) {
    GoodSetMask m;
    m.j = j;
    m.lattice = {Vec2(j, yLo), 1.0 / latticeNx, (yHi - yLo) / latticeNy, latticeNx,
                 latticeNy};
    m.goodZ.resize(static_cast<size_t>(latticeNx) * latticeNy);
    m.good = m.goodZ;
    for (int b = 0; b < latticeNy; ++b)
        for (int a = 0; a < latticeNx; ++a) {
            const Vec2 p = m.lattice.point(a, b);
            const auto cz = detail::coneCheck(Z, p, 0, j + 1.0, opts);
            const size_t idx = a + static_cast<size_t>(latticeNx) * b;
            m.goodZ[idx] = cz.okShrunk;
            m.good[idx] = cz.okShrunk;
            m.margin = std::max(m.margin, cz.maxMargin);
            if (cz.okPlain && !cz.okShrunk) ++m.marginBindingCount;
        }
    return m;
}

namespace detail {

struct CrossingSample {
    double alphaAtP = 0.0;  // alpha at the query point
    double alphaF = 0.0;    // min of alpha over the full strip crossing
};

/// alpha and its minimum along the full crossing of the strip
/// [lo, lo+1] (in the transverse coordinate) through p.
inline CrossingSample crossingMin(const FlowDecomposition& d, double stripLo,
                                  const Vec2& p) {
    const int axis = d.transverseAxis;
    const double a0 = d.alpha(p);
    double mn = a0;
    for (double level : {stripLo, stripLo + 1.0}) {
        if (std::abs(p[axis] - level) <= d.trace.landingTol) continue;
        const TraceResult tr = integrateCurve(
            d.source, p, axis == 0 ? Stop::xLevel(level) : Stop::yLevel(level), d.trace);
        for (size_t s = 0; s < tr.accum.size(); ++s)
            mn = std::min(mn, a0 * std::exp(tr.accum[s]));
    }
    return {a0, mn};
}

}  // namespace detail

struct FMinSplit {
    std::function<double(const Vec2&)> alphaF;
    std::function<double(const Vec2&)> alphaD;
};

/// The flow-constant / defect split alpha = alpha_f + alpha_d on a strip:
/// alpha_f(p) is the minimum of alpha along the full crossing through p (so
/// it is constant along each crossing), and alpha_d = alpha - alpha_f >= 0.
inline FMinSplit fMinSplit(const FlowDecomposition& d, int stripJ) {
    auto alphaF = [d, stripJ](const Vec2& p) {
        return detail::crossingMin(d, static_cast<double>(stripJ), p).alphaF;
    };
    auto alphaD = [d, stripJ](const Vec2& p) {
        const auto c = detail::crossingMin(d, static_cast<double>(stripJ), p);
        return c.alphaAtP - c.alphaF;
    };
    return {alphaF, alphaD};
}

/// Complement inequality for S_f = alpha_f Z on the strip: the positive part
/// of S_f^x - |S_f^y| outside the good set is dominated by the negative part
/// over the whole strip.
inline Report checkComplement(const FlowDecomposition& d, const GoodSetMask& stripMask,
                              double slack = 1.1) {
    if (!stripMask.isStrip())
        throw std::invalid_argument("checkComplement: expected a strip mask");
    const int j = stripMask.j;
    const LatticeSpec& lat = stripMask.lattice;
    double lhs = 0.0, rhs = 0.0;
    for (int b = 0; b < lat.ny; ++b)
        for (int a = 0; a < lat.nx; ++a) {
            const Vec2 p = lat.point(a, b);
            const auto cs = detail::crossingMin(d, j, p);
            const Vec2 sf = cs.alphaF * (d.source.value(p) / cs.alphaAtP);
            const double w = sf.x() - std::abs(sf.y());
            if (!stripMask.good[a + static_cast<size_t>(lat.nx) * b]) lhs += posPart(w);
            rhs += negPart(w);
        }
    lhs *= lat.cellArea();
    rhs *= lat.cellArea();
    Report r = makeLeqReport(lhs, rhs, slack - 1.0, 1e-10);
    r.detail["strip_j"] = j;
    r.detail["margin"] = stripMask.margin;
    r.detail["margin_binding"] = stripMask.marginBindingCount;
    return r;
}

/// Defect inequality for S_d = alpha_d Z on the strip, for Lambda > 2:
/// int (S_d^x - |S_d^y|)^+ <= Lambda int |div S| + 1/(Lambda-2) int (S_d^x - |S_d^y|)^-.
inline Report checkComplementBis(const FlowDecomposition& d, int stripJ, double lambda,
                                 double yLo, double yHi, int latticeNx = 24,
                                 int latticeNy = 96, double slack = 1.1) {
    if (!(lambda > 2.0)) throw std::invalid_argument("checkComplementBis: need Lambda > 2");
    const LatticeSpec lat{Vec2(stripJ, yLo), 1.0 / latticeNx, (yHi - yLo) / latticeNy,
                          latticeNx, latticeNy};
    double lhs = 0.0, negSum = 0.0, divInt = 0.0;
    for (int b = 0; b < lat.ny; ++b)
        for (int a = 0; a < lat.nx; ++a) {
            const Vec2 p = lat.point(a, b);
            const auto cs = detail::crossingMin(d, stripJ, p);
            const Vec2 z = d.source.value(p) / cs.alphaAtP;
            const Vec2 sd = (cs.alphaAtP - cs.alphaF) * z;
            const double w = sd.x() - std::abs(sd.y());
            lhs += posPart(w);
            negSum += negPart(w);
            divInt += std::abs(d.source.divergenceAt(p));
        }
    lhs *= lat.cellArea();
    negSum *= lat.cellArea();
    divInt *= lat.cellArea();
    const double rhs = lambda * divInt + negSum / (lambda - 2.0);
    Report r = makeLeqReport(lhs, rhs, slack - 1.0, 1e-10);
    r.detail["lambda"] = lambda;
    r.detail["div_term"] = lambda * divInt;
    r.detail["neg_term"] = negSum / (lambda - 2.0);
    return r;
}

/// Localized determinant bound on the good set G_jk:
///   int_{G_jk} det(S_f, T_f) <= int_{U_j^x}(S^x + |div S|) int_{U_k^y}(T^y + |div T|),
/// plus the sharper line-integral form
///   ... <= (int_{x=j} S^x dH^1)(int_{y=k} T^y dH^1).
inline Report checkGEst(const FlowDecomposition& dS, const FlowDecomposition& dT, int j,
                        int k, const GoodSetMask& mask, double yLo, double yHi,
                        double xLo, double xHi, double slack = 1.1) {
    if (mask.isStrip()) throw std::invalid_argument("checkGEst: expected a square mask");
    const LatticeSpec& lat = mask.lattice;
    double lhs = 0.0;
    for (int b = 0; b < lat.ny; ++b)
        for (int a = 0; a < lat.nx; ++a) {
            if (!mask.good[a + static_cast<size_t>(lat.nx) * b]) continue;
            const Vec2 p = lat.point(a, b);
            const auto cS = detail::crossingMin(dS, j, p);
            const auto cT = detail::crossingMin(dT, k, p);
            const Vec2 sf = cS.alphaF * (dS.source.value(p) / cS.alphaAtP);
            const Vec2 tf = cT.alphaF * (dT.source.value(p) / cT.alphaAtP);
            lhs += sf.x() * tf.y() - sf.y() * tf.x();
        }
    lhs *= lat.cellArea();

    const int qn = 160;
    double stripS = 0.0, stripT = 0.0;
    {
        const double dx = 1.0 / qn, dy = (yHi - yLo) / (4 * qn);
        for (int a = 0; a < qn; ++a)
            for (int b = 0; b < 4 * qn; ++b) {
                const Vec2 p(j + (a + 0.5) * dx, yLo + (b + 0.5) * dy);
                stripS += dS.source.value(p).x() + std::abs(dS.source.divergenceAt(p));
            }
        stripS *= dx * dy;
        const double dyT = 1.0 / qn, dxT = (xHi - xLo) / (4 * qn);
        for (int b = 0; b < qn; ++b)
            for (int a = 0; a < 4 * qn; ++a) {
                const Vec2 p(xLo + (a + 0.5) * dxT, k + (b + 0.5) * dyT);
                stripT += dT.source.value(p).y() + std::abs(dT.source.divergenceAt(p));
            }
        stripT *= dxT * dyT;
    }
    const double lineS = detail::gauss5Composite(
        [&](double y) { return dS.source.value(Vec2(j, y)).x(); }, yLo, yHi, 24);
    const double lineT = detail::gauss5Composite(
        [&](double x) { return dT.source.value(Vec2(x, k)).y(); }, xLo, xHi, 24);

    const double rhsStrips = stripS * stripT;
    const double rhsLines = lineS * lineT;
    Report r = makeLeqReport(lhs, rhsStrips, slack - 1.0, 1e-10);
    const bool passSimple = lhs <= rhsLines * slack + 1e-10;
    r.pass = r.pass && passSimple;
    r.detail["rhs_strips"] = rhsStrips;
    r.detail["rhs_lines"] = rhsLines;
    r.detail["pass_simple"] = passSimple ? 1.0 : 0.0;
    r.detail["good_fraction"] =
        static_cast<double>(std::count(mask.good.begin(), mask.good.end(), 1)) /
        static_cast<double>(mask.good.size());
    return r;
}

}  // namespace anisolab
