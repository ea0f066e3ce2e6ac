#include "anisolab/flowdecomp.hpp"
#include "anisolab/generators.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace anisolab;
using Catch::Approx;

namespace {

SmoothField constantField(const Vec2& c) {
    SmoothField f;
    f.value = [c](const Vec2&) { return c; };
    f.jacobian = [](const Vec2&) { return Mat2::Zero(); };
    f.supportRadius = 0.0;
    f.background = c;
    return f;
}

// Z = (1, x): integral curves are parabolas y = y0 + x^2/2
SmoothField parabolicField() {
    SmoothField f;
    f.value = [](const Vec2& p) { return Vec2(1.0, p.x()); };
    f.jacobian = [](const Vec2&) {
        Mat2 J;
        J << 0, 0, 1, 0;
        return J;
    };
    f.background = Vec2(1.0, 0.0);
    f.supportRadius = std::numeric_limits<double>::infinity();
    return f;
}

// S = (u(x), 0) with u > 0: div = u'(x), curves horizontal, and the
// factorization has the closed form alpha(x, y) = u(x)/u(0).
struct UField {
    double eps, amp, k;
    double u(double x) const {
        return eps + amp * (std::abs(x - 0.5) < 0.5 ? std::pow(1.0 - sqr(2.0 * (x - 0.5)), 3) : 0.0);
    }
    double du(double x) const {
        if (std::abs(x - 0.5) >= 0.5) return 0.0;
        const double t = 2.0 * (x - 0.5);
        return amp * 3.0 * sqr(1.0 - t * t) * (-2.0 * t) * 2.0;
    }
    SmoothField build() const {
        SmoothField f;
        const UField self = *this;
        f.value = [self](const Vec2& p) { return Vec2(self.u(p.x()), 0.0); };
        f.jacobian = [self](const Vec2& p) {
            Mat2 J = Mat2::Zero();
            J(0, 0) = self.du(p.x());
            return J;
        };
        f.background = Vec2(eps, 0.0);
        f.center = Vec2(0.5, 0.5);
        f.supportRadius = 0.75;
        return f;
    }
};

}  // namespace

TEST_CASE("integrateCurve: straight line, parabola, reversibility") {
    const TraceOptions opts{1.0 / 64.0, 200000, 1e-10};

    const TraceResult line =
        integrateCurve(constantField(Vec2(1.0, 0.0)), Vec2(0.0, 0.7), Stop::xLevel(2.0), opts);
    CHECK((line.points.back() - Vec2(2.0, 0.7)).norm() < 1e-9);
    for (const Vec2& p : line.points) CHECK(p.y() == 0.7);

    const TraceResult par =
        integrateCurve(parabolicField(), Vec2(0.0, 0.0), Stop::xLevel(1.0), opts);
    CHECK((par.points.back() - Vec2(1.0, 0.5)).norm() < 1e-8);

    // reverse from the endpoint: return to the start
    const TraceResult back =
        integrateCurve(parabolicField(), par.points.back(), Stop::xLevel(0.0), opts);
    CHECK((back.points.back() - Vec2(0.0, 0.0)).norm() < 1e-7);

    // time stopping
    const TraceResult timed =
        integrateCurve(constantField(Vec2(0.5, 0.25)), Vec2(0.0, 0.0), Stop::time(2.0), opts);
    CHECK((timed.points.back() - Vec2(1.0, 0.5)).norm() < 1e-12);

    // non-transverse flow exhausts the cap
    CHECK_THROWS(integrateCurve(constantField(Vec2(0.0, 1.0)), Vec2(0.0, 0.0),
                                Stop::xLevel(1.0), TraceOptions{1.0 / 64.0, 100, 1e-10}));
}

TEST_CASE("factorize: divergence-free input keeps alpha = 1") {
    const TransverseFieldSpec spec = [] {
        Rng rng(51);
        TransverseFieldSpec s = seededTransverseSpec(rng, 0, 0.3);
        s.slopeAmp = 0.0;  // S = (eps + bumps(x only composition? no: kill slope)
        return s;
    }();
    // with zero slope the field is (eps + alpha(x,y), 0); that is NOT
    // divergence-free. Use a genuinely div-free field: constant background.
    const FlowDecomposition d = factorize(constantField(Vec2(0.4, 0.0)));
    Rng rng(52);
    for (int t = 0; t < 20; ++t) {
        const Vec2 p(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        CHECK(d.alpha(p) == Approx(1.0).margin(1e-12));
        CHECK((d.zValue(p) - Vec2(0.4, 0.0)).norm() < 1e-12);
    }
}

TEST_CASE("factorize: closed-form alpha for a 1-D compressible field") {
    const UField uf{0.3, 0.8, 0.0};
    const FlowDecomposition d = factorize(uf.build());
    Rng rng(53);
    for (int t = 0; t < 25; ++t) {
        const Vec2 p(rng.uniform(-0.2, 1.2), rng.uniform(-1.0, 1.0));
        const double expected = uf.u(p.x()) / uf.u(0.0);
        CHECK(d.alpha(p) == Approx(expected).epsilon(1e-5));
    }
    // alpha Z reproduces the source exactly by construction
    const Vec2 q(0.61, 0.13);
    CHECK((d.alpha(q) * d.zValue(q) - uf.build().value(q)).norm() < 1e-12);
}

TEST_CASE("factorize: divergence of Z vanishes to trace accuracy") {
    const TransverseFlowPair pair = makeTransversePair(7, /*epsBackground=*/0.4);
    FactorizeOptions opts;
    opts.trace.step = 1.0 / 1024.0;
    const FlowDecomposition d = factorize(pair.S, opts);
    const SmoothField Z = d.zField(2e-3);
    Rng rng(54);
    double worst = 0.0;
    for (int t = 0; t < 60; ++t) {
        const Vec2 p(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9));
        const double dv = std::abs(Z.jacobian(p).trace());
        const double scale = Z.value(p).norm();
        worst = std::max(worst, dv / scale);
    }
    INFO("max sampled |div Z|/|Z| = " << worst);
    CHECK(worst < 1e-5);
}

TEST_CASE("factorize: preconditions") {
    // background must be a positive coordinate direction
    SmoothField bad = constantField(Vec2(0.2, 0.1));
    CHECK_THROWS_AS(factorize(bad), std::invalid_argument);

    // transverse component dipping to zero on the support is rejected
    SmoothField dip;
    BumpSpec hole{Vec2(0.5, 0.5), 0.3, -0.5};
    dip.value = [hole](const Vec2& p) { return Vec2(0.4 + hole.value(p), 0.0); };
    dip.jacobian = [hole](const Vec2& p) {
        Mat2 J = Mat2::Zero();
        J.row(0) = hole.grad(p);
        return J;
    };
    dip.background = Vec2(0.4, 0.0);
    dip.center = Vec2(0.5, 0.5);
    dip.supportRadius = 0.3;
    CHECK_THROWS_AS(factorize(dip), std::invalid_argument);
}

TEST_CASE("streamFunction: closed forms and the level-set property") {
    GridSpec g{16, 16, 0.125, 0.125, Vec2(-1.0, -1.0)};

    const ScalarField f1 = streamFunction(constantField(Vec2(1.0, 0.0)), g);
    // f = -y + const: differences along y equal -dy, constant along x
    for (int j = 0; j + 1 < 16; ++j)
        for (int i = 0; i + 1 < 16; ++i) {
            CHECK(f1.at(i, j) - f1.at(i, j + 1) == Approx(0.125).margin(1e-10));
            CHECK(f1.at(i + 1, j) == Approx(f1.at(i, j)).margin(1e-10));
        }

    const ScalarField f2 = streamFunction(parabolicField(), g);
    // f = x^2/2 - y up to a constant
    const auto expected = [](double x, double y) { return 0.5 * x * x - y; };
    const double off = f2.at(0, 0) - expected(g.xAt(0) + 0.5 * g.hx, g.yAt(0) + 0.5 * g.hy);
    for (int j = 0; j < 16; ++j)
        for (int i = 0; i < 16; ++i)
            CHECK(f2.at(i, j) - off ==
                  Approx(expected(g.xAt(i) + 0.5 * g.hx, g.yAt(j) + 0.5 * g.hy)).margin(1e-8));

    // a field with divergence fails the path-independence residual
    SmoothField divergent;
    divergent.value = [](const Vec2& p) { return Vec2(p.x(), 0.0); };
    divergent.jacobian = [](const Vec2&) {
        Mat2 J = Mat2::Zero();
        J(0, 0) = 1.0;
        return J;
    };
    CHECK_THROWS(streamFunction(divergent, g));
}

TEST_CASE("decomposition stream function is constant along trajectories") {
    const TransverseFlowPair pair = makeTransversePair(9, 0.4);
    const FlowDecomposition d = factorize(pair.S);
    const TraceResult tr =
        integrateCurve(pair.S, Vec2(0.05, 0.35), Stop::xLevel(1.1), d.trace);
    double lo = 1e300, hi = -1e300;
    for (size_t s = 0; s < tr.points.size(); s += 8) {
        const double v = d.streamAt(tr.points[s]);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    // compare against the stream range over the cached grid
    double fLo = 1e300, fHi = -1e300;
    for (double v : d.streamF.values) {
        fLo = std::min(fLo, v);
        fHi = std::max(fHi, v);
    }
    CHECK(hi - lo < 1e-6 * (fHi - fLo));
}

TEST_CASE("buildPartition: squares, sheared parallelograms, shared corners") {
    const TraceOptions opts{1.0 / 64.0, 200000, 1e-10};
    const Rect window{0.0, -0.8, 1.0, 0.8};

    const Partition squares = buildPartition(constantField(Vec2(1.0, 0.0)), 0.25, window, opts);
    for (const FlowRegion& r : squares.regions)
        CHECK(r.area() == Approx(0.0625).margin(1e-12));

    const Partition shear = buildPartition(constantField(Vec2(1.0, 0.3)), 0.25, window, opts);
    for (const FlowRegion& r : shear.regions)
        CHECK(r.area() == Approx(0.0625).margin(1e-8));
    // adjacent regions share their column boundary endpoints
    for (int j = shear.jLo; j <= shear.jHi; ++j)
        for (int k = shear.kLo; k < shear.kHi; ++k) {
            const FlowRegion& a = shear.at(j, k);
            const FlowRegion& b = shear.at(j, k + 1);
            CHECK((a.rightLo - b.leftLo).norm() < 1e-9);
            CHECK((a.rightHi - b.leftHi).norm() < 1e-9);
        }

    CHECK_THROWS(buildPartition(constantField(Vec2(-1.0, 0.0)), 0.25, window, opts));
}

TEST_CASE("piecewiseApprox: div-free fields have constant band coefficients") {
    // integral curves of Z and of the source coincide as sets, so the
    // partition can be traced on the source field directly
    const SmoothField plain = constantField(Vec2(0.5, 0.0));
    const FlowDecomposition dp = factorize(plain);
    const Partition part = buildPartition(plain, 0.25, Rect{0.0, -0.6, 1.0, 0.6});
    const PiecewiseApprox pw = piecewiseApprox(plain, dp, part);
    CHECK(pw.report.lhs == Approx(0.0).margin(1e-10));
    CHECK(pw.report.pass);
    for (double a : pw.alphas) CHECK(a == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("piecewiseApprox: jump sum bounded by the divergence budget, tau-convergent") {
    const UField uf{0.3, 0.9, 0.0};
    const SmoothField S = uf.build();
    const FlowDecomposition d = factorize(S);
    const Rect window{0.0, -0.8, 1.0, 0.8};
    for (double tau : {0.25, 0.125}) {
        const Partition part = buildPartition(S, tau, window);
        const PiecewiseApprox pw = piecewiseApprox(S, d, part);
        CHECK(pw.report.pass);  // jumpSum <= 1.05 * int |div S| over the bands
        // oracle: |div| = |u'(x)|, so the budget is TV(u) * band extent;
        // this case saturates the bound as tau -> 0
        const double divMass = 2.0 * 0.9 * (part.yMax - part.yMin);
        CHECK(pw.report.rhs == Approx(divMass).epsilon(2e-3));
        for (double a : pw.alphas) CHECK(a >= 0.0);
        CHECK(pw.report.lhs / pw.report.rhs <= 1.005);
    }
}

TEST_CASE("goodSet: cone-aligned flows are all good, steep flows are empty") {
    const TraceOptions opts{1.0 / 64.0, 200000, 1e-10};
    const GoodSetMask allGood =
        goodSet(constantField(Vec2(1.0, 0.0)), constantField(Vec2(0.0, 1.0)), 0, 0, 12, opts);
    for (auto g : allGood.good) CHECK(g == 1);
    CHECK(allGood.marginBindingCount == 0);

    const GoodSetMask none =
        goodSet(constantField(Vec2(1.0, 2.0)), constantField(Vec2(0.0, 1.0)), 0, 0, 12, opts);
    for (size_t i = 0; i < none.goodZ.size(); ++i) {
        CHECK(none.goodZ[i] == 0);
        CHECK(none.goodW[i] == 1);
        CHECK(none.good[i] == 0);
    }
}

TEST_CASE("goodSet: key uniqueness property on a transverse pair") {
    const TransverseFlowPair pair = makeTransversePair(13, 0.4);
    FactorizeOptions fo;
    const FlowDecomposition dS = factorize(pair.S, fo);
    const FlowDecomposition dT = factorize(pair.T, fo);
    const GoodSetMask mask = goodSet(pair.S, pair.T, 0, 0, 16, dS.trace);

    int nGood = 0;
    std::vector<Vec2> pts;
    std::vector<double> fv, gv;
    double minSpeedS = 1e300, minSpeedT = 1e300;
    for (int b = 0; b < mask.lattice.ny; ++b)
        for (int a = 0; a < mask.lattice.nx; ++a) {
            if (!mask.good[a + static_cast<size_t>(mask.lattice.nx) * b]) continue;
            ++nGood;
            const Vec2 p = mask.lattice.point(a, b);
            pts.push_back(p);
            fv.push_back(dS.streamAt(p));
            gv.push_back(dT.streamAt(p));
            minSpeedS = std::min(minSpeedS, pair.S.value(p).norm());
            minSpeedT = std::min(minSpeedT, pair.T.value(p).norm());
        }
    INFO("good samples: " << nGood);
    CHECK(nGood > 0);
    // no two distinct good samples lie on the same Z-curve and the same
    // W-curve (stream tube radius 1e-6)
    int coincidences = 0;
    for (size_t a = 0; a < pts.size(); ++a)
        for (size_t b = a + 1; b < pts.size(); ++b)
            if (std::abs(fv[a] - fv[b]) <= 1e-6 * minSpeedS &&
                std::abs(gv[a] - gv[b]) <= 1e-6 * minSpeedT)
                ++coincidences;
    CHECK(coincidences == 0);
}

TEST_CASE("fMinSplit: constant alpha, dip along crossings, bounds") {
    // div-free: alpha constant 1 -> alpha_f = alpha, alpha_d = 0
    const FlowDecomposition dplain = factorize(constantField(Vec2(0.5, 0.0)));
    const FMinSplit plain = fMinSplit(dplain, 0);
    CHECK(plain.alphaF(Vec2(0.4, 0.2)) == Approx(1.0).margin(1e-10));
    CHECK(plain.alphaD(Vec2(0.4, 0.2)) == Approx(0.0).margin(1e-10));

    // u-field: alpha(x) = u(x)/u(0); the strip [0,1] crossing sees the full dip
    const UField uf{0.3, 0.9, 0.0};
    const FlowDecomposition d = factorize(uf.build());
    const FMinSplit split = fMinSplit(d, 0);
    double uMin = 1e300;
    for (int i = 0; i <= 1000; ++i) uMin = std::min(uMin, uf.u(i / 1000.0));
    // u attains its min at the strip edges x=0, x=1 where u = eps... actually
    // u = eps + bump: bump vanishes at x=0,1, so min over [0,1] is eps = u(0)
    const double expectedAlphaF = uMin / uf.u(0.0);
    Rng rng(55);
    for (int t = 0; t < 6; ++t) {
        const Vec2 p(rng.uniform(0.05, 0.95), rng.uniform(-0.5, 0.5));
        const double af = split.alphaF(p);
        const double ad = split.alphaD(p);
        CHECK(af == Approx(expectedAlphaF).epsilon(1e-5));
        CHECK(ad == Approx(d.alpha(p) - af).margin(1e-12));
        CHECK(af >= 0.0);
        CHECK(af <= d.alpha(p) + 1e-12);
    }
}

TEST_CASE("checkComplement: trivial for straight flow, holds on a seeded field") {
    const FlowDecomposition dplain = factorize(constantField(Vec2(0.8, 0.0)));
    const GoodSetMask mplain = goodSetStripX(constantField(Vec2(0.8, 0.0)), 0, -0.5, 0.5, 8, 16);
    const Report rplain = checkComplement(dplain, mplain);
    CHECK(rplain.lhs == 0.0);
    CHECK(rplain.pass);

    const TransverseFlowPair pair = makeTransversePair(17, 0.4);
    const FlowDecomposition d = factorize(pair.S);
    const GoodSetMask mask = goodSetStripX(pair.S, 0, -0.6, 1.6, 16, 36, d.trace);
    const Report r = checkComplement(d, mask);
    INFO("lhs=" << r.lhs << " rhs=" << r.rhs);
    CHECK(r.pass);
}

TEST_CASE("checkComplementBis: zero defect for div-free, lambda monotonicity") {
    const FlowDecomposition dplain = factorize(constantField(Vec2(0.8, 0.0)));
    const Report r0 = checkComplementBis(dplain, 0, 3.0, -0.5, 0.5, 8, 16);
    CHECK(r0.lhs == Approx(0.0).margin(1e-10));
    CHECK(r0.pass);

    CHECK_THROWS_AS(checkComplementBis(dplain, 0, 2.0, -0.5, 0.5, 8, 16),
                    std::invalid_argument);

    const TransverseFlowPair pair = makeTransversePair(19, 0.4);
    const FlowDecomposition d = factorize(pair.S);
    const Report r3 = checkComplementBis(d, 0, 3.0, -0.6, 1.6, 12, 28);
    const Report r6 = checkComplementBis(d, 0, 6.0, -0.6, 1.6, 12, 28);
    CHECK(r3.pass);
    CHECK(r6.pass);
    CHECK(r6.detail.at("div_term") >= r3.detail.at("div_term"));
    CHECK(r6.detail.at("neg_term") <= r3.detail.at("neg_term"));
}

TEST_CASE("checkGEst: band tubes near equality, empty good set vanishes") {
    // horizontal band flow S and vertical band flow T: divergence-free,
    // good set is the whole square, alpha_f = 1
    const double eps = 0.05, A = 20.0;
    SmoothField S;
    BumpSpec profS{Vec2(0.5, 0.5), 0.35, A};
    S.value = [profS, eps](const Vec2& p) {
        return Vec2(eps + profS.value(Vec2(0.5, p.y())), 0.0);
    };
    S.jacobian = [profS](const Vec2& p) {
        Mat2 J = Mat2::Zero();
        J(0, 1) = profS.grad(Vec2(0.5, p.y())).y();
        return J;
    };
    S.background = Vec2(eps, 0.0);
    S.center = Vec2(0.5, 0.5);
    S.supportRadius = 0.6;
    SmoothField T;
    T.value = [profS, eps](const Vec2& p) {
        return Vec2(0.0, eps + profS.value(Vec2(0.5, p.x())));
    };
    T.jacobian = [profS](const Vec2& p) {
        Mat2 J = Mat2::Zero();
        J(1, 0) = profS.grad(Vec2(0.5, p.x())).y();
        return J;
    };
    T.background = Vec2(0.0, eps);
    T.center = Vec2(0.5, 0.5);
    T.supportRadius = 0.6;

    // speed ~ A, so the time step shrinks accordingly
    FactorizeOptions fo;
    fo.trace.step = 1.0 / (64.0 * A);
    const FlowDecomposition dS = factorize(S, fo);
    const FlowDecomposition dT = factorize(T, fo);
    const GoodSetMask mask = goodSet(S, T, 0, 0, 24, fo.trace);
    for (auto g : mask.good) CHECK(g == 1);

    const Report r = checkGEst(dS, dT, 0, 0, mask, -1.0, 2.0, -1.0, 2.0);
    CHECK(r.pass);
    CHECK(r.detail.at("pass_simple") == 1.0);
    // equality regime: lhs within 10% of the sharper line-integral bound
    CHECK(r.lhs == Approx(r.detail.at("rhs_lines")).epsilon(0.10));

    // empty good set: lhs = 0
    GoodSetMask empty = mask;
    std::fill(empty.good.begin(), empty.good.end(), 0);
    const Report rz = checkGEst(dS, dT, 0, 0, empty, -1.0, 2.0, -1.0, 2.0);
    CHECK(rz.lhs == 0.0);
}

TEST_CASE("monotone-tail lemma on sampled 1-D paths") {
    // for xi in W^{1,1}([0,L]) and E = {s : xi(t) > xi(s) for all t > s},
    // the positive variation outside E is dominated by the negative variation
    Rng rng(57);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2000;
        const double L = 1.0;
        std::vector<double> xi(n + 1, 0.0);
        const int modes = rng.uniformInt(1, 6);
        std::vector<double> amp(modes), freq(modes), phase(modes);
        for (int m = 0; m < modes; ++m) {
            amp[m] = rng.uniform(-1.0, 1.0);
            freq[m] = rng.uniform(0.5, 9.0);
            phase[m] = rng.uniform(0.0, 2.0 * M_PI);
        }
        for (int i = 0; i <= n; ++i) {
            const double t = L * i / n;
            double v = 0.4 * t * rng.uniform(0.99, 1.01);
            for (int m = 0; m < modes; ++m)
                v += amp[m] * std::sin(2.0 * M_PI * freq[m] * t + phase[m]);
            xi[i] = v;
        }
        // E discretized: xi(s) below the strict future minimum
        std::vector<double> futureMin(n + 2, 1e300);
        for (int i = n; i >= 0; --i) futureMin[i] = std::min(futureMin[i + 1], xi[i]);
        double lhs = 0.0, rhs = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = xi[i + 1] - xi[i];
            const bool inE = xi[i] < futureMin[i + 1];
            if (!inE) lhs += posPart(d);
            rhs += negPart(d);
        }
        INFO("trial " << trial << " lhs=" << lhs << " rhs=" << rhs);
        CHECK(lhs <= 1.05 * rhs + 1e-12);
    }
}
