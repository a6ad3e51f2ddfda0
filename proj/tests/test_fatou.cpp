#include <gtest/gtest.h>

#include "pmod/fatou.hpp"
#include "support.hpp"

using namespace pmod;
using pmod::testing::simple_prepared;
using C = std::complex<double>;

namespace {
const double kGrid[] = {-0.04, -0.01, 0.01, 0.04};

// sup over sample points of |a(p) - b(p) - mean|, the spread of the difference of two coordinates
double shift_spread(const FatouCoordinate& a, const FatouCoordinate& b, const std::vector<OrbitPoint>& pts,
                    C* mean_out = nullptr) {
    C mean = 0.0;
    std::vector<C> d;
    for (const auto& p : pts) d.push_back(a.value(p) - b.value(p));
    for (C x : d) mean += x;
    mean /= double(d.size());
    double s = 0.0;
    for (C x : d) s = std::max(s, std::abs(x - mean));
    if (mean_out) *mean_out = mean;
    return s;
}

std::vector<OrbitPoint> points_near_line(const FatouCoordinate& phi, int n) {
    std::vector<OrbitPoint> pts;
    const Dynamics& dy = *phi.dyn;
    const OrbitPoint base = phi.line_point(0.0);
    for (int k = 0; k < n; ++k) {
        const double t = -1.5 + 3.0 * k / (n - 1);
        pts.push_back(dy.seek(base, base.Z + C(0.3, t)));
    }
    return pts;
}
}  // namespace

TEST(FatouNormalForm, IdentityCoordinatesGiveTranslation) {
    for (double b : {0.0, 0.3}) {
        const GermFamily nf = normal_form_family(b);
        for (double e : kGrid) {
            const FatouPair fp = fatou_pair(nf, SectorParam::real(e));
            EXPECT_EQ(fp.plus.method, FatouMethod::Identity);
            for (double y : {3.5, 4.0}) {
                const C W(0.25, y);
                EXPECT_LT(std::abs(transition_value(fp, W, true) - (W - C(0, M_PI * b))), 1e-12);
            }
        }
    }
}

TEST(FatouSolver, AbelAndAntiholomorphicRelations) {
    const GermFamily& f = simple_prepared();
    for (double e : {-0.04, -0.01, 0.0, 0.01, 0.04}) {
        const FatouPair fp = fatou_pair(f, SectorParam::real(e));
        for (const FatouCoordinate* phi : {&fp.plus, &fp.minus}) {
            EXPECT_LT(abel_residual(*phi), 1e-8) << e;
            EXPECT_LT(antiholomorphic_residual(*phi).first, 1e-7) << e;
        }
        if (e > 0) {
            EXPECT_EQ(fp.plus.domain.kind, DomainKind::Glutsyuk);
            EXPECT_LT(period_commutation_residual(fp.plus), 1e-7);
            EXPECT_LT(period_commutation_residual(fp.minus), 1e-7);
        } else if (e < 0) {
            EXPECT_EQ(fp.plus.domain.kind, DomainKind::Lavaurs);
        } else {
            EXPECT_EQ(fp.plus.domain.kind, DomainKind::Parabolic);
        }
    }
}

TEST(FatouSolver, UniqueUpToRealShiftLavaurs) {
    // two raw solves on different lines and steps differ by a constant only
    const GermFamily& f = simple_prepared();
    FatouOptions a, b;
    b.x0 = 5.5;
    b.dt = 0.15;
    for (double e : {-0.04, -0.01}) {
        const FatouPair pa = fatou_pair_raw(f, SectorParam::real(e), a);
        const FatouPair pb = fatou_pair_raw(f, SectorParam::real(e), b);
        C mean;
        EXPECT_LT(shift_spread(pa.plus, pb.plus, points_near_line(pa.plus, 12), &mean), 1e-8);
        // normalized pairs agree outright
        const FatouPair na = fatou_pair(f, SectorParam::real(e), a);
        const FatouPair nb = fatou_pair(f, SectorParam::real(e), b);
        const auto pts = points_near_line(na.plus, 12);
        double d = 0.0;
        for (const auto& p : pts) d = std::max(d, std::abs(na.plus.value(p) - nb.plus.value(p)));
        EXPECT_LT(d, 1e-8);
    }
}

TEST(FatouSolver, GlutsyukOrbitSumsMatchPeriodicStrip) {
    const GermFamily& f = simple_prepared();
    FatouOptions strip;
    strip.periodic_strip = true;
    for (double e : {0.01, 0.04}) {
        const FatouPair po = fatou_pair(f, SectorParam::real(e));
        const FatouPair ps = fatou_pair(f, SectorParam::real(e), strip);
        EXPECT_EQ(ps.plus.method, FatouMethod::Strip);
        const auto pts = points_near_line(po.plus, 10);
        double d = 0.0;
        for (const auto& p : pts) d = std::max(d, std::abs(po.plus.value(p) - ps.plus.value(p)));
        EXPECT_LT(d, 1e-8) << e;
    }
}

TEST(FatouSolver, InverseRoundTrip) {
    const GermFamily& f = simple_prepared();
    for (double e : {-0.01, 0.01}) {
        const FatouPair fp = fatou_pair(f, SectorParam::real(e));
        for (const auto& p : points_near_line(fp.plus, 6)) {
            const C W = fp.plus.value(p);
            const auto pre = fp.plus.inverse(W, p);
            EXPECT_LT(std::abs(fp.plus.value(pre.p) + double(pre.shift) - W), 1e-10);
        }
    }
}

TEST(FatouStrong, SectoralRaysSatisfyAbel) {
    const GermFamily& f = simple_prepared();
    FatouOptions o;
    o.mode = Mode::Strong;
    for (double a : {M_PI / 2, 3 * M_PI / 2}) {
        const FatouPair fp = fatou_pair(f, SectorParam{0.01, a}, o);
        EXPECT_EQ(fp.plus.domain.kind, DomainKind::Sectoral);
        EXPECT_LT(abel_residual(fp.plus), 1e-8);
        EXPECT_LT(abel_residual(fp.minus), 1e-8);
    }
}

TEST(FatouSector, ParameterHelpers) {
    const SectorParam p = SectorParam::real(-0.04);
    EXPECT_DOUBLE_EQ(p.arg, M_PI);
    EXPECT_NEAR(std::abs(p.sqrt_eps() - C(0, 0.2)), 0.0, 1e-15);
    EXPECT_TRUE(p.is_real());
    const SectorParam q{0.01, 0.5};
    EXPECT_FALSE(q.is_real());
    EXPECT_DOUBLE_EQ(q.sector_conj().arg, 2 * M_PI - 0.5);
    // arg and arg + 2 pi give opposite square roots
    EXPECT_NEAR(std::abs(SectorParam{0.01, 0.3}.sqrt_eps() + SectorParam{0.01, 0.3 + 2 * M_PI}.sqrt_eps()), 0.0,
                1e-15);
}
