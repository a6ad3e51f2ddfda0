#include <gtest/gtest.h>

#include "pmod/preparation.hpp"
#include "pmod/time_chart.hpp"

using namespace pmod;
using C = std::complex<double>;

namespace {
// multipliers of the time-one model flow by central differences
std::pair<C, C> fd_flow_multipliers(double eps, double b) {
    const C s = std::sqrt(C(eps));
    const double h = 1e-5;
    auto d = [&](C p) { return (flow_map(eps, b, 1.0, p + h) - flow_map(eps, b, 1.0, p - h)) / (2 * h); };
    return {d(s), d(-s)};
}

// f2 = ell^{-1} o f o ell for ell(z) = z + a z^2 + i eps z (a real) with a translation on top
GermFamily planted_change(const GermFamily& f, double a, double shift) {
    Series ell = Series::identity(f.series.deg_w() + 8, f.series.deg_eps());
    ell(2, 0) = a;
    ell(1, 1) = C(0, 1);
    Series S = f.series.retruncated(f.series.deg_w() + 8, f.series.deg_eps());
    Series inner = compose(S, ell);
    Series out = compose(invert(ell), inner).retruncated(f.series.deg_w() + 4, f.series.deg_eps());
    // translate so the parabolic point sits at z = shift
    out = shift_w(out, C(-shift));
    out(0, 0) += shift;
    return make_family(out, "planted");
}
}  // namespace

TEST(CanonicalParameter, FromMultipliers) {
    auto [e, b] = eps_b_from_multipliers(std::exp(0.4), std::exp(-0.4));
    EXPECT_NEAR(std::abs(e - 0.04), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(b), 0.0, 1e-15);
    // closed-form model multipliers mu = ±2 s / (1 ± b s)
    const double s = 0.1, bb = 0.3;
    auto [e2, b2] = eps_b_from_multipliers(std::exp(2 * s / (1 + bb * s)), std::exp(-2 * s / (1 - bb * s)));
    EXPECT_NEAR(std::abs(e2 - s * s), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(b2 - bb), 0.0, 1e-14);
    EXPECT_THROW(eps_b_from_multipliers(-1.0, 2.0), BranchError);
}

TEST(CanonicalParameter, FiniteDifferenceOracleOnModel) {
    for (double bb : {0.0, 0.3}) {
        auto [lp, lm] = fd_flow_multipliers(0.04, bb);
        auto [e, b] = eps_b_from_multipliers(lp, lm);
        EXPECT_NEAR(e.real(), 0.04, 1e-8);
        EXPECT_NEAR(b.real(), bb, 1e-7);
    }
}

TEST(CanonicalParameter, ModelFamilyRoundTrip) {
    for (double bb : {0.0, 0.3, -0.2}) {
        PreparedInvariants inv = canonical_invariants(normal_form_family(bb));
        EXPECT_NEAR(std::abs(inv.eps_of_eta(0)), 0.0, 1e-14);
        EXPECT_NEAR(std::abs(inv.eps_of_eta(1) - 1.0), 0.0, 1e-10);
        for (int k = 2; k < inv.eps_of_eta.size(); ++k)
            EXPECT_LT(std::abs(inv.eps_of_eta(k)) * std::pow(0.025, k), 1e-10);
        for (size_t i = 0; i < inv.nodes.size(); ++i) {
            EXPECT_NEAR(inv.eps_nodes[i], inv.nodes[i], 1e-10 * std::abs(inv.nodes[i]) + 1e-14);
            EXPECT_NEAR(inv.b_nodes[i], bb, 1e-8);
        }
        EXPECT_NEAR(inv.b_series(0).real(), bb, 1e-8);
    }
}

TEST(CanonicalParameter, RealnessOnRandomGenericFamily) {
    for (unsigned seed : {1u, 2u, 3u}) {
        PreparedInvariants inv = canonical_invariants(random_generic_family(seed));
        EXPECT_LT(inv.realness_defect, 1e-10);
        for (int k = 0; k < inv.b_series.size(); ++k) EXPECT_EQ(inv.b_series(k).imag(), 0.0);
    }
}

TEST(CanonicalParameter, InvarianceUnderPlantedChange) {
    for (const GermFamily& f : {simple_family(), random_generic_family(5)}) {
        PreparedInvariants a = canonical_invariants(f);
        for (auto [aa, sh] : {std::pair<double, double>{0.0, 0.01}, {0.2, 0.0}, {-0.15, 0.01}}) {
            PreparedInvariants b = canonical_invariants(planted_change(f, aa, sh));
            for (size_t i = 0; i < a.nodes.size(); ++i) {
                EXPECT_NEAR(a.eps_nodes[i], b.eps_nodes[i], 1e-8);
                EXPECT_NEAR(a.b_nodes[i], b.b_nodes[i], 1e-8);
            }
        }
    }
}

TEST(CanonicalParameter, NonGenericRejected) {
    Series s(12, 6, true);
    s(1, 0) = 1;
    s(2, 0) = 0.5;
    s(0, 1) = C(0, -1);
    EXPECT_THROW(canonical_invariants(make_family(s, "")), GenericityError);
    EXPECT_THROW(prepare(make_family(s, "")), GenericityError);
}

TEST(Prepare, NormalFormIsIdentity) {
    for (double bb : {0.0, 0.3}) {
        GermFamily nf = normal_form_family(bb);
        PrepareResult r = prepare(nf);
        EXPECT_TRUE(r.identity);
        EXPECT_LT(r.residuals.at("change_minus_identity"), 1e-10);
        EXPECT_EQ(r.prepared.series.max_abs_diff(nf.series), 0.0);
        ASSERT_TRUE(r.prepared.model.has_value());
        EXPECT_NEAR(r.inv.b_series(0).real(), bb, 1e-8);
    }
}

TEST(Prepare, SimpleFamily) {
    GermFamily f = simple_family(0.5, 0.25);
    PrepareResult r = prepare(f);
    PreparedInvariants ci = canonical_invariants(f);
    EXPECT_NEAR(r.inv.B0(0).real(), 0.5, 1e-10);
    EXPECT_NEAR(r.inv.B1(0).real(), 0.25, 1e-9);
    // b(0) = 2 (1/4 - B1(0)) for the prepared form; both routes agree
    EXPECT_NEAR(r.inv.b_series(0).real(), 2 * (0.25 - r.inv.B1(0).real()), 1e-8);
    EXPECT_NEAR(r.inv.b_series(0).real(), ci.b_series(0).real(), 1e-8);
    EXPECT_NEAR(std::abs(r.inv.eps_of_eta(1) - 1.0), 0.0, 1e-10);
    EXPECT_LT(r.residuals.at("conjugacy"), 1e-9);
}

TEST(Prepare, RandomGenericFamilyAndIdempotence) {
    for (unsigned seed : {3u, 7u}) {
        GermFamily f = random_generic_family(seed);
        PrepareResult r = prepare(f);
        EXPECT_FALSE(r.identity);
        EXPECT_LT(r.residuals.at("prepared_B_real"), 1e-12);
        EXPECT_LT(r.residuals.at("prepared_tau_symmetry"), 1e-9);
        EXPECT_LT(r.residuals.at("prepared_B0_half"), 1e-10);
        EXPECT_LT(r.residuals.at("conjugacy"), 1e-8);
        EXPECT_NEAR(std::abs(r.inv.eps_of_eta(0)), 0.0, 1e-14);
        EXPECT_NEAR(std::abs(r.inv.eps_of_eta(1) - 1.0), 0.0, 1e-10);
        // canonical invariants survive the preparation
        PreparedInvariants ci = canonical_invariants(r.prepared);
        for (size_t i = 0; i < ci.nodes.size(); ++i) EXPECT_NEAR(ci.eps_nodes[i], ci.nodes[i], 1e-9);
        EXPECT_NEAR(ci.b_series(0).real(), r.inv.b_series(0).real(), 1e-8);
        PrepareResult again = prepare(r.prepared);
        EXPECT_LT(again.residuals.at("change_minus_identity"), 1e-10);
    }
}

TEST(Prepare, TranslatedFamily) {
    GermFamily f = simple_family();
    GermFamily t = planted_change(f, 0.0, 0.01);
    PrepareResult a = prepare(f), b = prepare(t);
    EXPECT_NEAR(a.inv.b_series(0).real(), b.inv.b_series(0).real(), 1e-8);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(a.inv.B0(k) - b.inv.B0(k)), 0.0, 1e-7);
    EXPECT_LT(b.residuals.at("conjugacy"), 1e-8);
}
