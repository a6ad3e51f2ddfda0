#include <gtest/gtest.h>

#include "support.hpp"

using namespace pmod;
using pmod::testing::complex_q_prepared;
using pmod::testing::max_relation_residual;
using pmod::testing::simple_prepared;
using C = std::complex<double>;

namespace {
const std::vector<double> kGrid = {-0.04, -0.01, 0.01, 0.04};

double max_nonconstant(const ModulusRecord& r, int nmax) {
    double m = 0.0;
    for (size_t k = 1; k < r.c_inf.size(); ++k) m = std::max(m, std::abs(r.c_inf[k]));
    for (size_t k = 1; k < r.c_0.size(); ++k) m = std::max(m, std::abs(r.c_0[k]));
    for (int n = -nmax; n <= nmax && !r.c_G.empty(); ++n)
        if (n != 0) m = std::max(m, std::abs(r.c_G[n + nmax]));
    return m;
}

const ModulusData& simple_weak() {
    static const ModulusData m = weak_modulus(simple_prepared(), kGrid);
    return m;
}
}  // namespace

TEST(FourierSynthetic, TranslationAndSingleMode) {
    // sampled on the reference level, so rounding noise is not amplified
    const TransitionMap t = synthetic_transition([](C W) { return W + C(0.2, -0.7); }, 0.0);
    const FourierResult a = fourier_modulus(t, 8, 0.0);
    EXPECT_LT(std::abs(a.at(0) - C(0.2, -0.7)), 1e-14);
    for (int n = 1; n <= 8; ++n) {
        EXPECT_LT(std::abs(a.at(n)) + std::abs(a.at(-n)), 1e-14);
        EXPECT_FALSE(a.ok(n));
    }
    // higher sampling line: nothing spurious is reported as resolved
    const FourierResult hi = fourier_modulus(t, 8, 1.0);
    EXPECT_LT(std::abs(hi.at(0) - C(0.2, -0.7)), 1e-14);
    for (int n = 1; n <= 8; ++n) EXPECT_FALSE(hi.ok(n) || hi.ok(-n));
    // W + 0.1 e^{2 pi i W}: reported amplitude at reference level 0 is c1 itself
    const TransitionMap s = synthetic_transition([](C W) { return W + 0.1 * std::exp(2.0 * M_PI * C(0, 1) * W); }, 0.5);
    const FourierResult b = fourier_modulus(s, 8, 0.5);
    EXPECT_LT(std::abs(b.at(1) - 0.1), 1e-10);
    EXPECT_TRUE(b.ok(1));
    EXPECT_LT(std::abs(b.at(2)), 1e-12);
}

TEST(FourierSynthetic, PhaseLawUnderRealShift) {
    // T_C o Psi o T_-C multiplies c_n by e^{-2 pi i n C}
    const std::map<int, C> coeffs = {{0, C(0, -0.3)}, {1, C(0.02, 0.01)}, {2, C(-0.004, 0.0)}};
    const TransitionMap psi = fourier_transition(coeffs, 0.0);
    const double shift = 0.3;
    const TransitionMap conj = synthetic_transition([&](C W) { return psi(W - shift) + shift; }, 0.0);
    const FourierResult a = fourier_modulus(psi, 8, 0.0), b = fourier_modulus(conj, 8, 0.0);
    for (int n = 0; n <= 2; ++n)
        EXPECT_LT(std::abs(b.at(n) - a.at(n) * std::exp(-2.0 * M_PI * C(0, 1) * double(n) * shift)), 1e-12);
}

TEST(ModulusNormalForm, AllNonconstantModesVanish) {
    for (double b : {0.0, 0.3}) {
        const GermFamily nf = normal_form_family(b);
        const ModulusData m = weak_modulus(nf, kGrid);
        for (const auto& r : m.records) {
            ASSERT_TRUE(r.valid) << r.error;
            EXPECT_LT(max_nonconstant(r, m.nmax), 1e-8);
            const C c0 = r.c_G.empty() ? r.c_inf[0] : r.c_G[m.nmax];
            EXPECT_LT(std::abs(c0 - C(0, -M_PI * b)), 1e-12);
        }
    }
}

TEST(ModulusPrepared, RelationIdentitiesOnTheGrid) {
    const ModulusData& m = simple_weak();
    ASSERT_EQ(m.records.size(), 4u);
    for (const auto& r : m.records) {
        ASSERT_TRUE(r.valid) << r.error;
        EXPECT_LT(max_relation_residual(r), 1e-6) << r.eps;
        EXPECT_LT(r.residuals.at("a_imag_c0"), 1e-6);
        EXPECT_LT(r.residuals.at("height_independence"), 1e-6);
        if (r.eps.real() < 0) {
            EXPECT_LT(r.residuals.at("b_constant_terms"), 1e-6);
            EXPECT_LT(r.residuals.at("e_lavaurs_constant"), 1e-6);
            EXPECT_LT(r.residuals.at("one_sided_inf"), 1e-9);
            EXPECT_LT(r.residuals.at("one_sided_0"), 1e-9);
            EXPECT_LT(r.residuals.at("commute_T1_inf"), 1e-9);
            EXPECT_LT(r.residuals.at("commute_T1_0"), 1e-9);
        } else {
            EXPECT_LT(r.residuals.at("L_consistency"), 1e-6);
        }
        // Sigma T_{1/2} relation in coefficient form
        EXPECT_LT(r.residuals.at("c_sigma_half_modes"), 1e-6);
    }
}

TEST(ModulusPrepared, RealFamilyHasNoOddModes) {
    // S commutes with g and S^2 = g, so Psi commutes with T_{1/2}
    for (const auto& r : simple_weak().records) {
        for (size_t k = 1; k < r.c_inf.size(); k += 2) EXPECT_LT(std::abs(r.c_inf[k]), 1e-9);
        for (size_t k = 1; k < r.c_0.size(); k += 2) EXPECT_LT(std::abs(r.c_0[k]), 1e-9);
    }
}

TEST(ModulusComplexQ, FirstModeResolvedAndHeightIndependent) {
    ModulusOptions o;
    const ModulusRecord r = modulus_record(complex_q_prepared(), SectorParam::real(-0.01), o);
    ASSERT_TRUE(r.valid) << r.error;
    EXPECT_GT(std::abs(r.c_inf[1]), 1e-4);
    EXPECT_EQ(std::count(r.unresolved_inf.begin(), r.unresolved_inf.end(), 1), 0);
    EXPECT_LT(r.residuals.at("height_independence"), 1e-6);
    EXPECT_LT(max_relation_residual(r), 1e-6);
}

TEST(ModulusStrong, SeamAndDeterminations) {
    const ModulusData m = strong_modulus(simple_prepared(), {0.0, M_PI / 2, M_PI, 3 * M_PI / 2, 2 * M_PI}, {0.01});
    ASSERT_EQ(m.records.size(), 5u);
    for (const auto& r : m.records) {
        ASSERT_TRUE(r.valid) << r.param.arg << " " << r.error;
        EXPECT_LT(r.residuals.at("strong_c0"), 1e-6);
    }
    EXPECT_LT(m.records[2].residuals.at("seam_lavaurs"), 1e-7);
    ASSERT_TRUE(m.records[4].residuals.count("determination_gap"));
}

TEST(ModulusJson, RoundTrip) {
    const ModulusData& m = simple_weak();
    const json j = modulus_to_json(m);
    const ModulusData back = modulus_from_json(j);
    EXPECT_EQ(dump_stable(modulus_to_json(back)), dump_stable(j));
    EXPECT_THROW(modulus_from_json(json::parse("{\"records\": 3}")), FormatError);
}

TEST(ModulusGrid, RejectsPointsOutsideTheDisk) {
    EXPECT_THROW(weak_modulus(simple_prepared(), {0.2}), DomainError);
    EXPECT_THROW(strong_modulus(simple_prepared(), {3 * M_PI}, {0.01}), DomainError);
}
