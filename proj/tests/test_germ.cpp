#include <gtest/gtest.h>

#include "pmod/germ.hpp"
#include "pmod/io.hpp"
#include "pmod/time_chart.hpp"

using namespace pmod;
using C = std::complex<double>;

namespace {
GermFamily f0_quadratic() {
    Series s(12, 6, true);
    s(1, 0) = 1;
    s(2, 0) = 0.5;
    return make_family(s, "f0");
}
}  // namespace

TEST(GermEvaluate, Examples) {
    GermFamily nf = normal_form_family(0.0);
    EXPECT_NEAR(std::abs(evaluate(nf, 0.0, 0.0)), 0.0, 1e-15);
    GermFamily f = f0_quadratic();
    EXPECT_NEAR(std::abs(evaluate(f, 0.0, 0.1) - 0.105), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(evaluate(f, 0.0, C(0, 0.1)) - C(-0.005, -0.1)), 0.0, 1e-15);
    EXPECT_THROW(evaluate(f, 0.0, 0.6), DomainError);
    EXPECT_THROW(evaluate(f, 0.06, 0.1), DomainError);
}

TEST(GermEvaluate, ComplexParameterUsesConjugate) {
    GermFamily f = simple_family();
    const C e(0.003, 0.004), z(0.1, 0.05);
    const C expect = std::conj(z) + (std::conj(z) * std::conj(z) - std::conj(e)) * (0.5 + 0.25 * std::conj(z));
    EXPECT_NEAR(std::abs(evaluate(f, e, z) - expect), 0.0, 1e-15);
}

TEST(GermSecondIterate, Examples) {
    // normal form squares to the time-one map; the w^0 eps terms lower the
    // w-degree under composition, so build in degree (20, 7) and compare up to
    // (12, 6); the prepared re-synthesis drops the top eps column of H
    for (double b : {0.0, 0.3}) {
        GermFamily g = second_iterate(normal_form_family(b, 20, 7));
        GermFamily v1 = model_time_one_family(b, 20, 7);
        EXPECT_FALSE(g.conjugating());
        const Series ref = v1.series.retruncated(12, 6);
        EXPECT_LT(g.series.retruncated(12, 6).max_abs_diff(ref), 1e-13 * ref.max_abs());
    }
    Series sigma = Series::identity(12, 6, true);
    GermFamily s = second_iterate(make_family(sigma, "sigma"));
    EXPECT_EQ(s.series.retruncated(12, 6).max_abs_diff(Series::identity(12, 6)), 0.0);
    EXPECT_EQ(s.series.max_abs(), 1.0);
    GermFamily g = second_iterate(f0_quadratic());
    const double expect[] = {0, 1, 1, 0.5, 0.125};
    for (int j = 0; j <= 4; ++j) EXPECT_NEAR(std::abs(g.series(j, 0) - expect[j]), 0.0, 1e-15);
    for (int j = 5; j <= 12; ++j) EXPECT_EQ(std::abs(g.series(j, 0)), 0.0);
    EXPECT_THROW(second_iterate(g), MisuseError);
}

TEST(GermSecondIterate, MatchesPointwiseSquare) {
    GermFamily f = simple_family();
    GermFamily g = second_iterate(f);
    for (double e : {0.01, -0.04}) {
        const C z(0.2, -0.13);
        EXPECT_NEAR(std::abs(evaluate(g, e, z) - evaluate(f, e, evaluate(f, e, z))), 0.0, 1e-15);
    }
}

TEST(GermGenericity, Examples) {
    Series a(12, 6, true);
    a(1, 0) = 1;
    a(2, 0) = 0.5;
    a(0, 1) = -1;
    EXPECT_NEAR(genericity_margin(make_family(a, "")), -1.0, 1e-15);
    Series b = a;
    b(0, 1) = C(0, -1);
    EXPECT_NEAR(genericity_margin(make_family(b, "")), 0.0, 1e-15);
    EXPECT_FALSE(is_generic(make_family(b, "")));
    // prepared form: margin -B0(0); finite-difference oracle on Re f_eps(0)
    GermFamily p = simple_family(0.5, 0.25);
    const double h = 1e-6;
    const double fd = (evaluate(p, h, 0.0).real() - evaluate(p, -h, 0.0).real()) / (2 * h);
    EXPECT_NEAR(genericity_margin(p), -0.5, 1e-12);
    EXPECT_NEAR(fd, -0.5, 1e-9);
}

TEST(GermFixedPoints, NormalFormPositive) {
    GermFamily nf = normal_form_family(0.0);
    FixedPointData d = fixed_point_data(nf, 0.04);
    ASSERT_EQ(d.points.size(), 2u);
    EXPECT_NEAR(std::abs(d.points[0] - 0.2), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(d.points[1] + 0.2), 0.0, 1e-12);
    EXPECT_NEAR(d.multipliers[0].real(), 1.491825, 1e-6);
    EXPECT_NEAR(d.multipliers[1].real(), 0.670320, 1e-6);
    // oracle: closed-form multipliers mu = ±2 sqrt(eps)/(1 ± b sqrt(eps))
    EXPECT_NEAR(std::abs(d.multipliers[0] - std::exp(0.4)), 0.0, 1e-10);
    EXPECT_FALSE(d.periodic);
    // finite-difference oracle on g
    GermFamily g = second_iterate(nf);
    const double h = 1e-6;
    const C fd = (evaluate(g, 0.04, 0.2 + h) - evaluate(g, 0.04, 0.2 - h)) / (2 * h);
    EXPECT_NEAR(std::abs(fd - d.multipliers[0]), 0.0, 1e-8);
}

TEST(GermFixedPoints, ZeroAndNegative) {
    GermFamily nf = normal_form_family(0.0);
    FixedPointData z = fixed_point_data(nf, 0.0);
    ASSERT_EQ(z.points.size(), 1u);
    EXPECT_EQ(z.multipliers[0], C(1.0));
    FixedPointData d = fixed_point_data(nf, -0.04);
    EXPECT_TRUE(d.periodic);
    EXPECT_NEAR(std::abs(d.points[0] - C(0, 0.2)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(d.points[1] - C(0, -0.2)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(d.tau[0] - std::conj(d.tau[1])), 0.0, 1e-10);
}

TEST(GermFixedPoints, PreparedFamilyProperties) {
    for (const GermFamily& f : {simple_family(), normal_form_family(0.3), normal_form_family(-0.2)}) {
        for (double e : {-0.04, -0.01, 0.0025, 0.01, 0.04}) {
            FixedPointData d = fixed_point_data(f, e);
            GermFamily g = second_iterate(f);
            const C s = std::sqrt(C(e));
            EXPECT_LT(std::abs(evaluate(g, e, s) - s), 1e-10);
            EXPECT_LT(std::abs(evaluate(g, e, -s) + s), 1e-10);
            EXPECT_LT(d.newton_residual, 1e-12);
            if (e > 0) {
                for (int i = 0; i < 2; ++i) {
                    EXPECT_LT(std::abs(d.multipliers[i].imag()), 1e-10);
                    EXPECT_NEAR(std::abs(d.multipliers[i] - std::conj(d.tau[i] * d.tau[i])), 0.0, 1e-9);
                }
            } else {
                EXPECT_NEAR(std::abs(d.tau[0] - std::conj(d.tau[1])), 0.0, 1e-9);
            }
        }
        EXPECT_NEAR(genericity_margin(f), -0.5, 1e-9);
    }
}

TEST(GermIO, RoundTrip) {
    GermFamily f = random_generic_family(4);
    f.label = "rt";
    GermFamily g = germ_from_json(json::parse(germ_to_json(f).dump()));
    EXPECT_TRUE((g.series.coeffs().array() == f.series.coeffs().array()).all());
    EXPECT_EQ(g.label, "rt");
    GermFamily nf = normal_form_family(0.3);
    GermFamily h = germ_from_json(germ_to_json(nf));
    ASSERT_TRUE(h.model.has_value());
    EXPECT_EQ(h.model->b, 0.3);
}

TEST(GermModel, ModelEvaluationMatchesSeriesNearOrigin) {
    GermFamily nf = normal_form_family(0.3);
    GermFamily raw = nf;
    raw.model.reset();
    for (C z : {C(0.05, 0.02), C(-0.03, 0.04)})
        EXPECT_NEAR(std::abs(evaluate(nf, 0.01, z) - evaluate(raw, 0.01, z)), 0.0, 1e-12);
}
