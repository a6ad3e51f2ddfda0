#pragma once

// Families shared by the unit tests and the acceptance runner.

#include "pmod/classify.hpp"
#include "pmod/preparation.hpp"

namespace pmod::testing {

// B0 = 1/2, B1 = 1/4, Q = 0, in the canonical parameter
inline const GermFamily& simple_prepared() {
    static const GermFamily f = prepare(simple_family(0.5, 0.25)).prepared;
    return f;
}

// same B0, B1 with a complex Q, so that odd modes do not vanish
inline const GermFamily& complex_q_prepared() {
    static const GermFamily f = [] {
        Series Q(12, 6);
        Q(0, 0) = cplx(0.1, 0.2);
        Q(1, 0) = cplx(0.0, 0.1);
        const Series s = prepared_series(eps_series_const(0.5, 6), eps_series_const(0.25, 6), Q, 12, 6, true);
        GermFamily g = prepare(make_family(s, "complex-q")).prepared;
        g.label = "complex-q";
        return g;
    }();
    return f;
}

// l(z) = z + s (z^2 - eps): real coefficients, fixes both fixed points
inline Series planted_change(double s, int deg_w = 24, int deg_eps = 12) {
    Series l = Series::identity(deg_w, deg_eps);
    l(2, 0) = s;
    l(0, 1) = -s;
    return l;
}

// l^-1 o f o l in degree (24, 12) so that truncation stays below rounding on the test disk
inline GermFamily planted_conjugate(const GermFamily& f, double s) {
    const Series l = planted_change(s);
    const Series fs = f.series.retruncated(l.deg_w(), l.deg_eps());
    GermFamily g = f;
    g.series = compose(invert(l), compose(fs, l));
    g.label = f.label + ":planted";
    return g;
}

inline double max_relation_residual(const ModulusRecord& r) {
    double worst = 0.0;
    for (const auto& [k, v] : r.residuals)
        if (is_relation_residual(k)) worst = std::max(worst, v);
    return worst;
}

}  // namespace pmod::testing
