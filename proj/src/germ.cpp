#include "pmod/germ.hpp"

#include <cmath>
#include <random>

#include "pmod/poly.hpp"
#include "pmod/time_chart.hpp"

namespace pmod {

std::string kind_name(FamilyKind k) {
    switch (k) {
        case FamilyKind::Antiholomorphic: return "antiholomorphic-unfolding";
        case FamilyKind::Holomorphic: return "holomorphic-unfolding";
        case FamilyKind::CoordinateChange: return "coordinate-change";
    }
    return "antiholomorphic-unfolding";
}

FamilyKind kind_from_name(const std::string& s) {
    if (s == "antiholomorphic-unfolding") return FamilyKind::Antiholomorphic;
    if (s == "holomorphic-unfolding") return FamilyKind::Holomorphic;
    if (s == "coordinate-change") return FamilyKind::CoordinateChange;
    throw FormatError("unknown family kind: " + s);
}

GermFamily make_family(Series s, std::string label, double r, double r_param) {
    GermFamily f;
    f.kind = s.conjugating() ? FamilyKind::Antiholomorphic : FamilyKind::Holomorphic;
    f.series = std::move(s);
    f.label = std::move(label);
    f.r = r;
    f.r_param = r_param;
    return f;
}

CVec<double> poly_at(const Series& s, cplx eps) { return s.at_eps(eps); }

CVec<double> conj_poly_at(const Series& s, cplx eps) { return conjugate_series(s).at_eps(eps); }

cplx evaluate(const GermFamily& fam, cplx eps, cplx z) {
    if (!(std::abs(z) < fam.r)) throw DomainError("evaluate: |z| must be below the space radius");
    if (!(std::abs(eps) < fam.r_param)) throw DomainError("evaluate: |eps| must be below the parameter radius");
    if (fam.model) {
        const cplx w = flow_map(eps, fam.model->b, fam.model->time, z, fam.r);
        return fam.conjugating() ? std::conj(w) : w;
    }
    if (fam.conjugating()) return fam.series.evaluate_holo(std::conj(eps), std::conj(z));
    return fam.series.evaluate_holo(eps, z);
}

GermFamily second_iterate(const GermFamily& fam) {
    if (!fam.conjugating()) throw MisuseError("second_iterate requires an antiholomorphic family");
    GermFamily g = fam;
    // f is a polynomial: compose in a degree large enough that g = f o f holds to rounding on |z| < r
    int top = 0;
    for (int j = 0; j <= fam.series.deg_w(); ++j)
        if (fam.series.w_coeff(j).cwiseAbs().maxCoeff() > 0.0) top = j;
    const int dw = std::max(fam.series.deg_w(), std::min(top * top, 3 * fam.series.deg_w()));
    const int de = 2 * fam.series.deg_eps();
    g.series = compose(fam.series.retruncated(dw, de), fam.series.retruncated(dw, de));
    g.kind = FamilyKind::Holomorphic;
    g.label = fam.label.empty() ? "second-iterate" : fam.label + ":second-iterate";
    if (fam.model) g.model = ModelSpec{fam.model->b, 2.0 * fam.model->time};
    return g;
}

double genericity_margin(const GermFamily& fam) {
    if (fam.series.deg_eps() < 1) return 0.0;
    return fam.series(0, 1).real();
}

bool is_generic(const GermFamily& fam, double threshold) { return std::abs(genericity_margin(fam)) > threshold; }

namespace {

struct Iterate {
    poly::Poly outer, inner;  // g = outer o inner (inner empty for one step)
    bool two_step = false;
    cplx value(cplx z, cplx& d) const {
        if (!two_step) return poly::eval_d(outer, z, d);
        cplx d1, d2;
        const cplx y = poly::eval_d(inner, z, d1);
        const cplx v = poly::eval_d(outer, y, d2);
        d = d1 * d2;
        return v;
    }
};

}  // namespace

FixedPointData fixed_point_data(const GermFamily& fam, cplx eps, std::optional<cplx> p_sqrt) {
    if (!(std::abs(eps) < fam.r_param)) throw DomainError("fixed_point_data: |eps| outside the parameter disk");
    FixedPointData out;
    out.eps = eps;
    Iterate g;
    const poly::Poly S = poly_at(fam.series, eps);
    const poly::Poly Sb = conj_poly_at(fam.series, eps);
    if (fam.conjugating()) {
        g.outer = S;
        g.inner = Sb;
        g.two_step = true;
    } else {
        g.outer = S;
    }
    auto tau_at = [&](cplx p) {
        cplx d;
        poly::eval_d(Sb, p, d);
        return std::conj(d);
    };
    if (std::abs(eps) < 1e-14) {
        out.points = {0.0};
        out.multipliers = {1.0};
        if (fam.conjugating()) out.tau = {tau_at(0.0)};
        return out;
    }
    const cplx s = p_sqrt ? *p_sqrt : std::sqrt(eps);
    for (cplx seed : {s, -s}) {
        cplx z = seed, d;
        double res = 1.0;
        for (int it = 0; it < 100; ++it) {
            const cplx v = g.value(z, d) - z;
            res = std::abs(v);
            if (res < 1e-15) break;
            const cplx dz = v / (d - 1.0);
            z -= dz;
            if (std::abs(dz) < 1e-17) break;
        }
        g.value(z, d);
        res = std::abs(g.value(z, d) - z);
        if (!(res < 1e-12))
            throw NumericError("fixed-point Newton did not converge (residual " + std::to_string(res) + ")");
        out.newton_residual = std::max(out.newton_residual, res);
        out.points.push_back(z);
        out.multipliers.push_back(d);
        if (fam.conjugating()) out.tau.push_back(tau_at(z));
    }
    if (fam.conjugating()) {
        // f_eps(z) = conj(Sb(z))
        const cplx fp = std::conj(poly::eval(Sb, out.points[0]));
        out.periodic = std::abs(fp - out.points[1]) < std::abs(fp - out.points[0]);
    }
    return out;
}

CVec<double> eps_series_const(double c, int deg_eps) {
    CVec<double> v = CVec<double>::Zero(deg_eps + 1);
    v(0) = c;
    return v;
}

Series prepared_series(const CVec<double>& B0, const CVec<double>& B1, const Series& Q, int dw, int de,
                       bool conjugating) {
    Series H(dw, de);
    for (int k = 0; k <= de - 1 && k < B0.size(); ++k) H(0, k) = B0(k);
    for (int k = 0; k <= de - 1 && k < B1.size(); ++k) H(1, k) = B1(k);
    if (Q.deg_w() >= 0 && dw >= 4 && de >= 2) {
        Series Qt(dw, de);
        for (int j = 0; j <= dw - 4 && j <= Q.deg_w(); ++j)
            for (int k = 0; k <= de - 2 && k <= Q.deg_eps(); ++k) Qt(j, k) = Q(j, k);
        const CVec<double> zero = CVec<double>::Zero(de + 1);
        H += multiply_quadratic<double>(Qt, zero, -eps_monomial<double>(de));
    }
    const CVec<double> zero = CVec<double>::Zero(de + 1);
    Series S = multiply_quadratic<double>(H, zero, -eps_monomial<double>(de));
    S(1, 0) += 1.0;
    S.set_conjugating(conjugating);
    return S;
}

Series model_flow_series(const CVec<double>& b, double t, int dw, int de) {
    const int Wi = dw + de + 2;
    Series v(Wi, de);
    {
        Series geo(Wi, de), mb(Wi, de);
        geo(0, 0) = 1.0;
        for (int k = 0; k <= de && k < b.size(); ++k) mb(1, k) = -b(k);
        Series sum = geo;
        for (int m = 1; m <= Wi; ++m) {
            geo = geo * mb;
            sum += geo;
        }
        Series q(Wi, de);
        q(2, 0) = 1.0;
        if (de >= 1) q(0, 1) = -1.0;
        v = q * sum;
    }
    // The Lie series cancels badly at t ~ 1; sum it at t / 2^m and square up.
    // Truncation in total degree j + k <= Wi is closed under composition.
    int m = 0;
    while (std::abs(t) / std::ldexp(1.0, m) > 1.0 / 32.0) ++m;
    const double ts = t / std::ldexp(1.0, m);
    Series term = Series::identity(Wi, de);
    Series acc = term;
    for (int n = 1; n <= Wi + 2 * de + 2; ++n) {
        term = cplx(ts / n) * (v * term.d_w());
        acc += term;
        if (term.max_abs() == 0.0) break;
    }
    for (int i = 0; i < m; ++i) acc = compose(acc, acc);
    return acc.retruncated(dw, de);
}

namespace {
// Re-synthesize w + (w^2 - eps) H from a raw series so the structure is exact.
Series resynthesize(const Series& raw, int dw, int de, bool conj) {
    Series d = raw - Series::identity(raw.deg_w(), raw.deg_eps());
    QuadraticDivision<double> q = divide_by_w2_minus_eps<double>(d);
    Series H(dw, de);
    for (int j = 0; j <= dw - 2 && j <= q.quotient.deg_w(); ++j)
        for (int k = 0; k <= de - 1; ++k) H(j, k) = q.quotient(j, k);
    Series S = multiply_quadratic<double>(H, CVec<double>::Zero(de + 1), -eps_monomial<double>(de));
    S(1, 0) += 1.0;
    S.set_conjugating(conj);
    return S;
}
}  // namespace

GermFamily normal_form_family(const CVec<double>& b, int dw, int de) {
    const int Wi = dw + de + 2;
    Series raw = model_flow_series(b, 0.5, Wi, de);
    GermFamily f = make_family(resynthesize(raw, dw, de, true), "normal-form");
    bool constant_b = true;
    for (int k = 1; k < b.size(); ++k) constant_b = constant_b && b(k) == 0.0;
    if (constant_b) f.model = ModelSpec{b.size() ? b(0).real() : 0.0, 0.5};
    return f;
}

GermFamily normal_form_family(double b, int dw, int de) { return normal_form_family(eps_series_const(b, de), dw, de); }

GermFamily model_time_one_family(double b, int dw, int de) {
    const int Wi = dw + de + 2;
    Series raw = model_flow_series(eps_series_const(b, de), 1.0, Wi, de);
    GermFamily f = make_family(resynthesize(raw, dw, de, false), "model-time-one");
    f.model = ModelSpec{b, 1.0};
    return f;
}

GermFamily simple_family(double B0, double B1, int dw, int de) {
    Series S = prepared_series(eps_series_const(B0, de), eps_series_const(B1, de), Series(dw, de), dw, de, true);
    return make_family(S, "test-family");
}

GermFamily random_generic_family(unsigned seed, int dw, int de) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Series H(dw, de);
    for (int j = 0; j <= dw - 2; ++j)
        for (int k = 0; k <= de - 1; ++k)
            H(j, k) = cplx(U(rng), U(rng)) * (0.2 * std::pow(0.5, j) * std::pow(0.5, k));
    H(0, 0) = cplx(0.5, 0.15);
    Series S = multiply_quadratic<double>(H, CVec<double>::Zero(de + 1), -eps_monomial<double>(de));
    S(1, 0) += 1.0;
    S.set_conjugating(true);
    return make_family(S, "random-generic-" + std::to_string(seed));
}

}  // namespace pmod
