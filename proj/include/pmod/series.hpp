#pragma once

// Truncated bivariate series S(eps, w) = sum c_{jk} w^j eps^k with a
// conjugation flag: a conjugating family acts as z -> S(eps, conj z).
// The parameter is formally real throughout this header.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>

#include "pmod/errors.hpp"
#include "pmod/series1d.hpp"

namespace pmod {

template <class Scalar>
class SeriesFamily {
public:
    using Complex = std::complex<Scalar>;
    using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = CVec<Scalar>;

    explicit SeriesFamily(int deg_w = 12, int deg_eps = 6, bool conjugating = false)
        : c_(Matrix::Zero(check_deg(deg_w, 0) + 1, check_deg(deg_eps, 0) + 1)),
          conj_(conjugating) {}

    static SeriesFamily identity(int deg_w, int deg_eps, bool conjugating = false) {
        SeriesFamily s(deg_w, deg_eps, conjugating);
        if (deg_w >= 1) s(1, 0) = 1;
        return s;
    }

    // Series independent of w: v(eps) * w^0.
    static SeriesFamily from_eps(const Vec& v, int deg_w, int deg_eps) {
        SeriesFamily s(deg_w, deg_eps);
        for (int k = 0; k <= deg_eps && k < v.size(); ++k) s(0, k) = v(k);
        return s;
    }

    int deg_w() const { return static_cast<int>(c_.rows()) - 1; }
    int deg_eps() const { return static_cast<int>(c_.cols()) - 1; }
    bool conjugating() const { return conj_; }
    void set_conjugating(bool c) { conj_ = c; }
    SeriesFamily with_conjugating(bool c) const {
        SeriesFamily s = *this;
        s.conj_ = c;
        return s;
    }

    Complex& operator()(int j, int k) { return c_(j, k); }
    const Complex& operator()(int j, int k) const { return c_(j, k); }
    Complex at(int j, int k) const {
        return (j <= deg_w() && k <= deg_eps() && j >= 0 && k >= 0) ? c_(j, k) : Complex(0);
    }
    const Matrix& coeffs() const { return c_; }
    Matrix& coeffs() { return c_; }

    // Coefficient of w^j as a series in eps.
    Vec w_coeff(int j) const { return c_.row(j).transpose(); }

    // Raw evaluation honoring the flag (parameter taken as given).
    Complex evaluate(Complex eps, Complex z) const {
        const Complex x = conj_ ? std::conj(z) : z;
        return evaluate_holo(eps, x);
    }
    Complex evaluate_holo(Complex eps, Complex x) const {
        Complex acc(0);
        for (int j = deg_w(); j >= 0; --j) acc = acc * x + eps_poly(j, eps);
        return acc;
    }
    Complex eps_poly(int j, Complex eps) const {
        Complex acc(0);
        for (int k = deg_eps(); k >= 0; --k) acc = acc * eps + c_(j, k);
        return acc;
    }
    // Coefficients of the polynomial in w at a fixed parameter value.
    Vec at_eps(Complex eps) const {
        Vec v(deg_w() + 1);
        for (int j = 0; j <= deg_w(); ++j) v(j) = eps_poly(j, eps);
        return v;
    }

    SeriesFamily d_w() const {
        SeriesFamily r(deg_w(), deg_eps(), conj_);
        for (int j = 1; j <= deg_w(); ++j) r.c_.row(j - 1) = c_.row(j) * Scalar(j);
        return r;
    }
    SeriesFamily d_eps() const {
        SeriesFamily r(deg_w(), deg_eps(), conj_);
        for (int k = 1; k <= deg_eps(); ++k) r.c_.col(k - 1) = c_.col(k) * Scalar(k);
        return r;
    }

    SeriesFamily& operator+=(const SeriesFamily& o) {
        require_same(o);
        c_ += o.c_;
        return *this;
    }
    SeriesFamily& operator-=(const SeriesFamily& o) {
        require_same(o);
        c_ -= o.c_;
        return *this;
    }
    friend SeriesFamily operator+(SeriesFamily a, const SeriesFamily& b) { return a += b; }
    friend SeriesFamily operator-(SeriesFamily a, const SeriesFamily& b) { return a -= b; }
    friend SeriesFamily operator*(Complex s, SeriesFamily a) {
        a.c_ *= s;
        return a;
    }

    // Truncated product; the flag of the left factor is kept.
    friend SeriesFamily operator*(const SeriesFamily& a, const SeriesFamily& b) {
        a.require_same(b);
        SeriesFamily r(a.deg_w(), a.deg_eps(), a.conj_);
        const int W = a.deg_w(), E = a.deg_eps();
        for (int j1 = 0; j1 <= W; ++j1)
            for (int k1 = 0; k1 <= E; ++k1) {
                const Complex x = a.c_(j1, k1);
                if (x == Complex(0)) continue;
                for (int j2 = 0; j1 + j2 <= W; ++j2)
                    for (int k2 = 0; k1 + k2 <= E; ++k2) r.c_(j1 + j2, k1 + k2) += x * b.c_(j2, k2);
            }
        return r;
    }

    // Multiply by a series in eps only.
    SeriesFamily times_eps(const Vec& v) const {
        SeriesFamily r(deg_w(), deg_eps(), conj_);
        for (int j = 0; j <= deg_w(); ++j)
            r.c_.row(j) = s1::mul<Scalar>(w_coeff(j), v, deg_eps() + 1).transpose();
        return r;
    }

    // Same function viewed at other truncation degrees (pads with zeros).
    SeriesFamily retruncated(int deg_w, int deg_eps) const {
        SeriesFamily r(deg_w, deg_eps, conj_);
        const int W = std::min(deg_w, this->deg_w()), E = std::min(deg_eps, this->deg_eps());
        r.c_.topLeftCorner(W + 1, E + 1) = c_.topLeftCorner(W + 1, E + 1);
        return r;
    }

    Scalar max_abs() const { return c_.size() ? c_.cwiseAbs().maxCoeff() : Scalar(0); }
    Scalar max_abs_diff(const SeriesFamily& o) const {
        require_same(o);
        return (c_ - o.c_).cwiseAbs().maxCoeff();
    }

    SeriesFamily real_part() const {
        SeriesFamily r(deg_w(), deg_eps(), conj_);
        r.c_ = c_.real().template cast<Complex>();
        return r;
    }
    SeriesFamily imag_part() const {
        SeriesFamily r(deg_w(), deg_eps(), conj_);
        r.c_ = c_.imag().template cast<Complex>();
        return r;
    }

    template <class T>
    SeriesFamily<T> cast() const {
        SeriesFamily<T> r(deg_w(), deg_eps(), conj_);
        for (int j = 0; j <= deg_w(); ++j)
            for (int k = 0; k <= deg_eps(); ++k)
                r(j, k) = std::complex<T>(static_cast<T>(c_(j, k).real()),
                                          static_cast<T>(c_(j, k).imag()));
        return r;
    }

    void require_same(const SeriesFamily& o) const {
        if (o.deg_w() != deg_w() || o.deg_eps() != deg_eps())
            throw TruncationError("truncation degrees differ");
    }

private:
    static int check_deg(int d, int minimum) {
        if (d < minimum) throw TruncationError("negative truncation degree");
        return d;
    }
    Matrix c_;
    bool conj_;
};

using Series = SeriesFamily<double>;
using SeriesLD = SeriesFamily<long double>;

// Coefficient-wise complex conjugation (sigma o s o sigma).
template <class S>
SeriesFamily<S> conjugate_series(const SeriesFamily<S>& s) {
    SeriesFamily<S> r = s;
    r.coeffs() = s.coeffs().conjugate();
    return r;
}

// outer o inner. For fixed-degree inputs the result is the exact Taylor
// jet of the composed polynomial maps; as germs, coefficients with j + k
// <= deg_w are exact when inner has an eps-dependent constant term.
template <class S>
SeriesFamily<S> compose(const SeriesFamily<S>& outer, const SeriesFamily<S>& inner) {
    outer.require_same(inner);
    if (std::abs(inner(0, 0)) > S(1e-10))
        throw TruncationError("compose: inner series does not fix the origin at eps = 0");
    const SeriesFamily<S> in = outer.conjugating() ? conjugate_series(inner) : inner;
    const int W = outer.deg_w(), E = outer.deg_eps();
    SeriesFamily<S> acc(W, E);
    for (int m = W; m >= 0; --m) {
        acc = acc * in;
        for (int k = 0; k <= E; ++k) acc(0, k) += outer(m, k);
    }
    acc.set_conjugating(outer.conjugating() != inner.conjugating());
    return acc;
}

template <class S>
SeriesFamily<S> compose_checked(const SeriesFamily<S>& outer, const SeriesFamily<S>& inner,
                                int deg_w, int deg_eps) {
    if (deg_w > std::min(outer.deg_w(), inner.deg_w()) ||
        deg_eps > std::min(outer.deg_eps(), inner.deg_eps()))
        throw TruncationError("compose: requested degree exceeds the representable truncation");
    return compose(outer.retruncated(deg_w, deg_eps), inner.retruncated(deg_w, deg_eps));
}

// Compositional inverse with respect to the space variable.
template <class S>
SeriesFamily<S> invert(const SeriesFamily<S>& s) {
    const int W = s.deg_w(), E = s.deg_eps();
    if (W < 1 || std::abs(s(1, 0)) == S(0))
        throw SingularSeriesError("invert: vanishing linear part at eps = 0");
    if (std::abs(s(0, 0)) > S(1e-10))
        throw TruncationError("invert: series does not fix the origin at eps = 0");
    SeriesFamily<S> h = s.with_conjugating(false);
    const CVec<S> inv_s1 = s1::inv<S>(h.w_coeff(1), E + 1);
    SeriesFamily<S> id = SeriesFamily<S>::identity(W, E);
    SeriesFamily<S> t(W, E);
    for (int it = 0; it < W + E + 3; ++it) {
        SeriesFamily<S> st = compose(h, t);
        t += (id - st).times_eps(inv_s1);
    }
    if (s.conjugating()) {
        SeriesFamily<S> r = conjugate_series(t);
        r.set_conjugating(true);
        return r;
    }
    return t;
}

// Parameter substitution eps -> phi(eta), phi(0) = 0.
template <class S>
SeriesFamily<S> substitute_param(const SeriesFamily<S>& s, const CVec<S>& phi) {
    SeriesFamily<S> r(s.deg_w(), s.deg_eps(), s.conjugating());
    const int n = s.deg_eps() + 1;
    for (int j = 0; j <= s.deg_w(); ++j)
        r.coeffs().row(j) = s1::compose<S>(s.w_coeff(j), s1::resized<S>(phi, n), n).transpose();
    return r;
}

// S(eps, w + c) as a polynomial in w (exact re-expansion), c a constant.
template <class S>
SeriesFamily<S> shift_w(const SeriesFamily<S>& s, std::complex<S> c) {
    using C = std::complex<S>;
    SeriesFamily<S> r(s.deg_w(), s.deg_eps(), s.conjugating());
    const int W = s.deg_w();
    // binomial expansion of (w + c)^j
    for (int j = 0; j <= W; ++j) {
        C cp(1);
        S binom = 1;
        for (int i = j; i >= 0; --i) {
            // term binom(j, i) w^i c^{j-i}
            r.coeffs().row(i) += s.coeffs().row(j) * (cp * binom);
            cp *= c;
            binom = binom * S(i) / S(j - i + 1);
        }
    }
    return r;
}

// Long division of S by w^2 + a1(eps) w + a0(eps) in the w variable.
template <class S>
struct QuadraticDivision {
    SeriesFamily<S> quotient;
    CVec<S> rem1, rem0;  // remainder rem1(eps) w + rem0(eps)
};

template <class S>
QuadraticDivision<S> divide_quadratic(const SeriesFamily<S>& s, const CVec<S>& a1, const CVec<S>& a0) {
    const int W = s.deg_w(), E = s.deg_eps();
    const int n = E + 1;
    std::vector<CVec<S>> r(W + 1);
    for (int j = 0; j <= W; ++j) r[j] = s.w_coeff(j);
    SeriesFamily<S> q(W, E, s.conjugating());
    const CVec<S> A1 = s1::resized<S>(a1, n), A0 = s1::resized<S>(a0, n);
    for (int j = W; j >= 2; --j) {
        const CVec<S> qj = r[j];
        q.coeffs().row(j - 2) = qj.transpose();
        r[j - 1] -= s1::mul<S>(A1, qj, n);
        r[j - 2] -= s1::mul<S>(A0, qj, n);
        r[j].setZero();
    }
    return {q, W >= 1 ? r[1] : CVec<S>::Zero(n), r[0]};
}

// eps as a series: (0, 1, 0, ...)
template <class S>
CVec<S> eps_monomial(int deg_eps) {
    CVec<S> v = CVec<S>::Zero(deg_eps + 1);
    if (deg_eps >= 1) v(1) = 1;
    return v;
}

template <class S>
QuadraticDivision<S> divide_by_w2_minus_eps(const SeriesFamily<S>& s) {
    const int n = s.deg_eps() + 1;
    return divide_quadratic<S>(s, CVec<S>::Zero(n), -eps_monomial<S>(s.deg_eps()));
}

// Rebuild w^j-series from quotient/remainder: (w^2 + a1 w + a0) q + r1 w + r0.
template <class S>
SeriesFamily<S> multiply_quadratic(const SeriesFamily<S>& q, const CVec<S>& a1, const CVec<S>& a0) {
    const int W = q.deg_w(), E = q.deg_eps(), n = E + 1;
    SeriesFamily<S> r(W, E, q.conjugating());
    for (int j = 0; j <= W; ++j) {
        const CVec<S> qj = q.w_coeff(j);
        if (j + 2 <= W) r.coeffs().row(j + 2) += qj.transpose();
        if (j + 1 <= W) r.coeffs().row(j + 1) += s1::mul<S>(s1::resized<S>(a1, n), qj, n).transpose();
        r.coeffs().row(j) += s1::mul<S>(s1::resized<S>(a0, n), qj, n).transpose();
    }
    return r;
}

template <class S>
struct WeierstrassResult {
    CVec<S> a1, a0;  // quadratic w^2 + a1(eps) w + a0(eps), a1(0) = a0(0) = 0
    SeriesFamily<S> unit;
    SeriesFamily<S> quadratic_series() const {
        SeriesFamily<S> p(unit.deg_w(), unit.deg_eps());
        if (p.deg_w() >= 2) p(2, 0) = 1;
        for (int k = 0; k <= p.deg_eps(); ++k) {
            if (p.deg_w() >= 1) p(1, k) += a1(k);
            p(0, k) += a0(k);
        }
        return p;
    }
};

// F = (w^2 + a1 w + a0) * h with h(0,0) != 0, computed order by order in eps.
// F is treated as an exact polynomial in w; the internal w-degree is raised
// so that h is exact to deg_w.
template <class S>
WeierstrassResult<S> weierstrass_prepare(const SeriesFamily<S>& F, S tol = S(1e-13)) {
    using C = std::complex<S>;
    const int W = F.deg_w(), E = F.deg_eps();
    if (W < 2) throw TruncationError("weierstrass: deg_w must be at least 2");
    const S scale = std::max<S>(S(1), F.max_abs());
    if (std::abs(F(0, 0)) > tol * scale || std::abs(F(1, 0)) > tol * scale)
        throw DegeneracyError("weierstrass: F(0, w) vanishes to order below 2");
    if (std::abs(F(2, 0)) <= tol * scale)
        throw DegeneracyError("weierstrass: F(0, w) vanishes to order above 2");
    const int D = W + 2 * (E + 1);
    const int n = D + 1;
    auto Fk = [&](int k) {
        CVec<S> v = CVec<S>::Zero(n);
        for (int j = 0; j <= W; ++j) v(j) = F(j, k);
        return v;
    };
    auto div_w2 = [&](const CVec<S>& v) {
        CVec<S> r = CVec<S>::Zero(n);
        for (int j = 2; j < n; ++j) r(j - 2) = v(j);
        return r;
    };
    std::vector<CVec<S>> h(E + 1);
    CVec<S> a1 = CVec<S>::Zero(E + 1), a0 = CVec<S>::Zero(E + 1);
    h[0] = div_w2(Fk(0));
    if (std::abs(h[0](0)) == S(0)) throw InconsistencyError("weierstrass: unit has zero constant term");
    const CVec<S> h0inv = s1::inv<S>(h[0], n);
    for (int k = 1; k <= E; ++k) {
        CVec<S> N = Fk(k);
        for (int i = 1; i < k; ++i) {
            const CVec<S>& hk = h[k - i];
            for (int j = 0; j < n; ++j) {
                N(j) -= a0(i) * hk(j);
                if (j >= 1) N(j) -= a1(i) * hk(j - 1);
            }
        }
        CVec<S> M = s1::mul<S>(N, h0inv, n);
        a0(k) = M(0);
        a1(k) = M(1);
        M(0) = C(0);
        M(1) = C(0);
        h[k] = s1::mul<S>(h[0], div_w2(M), n);
    }
    SeriesFamily<S> unit(W, E);
    for (int k = 0; k <= E; ++k)
        for (int j = 0; j <= W; ++j) unit(j, k) = h[k](j);
    if (std::abs(unit(0, 0)) == S(0)) throw InconsistencyError("weierstrass: unit has zero constant term");
    return {a1, a0, unit};
}

}  // namespace pmod
