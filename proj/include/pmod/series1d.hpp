#pragma once

// Univariate truncated power series: coefficient vectors, index = degree.

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "pmod/errors.hpp"

namespace pmod {

template <class Scalar>
using CVec = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

namespace s1 {

template <class S>
CVec<S> resized(const CVec<S>& a, int n) {
    CVec<S> r = CVec<S>::Zero(n);
    const int m = std::min<int>(n, a.size());
    r.head(m) = a.head(m);
    return r;
}

template <class S>
CVec<S> mul(const CVec<S>& a, const CVec<S>& b, int n) {
    CVec<S> r = CVec<S>::Zero(n);
    for (int i = 0; i < std::min<int>(n, a.size()); ++i) {
        if (a(i) == std::complex<S>(0)) continue;
        for (int j = 0; j < b.size() && i + j < n; ++j) r(i + j) += a(i) * b(j);
    }
    return r;
}

template <class S>
CVec<S> inv(const CVec<S>& a, int n) {
    if (a.size() == 0 || std::abs(a(0)) == S(0))
        throw SingularSeriesError("series inverse: zero constant term");
    CVec<S> r = CVec<S>::Zero(n);
    r(0) = S(1) / a(0);
    for (int k = 1; k < n; ++k) {
        std::complex<S> acc(0);
        for (int i = 1; i <= k && i < a.size(); ++i) acc += a(i) * r(k - i);
        r(k) = -acc * r(0);
    }
    return r;
}

template <class S>
std::complex<S> eval(const CVec<S>& a, std::complex<S> x) {
    std::complex<S> acc(0);
    for (int i = static_cast<int>(a.size()) - 1; i >= 0; --i) acc = acc * x + a(i);
    return acc;
}

template <class S>
CVec<S> derivative(const CVec<S>& a) {
    if (a.size() <= 1) return CVec<S>::Zero(1);
    CVec<S> r(a.size() - 1);
    for (int i = 1; i < a.size(); ++i) r(i - 1) = a(i) * S(i);
    return r;
}

// outer(inner(x)), inner(0) must vanish.
template <class S>
CVec<S> compose(const CVec<S>& outer, const CVec<S>& inner, int n) {
    if (inner.size() > 0 && std::abs(inner(0)) != S(0))
        throw TruncationError("univariate compose: inner series has a constant term");
    CVec<S> r = CVec<S>::Zero(n);
    for (int i = static_cast<int>(outer.size()) - 1; i >= 0; --i) {
        r = mul<S>(r, inner, n);
        r(0) += outer(i);
    }
    return r;
}

// Compositional inverse of s with s(0)=0, s'(0) != 0.
template <class S>
CVec<S> revert(const CVec<S>& s, int n) {
    if (s.size() < 2 || std::abs(s(1)) == S(0))
        throw SingularSeriesError("univariate reversion: vanishing linear term");
    CVec<S> t = CVec<S>::Zero(n);
    if (n > 1) t(1) = S(1) / s(1);
    CVec<S> id = CVec<S>::Zero(n);
    if (n > 1) id(1) = 1;
    for (int it = 0; it < n + 1; ++it) {
        CVec<S> st = compose<S>(s, t, n);
        t += (id - st) / s(1);
    }
    return t;
}

// log(a) for a(0) = 1.
template <class S>
CVec<S> log1(const CVec<S>& a, int n) {
    if (std::abs(a(0) - std::complex<S>(1)) > S(1e-12))
        throw SingularSeriesError("series log: constant term must be 1");
    CVec<S> q = mul<S>(derivative<S>(resized<S>(a, n + 1)), inv<S>(a, n), n);
    CVec<S> r = CVec<S>::Zero(n);
    for (int i = 1; i < n; ++i) r(i) = q(i - 1) / S(i);
    return r;
}

// exp(a) for a(0) = 0, via the recurrence r' = a' r.
template <class S>
CVec<S> exp1(const CVec<S>& a, int n) {
    CVec<S> da = derivative<S>(resized<S>(a, n + 1));
    CVec<S> r = CVec<S>::Zero(n);
    r(0) = std::exp(a(0));
    for (int k = 1; k < n; ++k) {
        std::complex<S> acc(0);
        for (int i = 0; i < k && i < da.size(); ++i) acc += da(i) * r(k - 1 - i);
        r(k) = acc / S(k);
    }
    return r;
}

template <class S>
CVec<S> pow1(const CVec<S>& a, S p, int n) {
    return exp1<S>(log1<S>(a, n) * p, n);
}

}  // namespace s1
}  // namespace pmod
