#pragma once

// Dense complex polynomials in one variable (index = degree).

#include <complex>

#include "pmod/series1d.hpp"

namespace pmod::poly {

using cplx = std::complex<double>;
using Poly = CVec<double>;

inline cplx eval(const Poly& p, cplx x) { return s1::eval<double>(p, x); }

inline cplx eval_d(const Poly& p, cplx x, cplx& dp) {
    cplx v(0.0), d(0.0);
    for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i) {
        d = d * x + v;
        v = v * x + p(i);
    }
    dp = d;
    return v;
}

// (p(x) - p(c)) / (x - c) by synthetic division at c; exact at x = c.
inline cplx divided_difference(const Poly& p, cplx x, cplx c) {
    const int n = static_cast<int>(p.size()) - 1;
    if (n <= 0) return 0.0;
    cplx q = p(n), acc = q;
    for (int k = n - 1; k >= 1; --k) {
        q = p(k) + c * q;
        acc = acc * x + q;
    }
    return acc;
}

}  // namespace pmod::poly
