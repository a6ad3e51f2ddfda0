#include "pmod/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace pmod {

namespace {
const cplx I(0.0, 1.0);

bool try_move(const Dynamics& dy, const OrbitPoint& p, cplx dZ, OrbitPoint& out) {
    if (dy.parabolic()) {
        const cplx c = dy.c(), be = dy.beta(), z = p.z;
        cplx x = dZ / (c / z + be);
        if (!(std::abs(x) <= 0.3)) return false;
        for (int it = 0; it < 30; ++it) {
            const cplx em = std::exp(-x);
            const cplx F = -c * (em - 1.0) / z + be * x - dZ;
            const cplx dx = F / (c * em / z + be);
            x -= dx;
            if (!(std::abs(x) <= 0.45)) return false;
            if (std::abs(dx) <= 1e-16 + 2e-16 * std::abs(x)) {
                const cplx zn = z * std::exp(x);
                out = {zn, zn, zn, p.Z + dZ};
                return true;
            }
        }
        return false;
    }
    const bool one = std::abs(p.d1) <= std::abs(p.d2);
    const cplx Ai = one ? dy.A() : dy.B(), Aj = one ? dy.B() : dy.A();
    const cplx di = one ? p.d1 : p.d2, dj = one ? p.d2 : p.d1;
    const cplx delta = one ? dy.p1() - dy.p2() : dy.p2() - dy.p1();
    cplx x = dZ / (Ai + Aj * di / dj);
    if (!(std::abs(x) <= 0.3)) return false;
    for (int it = 0; it < 30; ++it) {
        const cplx din = di * std::exp(x), djn = din + delta;
        const cplx ratio = djn / dj;
        if (!(std::abs(ratio - 1.0) <= 0.5)) return false;
        const cplx F = Ai * x + Aj * std::log(ratio) - dZ;
        const cplx dx = F / (Ai + Aj * din / djn);
        x -= dx;
        if (!(std::abs(x) <= 0.45)) return false;
        if (std::abs(dx) <= 1e-16 + 2e-16 * std::abs(x)) {
            const cplx dn = di * std::exp(x), dm = dn + delta;
            if (one)
                out = {dy.p1() + dn, dn, dm, p.Z + dZ};
            else
                out = {dy.p2() + dn, dm, dn, p.Z + dZ};
            return true;
        }
    }
    return false;
}
}  // namespace

Dynamics Dynamics::build(const GermFamily& fam, cplx eps, std::optional<cplx> sqrt_lift) {
    Dynamics d;
    d.eps_ = eps;
    d.r_ = fam.r;
    d.two_step_ = fam.conjugating();
    d.sqrt_eps_ = sqrt_lift ? *sqrt_lift : std::sqrt(eps);
    d.parabolic_ = std::abs(eps) < 1e-14;
    if (fam.model) {
        d.model_ = true;
        d.model_b_ = fam.model->b;
        d.model_time_ = fam.model->time;
        const double g_time = d.two_step_ ? 2.0 * d.model_time_ : d.model_time_;
        if (std::abs(g_time - 1.0) > 1e-15) throw MisuseError("model family: second iterate must be the time-one flow");
        const double b = d.model_b_;
        const cplx s = d.sqrt_eps_;
        if (d.parabolic_) {
            d.c_ = 1.0;
            d.beta_ = b;
        } else {
            d.p1_ = s;
            d.p2_ = -s;
            d.A_ = (1.0 + b * s) / (2.0 * s);
            d.B_ = -(1.0 - b * s) / (2.0 * s);
        }
    } else {
        d.S_ = poly_at(fam.series, eps);
        if (d.two_step_) d.Sb_ = conj_poly_at(fam.series, eps);
        if (d.parabolic_) {
            if (std::abs(d.g(0.0)) > 1e-13) throw PreparationError("eps = 0: the double fixed point is not at the origin");
            poly::Poly gs = d.S_;
            if (d.two_step_) gs = s1::compose<double>(d.S_, d.Sb_, 4);
            const cplx a2 = gs.size() > 2 ? gs(2) : cplx(0.0), a3 = gs.size() > 3 ? gs(3) : cplx(0.0);
            if (std::abs(gs(1) - 1.0) > 1e-10) throw GenericityError("eps = 0: multiplier differs from 1");
            if (std::abs(a2) < 1e-9) throw GenericityError("eps = 0: fixed point of multiplicity above 2");
            d.c_ = 1.0 / a2;
            d.beta_ = (a2 * a2 - a3) / (a2 * a2);
            d.w1_ = d.w2_ = d.two_step_ ? poly::eval(d.Sb_, 0.0) : cplx(0.0);
        } else {
            const FixedPointData fp = fixed_point_data(fam, eps, d.sqrt_eps_);
            d.p1_ = fp.points[0];
            d.p2_ = fp.points[1];
            d.A_ = 1.0 / std::log(fp.multipliers[0]);
            d.B_ = 1.0 / std::log(fp.multipliers[1]);
            if (d.two_step_) {
                d.w1_ = poly::eval(d.Sb_, d.p1_);
                d.w2_ = poly::eval(d.Sb_, d.p2_);
            }
        }
    }
    if (d.parabolic_) {
        d.plus_ = Chart::parabolic(d.c_, d.beta_, d.r_);
        d.minus_ = Chart::parabolic(d.c_, d.beta_, -d.r_);
    } else {
        d.plus_ = Chart::two_point(d.p1_, d.p2_, d.A_, d.B_, d.r_);
        d.minus_ = Chart::two_point(d.p1_, d.p2_, d.A_, d.B_, -d.r_);
    }
    d.minus_offset_ = minus_chart_offset(d.plus_, d.minus_, d.r_);
    d.minus_.set_offset(d.minus_offset_);
    return d;
}

cplx Dynamics::alpha_plus() const {
    if (parabolic_) throw InfinitePeriodError("eps = 0 has no finite period");
    return 2.0 * M_PI * I * A_;
}

cplx Dynamics::alpha_minus() const {
    if (parabolic_) throw InfinitePeriodError("eps = 0 has no finite period");
    return 2.0 * M_PI * I * B_;
}

OrbitPoint Dynamics::at(cplx z, int sign) const {
    const Chart& ch = chart(sign);
    const LiftedPoint lp = ch.principal(z);
    if (parabolic_) return {z, z, z, ch.Z(lp)};
    return {z, z - p1_, z - p2_, ch.Z(lp)};
}

OrbitPoint Dynamics::seek(const OrbitPoint& p0, cplx Zt) const {
    OrbitPoint p = p0;
    const cplx Z0 = p.Z, total = Zt - Z0;
    if (total == 0.0) return p;
    double s = 0.0, h = 1.0;
    int guard = 0;
    while (s < 1.0) {
        if (++guard > 2000000) throw InverseError("chart continuation did not terminate");
        const double ds = std::min(h, 1.0 - s);
        const bool last = s + ds >= 1.0;
        const cplx target = last ? Zt : Z0 + (s + ds) * total;
        OrbitPoint q;
        if (try_move(*this, p, target - p.Z, q)) {
            q.Z = target;
            p = q;
            s = last ? 1.0 : s + ds;
            h = std::min(1.0, 2.0 * ds);
        } else {
            h = 0.5 * ds;
            if (h < 1e-13) throw InverseError("chart continuation step collapsed");
        }
    }
    return p;
}

cplx Dynamics::rho(cplx z, int i) const {
    const cplx p = parabolic_ ? cplx(0.0) : (i == 1 ? p1_ : p2_);
    if (two_step_) {
        const cplx w = i == 1 ? w1_ : w2_;
        return poly::divided_difference(S_, poly::eval(Sb_, z), w) * poly::divided_difference(Sb_, z, p);
    }
    return poly::divided_difference(S_, z, p);
}

cplx Dynamics::gprime(cplx z) const {
    cplx d1, d2;
    if (two_step_) {
        const cplx w = poly::eval_d(Sb_, z, d1);
        poly::eval_d(S_, w, d2);
        return d1 * d2;
    }
    poly::eval_d(S_, z, d1);
    return d1;
}

Dynamics::Step Dynamics::step_data(const OrbitPoint& p) const {
    Step st;
    auto check = [](cplx r) {
        if (!(std::abs(std::arg(r)) < 2.5) || !(std::abs(r) > 0.0)) throw BranchError("lifted step leaves the principal sheet");
    };
    if (parabolic_) {
        st.rho1 = st.rho2 = rho(p.z, 1);
        check(st.rho1);
        st.dZ = c_ * (st.rho1 - 1.0) / (st.rho1 * p.z) + beta_ * std::log(st.rho1);
        return st;
    }
    st.rho1 = rho(p.z, 1);
    st.rho2 = rho(p.z, 2);
    check(st.rho1);
    check(st.rho2);
    st.dZ = A_ * std::log(st.rho1) + B_ * std::log(st.rho2);
    return st;
}

OrbitPoint Dynamics::forward(const OrbitPoint& p) const {
    if (model_) return seek(p, p.Z + 1.0);
    const Step st = step_data(p);
    OrbitPoint q;
    q.d1 = st.rho1 * p.d1;
    q.d2 = st.rho2 * p.d2;
    q.z = parabolic_ ? q.d1 : (std::abs(q.d1) <= std::abs(q.d2) ? p1_ + q.d1 : p2_ + q.d2);
    q.Z = p.Z + st.dZ;
    return q;
}

OrbitPoint Dynamics::backward(const OrbitPoint& p) const {
    if (model_) return seek(p, p.Z - 1.0);
    const bool one = parabolic_ || std::abs(p.d1) <= std::abs(p.d2);
    const int i = one ? 1 : 2;
    const cplx pi = parabolic_ ? cplx(0.0) : (one ? p1_ : p2_);
    const cplx d = one ? p.d1 : p.d2;
    cplx e = d / rho(p.z, i);
    bool ok = false;
    for (int it = 0; it < 40; ++it) {
        const cplx y = pi + e;
        const cplx F = rho(y, i) * e - d;
        const cplx de = F / gprime(y);
        e -= de;
        if (std::abs(de) <= 1e-16 * std::abs(e) + 1e-300) {
            ok = true;
            break;
        }
    }
    if (!ok && !(std::abs(rho(pi + e, i) * e - d) <= 1e-14 * std::abs(d)))
        throw InverseError("inverse step of the second iterate did not converge");
    OrbitPoint q;
    if (parabolic_) {
        q = {e, e, e, 0.0};
    } else if (one) {
        q = {p1_ + e, e, e + (p1_ - p2_), 0.0};
    } else {
        q = {p2_ + e, e + (p2_ - p1_), e, 0.0};
    }
    // recompute the other offset multiplicatively when it is also small
    if (!parabolic_) {
        const int j = one ? 2 : 1;
        const cplx dj = one ? p.d2 : p.d1;
        cplx ej = dj / rho(q.z, j);
        if (one)
            q.d2 = ej;
        else
            q.d1 = ej;
    }
    q.Z = p.Z - step_data(q).dZ;
    return q;
}

cplx Dynamics::defect(const OrbitPoint& p) const {
    if (model_) return 0.0;
    return step_data(p).dZ - 1.0;
}

OrbitPoint Dynamics::flift(const OrbitPoint& p) const {
    if (!two_step_) throw MisuseError("the lift of f needs an antiholomorphic family");
    if (eps_.imag() != 0.0) throw MisuseError("the lift of f is defined for real eps only");
    const bool swap = !parabolic_ && eps_.real() < 0.0;
    auto conj_state = [&](const OrbitPoint& q) {
        OrbitPoint o;
        o.z = std::conj(q.z);
        o.d1 = std::conj(swap ? q.d2 : q.d1);
        o.d2 = std::conj(swap ? q.d1 : q.d2);
        o.Z = std::conj(q.Z);
        return o;
    };
    if (model_) return conj_state(seek(p, p.Z + model_time_));
    if (parabolic_) {
        const cplx D = poly::divided_difference(Sb_, p.z, 0.0);
        const cplx dZ = c_ * (D - 1.0) / (D * p.z) + beta_ * std::log(D);
        const cplx zn = std::conj(D * p.z);
        return {zn, zn, zn, std::conj(p.Z + dZ)};
    }
    const cplx D1 = poly::divided_difference(Sb_, p.z, p1_), D2 = poly::divided_difference(Sb_, p.z, p2_);
    OrbitPoint q;
    q.d1 = D1 * p.d1;
    q.d2 = D2 * p.d2;
    q.Z = p.Z + A_ * std::log(D1) + B_ * std::log(D2);
    q.z = std::abs(q.d1) <= std::abs(q.d2) ? p1_ + q.d1 : p2_ + q.d2;
    // q is Sb(z) with logs referred to conj(p_k); conjugating swaps the labels when eps < 0
    OrbitPoint o = conj_state(q);
    return o;
}

cplx Dynamics::dZdz(const OrbitPoint& p) const {
    if (parabolic_) return c_ / (p.z * p.z) + beta_ / p.z;
    return A_ / p.d1 + B_ / p.d2;
}

cplx Dynamics::g(cplx z) const {
    if (model_) return flow_map(eps_, model_b_, 1.0, z, r_);
    if (two_step_) return poly::eval(S_, poly::eval(Sb_, z));
    return poly::eval(S_, z);
}

cplx Dynamics::f(cplx z) const {
    if (!two_step_) throw MisuseError("f is defined for antiholomorphic families only");
    if (model_) return std::conj(flow_map(eps_, model_b_, model_time_, z, r_));
    return std::conj(poly::eval(Sb_, z));
}

double Dynamics::singular_distance(const OrbitPoint& p) const {
    return parabolic_ ? std::abs(p.z) : std::min(std::abs(p.d1), std::abs(p.d2));
}

poly::Poly Dynamics::g_series(int n) const {
    if (model_) throw MisuseError("model families have no polynomial second iterate");
    if (two_step_) return s1::compose<double>(S_, Sb_, n);
    return s1::resized<double>(S_, n);
}

}  // namespace pmod
