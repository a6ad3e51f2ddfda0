#include "pmod/time_chart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pmod {

namespace {
const cplx I(0.0, 1.0);
}

Chart Chart::two_point(cplx p1, cplx p2, cplx A, cplx B, double anchor) {
    Chart c;
    c.parabolic_ = false;
    c.p1_ = p1;
    c.p2_ = p2;
    c.A_ = A;
    c.B_ = B;
    c.anchor_ = anchor;
    return c;
}

Chart Chart::parabolic(cplx cc, cplx beta, double anchor) {
    Chart c;
    c.parabolic_ = true;
    c.c_ = cc;
    c.beta_ = beta;
    c.anchor_ = anchor;
    return c;
}

cplx Chart::Z(const LiftedPoint& p) const {
    if (parabolic_) return -c_ / p.z + c_ / anchor_ + beta_ * p.L1 + offset_;
    return A_ * p.L1 + B_ * p.L2 + offset_;
}

cplx Chart::dZdz(cplx z) const {
    if (parabolic_) return c_ / (z * z) + beta_ / z;
    return A_ / (z - p1_) + B_ / (z - p2_);
}

double Chart::singular_distance(cplx z) const {
    if (parabolic_) return std::abs(z);
    return std::min(std::abs(z - p1_), std::abs(z - p2_));
}

LiftedPoint Chart::principal(cplx z) const {
    const cplx a(anchor_, 0.0);
    if (singular_distance(z) == 0.0) throw PoleError("time chart evaluated at a singular point");
    if (parabolic_) return {z, std::log(z / a), 0.0};
    return {z, std::log((z - p1_) / (a - p1_)), std::log((z - p2_) / (a - p2_))};
}

LiftedPoint Chart::advance(const LiftedPoint& p, cplx zn) const {
    if (singular_distance(zn) == 0.0) throw PoleError("path runs through a singular point");
    if (parabolic_) return {zn, p.L1 + std::log(zn / p.z), 0.0};
    return {zn, p.L1 + std::log((zn - p1_) / (p.z - p1_)), p.L2 + std::log((zn - p2_) / (p.z - p2_))};
}

LiftedPoint Chart::along_path(const std::vector<cplx>& waypoints, cplx z) const {
    LiftedPoint cur = principal(cplx(anchor_, 0.0));
    std::vector<cplx> pts = waypoints;
    pts.push_back(z);
    for (cplx target : pts) {
        const cplx start = cur.z;
        const cplx d = target - start;
        double tau = 0.0;
        int guard = 0;
        while (tau < 1.0) {
            if (++guard > 1000000) throw PoleError("path continuation did not terminate");
            const double sd = singular_distance(cur.z);
            double dt = std::min(1.0 - tau, 0.25 * sd / std::max(std::abs(d), 1e-300));
            if (dt <= 1e-15) throw PoleError("path passes through a singular point");
            tau += dt;
            cur = advance(cur, tau >= 1.0 ? target : start + tau * d);
        }
    }
    return cur;
}

LiftedPoint Chart::continue_to(const LiftedPoint& from, cplx Zt, double escape_radius) const {
    const cplx Z0 = Z(from);
    const cplx total = Zt - Z0;
    LiftedPoint cur = from;
    double tau = 0.0, h = 1.0;
    int guard = 0;
    auto polish = [&](LiftedPoint base, cplx zc, cplx target, bool& ok) {
        LiftedPoint lp = advance(base, zc);
        ok = false;
        for (int it = 0; it < 30; ++it) {
            const cplx F = Z(lp) - target;
            const double tol = 2e-15 * std::max(1.0, std::abs(target));
            const cplx dz = -F / dZdz(lp.z);
            const cplx zn = lp.z + dz;
            if (std::abs(zn - base.z) > 0.5 * singular_distance(base.z)) return lp;
            lp = advance(base, zn);
            if (std::abs(F) < tol || std::abs(dz) < 1e-17 * std::max(1.0, std::abs(zn))) {
                ok = true;
                return lp;
            }
        }
        ok = std::abs(Z(lp) - target) < 1e-12 * std::max(1.0, std::abs(target));
        return lp;
    };
    while (tau < 1.0) {
        if (++guard > 2000000) throw InverseError("time-chart inversion did not terminate");
        const double dt = std::min(1.0 - tau, h);
        const cplx target = Z0 + (tau + dt) * total;
        const cplx dz = (target - Z(cur)) / dZdz(cur.z);
        const double sd = singular_distance(cur.z);
        if (std::abs(dz) > 0.2 * sd) {
            h = dt * 0.9 * 0.2 * sd / std::abs(dz);
            if (h < 1e-14) throw InverseError("time-chart inversion step collapsed");
            continue;
        }
        bool ok = false;
        LiftedPoint cand = polish(cur, cur.z + dz, target, ok);
        if (!ok) {
            h = dt * 0.25;
            if (h < 1e-14) throw InverseError("time-chart inversion: Newton failed");
            continue;
        }
        if (std::abs(cand.z) > escape_radius) throw EscapeError("trajectory left the chart domain");
        cur = cand;
        tau += dt;
        h = std::min(1.0, 2.0 * dt);
    }
    return cur;
}

cplx minus_chart_offset(const Chart& plus, const Chart& minus_plain, double r) {
    cplx acc(0.0);
    for (cplx z : {cplx(0.0, r), cplx(0.0, -r)}) acc += plus.Z(plus.principal(z)) - minus_plain.Z(minus_plain.principal(z));
    return 0.5 * acc;
}

cplx lifted_sqrt(double modulus, double arg) { return std::sqrt(modulus) * std::exp(I * (0.5 * arg)); }

TimeChart make_time_chart(cplx eps, double b, int sign, double r, std::optional<cplx> sqrt_lift) {
    TimeChart tc;
    tc.eps = eps;
    tc.b = b;
    tc.sign = sign >= 0 ? +1 : -1;
    tc.r = r;
    tc.sqrt_eps = sqrt_lift ? *sqrt_lift : std::sqrt(eps);
    const cplx s = tc.sqrt_eps;
    auto build = [&](double anchor) {
        if (std::abs(eps) == 0.0) return Chart::parabolic(1.0, b, anchor);
        return Chart::two_point(s, -s, (1.0 + b * s) / (2.0 * s), -(1.0 - b * s) / (2.0 * s), anchor);
    };
    Chart plus = build(r);
    if (tc.sign > 0) {
        tc.chart = plus;
    } else {
        Chart minus = build(-r);
        minus.set_offset(minus_chart_offset(plus, minus, r));
        tc.chart = minus;
    }
    for (int i = 0; i < 16; ++i) {
        const double rho = r * (0.04 + 0.92 * i / 15.0);
        for (int k = 0; k < 48; ++k) {
            const cplx z = std::polar(rho, 2.0 * M_PI * (k + 0.5) / 48.0);
            if (tc.chart.singular_distance(z) < 1e-3 * r) continue;
            const LiftedPoint lp = tc.chart.principal(z);
            tc.seeds.emplace_back(tc.chart.Z(lp), lp);
        }
    }
    return tc;
}

LiftedPoint time_coord_lifted(const TimeChart& chart, cplx z) {
    if (!chart.path.empty()) return chart.chart.along_path(chart.path, z);
    return chart.chart.principal(z);
}

cplx time_coord(const TimeChart& chart, cplx z) { return chart.chart.Z(time_coord_lifted(chart, z)); }

LiftedPoint time_inverse_lifted(const TimeChart& chart, cplx Z, std::optional<LiftedPoint> seed) {
    if (!seed) {
        if (chart.seeds.empty()) throw InverseError("time chart has no seed grid");
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [Zs, lp] : chart.seeds) {
            const double d = std::abs(Zs - Z);
            if (d < best) {
                best = d;
                seed = lp;
            }
        }
    }
    return chart.chart.continue_to(*seed, Z);
}

cplx time_inverse(const TimeChart& chart, cplx Z, std::optional<cplx> seed) {
    std::optional<LiftedPoint> s;
    if (seed) s = time_coord_lifted(chart, *seed);
    return time_inverse_lifted(chart, Z, s).z;
}

cplx period(cplx eps, double b, int sign, std::optional<cplx> sqrt_lift) {
    if (std::abs(eps) == 0.0) throw InfinitePeriodError("period: eps = 0 gives an infinite period");
    const cplx s = sqrt_lift ? *sqrt_lift : std::sqrt(eps);
    return (sign >= 0 ? 1.0 : -1.0) * I * M_PI / s + I * M_PI * b;
}

cplx flow_map(cplx eps, double b, cplx t, cplx z, double r) {
    const TimeChart tc = make_time_chart(eps, b, +1, r);
    if (tc.chart.singular_distance(z) == 0.0) return z;  // fixed by the flow
    const LiftedPoint lp = tc.chart.principal(z);
    return tc.chart.continue_to(lp, tc.chart.Z(lp) + t, 1e3).z;
}

}  // namespace pmod
