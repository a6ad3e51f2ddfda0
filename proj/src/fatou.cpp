#include "pmod/fatou.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unsupported/Eigen/FFT>

namespace pmod {

namespace {
const cplx I(0.0, 1.0);

int next_pow2(long n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

cplx sigma_step(cplx tau, double w) { return 0.5 * (1.0 + std::tanh(tau / w)); }
cplx sigma_step_d(cplx tau, double w) {
    const cplx c = std::cosh(tau / w);
    return 0.5 / (w * c * c);
}

// t, x with Z - Z0 = t d + x
std::pair<double, double> band_coords(cplx Z, cplx Z0, cplx d) {
    const cplx v = Z - Z0;
    const double t = v.imag() / d.imag();
    return {t, v.real() - t * d.real()};
}

OrbitPoint seek_path(const Dynamics& dy, OrbitPoint p, std::initializer_list<cplx> targets) {
    for (cplx t : targets) p = dy.seek(p, t);
    return p;
}

void check_inside(const Dynamics& dy, const OrbitPoint& q) {
    if (!(std::abs(q.z) < 1.05 * dy.radius())) throw EscapeError("orbit left the disk while moving into the strip");
}
}  // namespace

cplx SectorParam::eps() const {
    if (arg == 0.0 || arg == 2.0 * M_PI) return modulus;
    if (arg == M_PI) return -modulus;
    return std::polar(modulus, arg);
}

SectorParam SectorParam::real(double eps) { return eps >= 0 ? SectorParam{eps, 0.0} : SectorParam{-eps, M_PI}; }

bool SectorParam::is_real() const { return modulus == 0.0 || arg == 0.0 || arg == M_PI || arg == 2.0 * M_PI; }

std::string domain_kind_name(DomainKind k) {
    switch (k) {
        case DomainKind::Glutsyuk: return "glutsyuk";
        case DomainKind::Lavaurs: return "lavaurs";
        case DomainKind::Sectoral: return "sectoral";
        case DomainKind::Parabolic: return "parabolic";
    }
    return "?";
}

// ---------------------------------------------------------------- strips

cplx StripData::phi(cplx tau) const {
    if (!periodic) {
        const double lo = t0 + 6.0, hi = t0 + L - 6.0;
        tau = cplx(std::clamp(tau.real(), lo, hi), tau.imag());
    }
    cplx acc(0.0);
    const cplx s = tau - t0;
    // chunks keep the phase recurrence short
    const int chunk = 128;
    for (int m0 = 0; m0 < N; m0 += chunk) {
        const int m1 = std::min(N, m0 + chunk);
        cplx e = std::exp(I * k[m0] * s);
        const cplx step = std::exp(I * (k[1] - k[0]) * s);
        for (int m = m0; m < m1; ++m) {
            if (m > m0 && k[m] < k[m - 1]) e = std::exp(I * k[m] * s);
            acc += coef[m] * e;
            e *= step;
        }
    }
    if (!periodic) acc += mu * sigma_step(tau, width);
    return acc;
}

cplx StripData::dphi(cplx tau) const {
    if (!periodic) {
        const double lo = t0 + 6.0, hi = t0 + L - 6.0;
        if (tau.real() < lo || tau.real() > hi) return 0.0;
    }
    cplx acc(0.0);
    const cplx s = tau - t0;
    const int chunk = 128;
    for (int m0 = 0; m0 < N; m0 += chunk) {
        const int m1 = std::min(N, m0 + chunk);
        cplx e = std::exp(I * k[m0] * s);
        const cplx step = std::exp(I * (k[1] - k[0]) * s);
        for (int m = m0; m < m1; ++m) {
            if (m > m0 && k[m] < k[m - 1]) e = std::exp(I * k[m] * s);
            acc += I * k[m] * coef[m] * e;
            e *= step;
        }
    }
    if (!periodic) acc += mu * sigma_step_d(tau, width);
    return acc;
}

const OrbitPoint& StripData::nearest(double t) const {
    long j = std::lround((t - t_first) / dt);
    j = std::clamp<long>(j, 0, static_cast<long>(line.size()) - 1);
    return line[j];
}

namespace {

struct Marched {
    std::vector<OrbitPoint> pts;
    std::vector<cplx> u;
    double t_first = 0.0;
    double clearance = std::numeric_limits<double>::infinity();
    double step_margin = std::numeric_limits<double>::infinity();
};

// rounding level of the defect: the logs are scaled by |A| + |B|
double defect_floor(const Dynamics& dy) {
    const double s = dy.parabolic() ? std::abs(dy.c()) + std::abs(dy.beta()) : std::abs(dy.A()) + std::abs(dy.B());
    return 32.0 * std::numeric_limits<double>::epsilon() * (1.0 + s);
}

double local_clearance(const Dynamics& dy, const OrbitPoint& p) {
    const double gap = dy.radius() - std::abs(p.z);
    if (gap <= 0.0) return 0.0;
    return gap * std::abs(dy.dZdz(p));
}

// march along ℓ in one direction until the defect has been at noise level for `quiet` units
void march(const Dynamics& dy, const OrbitPoint& start, cplx Z0, cplx d, double dt, int dir, double quiet,
           double floor, long max_points, std::vector<OrbitPoint>& pts, std::vector<cplx>& us, double& clearance,
           double& margin) {
    OrbitPoint p = start;
    double calm = 0.0;
    for (long j = 1; j <= max_points; ++j) {
        const double t = dir * j * dt;
        p = dy.seek(p, Z0 + t * d);
        cplx u = dy.defect(p);
        if (std::abs(u) < floor) u = 0.0;
        clearance = std::min(clearance, local_clearance(dy, p));
        const auto [tg, xg] = band_coords(p.Z + 1.0 + u, Z0, d);
        margin = std::min(margin, xg);
        pts.push_back(p);
        us.push_back(u);
        calm = (u == 0.0) ? calm + dt : 0.0;
        if (calm >= quiet) return;
    }
    throw ResolutionError("strip tail does not reach machine precision within the point budget");
}

Marched march_line(const Dynamics& dy, const OrbitPoint& base, cplx Z0, cplx d, double dt, long max_points) {
    Marched m;
    std::vector<OrbitPoint> up, dn;
    std::vector<cplx> uu, ud;
    const double quiet = 12.0;
    const double floor = defect_floor(dy);
    march(dy, base, Z0, d, dt, +1, quiet, floor, max_points, up, uu, m.clearance, m.step_margin);
    march(dy, base, Z0, d, dt, -1, quiet, floor, max_points, dn, ud, m.clearance, m.step_margin);
    cplx u0 = dy.defect(base);
    if (std::abs(u0) < floor) u0 = 0.0;
    m.clearance = std::min(m.clearance, local_clearance(dy, base));
    for (long j = static_cast<long>(dn.size()) - 1; j >= 0; --j) {
        m.pts.push_back(dn[j]);
        m.u.push_back(ud[j]);
    }
    m.pts.push_back(base);
    m.u.push_back(u0);
    for (size_t j = 0; j < up.size(); ++j) {
        m.pts.push_back(up[j]);
        m.u.push_back(uu[j]);
    }
    m.t_first = -static_cast<double>(dn.size()) * dt;
    return m;
}

// Solve phi(G zeta) - phi(zeta) = -u on the grid; phi = mu sigma + psi (psi periodic on the padded window).
void solve_abel(StripData& sd, const std::vector<cplx>& U, int max_iter, bool periodic) {
    const int N = sd.N;
    Eigen::FFT<double> fft;
    std::vector<cplx> mult(N), den(N), psih(N, 0.0), work(N), tmp(N), E(N), dsig(N), tg(N);
    sd.k.assign(N, 0.0);
    for (int m = 0; m < N; ++m) {
        const int n = m < N / 2 ? m : m - N;
        sd.k[m] = 2.0 * M_PI * n / sd.L;
        mult[m] = std::exp(I * sd.k[m] / sd.d);
        den[m] = mult[m] - 1.0;
    }
    for (int j = 0; j < N; ++j) {
        const double t = sd.t0 + j * sd.dt;
        tg[j] = t + (1.0 + U[j]) / sd.d;
        dsig[j] = periodic ? cplx(0.0) : sigma_step(tg[j], sd.width) - sigma_step(t, sd.width);
    }
    cplx sum_dsig(0.0);
    for (int j = 0; j < N; ++j) sum_dsig += dsig[j];
    double umax = 0.0;
    for (cplx u : U) umax = std::max(umax, std::abs(u / sd.d));
    sd.mu = 0.0;
    double last = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < max_iter; ++it) {
        std::fill(E.begin(), E.end(), cplx(0.0));
        // Taylor terms from zeta + 1 to G(zeta)
        std::vector<cplx> pw(N, 1.0);
        double fact = 1.0;
        bool any = false;
        for (int q = 1; q <= 60; ++q) {
            for (int m = 0; m < N; ++m) {
                const cplx ik = I * sd.k[m];
                cplx v = psih[m] * mult[m];
                for (int r = 0; r < q; ++r) v *= ik;
                work[m] = (m == N / 2) ? cplx(0.0) : v;
            }
            fft.inv(tmp, work);
            fact *= q;
            double tmax = 0.0;
            for (int j = 0; j < N; ++j) {
                pw[j] *= U[j] / sd.d;
                const cplx term = pw[j] * tmp[j] / fact;
                E[j] += term;
                tmax = std::max(tmax, std::abs(term));
            }
            any = true;
            if (tmax < 1e-18 || umax == 0.0) break;
        }
        (void)any;
        cplx sum_base(0.0);
        for (int j = 0; j < N; ++j) {
            work[j] = -U[j] - E[j];
            sum_base += work[j];
        }
        if (!periodic) sd.mu = std::abs(sum_dsig) > 0.0 ? sum_base / sum_dsig : cplx(0.0);
        for (int j = 0; j < N; ++j) work[j] -= sd.mu * dsig[j];
        fft.fwd(tmp, work);
        double change = 0.0;
        for (int m = 0; m < N; ++m) {
            const cplx nv = (m == 0 || m == N / 2) ? cplx(0.0) : tmp[m] / den[m];
            change += std::abs(nv - psih[m]);
            psih[m] = nv;
        }
        change /= N;
        sd.update = change;
        if (change < 1e-17 || (change < 1e-14 && change >= 0.5 * last)) {
            ++it;
            break;
        }
        last = change;
    }
    sd.iterations = it;
    sd.coef.resize(N);
    for (int m = 0; m < N; ++m) sd.coef[m] = psih[m] / static_cast<double>(N);
    // spectrum tail: relative size of the coefficients in the top eighth of |k|
    double top = 0.0, all = 0.0;
    for (int m = 0; m < N; ++m) {
        const int n = m < N / 2 ? m : m - N;
        all = std::max(all, std::abs(psih[m]));
        if (std::abs(n) > 3 * N / 8) top = std::max(top, std::abs(psih[m]));
    }
    sd.spectrum_tail = all > 0.0 ? top / all : 0.0;
}

std::shared_ptr<StripData> build_strip(const Dynamics& dy, const TranslationDomain& dom, const OrbitPoint& base,
                                       double dt, int max_iter) {
    auto sd = std::make_shared<StripData>();
    sd->Z0 = dom.base;
    sd->d = dom.dir;
    sd->dt = dt;
    const long budget = 1L << 20;
    Marched m = march_line(dy, base, dom.base, dom.dir, dt, budget);
    const long n_marched = static_cast<long>(m.pts.size());
    if (n_marched * dt < 3.0) throw ResolutionError("strip shorter than three widths");
    const long pad = static_cast<long>(std::ceil(16.0 / dt));
    sd->N = next_pow2(n_marched + 2 * pad);
    const long extra = sd->N - n_marched;
    sd->t0 = m.t_first - (extra / 2) * dt;
    sd->L = sd->N * dt;
    std::vector<cplx> U(sd->N, 0.0);
    for (long j = 0; j < n_marched; ++j) U[extra / 2 + j] = m.u[j];
    sd->line = std::move(m.pts);
    sd->t_first = m.t_first;
    solve_abel(*sd, U, max_iter, false);
    return sd;
}

std::shared_ptr<StripData> build_periodic_strip(const Dynamics& dy, const TranslationDomain& dom,
                                                const OrbitPoint& base, cplx alpha, double dt_hint, int max_iter) {
    auto sd = std::make_shared<StripData>();
    sd->periodic = true;
    sd->Z0 = dom.base;
    sd->d = alpha / std::abs(alpha);
    const double P = std::abs(alpha);
    sd->N = next_pow2(static_cast<long>(std::ceil(P / dt_hint)));
    sd->dt = P / sd->N;
    sd->L = P;
    sd->t0 = 0.0;
    std::vector<cplx> U(sd->N);
    OrbitPoint p = base;
    for (int j = 0; j < sd->N; ++j) {
        if (j > 0) p = dy.seek(p, sd->Z0 + (j * sd->dt) * sd->d);
        sd->line.push_back(p);
        U[j] = dy.defect(p);
    }
    sd->t_first = 0.0;
    solve_abel(*sd, U, max_iter, true);
    return sd;
}

// parabolic tail series h with h(g z) - h(z) = -u(z)
std::vector<cplx> parabolic_series(const Dynamics& dy, int K) {
    const int n = K + 4;
    const poly::Poly G = dy.g_series(n);
    std::vector<cplx> gs(G.data(), G.data() + n);
    gs[0] = 0.0;
    gs[1] = 1.0;
    CVec<double> q(n - 1);
    for (int k = 0; k < n - 1; ++k) q(k) = gs[k + 1];
    CVec<double> w = CVec<double>::Zero(n - 2);
    for (int k = 0; k < n - 2; ++k) w(k) = q(k + 1);
    const int m2 = n - 2;
    CVec<double> A1 = s1::mul<double>(w, s1::inv<double>(s1::resized<double>(q, m2), m2), m2) * dy.c();
    CVec<double> lq = s1::log1<double>(s1::resized<double>(q, m2), m2) * dy.beta();
    CVec<double> u = A1 + lq;
    u(0) -= 1.0;
    // powers of g
    CVec<double> g(n);
    for (int k = 0; k < n; ++k) g(k) = gs[k];
    std::vector<CVec<double>> pw(K + 1);
    pw[0] = CVec<double>::Zero(n);
    pw[0](0) = 1.0;
    for (int k = 1; k <= K; ++k) pw[k] = s1::mul<double>(pw[k - 1], g, n);
    std::vector<cplx> h(K + 1, 0.0);
    for (int m = 1; m <= K && m + 1 < m2; ++m) {
        cplx acc = -u(m + 1);
        for (int k = 1; k < m; ++k) acc -= h[k] * pw[k](m + 1);
        h[m] = acc / pw[m](m + 1);
    }
    return h;
}

}  // namespace

// ---------------------------------------------------------------- hole geometry

HoleExtent hole_extent(const Dynamics& dy, int samples) {
    HoleExtent h;
    h.top = -std::numeric_limits<double>::infinity();
    h.bottom = std::numeric_limits<double>::infinity();
    h.left = std::numeric_limits<double>::infinity();
    h.right = -std::numeric_limits<double>::infinity();
    const Chart& ch = dy.chart(+1);
    for (int sgn : {+1, -1}) {
        LiftedPoint lp = ch.principal(dy.radius());
        for (int k = 1; k < samples; ++k) {
            const cplx z = std::polar(dy.radius(), sgn * M_PI * k / samples);
            lp = ch.advance(lp, z);
            const cplx Z = ch.Z(lp);
            if (sgn > 0) h.top = std::max(h.top, Z.imag());
            else h.bottom = std::min(h.bottom, Z.imag());
            h.left = std::min(h.left, Z.real());
            h.right = std::max(h.right, Z.real());
        }
    }
    return h;
}

// ---------------------------------------------------------------- domains

TranslationDomain translation_domain(const Dynamics& dy, const SectorParam& param, int side, const FatouOptions& opt) {
    TranslationDomain dom;
    dom.param = param;
    dom.side = side >= 0 ? +1 : -1;
    const bool real = param.is_real();
    if (dy.parabolic())
        dom.kind = DomainKind::Parabolic;
    else if (opt.mode == Mode::Weak && real)
        dom.kind = param.arg == 0.0 ? DomainKind::Glutsyuk : DomainKind::Lavaurs;
    else
        dom.kind = DomainKind::Sectoral;
    if (opt.mode == Mode::Weak && !real) throw MisuseError("weak mode needs a real parameter");
    if (param.modulus > 0.0 && !(param.arg > -M_PI + opt.delta && param.arg < 3.0 * M_PI - opt.delta))
        throw DomainError("lifted argument outside the sector");
    double ang = M_PI / 2;
    if (dom.kind == DomainKind::Sectoral) ang = 0.75 * M_PI - 0.25 * param.arg;
    if (opt.slope) ang = *opt.slope;
    dom.dir = std::polar(1.0, ang);
    if (std::abs(dom.dir.imag()) < 0.05) throw GeometryError("line too shallow: parallel to the orbits");
    if (!dy.parabolic() && dom.kind != DomainKind::Glutsyuk) {
        // both ends must run into the singular points
        if (!(std::real(dom.dir / dy.A()) < 0.0 && std::real(dom.dir / dy.B()) > 0.0))
            throw GeometryError("line direction does not separate the two singular points");
    }
    const OrbitPoint anchor = dom.side > 0 ? dy.at(dy.radius(), +1) : dy.at(-dy.radius(), -1);
    const double sgn = dom.side > 0 ? -1.0 : 1.0;
    double best_clear = -1.0;
    for (double x0 = opt.x0; x0 <= opt.x0 + 12.0; x0 += 0.5) {
        const cplx base = anchor.Z + sgn * x0;
        const OrbitPoint p0 = dy.seek(anchor, base);
        double clear = local_clearance(dy, p0), margin = std::numeric_limits<double>::infinity();
        double t_lo = 0.0, t_hi = 0.0;
        // walk the line until it is well inside (the far parts are lifted near the singular points)
        const double tmax = dom.kind == DomainKind::Glutsyuk ? std::abs(dy.alpha_plus()) : 400.0;
        for (int dir : {+1, -1}) {
            OrbitPoint p = p0;
            for (double t = 0.25; t <= tmax; t += 0.25) {
                p = dy.seek(p, base + (dir * t) * dom.dir);
                clear = std::min(clear, local_clearance(dy, p));
                const auto [tg, xg] = band_coords(p.Z + 1.0 + dy.defect(p), base, dom.dir);
                margin = std::min(margin, xg);
                (dir > 0 ? t_hi : t_lo) = dir * t;
                if (dom.kind != DomainKind::Glutsyuk && dy.singular_distance(p) < 0.02 * dy.radius()) break;
                if (clear < opt.min_clearance) break;
            }
            if (clear < opt.min_clearance) break;
        }
        if (clear > best_clear) best_clear = clear;
        const bool ok = clear >= opt.min_clearance + (dom.kind == DomainKind::Sectoral ? 0.5 : 0.0);
        if (ok || opt.slope) {
            dom.base = base;
            dom.clearance = clear;
            dom.step_margin = margin;
            dom.t_lo = t_lo;
            dom.t_hi = t_hi;
            if (!ok) break;
            if (margin < 0.3) throw GeometryError("line meets its image under the second iterate");
            return dom;
        }
    }
    throw GeometryError("no admissible line: hole clearance " + std::to_string(best_clear) + " < " +
                        std::to_string(opt.min_clearance));
}

// ---------------------------------------------------------------- Fatou coordinate

OrbitPoint FatouCoordinate::anchor_point() const {
    return side > 0 ? dyn->at(dyn->radius(), +1) : dyn->at(-dyn->radius(), -1);
}

OrbitPoint FatouCoordinate::line_point(double t) const {
    if (strip) {
        const OrbitPoint& p = strip->nearest(t);
        return dyn->seek(p, strip->Z0 + t * strip->d);
    }
    const OrbitPoint base = dyn->seek(anchor_point(), domain.base);
    // vertical moves in short legs
    return dyn->seek(base, domain.base + t * domain.dir);
}

cplx FatouCoordinate::orbit_sum(const OrbitPoint& p) const {
    const Dynamics& dy = *dyn;
    OrbitPoint q = p;
    const double scale = dy.parabolic() ? 1.0 : std::abs(dy.p1() - dy.p2());
    long n = 0;
    if (side > 0) {
        while (std::abs(q.d1) > 1e-18 * scale) {
            q = dy.backward(q);
            if (++n > max_depth) throw ConvergenceError("orbit sum: depth cap reached");
        }
        return q.Z + static_cast<double>(n);
    }
    while (std::abs(q.d2) > 1e-18 * scale) {
        q = dy.forward(q);
        if (++n > max_depth) throw ConvergenceError("orbit sum: depth cap reached");
    }
    return q.Z - static_cast<double>(n);
}

cplx FatouCoordinate::parabolic_value(const OrbitPoint& p) const {
    const Dynamics& dy = *dyn;
    OrbitPoint q = p;
    long n = 0;
    while (std::abs(q.z) > parabolic_stop) {
        q = side > 0 ? dy.backward(q) : dy.forward(q);
        if (++n > max_depth) throw ConvergenceError("parabolic orbit: depth cap reached");
    }
    cplx h(0.0), zp(1.0);
    for (size_t m = 1; m < hseries.size(); ++m) {
        zp *= q.z;
        h += hseries[m] * zp;
    }
    return q.Z + h + (side > 0 ? 1.0 : -1.0) * static_cast<double>(n);
}

cplx FatouCoordinate::strip_value(const OrbitPoint& p) const {
    const Dynamics& dy = *dyn;
    const StripData& sd = *strip;
    OrbitPoint q = p;
    long m = 0;
    int last = 0;
    for (int guard = 0;; ++guard) {
        if (guard > 200000) throw ConvergenceError("strip: band search did not terminate");
        const auto [t, x] = band_coords(q.Z, sd.Z0, sd.d);
        // a step may jump across the whole band on tilted lines: stop at the first reversal
        const int want = x < -0.5 ? +1 : (x >= 0.5 ? -1 : 0);
        if (want != 0 && want != -last) {
            q = want > 0 ? dy.forward(q) : dy.backward(q);
            m += want;
            last = want;
        } else {
            return q.Z + sd.phi((q.Z - sd.Z0) / sd.d) - static_cast<double>(m);
        }
        check_inside(dy, q);
    }
}

cplx FatouCoordinate::value(const OrbitPoint& p) const {
    switch (method) {
        case FatouMethod::Identity: return p.Z + C;
        case FatouMethod::OrbitSum: return orbit_sum(p) + C;
        case FatouMethod::Parabolic: return parabolic_value(p) + C;
        case FatouMethod::Strip: return strip_value(p) + C;
    }
    return 0.0;
}

FatouCoordinate::Preimage FatouCoordinate::inverse(cplx W, std::optional<OrbitPoint> seed) const {
    const Dynamics& dy = *dyn;
    Preimage out;
    if (method == FatouMethod::Strip) {
        const StripData& sd = *strip;
        cplx Wt = W - C;
        {
            const auto [t, x] = band_coords(Wt, sd.Z0, sd.d);
            const int n = static_cast<int>(std::floor(x + 0.5));
            Wt -= n;
            out.shift += n;
        }
        cplx Z = Wt - sd.phi((Wt - sd.Z0) / sd.d);
        for (int it = 0; it < 60; ++it) {
            auto [t, x] = band_coords(Z, sd.Z0, sd.d);
            // hysteresis: iterates near a band edge must not hop back and forth
            const int n = std::abs(x) < 0.7 ? 0 : static_cast<int>(std::floor(x + 0.5));
            if (n != 0) {
                Z -= n;
                Wt -= n;
                out.shift += n;
            }
            const cplx tau = (Z - sd.Z0) / sd.d;
            const cplx F = Z + sd.phi(tau) - Wt;
            const cplx D = 1.0 + sd.dphi(tau) / sd.d;
            const cplx dz = F / D;
            Z -= dz;
            if (std::abs(dz) < 1e-15 * std::max(1.0, std::abs(Z))) break;
            if (it == 59) throw InverseError("Fatou coordinate inversion did not converge");
        }
        const auto [t, x] = band_coords(Z, sd.Z0, sd.d);
        out.p = dy.seek(sd.nearest(t), Z);
        return out;
    }
    if (method == FatouMethod::Identity) {
        OrbitPoint s = seed ? *seed : dy.seek(anchor_point(), domain.base);
        out.p = dy.seek(s, W - C);
        return out;
    }
    OrbitPoint s = seed ? *seed : dy.seek(anchor_point(), domain.base);
    const cplx off = value(s) - s.Z;
    OrbitPoint p = dy.seek(s, W - off);
    cplx D(0.0);
    double last = std::numeric_limits<double>::infinity();
    OrbitPoint best = p;
    for (int it = 0; it < 40; ++it) {
        const cplx F = value(p) - W;
        const double aF = std::abs(F);
        const double scale = std::max(1.0, std::abs(W));
        if (aF < 2e-15 * scale) break;
        // orbit sums carry rounding of many steps: stop once progress stalls
        if (aF >= 0.5 * last) {
            if (last < 1e-11 * scale) {
                p = best;
                break;
            }
            if (it > 8) throw InverseError("Fatou coordinate inversion did not converge");
        }
        if (aF < last) {
            last = aF;
            best = p;
        }
        if (it == 0) {
            const double h = 1e-6;
            const OrbitPoint ph = dy.seek(p, p.Z + h);
            D = (value(ph) - (F + W)) / h;
        }
        p = dy.seek(p, p.Z - F / D);
        if (it == 39) throw InverseError("Fatou coordinate inversion did not converge");
    }
    out.p = p;
    return out;
}

// ---------------------------------------------------------------- pair construction

namespace {

FatouCoordinate make_coordinate(const std::shared_ptr<const Dynamics>& dy, const SectorParam& param, int side,
                                const FatouOptions& opt) {
    FatouCoordinate fc;
    fc.dyn = dy;
    fc.side = side;
    fc.max_depth = opt.max_depth;
    fc.domain = translation_domain(*dy, param, side, opt);
    if (dy->is_model()) {
        fc.method = FatouMethod::Identity;
        return fc;
    }
    const OrbitPoint anchor = fc.anchor_point();
    const OrbitPoint base = dy->seek(anchor, fc.domain.base);
    const double dt = opt.dt > 0.0 ? opt.dt : 0.2;
    switch (fc.domain.kind) {
        case DomainKind::Parabolic:
            fc.method = FatouMethod::Parabolic;
            fc.hseries = parabolic_series(*dy, 16);
            break;
        case DomainKind::Glutsyuk:
            if (opt.periodic_strip) {
                fc.method = FatouMethod::Strip;
                fc.strip = build_periodic_strip(*dy, fc.domain, base, side > 0 ? dy->alpha_plus() : dy->alpha_minus(),
                                                dt, opt.max_iter);
            } else {
                fc.method = FatouMethod::OrbitSum;
            }
            break;
        default:
            fc.method = FatouMethod::Strip;
            fc.strip = build_strip(*dy, fc.domain, base, dt, opt.max_iter);
            break;
    }
    return fc;
}

}  // namespace

double sampling_height(const FatouPair& fp, double h, bool above) {
    const double y = above ? fp.ref_level() + h : -fp.ref_level() - h;
    if ((above && y < fp.hole.top + 0.5) || (!above && y > fp.hole.bottom - 0.5))
        throw GeometryError("sampling line too close to the hole");
    return y;
}

OrbitPoint transition_seed(const FatouPair& fp, double y) {
    const Dynamics& dy = *fp.dyn;
    const OrbitPoint a = fp.plus.anchor_point();
    const double xl = std::min(-2.0, fp.hole.left - 2.0);
    return seek_path(dy, a, {cplx(xl, 0.0), cplx(xl, y), cplx(-0.5, y)});
}

cplx transition_value(const FatouPair& fp, cplx W, bool above, std::optional<OrbitPoint> seed) {
    if (!seed) seed = transition_seed(fp, W.imag());
    const FatouCoordinate::Preimage pre = fp.plus.inverse(W, seed);
    OrbitPoint y = pre.p;
    y.Z += (above ? -1.0 : 1.0) * I * M_PI * fp.b();
    return fp.minus.value(y) + static_cast<double>(pre.shift);
}

namespace {
// mean of Psi(W) - W over one period at the default height
cplx constant_term(const FatouPair& fp, double h, bool above, int M = 16) {
    const double y = sampling_height(fp, h, above);
    OrbitPoint seed = transition_seed(fp, y);
    cplx acc(0.0);
    for (int j = 0; j < M; ++j) {
        const cplx W(-1.0 + double(j) / M, y);
        const FatouCoordinate::Preimage pre = fp.plus.inverse(W, seed);
        seed = pre.p;
        OrbitPoint q = pre.p;
        q.Z += (above ? -1.0 : 1.0) * I * M_PI * fp.b();
        acc += fp.minus.value(q) + static_cast<double>(pre.shift) - W;
    }
    return acc / static_cast<double>(M);
}
}  // namespace

FatouPair fatou_pair_raw(const GermFamily& fam, const SectorParam& param, const FatouOptions& opt) {
    FatouPair fp;
    fp.param = param;
    auto dy = std::make_shared<const Dynamics>(Dynamics::build(fam, param.eps(), param.sqrt_eps()));
    fp.dyn = dy;
    fp.hole = hole_extent(*dy);
    fp.plus = make_coordinate(dy, param, +1, opt);
    fp.minus = make_coordinate(dy, param, -1, opt);
    OrbitPoint X = dy->base_point();
    if (opt.base_radius > 0.0) {
        if (opt.base_radius > dy->radius() || opt.base_radius < 2.0 * std::abs(dy->sqrt_eps()) + 0.05)
            throw DomainError("base point must lie on the real axis between the fixed points' region and r");
        X = dy->at(opt.base_radius, +1);
    }
    fp.plus.C = -fp.plus.value(X);
    fp.plus.normalization = "Phi+(X) = 0, X = Z+(" + std::to_string(opt.base_radius > 0 ? opt.base_radius : dy->radius()) + ")";
    fp.minus.normalization = "raw";
    return fp;
}

FatouPair fatou_pair(const GermFamily& fam, const SectorParam& param, const FatouOptions& opt) {
    FatouPair fp = fatou_pair_raw(fam, param, opt);
    const Dynamics& dy = *fp.dyn;
    const double b_im_pi = M_PI * fp.b().real();
    const bool weak_real = opt.mode == Mode::Weak && param.is_real() && dy.antiholomorphic();
    if (weak_real) {
        for (FatouCoordinate* phi : {&fp.plus, &fp.minus}) {
            const auto [dev, kappa] = antiholomorphic_residual(*phi);
            const std::string s = phi->side > 0 ? "plus" : "minus";
            fp.residuals[s + "_involution"] = std::abs(2.0 * kappa.real() - 1.0);
            fp.residuals[s + "_F_form"] = dev;
            phi->C += -0.5 * I * kappa.imag();
        }
        const cplx c0 = constant_term(fp, opt.height, true);
        fp.minus.C -= c0.real();
        fp.plus.normalization += "; antiholomorphic shift";
        fp.minus.normalization = "antiholomorphic shift; real shift Re c0 = 0";
        const cplx c0n = constant_term(fp, opt.height, true);
        fp.residuals["c0_imag_relation"] = std::abs(c0n.imag() + b_im_pi);
    } else {
        const cplx c0 = constant_term(fp, opt.height, true);
        fp.minus.C -= c0 + I * M_PI * fp.b();
        fp.minus.normalization = "c0 = -i pi b";
        if (param.is_real() && dy.antiholomorphic()) {
            // antiholomorphic shift last; what it leaves of c0 + i pi b is recorded
            for (FatouCoordinate* phi : {&fp.plus, &fp.minus}) {
                const auto [dev, kappa] = antiholomorphic_residual(*phi);
                const std::string s = phi->side > 0 ? "plus" : "minus";
                fp.residuals[s + "_involution"] = std::abs(2.0 * kappa.real() - 1.0);
                fp.residuals[s + "_F_form"] = dev;
                phi->C += -0.5 * I * kappa.imag();
                phi->normalization += "; antiholomorphic shift";
            }
            const cplx c0n = constant_term(fp, opt.height, true);
            fp.residuals["strong_residual_translation"] = std::abs(c0n + I * M_PI * fp.b());
        }
    }
    for (FatouCoordinate* phi : {&fp.plus, &fp.minus}) {
        const std::string s = phi->side > 0 ? "plus" : "minus";
        fp.residuals[s + "_abel"] = abel_residual(*phi);
        phi->residuals["abel"] = fp.residuals[s + "_abel"];
        if (phi->domain.kind == DomainKind::Glutsyuk) {
            fp.residuals[s + "_period"] = period_commutation_residual(*phi);
        }
        if (param.is_real() && dy.antiholomorphic()) {
            const auto [dev, kappa] = antiholomorphic_residual(*phi);
            fp.residuals[s + "_F_relation"] = std::max(dev, std::abs(kappa - 0.5));
        }
    }
    return fp;
}

// ---------------------------------------------------------------- residuals

namespace {
std::vector<OrbitPoint> test_points(const FatouCoordinate& phi, int samples, double x) {
    std::vector<OrbitPoint> pts;
    const Dynamics& dy = *phi.dyn;
    double lo = -8.0, hi = 8.0;
    if (phi.domain.kind == DomainKind::Glutsyuk) {
        const double P = std::abs(phi.side > 0 ? dy.alpha_plus() : dy.alpha_minus());
        lo = 0.0;
        hi = P;
    } else if (phi.strip) {
        lo = std::max(-20.0, phi.strip->t_first + 2.0);
        hi = std::min(20.0, phi.strip->t_first + phi.strip->dt * (phi.strip->line.size() - 1) - 2.0);
    }
    const cplx d = phi.strip ? phi.strip->d : phi.domain.dir;
    const cplx Z0 = phi.strip ? phi.strip->Z0 : phi.domain.base;
    OrbitPoint p = dy.seek(phi.anchor_point(), Z0);
    for (int j = 0; j < samples; ++j) {
        const double t = lo + (hi - lo) * (j + 0.5) / samples;
        p = dy.seek(p, Z0 + t * d);
        pts.push_back(dy.seek(p, Z0 + t * d + x));
    }
    return pts;
}
}  // namespace

double abel_residual(const FatouCoordinate& phi, int samples) {
    const Dynamics& dy = *phi.dyn;
    double worst = 0.0;
    for (double x : {-0.45, -0.2, 0.0}) {
        for (const OrbitPoint& p : test_points(phi, samples / 3, x)) {
            const OrbitPoint q = dy.forward(p);
            double r;
            if (phi.method == FatouMethod::Strip) {
                const StripData& sd = *phi.strip;
                const cplx a = p.Z + sd.phi((p.Z - sd.Z0) / sd.d);
                const cplx b = q.Z + sd.phi((q.Z - sd.Z0) / sd.d);
                r = std::abs(b - a - 1.0);
            } else {
                r = std::abs(phi.value(q) - phi.value(p) - 1.0);
            }
            worst = std::max(worst, r);
        }
    }
    return worst;
}

std::pair<double, cplx> antiholomorphic_residual(const FatouCoordinate& phi, int samples) {
    const Dynamics& dy = *phi.dyn;
    std::vector<cplx> ks;
    for (const OrbitPoint& p : test_points(phi, samples, 0.3)) {
        const OrbitPoint q = dy.flift(p);
        ks.push_back(phi.value(q) - std::conj(phi.value(p)));
    }
    cplx mean(0.0);
    for (cplx k : ks) mean += k;
    mean /= static_cast<double>(ks.size());
    double dev = 0.0;
    for (cplx k : ks) dev = std::max(dev, std::abs(k - mean));
    return {dev, mean};
}

double period_commutation_residual(const FatouCoordinate& phi, int samples) {
    const Dynamics& dy = *phi.dyn;
    const cplx a = phi.side > 0 ? dy.alpha_plus() : dy.alpha_minus();
    double worst = 0.0;
    for (const OrbitPoint& p : test_points(phi, samples, 0.3)) {
        OrbitPoint q = p;
        q.Z += a;
        worst = std::max(worst, std::abs(phi.value(q) - phi.value(p) - a));
    }
    return worst;
}

void dump_fatou_csv(const FatouCoordinate& phi, const std::string& path, int samples) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open " + path);
    os << "t,Z_re,Z_im,phi_re,phi_im,abel_residual\n";
    os.precision(17);
    const Dynamics& dy = *phi.dyn;
    const cplx d = phi.strip ? phi.strip->d : phi.domain.dir;
    const cplx Z0 = phi.strip ? phi.strip->Z0 : phi.domain.base;
    OrbitPoint p = dy.seek(phi.anchor_point(), Z0);
    const double lo = phi.domain.t_lo, hi = phi.domain.t_hi;
    for (int j = 0; j < samples; ++j) {
        const double t = lo + (hi - lo) * j / std::max(1, samples - 1);
        p = dy.seek(p, Z0 + t * d);
        const cplx v = phi.value(p);
        const cplx r = phi.value(dy.forward(p)) - v - 1.0;
        os << t << ',' << p.Z.real() << ',' << p.Z.imag() << ',' << (v - p.Z).real() << ',' << (v - p.Z).imag() << ','
           << std::abs(r) << '\n';
    }
}

}  // namespace pmod
