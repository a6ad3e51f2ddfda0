#include "pmod/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unsupported/Eigen/FFT>

namespace pmod {

namespace {
const cplx I(0.0, 1.0);

bool above_kind(TransitionKind k) { return k == TransitionKind::Inf || k == TransitionKind::Gap || k == TransitionKind::Upper; }

cplx sigma_half(cplx W) { return std::conj(W) + 0.5; }
}  // namespace

std::string transition_kind_name(TransitionKind k) {
    switch (k) {
        case TransitionKind::Inf: return "inf";
        case TransitionKind::Zero: return "0";
        case TransitionKind::Gap: return "G";
        case TransitionKind::Upper: return "U";
        case TransitionKind::Lower: return "L";
    }
    return "?";
}

// ---------------------------------------------------------------- transition maps

cplx TransitionMap::operator()(cplx W) const {
    if (fn) return fn(W);
    if (!pair) throw MisuseError("transition map without evaluator");
    return transition_value(*pair, W, above_kind(kind));
}

std::vector<cplx> TransitionMap::line(double y, int M, double x0) const {
    std::vector<cplx> out(M);
    if (fn) {
        for (int j = 0; j < M; ++j) out[j] = fn(cplx(x0 + double(j) / M, y));
        return out;
    }
    if (!pair) throw MisuseError("transition map without evaluator");
    const FatouPair& fp = *pair;
    const bool above = above_kind(kind);
    OrbitPoint seed = transition_seed(fp, y);
    for (int j = 0; j < M; ++j) {
        const cplx W(x0 + double(j) / M, y);
        const FatouCoordinate::Preimage pre = fp.plus.inverse(W, seed);
        seed = pre.p;
        OrbitPoint q = pre.p;
        q.Z += (above ? -1.0 : 1.0) * I * M_PI * fp.b();
        out[j] = fp.minus.value(q) + static_cast<double>(pre.shift);
    }
    return out;
}

double TransitionMap::commutation_residual(double y, int samples) const {
    const std::vector<cplx> a = line(y, samples, -1.0);
    const std::vector<cplx> b = line(y, samples, 0.0);
    double worst = 0.0;
    for (int j = 0; j < samples; ++j) worst = std::max(worst, std::abs(b[j] - a[j] - 1.0));
    return worst;
}

TransitionMap synthetic_transition(std::function<cplx(cplx)> fn, double height, TransitionKind kind) {
    TransitionMap t;
    t.kind = kind;
    t.fn = std::move(fn);
    t.height = height;
    return t;
}

TransitionMap fourier_transition(const std::map<int, cplx>& coeffs, double height, double ref_up, double ref_down,
                                 TransitionKind kind) {
    auto fn = [coeffs, ref_up, ref_down](cplx W) {
        cplx v = W;
        for (const auto& [n, c] : coeffs) {
            if (n == 0) {
                v += c;
                continue;
            }
            const double ref = n > 0 ? ref_up : ref_down;
            v += c * std::exp(2.0 * M_PI * I * double(n) * (W - I * ref));
        }
        return v;
    };
    TransitionMap t = synthetic_transition(fn, height, kind);
    t.ref_up = ref_up;
    t.ref_down = ref_down;
    return t;
}

const TransitionMap& TransitionSet::at(TransitionKind k) const {
    auto it = maps.find(k);
    if (it == maps.end()) throw MisuseError("transition map " + transition_kind_name(k) + " not available here");
    return it->second;
}

TransitionSet transition_maps(const std::shared_ptr<const FatouPair>& fp, double h) {
    TransitionSet ts;
    ts.y_up = sampling_height(*fp, h, true);
    ts.y_down = sampling_height(*fp, h, false);
    auto make = [&](TransitionKind k, double y) {
        TransitionMap t;
        t.kind = k;
        t.param = fp->param;
        t.pair = fp;
        t.height = y;
        t.ref_up = fp->ref_level();
        t.ref_down = -fp->ref_level();
        return t;
    };
    if (fp->plus.domain.kind == DomainKind::Glutsyuk) {
        // the upper gap closes at the translate of the hole by alpha^+
        const double top_gap = fp->hole.bottom + fp->dyn->alpha_plus().imag();
        ts.y_high = fp->dyn->alpha_plus().imag() - fp->ref_level() - h;
        if (ts.y_high > top_gap - 0.5 || ts.y_high < ts.y_up + 1.0)
            throw GeometryError("upper gap too narrow for the sampling height");
        TransitionMap g = make(TransitionKind::Gap, ts.y_up);
        g.ref_down = fp->dyn->alpha_plus().imag() - fp->ref_level();
        ts.maps[TransitionKind::Gap] = g;
        TransitionMap u = g;
        u.kind = TransitionKind::Upper;
        ts.maps[TransitionKind::Upper] = u;
        TransitionMap l = make(TransitionKind::Lower, ts.y_down);
        ts.maps[TransitionKind::Lower] = l;
    } else {
        ts.maps[TransitionKind::Inf] = make(TransitionKind::Inf, ts.y_up);
        ts.maps[TransitionKind::Zero] = make(TransitionKind::Zero, ts.y_down);
    }
    return ts;
}

// ---------------------------------------------------------------- Fourier extraction

FourierResult fourier_modulus(const TransitionMap& psi, int nmax, double y, const FourierOptions& opt) {
    if (nmax < 0 || nmax > 32) throw MisuseError("nmax must lie in [0, 32]");
    const int M = opt.samples > 0 ? opt.samples : std::max(64, 4 * nmax);
    if (M < 4 * nmax) throw MisuseError("at least 4 nmax samples are needed");
    const double x0 = -1.0;
    std::vector<cplx> v = psi.line(y, M, x0);
    for (int j = 0; j < M; ++j) v[j] -= cplx(x0 + double(j) / M, y);
    std::vector<cplx> A;
    Eigen::FFT<double> fft;
    fft.fwd(A, v);
    for (cplx& a : A) a /= double(M);
    FourierResult fr;
    fr.nmax = nmax;
    fr.height = y;
    fr.samples = M;
    double fl = 0.0;
    for (int m = 0; m < M; ++m) {
        const int n = m <= M / 2 ? m : m - M;
        if (std::abs(n) > M / 4) fl = std::max(fl, std::abs(A[m]));
    }
    fr.floor = std::max(fl, 1e-17);
    if (fl > opt.alias_tol)
        throw ResolutionError("spectrum not resolved on the sampling line (noise floor " + std::to_string(fl) +
                              "): raise h or the number of samples");
    fr.c.assign(2 * nmax + 1, 0.0);
    fr.error.assign(2 * nmax + 1, 0.0);
    fr.resolved.assign(2 * nmax + 1, 0);
    for (int n = -nmax; n <= nmax; ++n) {
        const int m = (n + M) % M;
        const double ref = n > 0 ? psi.ref_up : (n < 0 ? psi.ref_down : 0.0);
        // c_n e^{2 pi i n W} evaluated at W = i ref
        const cplx w = std::exp(-2.0 * M_PI * I * double(n) * x0) * std::exp(2.0 * M_PI * double(n) * (y - ref));
        fr.c[n + nmax] = A[m] * w;
        fr.error[n + nmax] = fr.floor * std::abs(w);
        fr.resolved[n + nmax] = (n == 0 || std::abs(fr.c[n + nmax]) > opt.resolve_factor * fr.error[n + nmax]) ? 1 : 0;
    }
    return fr;
}

// ---------------------------------------------------------------- relations

bool is_relation_residual(const std::string& name) {
    static const char* keys[] = {"a_imag_c0",      "b_constant_terms", "c_sigma_half", "d_lavaurs_spread",
                                 "e_lavaurs_constant", "L_consistency", "commute_T1",   "strong_c0", "c_sigma_hat_pair"};
    for (const char* k : keys)
        if (name.rfind(k, 0) == 0) return true;
    return false;
}

namespace {

bool has(const std::vector<int>& v, int n) { return std::find(v.begin(), v.end(), n) != v.end(); }

std::vector<cplx> sample_line(double x0, double y, int M) {
    std::vector<cplx> W(M);
    for (int j = 0; j < M; ++j) W[j] = cplx(x0 + double(j) / M, y);
    return W;
}

double lavaurs_sample(const FatouPair& fp, const TransitionMap& inf, double y, int M, cplx& mean) {
    const Dynamics& dy = *fp.dyn;
    const std::vector<cplx> psi = inf.line(y, M);
    OrbitPoint seed = transition_seed(fp, y);
    std::vector<cplx> T(M);
    for (int j = 0; j < M; ++j) {
        const cplx W(-1.0 + double(j) / M, y);
        const FatouCoordinate::Preimage pre = fp.plus.inverse(W, seed);
        seed = pre.p;
        OrbitPoint q = pre.p;
        q.Z -= dy.alpha_plus();
        T[j] = fp.plus.value(q) + static_cast<double>(pre.shift) - psi[j];
    }
    mean = 0.0;
    for (cplx t : T) mean += t;
    mean /= double(M);
    double spread = 0.0;
    for (cplx t : T) spread = std::max(spread, std::abs(t - mean));
    return spread;
}

}  // namespace

std::map<std::string, double> relation_report(const ModulusRecord& rec, const ModulusOptions& opt) {
    std::map<std::string, double> res;
    if (!rec.pair) throw MisuseError("relation report needs the Fatou pair of the record");
    const FatouPair& fp = *rec.pair;
    const TransitionSet ts = transition_maps(rec.pair, opt.h);
    const Dynamics& dy = *fp.dyn;
    const int M = opt.relation_samples;
    const double b_re = fp.b().real();
    const bool real = rec.param.is_real();
    const bool weak = opt.fatou.mode == Mode::Weak;
    const bool glutsyuk = fp.plus.domain.kind == DomainKind::Glutsyuk;
    const bool parabolic = fp.plus.domain.kind == DomainKind::Parabolic;

    for (const auto& [k, t] : ts.maps) {
        if (k == TransitionKind::Upper) continue;
        res["commute_T1_" + transition_kind_name(k)] = t.commutation_residual(t.height, 8);
    }
    const cplx c0 = glutsyuk ? (rec.c_G.empty() ? cplx(0) : rec.c_G[rec.c_G.size() / 2])
                             : (rec.c_inf.empty() ? cplx(0) : rec.c_inf[0]);
    // (a) Im c0 = -pi b; the literal form Im c0 = -i pi b is kept as a diagnostic
    if (real && !std::isnan(c0.real())) {
        res["a_imag_c0"] = std::abs(c0.imag() + M_PI * b_re);
        res["a_literal_reading"] = std::abs(cplx(c0.imag(), 0.0) + I * M_PI * b_re);
    }
    if (!weak || !real) res["strong_c0"] = std::abs(c0 + I * M_PI * fp.b());
    // (b) constant terms across the hole
    if (!glutsyuk && !rec.c_0.empty()) res["b_constant_terms"] = std::abs(rec.c_inf[0] - rec.c_0[0] + 2.0 * I * M_PI * fp.b());
    // (c) Sigma T_{1/2} symmetry for real eps
    if (real && dy.antiholomorphic()) {
        const TransitionMap& up = glutsyuk ? ts.at(TransitionKind::Upper) : ts.at(TransitionKind::Inf);
        const TransitionMap& dn = glutsyuk ? ts.at(TransitionKind::Lower) : ts.at(TransitionKind::Zero);
        const std::vector<cplx> Wd = sample_line(-1.0, ts.y_down, M);
        const std::vector<cplx> vd = dn.line(ts.y_down, M, -1.0);
        // conj W + 1/2 lies on the mirrored line, shifted by a half period
        const std::vector<cplx> vu = up.line(-ts.y_down, M, -0.5);
        double worst = 0.0;
        for (int j = 0; j < M; ++j) {
            // sample j of the shifted line is at x = -1 + j/M + 1/2 = Re(conj W_j) + 1/2
            worst = std::max(worst, std::abs(vu[j] - sigma_half(vd[j])));
        }
        (void)Wd;
        res["c_sigma_half"] = worst;
        // the same relation mode by mode at the reference levels, where the samples are least damped
        double coef = 0.0;
        const int nmax = opt.nmax;
        for (int n = 1; n <= nmax; ++n) {
            cplx c, d;
            bool ok;
            if (glutsyuk) {
                if (rec.c_G.empty()) break;
                ok = !has(rec.unresolved_G, n) && !has(rec.unresolved_G, -n);
                c = rec.c_G[n + nmax];
                // Psi^L at -1/r from Psi^G: a phase only
                d = rec.c_G[nmax - n] * std::exp(-2.0 * M_PI * I * double(n) * dy.alpha_plus().real());
            } else {
                if (rec.c_inf.size() <= size_t(n) || rec.c_0.size() <= size_t(n)) break;
                ok = !has(rec.unresolved_inf, n) && !has(rec.unresolved_0, n);
                c = rec.c_inf[n];
                d = rec.c_0[n];
            }
            if (ok) coef = std::max(coef, std::abs(c * (n % 2 ? -1.0 : 1.0) - std::conj(d)));
        }
        res["c_sigma_half_modes"] = coef;
    }
    if (glutsyuk) {
        // Psi^L = T_{alpha^-} Psi^G T_{alpha^+}
        const TransitionMap& G = ts.at(TransitionKind::Gap);
        const TransitionMap& L = ts.at(TransitionKind::Lower);
        const std::vector<cplx> vl = L.line(ts.y_down, M, -1.0);
        const cplx ap = dy.alpha_plus(), am = dy.alpha_minus();
        double worst = 0.0;
        for (int j = 0; j < M; ++j) {
            const cplx W(-1.0 + double(j) / M, ts.y_down);
            worst = std::max(worst, std::abs(vl[j] - (G(W + ap) + am)));
        }
        res["L_consistency"] = worst;
    } else if (!parabolic) {
        cplx mean;
        res["d_lavaurs_spread"] = lavaurs_sample(fp, ts.at(TransitionKind::Inf), ts.y_up, M, mean);
        const cplx closed = -I * M_PI / dy.sqrt_eps();
        res["e_lavaurs_constant"] = std::abs(mean - closed);
    }
    // one-sidedness of the stored series is structural; check the raw spectra instead
    return res;
}

RelationFit sigma_relation(const std::vector<cplx>& c_inf, const std::vector<cplx>& c_0_bar,
                           const std::vector<int>& unresolved_inf, const std::vector<int>& unresolved_0,
                           bool fit_phase) {
    const int n_hi = static_cast<int>(std::min(c_inf.size(), c_0_bar.size())) - 1;
    std::vector<int> use;
    for (int n = 1; n <= n_hi; ++n)
        if (!has(unresolved_inf, n) && !has(unresolved_0, n) && std::abs(c_inf[n]) > 0.0 && std::abs(c_0_bar[n]) > 0.0)
            use.push_back(n);
    // Im C from log magnitudes, weighted by the smaller amplitude
    double num = 0.0, den = 0.0;
    for (int n : use) {
        const double a = std::abs(c_inf[n]), d = std::abs(c_0_bar[n]);
        const double w = std::min(a, d);
        num += w * n * std::log(d / a);
        den += w * 2.0 * M_PI * n * n;
    }
    const double y = den > 0.0 ? num / den : 0.0;
    auto residual = [&](double x) {
        const cplx C(x, y);
        double worst = n_hi >= 0 ? std::abs(c_inf[0] - std::conj(c_0_bar[0])) : 0.0;
        for (int n = 1; n <= n_hi; ++n) {
            // a mode below the noise floor on one side carries no information after renormalization
            if (has(unresolved_inf, n) || has(unresolved_0, n)) continue;
            const cplx lhs = c_inf[n] * (n % 2 ? -1.0 : 1.0) * std::exp(-2.0 * M_PI * I * double(n) * C);
            worst = std::max(worst, std::abs(lhs - std::conj(c_0_bar[n])));
        }
        return worst;
    };
    double x = 0.0;
    if (fit_phase && !use.empty()) {
        // scan one period of Re C, then refine by bisection on the bracket
        const int S = 2000;
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < S; ++k) {
            const double r = residual(double(k) / S);
            if (r < best) {
                best = r;
                x = double(k) / S;
            }
        }
        double lo = x - 1.0 / S, hi = x + 1.0 / S;
        for (int it = 0; it < 60; ++it) {
            const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            if (residual(m1) < residual(m2)) hi = m2;
            else lo = m1;
        }
        x = 0.5 * (lo + hi);
        if (x < 0.0) x += 1.0;
    }
    RelationFit f;
    f.shift = cplx(x, y);
    f.residual = residual(x);
    f.modes = static_cast<int>(use.size());
    return f;
}

// ---------------------------------------------------------------- records

namespace {

void fill_one_sided(const FourierResult& fr, bool positive, std::vector<cplx>& out, std::vector<int>& unresolved,
                    double& wrong_side) {
    out.assign(fr.nmax + 1, 0.0);
    unresolved.clear();
    for (int k = 0; k <= fr.nmax; ++k) {
        const int n = positive ? k : -k;
        if (fr.ok(n)) out[k] = fr.at(n);
        else unresolved.push_back(k);
    }
    wrong_side = 0.0;
    for (int k = 1; k <= fr.nmax; ++k) wrong_side = std::max(wrong_side, std::abs(fr.at(positive ? -k : k)));
}

double height_gap(const std::vector<cplx>& a, const std::vector<int>& ua, const std::vector<cplx>& b,
                  const std::vector<int>& ub, int offset) {
    double worst = 0.0;
    for (size_t k = 0; k < a.size(); ++k) {
        const int n = static_cast<int>(k);
        if (std::find(ua.begin(), ua.end(), n - offset) != ua.end()) continue;
        if (std::find(ub.begin(), ub.end(), n - offset) != ub.end()) continue;
        worst = std::max(worst, std::abs(a[k] - b[k]));
    }
    return worst;
}

void compute_coefficients(ModulusRecord& rec, const TransitionSet& ts, const ModulusOptions& opt, double h,
                          std::map<std::string, double>& extra) {
    const int nmax = opt.nmax;
    if (ts.has(TransitionKind::Gap)) {
        const TransitionMap& G = ts.at(TransitionKind::Gap);
        const FourierResult lo = fourier_modulus(G, nmax, ts.y_up, opt.fourier);
        const FourierResult hi = fourier_modulus(G, nmax, ts.y_high, opt.fourier);
        rec.c_G.assign(2 * nmax + 1, 0.0);
        rec.unresolved_G.clear();
        for (int n = -nmax; n <= nmax; ++n) {
            const FourierResult& fr = n >= 0 ? lo : hi;
            if (fr.ok(n)) rec.c_G[n + nmax] = fr.at(n);
            else rec.unresolved_G.push_back(n);
        }
        extra["c0_line_agreement_G"] = std::abs(lo.at(0) - hi.at(0));
        extra["noise_floor"] = std::max(lo.floor, hi.floor);
    } else {
        const FourierResult up = fourier_modulus(ts.at(TransitionKind::Inf), nmax, ts.y_up, opt.fourier);
        const FourierResult dn = fourier_modulus(ts.at(TransitionKind::Zero), nmax, ts.y_down, opt.fourier);
        double w_inf = 0.0, w_0 = 0.0;
        fill_one_sided(up, true, rec.c_inf, rec.unresolved_inf, w_inf);
        fill_one_sided(dn, false, rec.c_0, rec.unresolved_0, w_0);
        extra["one_sided_inf"] = w_inf;
        extra["one_sided_0"] = w_0;
        extra["noise_floor"] = std::max(up.floor, dn.floor);
    }
    (void)h;
}

}  // namespace

ModulusRecord modulus_record(const GermFamily& fam, const SectorParam& param, const ModulusOptions& opt) {
    ModulusRecord rec;
    rec.param = param;
    rec.eps = param.eps();
    try {
        auto fp = std::make_shared<const FatouPair>(fatou_pair(fam, param, opt.fatou));
        rec.pair = fp;
        rec.b = fp->b();
        rec.kind = domain_kind_name(fp->plus.domain.kind);
        rec.normalization = fp->plus.normalization + " | " + fp->minus.normalization;
        for (const auto& [k, v] : fp->residuals) rec.residuals["fatou_" + k] = v;
        const TransitionSet ts = transition_maps(fp, opt.h);
        std::map<std::string, double> extra;
        compute_coefficients(rec, ts, opt, opt.h, extra);
        for (const auto& [k, v] : extra) rec.residuals[k] = v;
        if (opt.h_check > 0.0 && opt.h_check != opt.h) {
            ModulusRecord alt = rec;
            const TransitionSet ts2 = transition_maps(fp, opt.h_check);
            std::map<std::string, double> dummy;
            compute_coefficients(alt, ts2, opt, opt.h_check, dummy);
            if (!rec.c_G.empty())
                rec.residuals["height_independence"] =
                    height_gap(rec.c_G, rec.unresolved_G, alt.c_G, alt.unresolved_G, opt.nmax);
            else
                rec.residuals["height_independence"] =
                    std::max(height_gap(rec.c_inf, rec.unresolved_inf, alt.c_inf, alt.unresolved_inf, 0),
                             height_gap(rec.c_0, rec.unresolved_0, alt.c_0, alt.unresolved_0, 0));
        }
        for (const auto& [k, v] : relation_report(rec, opt)) rec.residuals[k] = v;
        for (const auto& [k, v] : rec.residuals)
            if (is_relation_residual(k) && !(v < opt.hard_cap)) {
                rec.valid = false;
                rec.error = "relation residual " + k + " above the hard cap";
            }
    } catch (const Error& e) {
        rec.valid = false;
        rec.error = std::string(e.kind()) + ": " + e.what();
    }
    return rec;
}

ModulusData weak_modulus(const GermFamily& fam, const std::vector<double>& grid, const ModulusOptions& opt) {
    ModulusData m;
    m.family = fam.label;
    m.mode = Mode::Weak;
    m.nmax = opt.nmax;
    m.h = opt.h;
    m.delta = opt.fatou.delta;
    m.radius = fam.r;
    m.grid = grid;
    ModulusOptions o = opt;
    o.fatou.mode = Mode::Weak;
    for (double e : grid) {
        if (!(std::abs(e) < fam.r_param)) throw DomainError("grid point outside the parameter disk");
        m.records.push_back(modulus_record(fam, SectorParam::real(e), o));
    }
    return m;
}

ModulusData strong_modulus(const GermFamily& fam, const std::vector<double>& rays, const std::vector<double>& radii,
                           const ModulusOptions& opt) {
    ModulusData m;
    m.family = fam.label;
    m.mode = Mode::Strong;
    m.nmax = opt.nmax;
    m.h = opt.h;
    m.delta = opt.fatou.delta;
    m.radius = fam.r;
    m.rays = rays;
    m.radii = radii;
    ModulusOptions o = opt;
    o.fatou.mode = Mode::Strong;
    for (double rho : radii) {
        if (!(rho > 0.0 && rho < fam.r_param)) throw DomainError("radius outside the parameter disk");
        for (double a : rays) {
            if (!(a > -M_PI + o.fatou.delta && a < 3.0 * M_PI - o.fatou.delta))
                throw DomainError("ray outside the sector");
            ModulusRecord rec = modulus_record(fam, SectorParam{rho, a}, o);
            if (opt.seam_check && a == M_PI && rec.valid) {
                ModulusOptions w = opt;
                w.fatou.mode = Mode::Weak;
                w.h_check = 0.0;
                const ModulusRecord ref = modulus_record(fam, SectorParam::real(-rho), w);
                if (ref.valid) {
                    double d = 0.0;
                    for (size_t k = 0; k < rec.c_inf.size(); ++k) d = std::max(d, std::abs(rec.c_inf[k] - ref.c_inf[k]));
                    for (size_t k = 0; k < rec.c_0.size(); ++k) d = std::max(d, std::abs(rec.c_0[k] - ref.c_0[k]));
                    rec.residuals["seam_lavaurs"] = d;
                }
            }
            m.records.push_back(std::move(rec));
        }
    }
    auto gap = [](const std::vector<cplx>& u, const std::vector<int>& uu, const std::vector<cplx>& v,
                  const std::vector<int>& uv) {
        double d = 0.0;
        for (size_t k = 0; k < std::min(u.size(), v.size()); ++k)
            if (!has(uu, int(k)) && !has(uv, int(k))) d = std::max(d, std::abs(u[k] - v[k]));
        return d;
    };
    for (auto& r2 : m.records)
        for (const auto& r1 : m.records) {
            if (!r1.valid || !r2.valid || r1.param.modulus != r2.param.modulus) continue;
            // distinct determinations over the overlap: arg and arg + 2 pi
            if (std::abs(r2.param.arg - r1.param.arg - 2.0 * M_PI) < 1e-12)
                r2.residuals["determination_gap"] = std::max(gap(r1.c_inf, r1.unresolved_inf, r2.c_inf, r2.unresolved_inf),
                                                             gap(r1.c_0, r1.unresolved_0, r2.c_0, r2.unresolved_0));
            // paired rays arg and 2 pi - arg: Sigma T_{1/2} Psi^inf(e) = Psi^0(ebar) Sigma T_{1/2}
            if (std::abs(r1.param.arg + r2.param.arg - 2.0 * M_PI) < 1e-12) {
                const RelationFit f = sigma_relation(r2.c_inf, r1.c_0, r2.unresolved_inf, r1.unresolved_0, true);
                r2.residuals["c_sigma_hat_pair"] = f.residual;
            }
        }
    return m;
}

// ---------------------------------------------------------------- JSON

namespace {
json cvec_json(const std::vector<cplx>& v) {
    json a = json::array();
    for (cplx z : v) a.push_back(cplx_to_json(z));
    return a;
}
std::vector<cplx> cvec_from(const json& j) {
    std::vector<cplx> v;
    for (const auto& e : j) v.push_back(cplx_from_json(e));
    return v;
}
}  // namespace

json record_to_json(const ModulusRecord& r, int nmax) {
    json j;
    j["eps_re"] = r.eps.real();
    j["eps_im"] = r.eps.imag();
    j["eps_modulus"] = r.param.modulus;
    j["arg_lift"] = r.param.arg;
    j["b"] = r.b.real();
    j["b_im"] = r.b.imag();
    j["kind"] = r.kind;
    j["valid"] = r.valid;
    if (!r.error.empty()) j["error"] = r.error;
    j["normalization"] = r.normalization;
    j["c_inf"] = cvec_json(r.c_inf);
    j["c_0"] = cvec_json(r.c_0);
    j["c_G"] = cvec_json(r.c_G);
    j["unresolved"] = {{"c_inf", r.unresolved_inf}, {"c_0", r.unresolved_0}, {"c_G", r.unresolved_G}};
    json res = json::object();
    for (const auto& [k, v] : r.residuals) res[k] = v;
    j["residuals"] = res;
    (void)nmax;
    return j;
}

json modulus_to_json(const ModulusData& m) {
    json j;
    j["family"] = m.family;
    j["normalization"] = m.mode == Mode::Weak ? "weak" : "strong";
    j["nmax"] = m.nmax;
    j["h"] = m.h;
    j["delta"] = m.delta;
    j["radius"] = m.radius;
    j["reference_level"] = 1.0 / m.radius;
    j["c_0_indexing"] = "c_0[k] = coefficient of mode -k";
    j["c_G_indexing"] = "c_G[k] = coefficient of mode k - nmax";
    if (m.mode == Mode::Weak) j["grid"] = m.grid;
    else {
        j["rays"] = m.rays;
        j["radii"] = m.radii;
    }
    json recs = json::array();
    for (const auto& r : m.records) recs.push_back(record_to_json(r, m.nmax));
    j["records"] = recs;
    return j;
}

ModulusData modulus_from_json(const json& j) {
    try {
        ModulusData m;
        m.family = j.value("family", std::string("unnamed"));
        const std::string norm = j.at("normalization").get<std::string>();
        if (norm != "weak" && norm != "strong") throw FormatError("normalization must be weak or strong");
        m.mode = norm == "weak" ? Mode::Weak : Mode::Strong;
        m.nmax = j.value("nmax", 16);
        m.h = j.value("h", 1.5);
        m.delta = j.value("delta", 0.2);
        m.radius = j.value("radius", 0.5);
        if (j.contains("grid")) m.grid = j["grid"].get<std::vector<double>>();
        if (j.contains("rays")) m.rays = j["rays"].get<std::vector<double>>();
        if (j.contains("radii")) m.radii = j["radii"].get<std::vector<double>>();
        for (const auto& r : j.at("records")) {
            ModulusRecord rec;
            rec.eps = cplx(r.at("eps_re").get<double>(), r.at("eps_im").get<double>());
            rec.param.modulus = r.value("eps_modulus", std::abs(rec.eps));
            rec.param.arg = r.value("arg_lift", std::arg(rec.eps));
            rec.b = cplx(r.at("b").get<double>(), r.value("b_im", 0.0));
            rec.kind = r.value("kind", std::string());
            rec.valid = r.value("valid", true);
            rec.error = r.value("error", std::string());
            rec.normalization = r.value("normalization", std::string());
            rec.c_inf = cvec_from(r.value("c_inf", json::array()));
            rec.c_0 = cvec_from(r.value("c_0", json::array()));
            rec.c_G = cvec_from(r.value("c_G", json::array()));
            if (r.contains("unresolved")) {
                const json& u = r["unresolved"];
                rec.unresolved_inf = u.value("c_inf", std::vector<int>{});
                rec.unresolved_0 = u.value("c_0", std::vector<int>{});
                rec.unresolved_G = u.value("c_G", std::vector<int>{});
            }
            if (r.contains("residuals"))
                for (auto it = r["residuals"].begin(); it != r["residuals"].end(); ++it)
                    rec.residuals[it.key()] = it.value().get<double>();
            m.records.push_back(std::move(rec));
        }
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("modulus file: ") + e.what());
    }
}

}  // namespace pmod
