#include "pmod/classify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace pmod {

namespace {

constexpr cplx I(0.0, 1.0);

bool has(const std::vector<int>& v, int n) { return std::find(v.begin(), v.end(), n) != v.end(); }

bool glutsyuk(const ModulusRecord& r) { return !r.c_G.empty(); }

cplx phase(int n, cplx C) { return std::exp(-2.0 * M_PI * I * double(n) * C); }

double re_alpha_plus(const ModulusRecord& r) {
    const cplx s = r.param.sqrt_eps();
    return (I * M_PI / s + I * M_PI * r.b).real();
}

// Signed modes of one record with their shift exponents: c_n -> c_n e^{-2 pi i n C}.
struct Mode1 {
    int n;
    cplx c;
    bool resolved;
};
std::vector<Mode1> signed_modes(const ModulusRecord& r, int nmax) {
    std::vector<Mode1> out;
    if (glutsyuk(r)) {
        for (int n = -nmax; n <= nmax; ++n)
            if (n != 0) out.push_back({n, r.c_G[n + nmax], !has(r.unresolved_G, n)});
        return out;
    }
    for (size_t k = 1; k < r.c_inf.size(); ++k) out.push_back({int(k), r.c_inf[k], !has(r.unresolved_inf, int(k))});
    for (size_t k = 1; k < r.c_0.size(); ++k) out.push_back({-int(k), r.c_0[k], !has(r.unresolved_0, int(k))});
    return out;
}
std::vector<cplx> constants(const ModulusRecord& r, int nmax) {
    if (glutsyuk(r)) return {r.c_G[nmax]};
    std::vector<cplx> c;
    if (!r.c_inf.empty()) c.push_back(r.c_inf[0]);
    if (!r.c_0.empty()) c.push_back(r.c_0[0]);
    return c;
}

double golden_min(const std::function<double(double)>& f, double lo, double hi, int iters = 80) {
    for (int it = 0; it < iters; ++it) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (f(m1) < f(m2)) hi = m2;
        else lo = m1;
    }
    return 0.5 * (lo + hi);
}

double wrap_half(double x) {
    x -= std::floor(x);
    return x > 0.5 ? x - 1.0 : x;
}

// Point on the plus / minus side for z with the Fatou value known.
cplx apply_inverse(const FatouCoordinate& phi, cplx W, const OrbitPoint& seed) {
    const FatouCoordinate::Preimage pre = phi.inverse(W, seed);
    OrbitPoint q = pre.p;
    const Dynamics& dy = *phi.dyn;
    for (int k = 0; k < pre.shift; ++k) q = dy.forward(q);
    for (int k = 0; k > pre.shift; --k) q = dy.backward(q);
    return q.z;
}

std::optional<cplx> fatou_transport(const FatouCoordinate& from, const FatouCoordinate& to, cplx z,
                                    const std::function<cplx(cplx)>& move, cplx seed_z) {
    try {
        const int s = from.side;
        const OrbitPoint p = from.dyn->at(z, s);
        const cplx W = move(from.value(p));
        const cplx out = apply_inverse(to, W, to.dyn->at(seed_z, s));
        if (!std::isfinite(out.real()) || !std::isfinite(out.imag())) return std::nullopt;
        if (std::abs(out) >= to.dyn->radius()) return std::nullopt;
        return out;
    } catch (const Error&) {
        return std::nullopt;
    }
}

}  // namespace

// ---------------------------------------------------------------- record helpers

SideModes side_modes(const ModulusRecord& rec, int nmax) {
    SideModes s;
    if (!glutsyuk(rec)) {
        s.up = rec.c_inf;
        s.down = rec.c_0;
        s.unres_up = rec.unresolved_inf;
        s.unres_down = rec.unresolved_0;
        return s;
    }
    s.up.assign(nmax + 1, 0.0);
    s.down.assign(nmax + 1, 0.0);
    const double ra = re_alpha_plus(rec);
    for (int n = 0; n <= nmax; ++n) {
        s.up[n] = rec.c_G[nmax + n];
        s.down[n] = rec.c_G[nmax - n] * std::exp(-2.0 * M_PI * I * double(n) * ra);
        if (has(rec.unresolved_G, n)) s.unres_up.push_back(n);
        if (has(rec.unresolved_G, -n)) s.unres_down.push_back(n);
    }
    // Psi^L constant: c0^G + alpha+ + alpha- = c0^G + 2 pi i b
    s.down[0] = rec.c_G[nmax] + 2.0 * M_PI * I * rec.b;
    return s;
}

ModulusRecord shifted_record(const ModulusRecord& rec, cplx C, int nmax) {
    ModulusRecord r = rec;
    for (size_t k = 1; k < r.c_inf.size(); ++k) r.c_inf[k] *= phase(int(k), C);
    for (size_t k = 1; k < r.c_0.size(); ++k) r.c_0[k] *= phase(-int(k), C);
    if (glutsyuk(r))
        for (int n = -nmax; n <= nmax; ++n) r.c_G[n + nmax] *= phase(n, C);
    r.pair.reset();
    return r;
}

ModulusData shifted_modulus(const ModulusData& m, cplx C) {
    ModulusData out = m;
    for (auto& r : out.records) r = shifted_record(r, C, m.nmax);
    return out;
}

// ---------------------------------------------------------------- comparison

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Equivalent: return "equivalent";
        case Verdict::Inequivalent: return "inequivalent";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

RecordMatch match_records(const ModulusRecord& a, const ModulusRecord& b, int nmax, bool complex_shift, double tol) {
    RecordMatch m;
    if (!a.valid || !b.valid) {
        m.reason = "invalid record";
        return m;
    }
    if (glutsyuk(a) != glutsyuk(b)) throw ComparisonError("records of different kinds");
    const std::vector<cplx> ca = constants(a, nmax), cb = constants(b, nmax);
    for (size_t k = 0; k < ca.size(); ++k) {
        const double d = std::abs(ca[k] - cb[k]);
        m.residual = std::max(m.residual, d);
        if (d > tol) {
            m.reason = "constant term mismatch";
            return m;
        }
    }
    const std::vector<Mode1> ma = signed_modes(a, nmax), mb = signed_modes(b, nmax);
    if (ma.size() != mb.size()) throw ComparisonError("mode count mismatch");
    // |c_n| is invariant under real shifts
    double ysum = 0.0, wsum = 0.0;
    for (size_t k = 0; k < ma.size(); ++k) {
        const double x = std::abs(ma[k].c), y = std::abs(mb[k].c);
        if (!complex_shift && std::abs(x - y) > tol) {
            m.residual = std::max(m.residual, std::abs(x - y));
            m.reason = "|c_" + std::to_string(ma[k].n) + "| mismatch";
            return m;
        }
        if (x > 0.0 && y > 0.0 && ma[k].resolved && mb[k].resolved) {
            const double w = std::min(x, y);
            ysum += w * ma[k].n * std::log(y / x);
            wsum += w * 2.0 * M_PI * ma[k].n * ma[k].n;
        }
    }
    const double yC = (complex_shift && wsum > 0.0) ? ysum / wsum : 0.0;
    auto resid = [&](double x) {
        double worst = 0.0;
        for (size_t k = 0; k < ma.size(); ++k)
            worst = std::max(worst, std::abs(mb[k].c - ma[k].c * phase(ma[k].n, cplx(x, yC))));
        return worst;
    };
    const int S = 2000;
    double best = std::numeric_limits<double>::infinity(), x = 0.0;
    for (int k = 0; k < S; ++k) {
        const double r = resid(double(k) / S);
        if (r < best) {
            best = r;
            x = double(k) / S;
        }
    }
    if (best > 0.0) x = golden_min(resid, x - 1.0 / S, x + 1.0 / S);
    if (resid(x) > best) x = std::round(x * S) / S;
    x = wrap_half(x);
    m.shift = cplx(x, yC);
    m.residual = std::max(m.residual, resid(x));
    m.equivalent = m.residual <= tol;
    if (!m.equivalent) m.reason = "no shift realizes the phase law";
    return m;
}

EquivalenceReport compare_moduli(const ModulusData& m1, const ModulusData& m2, double tol) {
    EquivalenceReport rep;
    rep.tol = tol;
    rep.mode = m1.mode;
    if (m1.mode != m2.mode) throw ComparisonError("normalization modes differ");
    if (m1.nmax != m2.nmax) throw ComparisonError("nmax differs");
    if (m1.records.size() != m2.records.size()) throw ComparisonError("record counts differ");
    for (size_t i = 0; i < m1.records.size(); ++i) {
        const auto& a = m1.records[i].param;
        const auto& b = m2.records[i].param;
        if (std::abs(a.modulus - b.modulus) > 1e-12 || std::abs(a.arg - b.arg) > 1e-12)
            throw ComparisonError("parameter grids differ at record " + std::to_string(i));
    }
    const bool strong = m1.mode == Mode::Strong;
    rep.verdict = Verdict::Equivalent;
    for (size_t i = 0; i < m1.records.size(); ++i) {
        const ModulusRecord& a = m1.records[i];
        const bool cx = strong && !a.param.is_real();
        const RecordMatch mt = match_records(a, m2.records[i], m1.nmax, cx, tol);
        rep.shift.push_back(mt.shift);
        rep.worst_residual = std::max(rep.worst_residual, mt.residual);
        if (!a.valid || !m2.records[i].valid) {
            if (rep.verdict == Verdict::Equivalent) {
                rep.verdict = Verdict::Inconclusive;
                rep.failing_record = int(i);
                rep.reason = "invalid record";
            }
            continue;
        }
        if (!mt.equivalent && rep.verdict != Verdict::Inequivalent) {
            rep.verdict = Verdict::Inequivalent;
            rep.failing_record = int(i);
            rep.reason = mt.reason;
        }
    }
    if (strong && rep.verdict == Verdict::Equivalent) {
        // conj C(eps) = C(conj eps): Re C modulo 1, Im C exactly
        for (size_t i = 0; i < m1.records.size(); ++i)
            for (size_t j = 0; j < m1.records.size(); ++j) {
                const auto& p = m1.records[i].param;
                const auto& q = m1.records[j].param;
                if (p.modulus != q.modulus || std::abs(p.arg + q.arg - 2.0 * M_PI) > 1e-12) continue;
                const cplx d = rep.shift[j] - std::conj(rep.shift[i]);
                const double gap = std::hypot(wrap_half(d.real()), d.imag());
                rep.symmetry_residual = std::max(rep.symmetry_residual, gap);
                if (gap > tol && rep.verdict == Verdict::Equivalent) {
                    rep.verdict = Verdict::Inequivalent;
                    rep.failing_record = int(j);
                    rep.reason = "shift violates the conjugate symmetry on paired rays";
                }
            }
    }
    return rep;
}

json equivalence_to_json(const EquivalenceReport& r) {
    json j;
    j["verdict"] = verdict_name(r.verdict);
    j["normalization"] = r.mode == Mode::Weak ? "weak" : "strong";
    j["tol"] = r.tol;
    j["worst_residual"] = r.worst_residual;
    if (r.mode == Mode::Strong) j["symmetry_residual"] = r.symmetry_residual;
    json s = json::array();
    for (cplx c : r.shift) s.push_back(r.mode == Mode::Weak ? json(c.real()) : cplx_to_json(c));
    j["shift"] = s;
    j["failing_record"] = r.failing_record ? json(*r.failing_record) : json(nullptr);
    j["reason"] = r.reason;
    return j;
}

// ---------------------------------------------------------------- sampled maps

std::vector<cplx> square_grid(double half_width, int n, cplx center) {
    std::vector<cplx> g;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const double x = n == 1 ? 0.0 : -half_width + 2.0 * half_width * i / (n - 1);
            const double y = n == 1 ? 0.0 : -half_width + 2.0 * half_width * k / (n - 1);
            g.push_back(center + cplx(x, y));
        }
    return g;
}

int SampledMap::count() const { return static_cast<int>(std::count(ok.begin(), ok.end(), 1)); }

double SampledMap::distance(const std::function<cplx(cplx)>& F) const {
    double d = 0.0;
    for (size_t k = 0; k < points.size(); ++k)
        if (ok[k]) d = std::max(d, std::abs(values[k] - F(points[k])));
    return d;
}

json SampledMap::to_json() const {
    json a = json::array();
    for (size_t k = 0; k < points.size(); ++k) {
        json e;
        e["z"] = cplx_to_json(points[k]);
        e["value"] = ok[k] ? cplx_to_json(values[k]) : json(nullptr);
        a.push_back(e);
    }
    return a;
}

// ---------------------------------------------------------------- conjugacy

ConjugacyResult build_conjugacy(const GermFamily& f1, const GermFamily& f2, double eps, const std::vector<cplx>& grid,
                                const ConjugacyOptions& opt) {
    ConjugacyResult out;
    out.eps = eps;
    const SectorParam param = SectorParam::real(eps);
    ModulusOptions mo = opt.modulus;
    mo.fatou.mode = Mode::Weak;
    const ModulusRecord r1 = modulus_record(f1, param, mo);
    const ModulusRecord r2 = modulus_record(f2, param, mo);
    if (!r1.valid || !r2.valid) throw ClassificationError("modulus record invalid: " + (r1.valid ? r2.error : r1.error));
    if (std::abs(r1.b - r2.b) > 1e-8) throw ClassificationError("formal invariants differ");
    const RecordMatch mt = match_records(r1, r2, mo.nmax, false, opt.compare_tol);
    out.report.mode = Mode::Weak;
    out.report.tol = opt.compare_tol;
    out.report.shift = {mt.shift};
    out.report.worst_residual = mt.residual;
    out.report.verdict = mt.equivalent ? Verdict::Equivalent : Verdict::Inequivalent;
    out.report.reason = mt.reason;
    if (!mt.equivalent) throw ClassificationError("moduli are not equivalent: " + mt.reason);
    const double C = mt.shift.real();
    out.shift = C;
    const FatouPair& p1 = *r1.pair;
    const FatouPair& p2 = *r2.pair;
    const auto move = [C](cplx W) { return W - C; };

    auto h_side = [&](cplx z, int side) {
        return side > 0 ? fatou_transport(p2.plus, p1.plus, z, move, z) : fatou_transport(p2.minus, p1.minus, z, move, z);
    };
    auto h_any = [&](cplx z) -> std::optional<cplx> {
        if (auto v = h_side(z, +1)) return v;
        return h_side(z, -1);
    };
    const Dynamics& d1 = *p1.dyn;
    const Dynamics& d2 = *p2.dyn;
    out.h.points = grid;
    out.h.values.assign(grid.size(), 0.0);
    out.h.ok.assign(grid.size(), 0);
    for (size_t k = 0; k < grid.size(); ++k) {
        const cplx z = grid[k];
        const auto hp = h_side(z, +1);
        const auto hm = h_side(z, -1);
        if (hp && hm) {
            out.seam_residual = std::max(out.seam_residual, std::abs(*hp - *hm));
            ++out.seam_samples;
        }
        if (hp || hm) {
            out.h.values[k] = hp ? *hp : *hm;
            out.h.ok[k] = 1;
            // conjugation h o f2 = f1 o h
            const cplx fz = d2.f(z);
            if (const auto hf = h_any(fz))
                out.conjugation_residual = std::max(out.conjugation_residual, std::abs(*hf - d1.f(out.h.values[k])));
        }
    }
    if (opt.throw_on_seam && out.seam_residual > opt.seam_tol)
        throw NormalizationError("conjugacy seam residual " + std::to_string(out.seam_residual));
    return out;
}

// ---------------------------------------------------------------- square root

SqrtTestResult square_root_test(const ModulusData& mg, double tol) {
    SqrtTestResult res;
    res.tol = tol;
    const int nmax = mg.nmax;
    bool any = false;
    for (size_t i = 0; i < mg.records.size(); ++i) {
        const ModulusRecord& a = mg.records[i];
        // partner: the same record for weak data, the reflected ray for strong data
        const ModulusRecord* partner = nullptr;
        if (mg.mode == Mode::Weak) {
            partner = &a;
        } else {
            for (const auto& c : mg.records)
                if (c.param.modulus == a.param.modulus && std::abs(c.param.arg + a.param.arg - 2.0 * M_PI) < 1e-12)
                    partner = &c;
        }
        if (!partner) {
            res.per_record.push_back(std::numeric_limits<double>::quiet_NaN());
            res.shift.push_back(0.0);
            continue;
        }
        if (!a.valid || !partner->valid) {
            res.per_record.push_back(std::numeric_limits<double>::infinity());
            res.shift.push_back(0.0);
            if (!res.failing_record) res.failing_record = int(i);
            res.residual = std::numeric_limits<double>::infinity();
            any = true;
            continue;
        }
        any = true;
        const SideModes up = side_modes(a, nmax), dn = side_modes(*partner, nmax);
        const bool self = partner == &a || a.param.is_real();
        const RelationFit f = sigma_relation(up.up, dn.down, up.unres_up, dn.unres_down, !self);
        res.per_record.push_back(f.residual);
        res.shift.push_back(f.shift);
        if (f.residual > res.residual) {
            res.residual = f.residual;
            if (f.residual > tol) res.failing_record = int(i);
        }
        if (a.param.modulus == 0.0) res.parabolic_residual = f.residual;
    }
    if (!any) throw DataError("square-root test: no record with a paired ray");
    res.passes = res.residual <= tol;
    return res;
}

SqrtExtraction extract_square_root(const GermFamily& g, double eps, const std::vector<cplx>& grid,
                                   const SqrtOptions& opt) {
    if (g.kind != FamilyKind::Holomorphic) throw MisuseError("square root: input family must be holomorphic");
    SqrtExtraction out;
    out.eps = eps;
    ModulusOptions mo = opt.modulus;
    mo.fatou.mode = Mode::Weak;
    const ModulusRecord rec = modulus_record(g, SectorParam::real(eps), mo);
    if (!rec.valid) throw CriterionError("modulus record invalid: " + rec.error);
    const SideModes sm = side_modes(rec, mo.nmax);
    const RelationFit fit = sigma_relation(sm.up, sm.down, sm.unres_up, sm.unres_down, false);
    out.criterion_residual = fit.residual;
    if (fit.residual > opt.tol) throw CriterionError("square-root criterion fails: residual " + std::to_string(fit.residual));
    const cplx C = fit.shift;
    out.shift = C;
    const FatouPair& fp = *rec.pair;
    const Dynamics& dy = *fp.dyn;
    // Phi' = Phi + C/2: conj(Phi' ) + 1/2 - C/2 = conj(Phi) + 1/2 - C  (C imaginary)
    const auto move = [C](cplx W) { return std::conj(W) + 0.5 - C; };
    auto f_side = [&](cplx z, int side) {
        const FatouCoordinate& phi = side > 0 ? fp.plus : fp.minus;
        return fatou_transport(phi, phi, z, move, std::conj(z));
    };
    auto f_any = [&](cplx z) -> std::optional<cplx> {
        if (auto v = f_side(z, +1)) return v;
        return f_side(z, -1);
    };
    out.f.points = grid;
    out.f.values.assign(grid.size(), 0.0);
    out.f.ok.assign(grid.size(), 0);
    for (size_t k = 0; k < grid.size(); ++k) {
        const cplx z = grid[k];
        const auto fpz = f_side(z, +1);
        const auto fmz = f_side(z, -1);
        if (fpz && fmz) {
            out.seam_residual = std::max(out.seam_residual, std::abs(*fpz - *fmz));
            ++out.seam_samples;
        }
        if (!fpz && !fmz) continue;
        out.f.values[k] = fpz ? *fpz : *fmz;
        out.f.ok[k] = 1;
        if (const auto ff = f_any(out.f.values[k]))
            out.roundtrip_residual = std::max(out.roundtrip_residual, std::abs(*ff - dy.g(z)));
    }
    if (opt.fit_degree > 0 && out.f.count() > opt.fit_degree + 1) {
        const int n = out.f.count(), m = opt.fit_degree + 1;
        Eigen::MatrixXcd A(n, m);
        Eigen::VectorXcd y(n);
        int row = 0;
        for (size_t k = 0; k < grid.size(); ++k) {
            if (!out.f.ok[k]) continue;
            const cplx w = std::conj(grid[k]);
            cplx p = 1.0;
            for (int j = 0; j < m; ++j, p *= w) A(row, j) = p;
            y(row++) = out.f.values[k];
        }
        const Eigen::VectorXcd c = A.colPivHouseholderQr().solve(y);
        out.fit.assign(c.data(), c.data() + m);
        out.fit_residual = (A * c - y).cwiseAbs().maxCoeff();
    }
    return out;
}

json sqrt_test_to_json(const SqrtTestResult& r) {
    json j;
    j["passes"] = r.passes;
    j["verdict"] = r.passes ? "root" : "no-root";
    j["residual"] = r.residual;
    j["tol"] = r.tol;
    json a = json::array(), s = json::array();
    for (double v : r.per_record) a.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    for (cplx c : r.shift) s.push_back(cplx_to_json(c));
    j["per_record"] = a;
    j["shift"] = s;
    j["failing_record"] = r.failing_record ? json(*r.failing_record) : json(nullptr);
    j["parabolic_residual"] = r.parabolic_residual ? json(*r.parabolic_residual) : json(nullptr);
    return j;
}

json sqrt_extraction_to_json(const SqrtExtraction& r) {
    json j;
    j["eps"] = r.eps;
    j["shift"] = cplx_to_json(r.shift);
    j["criterion_residual"] = r.criterion_residual;
    j["roundtrip_residual"] = r.roundtrip_residual;
    j["seam_residual"] = r.seam_residual;
    j["seam_samples"] = r.seam_samples;
    j["defined_samples"] = r.f.count();
    j["samples"] = r.f.to_json();
    json fit = json::array();
    for (cplx c : r.fit) fit.push_back(cplx_to_json(c));
    j["fit_conj_z"] = fit;
    j["fit_residual"] = r.fit_residual;
    return j;
}

// ---------------------------------------------------------------- invariant curve

CurveTestResult invariant_curve_test(const ModulusRecord& rec, int nmax, double tol) {
    CurveTestResult r;
    r.tol = tol;
    for (const Mode1& m : signed_modes(rec, nmax))
        if (m.n % 2 != 0) r.residual = std::max(r.residual, std::abs(m.c));
    r.invariant = rec.valid && r.residual <= tol;
    return r;
}

double real_axis_defect(const GermFamily& fam, double eps, int samples) {
    double d = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double x = 0.9 * fam.r * (-1.0 + 2.0 * k / (samples - 1));
        d = std::max(d, std::abs(evaluate(fam, eps, x).imag()));
    }
    return d;
}

// ---------------------------------------------------------------- return maps

cplx invert_map(const std::function<cplx(cplx)>& F, cplx W, double tol, int max_iter) {
    cplx V = W - (F(W) - W);
    const double scale = std::max(1.0, std::abs(W));
    double prev = std::numeric_limits<double>::infinity();
    int stalled = 0;
    for (int it = 0; it < max_iter; ++it) {
        const cplx r = F(V) - W;
        const double ar = std::abs(r);
        if (ar < tol * scale) return V;
        // F itself may be a composite with rounding above tol: accept a stalled residual once it is tiny
        stalled = ar > 0.5 * prev ? stalled + 1 : 0;
        if (stalled >= 3 && ar < 1e-11 * scale) return V;
        prev = std::min(prev, ar);
        const double h = 1e-6;
        const cplx d = (F(V + h) - F(V - h)) / (2.0 * h);
        V -= r / d;
    }
    throw InverseError("map inversion did not converge");
}

cplx ReturnLinearizer::R(cplx W) const { return psi_first ? psi(W + lav) : psi(W) + lav; }

cplx ReturnLinearizer::R_inverse(cplx W) const {
    return psi_first ? invert_map(psi, W) - lav : invert_map(psi, W - lav);
}

cplx ReturnLinearizer::operator()(cplx W) const {
    // psi_first: H = lim R^{-n} - n alpha (R^{-1} moves up); otherwise H = lim R^n + n alpha
    cplx V = W;
    cplx acc = 0.0;
    for (int n = 0; n < opt.max_iter; ++n) {
        const cplx next = psi_first ? R_inverse(V) : R(V);
        const cplx step = psi_first ? next - V - alpha : next - V + alpha;
        V = next;
        acc += step;
        if (std::abs(step) < opt.tol) return W + acc;
    }
    throw ConvergenceError("return linearizer: iteration did not converge");
}

int ReturnLinearizer::iterations(cplx W) const {
    cplx V = W;
    for (int n = 0; n < opt.max_iter; ++n) {
        const cplx next = psi_first ? R_inverse(V) : R(V);
        const cplx step = psi_first ? next - V - alpha : next - V + alpha;
        V = next;
        if (std::abs(step) < opt.tol) return n + 1;
    }
    return opt.max_iter;
}

cplx ReturnLinearizer::inverse(cplx V) const {
    return invert_map([this](cplx W) { return (*this)(W); }, V, 1e-14);
}

double ReturnLinearizer::conjugation_residual(double y, int samples) const {
    double worst = 0.0;
    for (int j = 0; j < samples; ++j) {
        const cplx W(double(j) / samples, y);
        // R moves down in the psi_first order; compare on the higher of W and its image
        const cplx V = psi_first ? R_inverse(W) : W;
        worst = std::max(worst, std::abs((*this)(R(V)) - (*this)(V) + alpha));
    }
    return worst;
}

double ReturnLinearizer::distance_to_identity(double y, int samples) const {
    double worst = 0.0;
    for (int j = 0; j < samples; ++j) {
        const cplx W(double(j) / samples, y);
        worst = std::max(worst, std::abs((*this)(W) - W));
    }
    return worst;
}

ReturnLinearizer return_linearizer(std::function<cplx(cplx)> psi, const SectorParam& param, cplx b,
                                   const LinearizerOptions& opt) {
    ReturnLinearizer H;
    const double a = param.arg, d = opt.delta;
    if (a > -M_PI + d && a < M_PI - d) H.psi_first = true;
    else if (a > M_PI + d && a < 3.0 * M_PI - d) H.psi_first = false;
    else throw DomainError("return linearizer: argument outside both sectors");
    H.psi = std::move(psi);
    H.param = param;
    H.b = b;
    H.opt = opt;
    const cplx s = param.sqrt_eps();
    H.lav = -I * M_PI / s;
    H.alpha = I * M_PI / s + I * M_PI * b;
    return H;
}

ReturnLinearizer return_linearizer(const TransitionMap& psi, const SectorParam& param, cplx b,
                                   const LinearizerOptions& opt) {
    return return_linearizer([psi](cplx W) { return psi(W); }, param, b, opt);
}

TransitionMap record_transition(const ModulusRecord& rec, int nmax, double radius, double h) {
    if (!rec.valid) throw DataError("record not valid: " + rec.error);
    const SideModes sm = side_modes(rec, nmax);
    std::map<int, cplx> coeffs;
    for (size_t n = 0; n < sm.up.size(); ++n) coeffs[int(n)] = sm.up[n];
    const double ref = 1.0 / radius;
    return fourier_transition(coeffs, ref + h, ref, -ref, TransitionKind::Inf);
}

// ---------------------------------------------------------------- compatibility

CompatibilityResult compatibility_residual(const std::function<cplx(cplx)>& H_hat,
                                           const std::function<cplx(cplx)>& H_tilde, double eps,
                                           const CompatibilityOptions& opt) {
    if (!(eps > 0.0)) throw DomainError("compatibility residual needs eps > 0");
    CompatibilityResult out;
    out.eps = eps;
    out.h0 = opt.h0;
    const cplx shift = I * M_PI / std::sqrt(eps);
    const auto N = [&](cplx W) { return std::conj(W) + 0.5 + shift; };
    const auto N_inv = [&](cplx V) { return std::conj(V - 0.5 - shift); };
    const auto H_hat_inv = [&](cplx V) { return invert_map(H_hat, V, 1e-14); };
    const auto lhs = [&](cplx W) { return H_tilde(N(H_hat_inv(N_inv(W)))); };
    const auto inner = [&](cplx W) { return N(H_tilde(N_inv(H_hat_inv(W)))); };

    std::vector<cplx> pts;
    for (int k = 0; k < opt.ny; ++k)
        for (int j = 0; j < opt.nx; ++j)
            pts.emplace_back(double(j) / opt.nx, opt.h0 + (opt.ny == 1 ? 0.0 : double(k) / (opt.ny - 1)));
    out.samples = static_cast<int>(pts.size());
    const int n = out.samples;
    std::vector<cplx> L(n);
    for (int k = 0; k < n; ++k) L[k] = lhs(pts[k]);

    cplx D = 0.0, Dp = 0.0;
    auto residuals = [&](cplx D_, cplx Dp_, std::vector<cplx>& r) {
        double worst = 0.0;
        for (int k = 0; k < n; ++k) {
            r[k] = L[k] - (D_ + inner(pts[k] + Dp_));
            worst = std::max(worst, std::abs(r[k]));
        }
        return worst;
    };
    std::vector<cplx> r(n);
    double worst = residuals(D, Dp, r);
    out.initial_residual = worst;
    double scale = 1.0;
    for (int k = 0; k < n; ++k) scale = std::max(scale, std::abs(L[k]));
    const double floor = 256.0 * std::numeric_limits<double>::epsilon() * scale;
    // Gauss-Newton in (D, D'); the map is holomorphic in D', so complex least squares suffices
    for (int it = 0; it < opt.max_iter && worst > floor; ++it) {
        Eigen::MatrixXcd A(n, 2);
        Eigen::VectorXcd rhs(n);
        for (int k = 0; k < n; ++k) {
            const double h = 1e-6;
            const cplx W = pts[k] + Dp;
            A(k, 0) = 1.0;
            A(k, 1) = (inner(W + h) - inner(W - h)) / (2.0 * h);
            rhs(k) = r[k];
        }
        const Eigen::VectorXcd step = A.completeOrthogonalDecomposition().solve(rhs);
        const cplx nD = D + step(0), nDp = Dp + step(1);
        std::vector<cplx> nr(n);
        double nw;
        try {
            nw = residuals(nD, nDp, nr);
        } catch (const Error&) {
            break;  // trial shift left the region where the linearizers can be inverted
        }
        out.iterations = it + 1;
        if (!(nw < worst)) break;
        const bool small = std::abs(step(0)) + std::abs(step(1)) < 1e-14;
        D = nD;
        Dp = nDp;
        r = nr;
        worst = nw;
        if (small) break;
    }
    out.D = D;
    out.Dp = Dp;
    out.residual = worst;
    return out;
}

CompatibilityResult compatibility_residual(const GermFamily& fam, double eps, const CompatibilityOptions& opt) {
    if (!(eps > 0.0)) throw DomainError("compatibility residual needs eps > 0");
    ModulusOptions mo = opt.modulus;
    mo.fatou.mode = Mode::Strong;
    const ModulusRecord r_hat = modulus_record(fam, SectorParam{eps, 0.0}, mo);
    const ModulusRecord r_tilde = modulus_record(fam, SectorParam{eps, 2.0 * M_PI}, mo);
    if (!r_hat.valid || !r_tilde.valid)
        throw DataError("missing overlap record: " + (r_hat.valid ? r_tilde.error : r_hat.error));
    const TransitionMap psi_hat = record_transition(r_hat, mo.nmax, fam.r, mo.h);
    const TransitionMap psi_tilde = record_transition(r_tilde, mo.nmax, fam.r, mo.h);
    LinearizerOptions lo = opt.linearizer;
    lo.delta = mo.fatou.delta;
    const ReturnLinearizer H_hat = return_linearizer(psi_hat, r_hat.param, r_hat.b, lo);
    const ReturnLinearizer H_tilde = return_linearizer(psi_tilde, r_tilde.param, r_tilde.b, lo);
    CompatibilityOptions o = opt;
    if (o.h0 == 0.0) o.h0 = 1.0 / fam.r + mo.h;
    CompatibilityResult out = compatibility_residual([&](cplx W) { return H_hat(W); },
                                                     [&](cplx W) { return H_tilde(W); }, eps, o);
    out.diagnostics["H_hat_conjugation"] = H_hat.conjugation_residual(o.h0);
    out.diagnostics["H_tilde_conjugation"] = H_tilde.conjugation_residual(o.h0);
    out.diagnostics["H_hat_minus_id"] = H_hat.distance_to_identity(o.h0);
    out.diagnostics["H_hat_minus_id_up"] = H_hat.distance_to_identity(o.h0 + 2.0);
    out.diagnostics["H_tilde_minus_id"] = H_tilde.distance_to_identity(o.h0);
    out.diagnostics["H_tilde_minus_id_up"] = H_tilde.distance_to_identity(o.h0 + 2.0);
    return out;
}

json compatibility_to_json(const CompatibilityResult& r) {
    json j;
    j["eps"] = r.eps;
    j["residual"] = r.residual;
    j["initial_residual"] = r.initial_residual;
    j["D"] = cplx_to_json(r.D);
    j["D_prime"] = cplx_to_json(r.Dp);
    j["band"] = {r.h0, r.h0 + 1.0};
    j["samples"] = r.samples;
    j["iterations"] = r.iterations;
    json d = json::object();
    for (const auto& [k, v] : r.diagnostics) d[k] = v;
    j["diagnostics"] = d;
    return j;
}

}  // namespace pmod
