// Acceptance runner: one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "pmod/fatou.hpp"
#include "pmod/time_chart.hpp"
#include "support.hpp"

using namespace pmod;
using namespace pmod::testing;
using C = std::complex<double>;

namespace {

const C I(0, 1);
const double kEps[] = {-0.04, -0.01, 0.01, 0.04};

// a criterion collects named checks; it passes when every check holds
struct Checks {
    std::vector<std::string> failed;
    std::ostringstream detail;
    void value(const std::string& name, double v, double tol) {
        detail << " " << name << "=" << v;
        if (!(v < tol)) failed.push_back(name + " " + std::to_string(v) + " >= " + std::to_string(tol));
    }
    void at_least(const std::string& name, double v, double lo) {
        detail << " " << name << "=" << v;
        if (!(v >= lo)) failed.push_back(name + " " + std::to_string(v) + " < " + std::to_string(lo));
    }
    void truth(const std::string& name, bool ok) {
        detail << " " << name << "=" << (ok ? "yes" : "no");
        if (!ok) failed.push_back(name);
    }
};

using Seconds = std::chrono::duration<double>;

bool run_criterion(int id, const std::string& title, double time_limit, const std::function<void(Checks&)>& body) {
    Checks c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.failed.push_back(std::string("exception: ") + e.what());
    }
    const double secs = Seconds(std::chrono::steady_clock::now() - t0).count();
    if (time_limit > 0.0) c.value("runtime_s", secs, time_limit);
    else c.detail << " runtime_s=" << secs;
    const bool ok = c.failed.empty();
    std::printf("%s criterion %d: %s |%s\n", ok ? "PASS" : "FAIL", id, title.c_str(), c.detail.str().c_str());
    for (const auto& f : c.failed) std::printf("    failed: %s\n", f.c_str());
    std::fflush(stdout);
    return ok;
}

// ------------------------------------------------------------ independent oracles

C model_integrand(C eps, double b, C z) { return (1.0 + b * z) / (z * z - eps); }

// RK4 for the model field, continuing the chart logarithms along the way
LiftedPoint rk4_flow(const Chart& ch, LiftedPoint p, C eps, double b, double T, int steps) {
    auto f = [&](C z) { return (z * z - eps) / (1.0 + b * z); };
    const double h = T / steps;
    for (int i = 0; i < steps; ++i) {
        const C z = p.z;
        const C k1 = f(z), k2 = f(z + 0.5 * h * k1), k3 = f(z + 0.5 * h * k2), k4 = f(z + h * k3);
        p = ch.advance(p, z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    return p;
}

// trapezoid rule on a circle around the singular point (spectrally accurate for this integrand)
C contour_period(C eps, double b, C center) {
    const double rad = 0.3 * std::abs(std::sqrt(eps));
    const int n = 256;
    C acc = 0;
    for (int k = 0; k < n; ++k) {
        const C u = std::polar(rad, 2 * M_PI * k / n);
        acc += model_integrand(eps, b, center + u) * (I * u) * (2 * M_PI / n);
    }
    return acc;
}

std::vector<OrbitPoint> points_near_line(const FatouCoordinate& phi, int n) {
    std::vector<OrbitPoint> pts;
    const Dynamics& dy = *phi.dyn;
    const OrbitPoint base = phi.line_point(0.0);
    for (int k = 0; k < n; ++k) pts.push_back(dy.seek(base, base.Z + C(0.3, -1.5 + 3.0 * k / (n - 1))));
    return pts;
}

double shift_spread(const FatouCoordinate& a, const FatouCoordinate& b, const std::vector<OrbitPoint>& pts) {
    std::vector<C> d;
    C mean = 0.0;
    for (const auto& p : pts) d.push_back(a.value(p) - b.value(p));
    for (C x : d) mean += x;
    mean /= double(d.size());
    double s = 0.0;
    for (C x : d) s = std::max(s, std::abs(x - mean));
    return s;
}

double max_nonconstant(const ModulusRecord& r, int nmax) {
    double m = 0.0;
    for (size_t k = 1; k < r.c_inf.size(); ++k) m = std::max(m, std::abs(r.c_inf[k]));
    for (size_t k = 1; k < r.c_0.size(); ++k) m = std::max(m, std::abs(r.c_0[k]));
    for (int n = -nmax; n <= nmax && !r.c_G.empty(); ++n)
        if (n != 0) m = std::max(m, std::abs(r.c_G[n + nmax]));
    return m;
}

double worst_prefixed(const ModulusRecord& r, const std::string& prefix) {
    double w = 0.0;
    for (const auto& [k, v] : r.residuals)
        if (k.rfind(prefix, 0) == 0) w = std::max(w, v);
    return w;
}

// ------------------------------------------------------------ criteria

// Z continued along the circle from the anchor to r e^{i th}, th in (-pi, pi), staying in the half plane of th
C arc_time(const TimeChart& tc, double th) {
    const double a0 = tc.sign > 0 ? 0.0 : (th > 0 ? M_PI : -M_PI);
    std::vector<C> way;
    for (int k = 0; k <= 64; ++k) way.push_back(std::polar(tc.r, a0 + (th - a0) * k / 64.0));
    return tc.chart.Z(tc.chart.along_path(way, std::polar(tc.r, th)));
}

void time_chart_identities(Checks& c) {
    const double b = 0.3, r = 0.5;
    double jump = 0.0, flow = 0.0;
    for (double eps : kEps) {
        const TimeChart zp = make_time_chart(eps, b, +1, r), zm = make_time_chart(eps, b, -1, r);
        for (int k = 0; k < 100; ++k) {
            double th = 2 * M_PI * (k + 0.5) / 100.0;
            if (th > M_PI) th -= 2 * M_PI;
            const C expected = (th > 0 ? 1.0 : -1.0) * I * M_PI * b;
            jump = std::max(jump, std::abs(arc_time(zp, th) - arc_time(zm, th) - expected));
        }
    }
    c.value("Zplus_minus_Zminus", jump, 1e-10);
    // Z o v^1 = T_1 o Z with v^1 from an independent integrator
    int n = 0;
    for (double eps : kEps) {
        const TimeChart tc = make_time_chart(eps, b, +1, r);
        for (int k = 0; k < 25; ++k, ++n) {
            const C z = std::polar(0.06 + 0.012 * k, 0.3 + 2.3 * k);
            const LiftedPoint p = tc.chart.principal(z);
            const LiftedPoint q = rk4_flow(tc.chart, p, eps, b, 1.0, 1000);
            flow = std::max(flow, std::abs(tc.chart.Z(q) - tc.chart.Z(p) - 1.0));
        }
    }
    c.truth("flow_samples_100", n == 100);
    c.value("Z_flow_minus_T1", flow, 1e-10);
}

void periods(Checks& c) {
    double contour = 0.0, sum = 0.0, swap = 0.0;
    for (double b : {0.0, 0.3}) {
        for (C eps : {C(0.04), C(0.01), C(-0.01), C(-0.04), C(0.01, 0.02)}) {
            contour = std::max(contour, std::abs(period(eps, b, +1) - contour_period(eps, b, std::sqrt(eps))));
            contour = std::max(contour, std::abs(period(eps, b, -1) - contour_period(eps, b, -std::sqrt(eps))));
            sum = std::max(sum, std::abs(period(eps, b, +1) + period(eps, b, -1) - I * (2.0 * M_PI * b)));
            const C s2 = lifted_sqrt(std::abs(eps), std::arg(eps) + 2 * M_PI);
            swap = std::max(swap, std::abs(period(eps, b, +1, s2) - period(eps, b, -1)));
            swap = std::max(swap, std::abs(period(eps, b, -1, s2) - period(eps, b, +1)));
        }
    }
    c.value("closed_form_vs_contour", contour, 1e-9);
    // exact up to rounding of the two periods (|alpha| <= 32)
    c.value("alpha_sum_minus_2ipib", sum, 64 * std::numeric_limits<double>::epsilon());
    c.value("swap_under_lift", swap, 1e-12);
}

bool fatou_solver() {
    // a pair solves both sides; half its wall time is charged to each (eps, side)
    const GermFamily& f = simple_prepared();
    Checks c;
    double worst_time = 0.0;
    double abel = 0.0, anti = 0.0, comm = 0.0, uniq = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    bool threw = false;
    try {
        FatouOptions alt;
        alt.x0 = 5.5;
        alt.dt = 0.15;
        for (double e : kEps) {
            const auto s0 = std::chrono::steady_clock::now();
            const FatouPair fp = fatou_pair(f, SectorParam::real(e));
            const double pair_time = Seconds(std::chrono::steady_clock::now() - s0).count();
            worst_time = std::max(worst_time, 0.5 * pair_time);
            for (const FatouCoordinate* phi : {&fp.plus, &fp.minus}) {
                abel = std::max(abel, abel_residual(*phi));
                anti = std::max(anti, antiholomorphic_residual(*phi).first);
                if (e > 0) comm = std::max(comm, period_commutation_residual(*phi));
            }
            const FatouPair pa = fatou_pair_raw(f, SectorParam::real(e));
            const FatouPair pb = fatou_pair_raw(f, SectorParam::real(e), alt);
            uniq = std::max(uniq, shift_spread(pa.plus, pb.plus, points_near_line(pa.plus, 12)));
            uniq = std::max(uniq, shift_spread(pa.minus, pb.minus, points_near_line(pa.minus, 12)));
        }
    } catch (const std::exception& e) {
        c.failed.push_back(std::string("exception: ") + e.what());
        threw = true;
    }
    if (!threw) {
        c.value("abel", abel, 1e-8);
        c.value("glutsyuk_commutation", comm, 1e-7);
        c.value("antiholomorphic", anti, 1e-7);
        c.value("unique_up_to_real_shift", uniq, 1e-8);
        c.value("runtime_per_eps_side_s", worst_time, 30.0);
    }
    const double secs = Seconds(std::chrono::steady_clock::now() - t0).count();
    c.detail << " runtime_s=" << secs;
    const bool ok = c.failed.empty();
    std::printf("%s criterion 3: Fatou solver |%s\n", ok ? "PASS" : "FAIL", c.detail.str().c_str());
    for (const auto& s : c.failed) std::printf("    failed: %s\n", s.c_str());
    std::fflush(stdout);
    return ok;
}

void modulus_identities(Checks& c) {
    const std::vector<double> grid(std::begin(kEps), std::end(kEps));
    const auto t0 = std::chrono::steady_clock::now();
    const ModulusData m = weak_modulus(simple_prepared(), grid);
    const double grid_time = Seconds(std::chrono::steady_clock::now() - t0).count();
    double bconst = 0.0, imag_c0 = 0.0, commute = 0.0, lav = 0.0;
    bool valid = true;
    for (const auto& r : m.records) {
        valid = valid && r.valid;
        if (!r.valid) continue;
        imag_c0 = std::max(imag_c0, r.residuals.at("a_imag_c0"));
        commute = std::max(commute, worst_prefixed(r, "commute_T1"));
        if (r.eps.real() < 0) {
            bconst = std::max(bconst, r.residuals.at("b_constant_terms"));
            lav = std::max(lav, r.residuals.at("e_lavaurs_constant"));
        }
    }
    c.truth("all_records_valid", valid);
    c.value("c0inf_minus_c00_plus_2ipib", bconst, 1e-6);
    c.value("im_c0inf_plus_pib", imag_c0, 1e-6);
    c.value("commutation", commute, 1e-6);
    c.value("lavaurs_constant", lav, 1e-6);
    c.value("grid_runtime_s", grid_time, 120.0);
    double nf = 0.0;
    for (double b : {0.0, 0.3}) {
        const ModulusData n = weak_modulus(normal_form_family(b), grid);
        for (const auto& r : n.records) nf = std::max(nf, r.valid ? max_nonconstant(r, n.nmax) : 1.0);
    }
    c.value("normal_form_max_cn", nf, 1e-8);
}

void canonical_parameter(Checks& c) {
    double de = 0.0, db = 0.0;
    for (double bb : {0.0, 0.3, -0.2}) {
        const PreparedInvariants inv = canonical_invariants(normal_form_family(bb));
        for (size_t i = 0; i < inv.nodes.size(); ++i) {
            de = std::max(de, std::abs(inv.eps_nodes[i] - inv.nodes[i]));
            db = std::max(db, std::abs(inv.b_nodes[i] - bb));
        }
    }
    c.value("model_eps", de, 1e-10);
    c.value("model_b", db, 1e-8);
    // planted real change l(z) = z + s (z^2 - eps) of a generic family
    const GermFamily f = random_generic_family(5);
    const PreparedInvariants a = canonical_invariants(f);
    const Series l = planted_change(0.1, f.series.deg_w() + 8, f.series.deg_eps());
    const Series fs = f.series.retruncated(l.deg_w(), l.deg_eps());
    const Series g = compose(invert(l), compose(fs, l)).retruncated(f.series.deg_w() + 4, f.series.deg_eps());
    const PreparedInvariants b = canonical_invariants(make_family(g, "planted"));
    double inv = 0.0;
    for (size_t i = 0; i < a.nodes.size(); ++i)
        inv = std::max({inv, std::abs(a.eps_nodes[i] - b.eps_nodes[i]), std::abs(a.b_nodes[i] - b.b_nodes[i])});
    c.value("planted_change_invariance", inv, 1e-8);
}

void classification_round_trip(Checks& c) {
    const double s = 0.03, eps = -0.01;
    const GermFamily& f1 = complex_q_prepared();
    const GermFamily f2 = planted_conjugate(f1, s);
    const std::vector<double> grid(std::begin(kEps), std::end(kEps));
    const ModulusData m1 = weak_modulus(f1, grid), m2 = weak_modulus(f2, grid);
    const EquivalenceReport rep = compare_moduli(m1, m2);
    c.truth("verdict_equivalent", rep.verdict == Verdict::Equivalent);
    const ConjugacyResult h = build_conjugacy(f1, f2, eps, square_grid(0.2, 20));
    const Series l = planted_change(s);
    c.truth("grid_20x20_defined", h.h.count() == 400);
    c.value("h_minus_l", h.h.distance([&](C z) { return l.evaluate(eps, z); }), 1e-6);
    // |c_1| scaled by 1.1 on every record
    ModulusData scaled = m1;
    for (auto& r : scaled.records) {
        if (!r.c_G.empty()) r.c_G[scaled.nmax + 1] *= 1.1;
        else r.c_inf[1] *= 1.1;
    }
    c.truth("scaled_c1_rejected", compare_moduli(m1, scaled).verdict == Verdict::Inequivalent);
}

void square_root(Checks& c) {
    const std::vector<double> grid(std::begin(kEps), std::end(kEps));
    const GermFamily v1 = model_time_one_family(0.3);
    const GermFamily nf = normal_form_family(0.3);
    double recon = 0.0;
    for (double e : {-0.01, 0.01}) {
        const SqrtExtraction x = extract_square_root(v1, e, square_grid(0.2, 20));
        recon = std::max(recon, x.f.distance([&](C z) { return evaluate(nf, e, z); }));
    }
    c.value("v1_root_vs_sigma_v_half", recon, 1e-9);
    const GermFamily g = second_iterate(simple_prepared());
    const SqrtTestResult t = square_root_test(weak_modulus(g, grid));
    c.truth("second_iterate_passes", t.passes);
    double rt = 0.0;
    for (double e : kEps) {
        const SqrtExtraction x = extract_square_root(g, e, square_grid(0.2, 20));
        rt = std::max({rt, x.roundtrip_residual, x.f.distance([&](C z) { return evaluate(simple_prepared(), e, z); })});
    }
    c.value("second_iterate_round_trip", rt, 1e-6);
    // planted violation: c_1 of Psi^0 moved by 1e-3 on the eps = -0.01 record
    ModulusData m = weak_modulus(g, grid);
    ModulusRecord& r = m.records[1];
    r.c_0[1] += 1e-3;
    for (auto* u : {&r.unresolved_0, &r.unresolved_inf}) u->erase(std::remove(u->begin(), u->end(), 1), u->end());
    const SqrtTestResult bad = square_root_test(m);
    c.truth("violation_no_root", !bad.passes);
    c.at_least("violation_residual", bad.residual, 5e-4);
}

void invariant_curve(Checks& c) {
    ModulusOptions o;
    const ModulusRecord r = modulus_record(simple_prepared(), SectorParam{0.0, 0.0}, o);
    c.truth("record_valid", r.valid);
    const CurveTestResult t = invariant_curve_test(r, o.nmax);
    c.truth("real_family_invariant", t.invariant);
    c.value("odd_mode_residual", t.residual, 1e-6);
    ModulusRecord p = r;
    p.c_inf[1] = 0.1;
    c.truth("planted_c1_not_invariant", !invariant_curve_test(p, o.nmax).invariant);
}

void compatibility(Checks& c) {
    const CompatibilityResult nf = compatibility_residual(normal_form_family(0.3), 0.01);
    c.value("normal_form", nf.residual, 1e-10);
    c.truth("normal_form_D_zero", nf.D == C(0.0) && nf.Dp == C(0.0));
    const CompatibilityResult fam = compatibility_residual(simple_prepared(), 0.01);
    c.value("test_family", fam.residual, 1e-5);
    const CompatibilityResult cq = compatibility_residual(complex_q_prepared(), 0.01);
    c.value("complex_q_family", cq.residual, 1e-5);
    // planted violation: one Fourier mode added to the second linearizer on the band
    const GermFamily& f = complex_q_prepared();
    ModulusOptions mo;
    mo.fatou.mode = Mode::Strong;
    const ModulusRecord rh = modulus_record(f, SectorParam{0.01, 0.0}, mo);
    const ModulusRecord rt = modulus_record(f, SectorParam{0.01, 2 * M_PI}, mo);
    const ReturnLinearizer Hh = return_linearizer(record_transition(rh, mo.nmax, f.r, mo.h), rh.param, rh.b);
    const ReturnLinearizer Ht = return_linearizer(record_transition(rt, mo.nmax, f.r, mo.h), rt.param, rt.b);
    CompatibilityOptions o;
    o.h0 = 1.0 / f.r + mo.h;
    const double h0 = o.h0;
    const CompatibilityResult bad = compatibility_residual(
        [&](C W) { return Hh(W); },
        [&](C W) { return Ht(W) + 1e-3 * std::exp(2.0 * M_PI * I * (W - I * h0)); }, 0.01, o);
    c.at_least("planted_violation", bad.residual, 1e-5);
}

}  // namespace

int main() {
    int failures = 0;
    failures += !run_criterion(1, "time-chart identities", 1.0, time_chart_identities);
    failures += !run_criterion(2, "periods", 1.0, periods);
    failures += !fatou_solver();
    failures += !run_criterion(4, "modulus identities", 0.0, modulus_identities);
    failures += !run_criterion(5, "canonical parameter round trip", 0.0, canonical_parameter);
    failures += !run_criterion(6, "classification round trip", 0.0, classification_round_trip);
    failures += !run_criterion(7, "square root", 0.0, square_root);
    failures += !run_criterion(8, "invariant curve", 0.0, invariant_curve);
    failures += !run_criterion(9, "compatibility", 0.0, compatibility);
    std::printf("%d of 9 criteria passed\n", 9 - failures);
    return failures == 0 ? 0 : 1;
}
