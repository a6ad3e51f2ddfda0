#include "pmod/preparation.hpp"

#include <Eigen/QR>
#include <cmath>

#include "pmod/poly.hpp"

namespace pmod {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> chebyshev_nodes(int n, double R) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = R * std::cos((2.0 * i + 1.0) * kPi / (2.0 * n));
    return x;
}

// Least-squares polynomial fit of degree deg, in the scaled variable x / R.
CVec<double> lsq_fit(const std::vector<double>& x, const std::vector<double>& y, int deg, double R,
                     double* resid = nullptr) {
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd V(n, deg + 1);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
        double p = 1.0;
        for (int k = 0; k <= deg; ++k) {
            V(i, k) = p;
            p *= x[i] / R;
        }
        rhs(i) = y[i];
    }
    const Eigen::VectorXd c = V.colPivHouseholderQr().solve(rhs);
    if (resid) *resid = (V * c - rhs).cwiseAbs().maxCoeff();
    CVec<double> out(deg + 1);
    double s = 1.0;
    for (int k = 0; k <= deg; ++k) {
        out(k) = c(k) / s;
        s *= R;
    }
    return out;
}

// value, first and second derivative of a polynomial
cplx eval_d2(const poly::Poly& p, cplx x, cplx& d1, cplx& d2) {
    cplx v = 0;
    d1 = 0;
    d2 = 0;
    for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i) {
        d2 = d2 * x + 2.0 * d1;
        d1 = d1 * x + v;
        v = v * x + p(i);
    }
    return v;
}

// g = S o conj(S) at one parameter value, with derivatives.
struct SecondIterate {
    poly::Poly S, Sb;
    cplx value(cplx w, cplx* d1 = nullptr, cplx* d2 = nullptr) const {
        cplx a1, a2, b1, b2;
        const cplx y = eval_d2(Sb, w, b1, b2);
        const cplx v = eval_d2(S, y, a1, a2);
        if (d1) *d1 = a1 * b1;
        if (d2) *d2 = a2 * b1 * b1 + a1 * b2;
        return v;
    }
};

SecondIterate second_iterate_at(const Series& s, cplx eps) {
    return {poly_at(s, eps), conj_poly_at(s, eps)};
}

// Double fixed point of g_0 near the origin: Newton on g' - 1.
cplx parabolic_point(const Series& s) {
    const SecondIterate g = second_iterate_at(s, 0.0);
    cplx w = 0;
    for (int it = 0; it < 60; ++it) {
        cplx d1, d2;
        g.value(w, &d1, &d2);
        if (std::abs(d2) == 0.0) break;
        const cplx dw = (d1 - 1.0) / d2;
        w -= dw;
        if (std::abs(dw) < 1e-17) break;
    }
    const double res = std::abs(g.value(w) - w);
    if (!(res < 1e-10) || !(std::abs(w) < 0.5))
        throw PreparationError("no parabolic fixed point found near the origin at eps = 0");
    return w;
}

cplx newton_fixed_point(const SecondIterate& g, cplx seed, double* res_out) {
    cplx z = seed;
    for (int it = 0; it < 100; ++it) {
        cplx d;
        const cplx v = g.value(z, &d) - z;
        if (std::abs(v) < 1e-16) break;
        const cplx dz = v / (d - 1.0);
        z -= dz;
        if (std::abs(dz) < 1e-17) break;
    }
    const double res = std::abs(g.value(z) - z);
    if (!(res < 1e-12)) throw NumericError("fixed-point Newton did not converge (residual " + std::to_string(res) + ")");
    if (res_out) *res_out = std::max(*res_out, res);
    return z;
}

Series pad(const Series& s, int W, int E) { return s.retruncated(W, E); }

Series linear_series(const CVec<double>& c0, const CVec<double>& c1, int W, int E) {
    Series r(W, E);
    for (int k = 0; k <= E; ++k) {
        if (k < c0.size()) r(0, k) = c0(k);
        if (k < c1.size()) r(1, k) = c1(k);
    }
    return r;
}

// phi^{-1} o S o conj(phi) for a holomorphic change phi
Series conjugate_by(const Series& S, const Series& phi) {
    Series inner = compose(S, phi);
    return compose(invert(phi), inner);
}

struct NodeData {
    std::vector<double> nodes, eps, b;
    double realness = 0.0;
};

// eps and b at each node. seeds(eta) returns the two fixed-point seeds.
template <class SeedFn>
NodeData node_invariants(const Series& s, const std::vector<double>& nodes, SeedFn seeds) {
    NodeData out;
    out.nodes = nodes;
    for (double eta : nodes) {
        const SecondIterate g = second_iterate_at(s, eta);
        auto [s1, s2] = seeds(eta);
        double res = 0.0;
        const cplx p1 = newton_fixed_point(g, s1, &res);
        const cplx p2 = newton_fixed_point(g, s2, &res);
        if (std::abs(p1 - p2) < 1e-12) throw NumericError("fixed points collided at a sampling node");
        cplx l1, l2;
        g.value(p1, &l1);
        g.value(p2, &l2);
        auto [e, b] = eps_b_from_multipliers(l1, l2);
        out.realness = std::max({out.realness, std::abs(e.imag()), std::abs(b.imag())});
        out.eps.push_back(e.real());
        out.b.push_back(b.real());
    }
    return out;
}

CVec<double> real_vec(const CVec<double>& v) {
    CVec<double> r = v;
    for (int i = 0; i < r.size(); ++i) r(i) = r(i).real();
    return r;
}

double max_imag(const CVec<double>& v) {
    double m = 0.0;
    for (int i = 0; i < v.size(); ++i) m = std::max(m, std::abs(v(i).imag()));
    return m;
}

}  // namespace

std::pair<cplx, cplx> eps_b_from_multipliers(cplx lp, cplx lm) {
    for (cplx l : {lp, lm})
        if (l.real() <= 0.0 && std::abs(l.imag()) < 1e-14 * std::abs(l))
            throw BranchError("multiplier on the negative real axis: principal log undefined");
    const cplx Lp = std::log(lp), Lm = std::log(lm);
    if (std::abs(Lp) == 0.0 || std::abs(Lm) == 0.0) throw DegeneracyError("multiplier equal to 1 at a simple fixed point");
    const cplx d = 1.0 / Lp - 1.0 / Lm;
    return {1.0 / (d * d), 1.0 / Lp + 1.0 / Lm};
}

PreparedInvariants canonical_invariants(const GermFamily& fam, const PrepareOptions& opt) {
    if (!is_generic(fam)) throw GenericityError("family is not generic (d Re a0 / d eps = 0 at the origin)");
    const Series& S = fam.series;
    const int de = S.deg_eps();
    const int E = de + 2;
    const cplx c = parabolic_point(S);
    // seeds from the Weierstrass quadratic of g - id around the parabolic point
    Series Sc = shift_w(pad(S, S.deg_w(), E), std::conj(c));
    Sc(0, 0) -= c;
    Series g = compose(Sc, Sc);
    g(1, 0) -= 1.0;
    const WeierstrassResult<double> W = weierstrass_prepare(g);
    const double R = 0.5 * fam.r_param;
    auto seeds = [&](double eta) {
        const cplx a1 = s1::eval<double>(W.a1, eta), a0 = s1::eval<double>(W.a0, eta);
        const cplx sq = std::sqrt(a1 * a1 / 4.0 - a0);
        return std::pair<cplx, cplx>{c - a1 / 2.0 + sq, c - a1 / 2.0 - sq};
    };
    NodeData nd = node_invariants(S, chebyshev_nodes(opt.nodes, R), seeds);
    PreparedInvariants inv;
    inv.nodes = nd.nodes;
    inv.eps_nodes = nd.eps;
    inv.b_nodes = nd.b;
    inv.eps_nodes_param = nd.eps;
    inv.realness_defect = nd.realness;
    std::vector<double> ratio(nd.nodes.size());
    for (size_t i = 0; i < ratio.size(); ++i) ratio[i] = nd.eps[i] / nd.nodes[i];
    double r1 = 0, r2 = 0;
    CVec<double> rho = lsq_fit(nd.nodes, ratio, de, R, &r1);
    inv.b_of_eta = lsq_fit(nd.nodes, nd.b, de, R, &r2);
    inv.fit_residual = std::max(r1 * R, r2);
    inv.eps_of_eta = CVec<double>::Zero(de + 1);
    for (int k = 0; k < de; ++k) inv.eps_of_eta(k + 1) = rho(k);
    inv.eta_of_param = CVec<double>::Zero(de + 1);
    if (de >= 1) inv.eta_of_param(1) = 1.0;
    const CVec<double> eta_of_eps = s1::revert<double>(inv.eps_of_eta, de + 1);
    inv.b_series = real_vec(s1::compose<double>(inv.b_of_eta, eta_of_eps, de + 1));
    return inv;
}

PrepareResult prepare(const GermFamily& fam, const PrepareOptions& opt) {
    if (!fam.conjugating()) throw MisuseError("prepare expects an antiholomorphic unfolding");
    if (!is_generic(fam)) throw GenericityError("family is not generic (d Re a0 / d eps = 0 at the origin)");
    const int dw = fam.series.deg_w(), de = fam.series.deg_eps();
    const int E = de + 2;
    const int Wi = std::max(dw, 2 * E + 2) + E + 2;
    PrepareResult out;

    // germ normalization at eps = 0: translate, rotate, quadratic, scale
    Series S = pad(fam.series, Wi, E);
    const cplx c = parabolic_point(fam.series);
    if (std::abs(c) > 0.0) {
        S = shift_w(S, std::conj(c));
        S(0, 0) -= c;
    }
    if (std::abs(S(0, 0)) > 1e-12) throw PreparationError("translated germ does not fix the origin");
    S(0, 0) = 0.0;
    const cplx tau0 = S(1, 0);
    if (std::abs(std::abs(tau0) - 1.0) > 1e-8) throw PreparationError("germ at eps = 0 is not parabolic (|tau| != 1)");
    const cplx rho = std::sqrt(tau0);
    for (int j = 0; j <= Wi; ++j)
        for (int k = 0; k <= E; ++k) S(j, k) *= std::pow(std::conj(rho), j) / rho;
    S(1, 0) = 1.0;
    const cplx kappa(0.0, 0.5 * S(2, 0).imag());
    Series phik = Series::identity(Wi, E);
    phik(2, 0) = kappa;
    if (std::abs(kappa) > 0.0) S = conjugate_by(S, phik);
    const double a2 = S(2, 0).real();
    if (std::abs(a2) < 1e-10) throw DegeneracyError("vanishing quadratic coefficient: not codimension 1");
    const double dsc = 1.0 / (2.0 * a2);
    for (int j = 0; j <= Wi; ++j)
        for (int k = 0; k <= E; ++k) S(j, k) *= std::pow(dsc, j - 1);
    // P(w) = rho (d w + kappa d^2 w^2)
    Series P(Wi, E);
    P(1, 0) = rho * dsc;
    P(2, 0) = rho * kappa * dsc * dsc;

    // fixed points of g at z^2 = zeta, zeta = D'(0) eta
    Series g = compose(S, S);
    g(1, 0) -= 1.0;
    const WeierstrassResult<double> Wq = weierstrass_prepare(g);
    const CVec<double> D = s1::mul<double>(Wq.a1, Wq.a1, E + 1) / 4.0 - Wq.a0;
    if (std::abs(D(0)) > 1e-10) throw PreparationError("fixed points do not merge at eps = 0");
    const cplx D1c = D(1);
    if (std::abs(D1c) < 1e-9) throw GenericityError("fixed points do not split to first order");
    if (std::abs(D1c.imag()) > 1e-8 * std::abs(D1c))
        throw PreparationError("fixed-point splitting direction is not real after normalization");
    const double D1 = D1c.real();
    CVec<double> m = CVec<double>::Zero(E + 1);
    for (int k = 0; k < E; ++k) m(k) = D(k + 1) / D1;
    m(0) = 1.0;
    const CVec<double> lam = s1::pow1<double>(m, 0.5, E + 1);
    Series phi1 = linear_series(-Wq.a1 / 2.0, lam, Wi, E);
    phi1(0, 0) = 0.0;
    Series S1 = conjugate_by(S, phi1);
    CVec<double> eta_of_zeta = CVec<double>::Zero(E + 1), zeta_of_eta = CVec<double>::Zero(E + 1);
    eta_of_zeta(1) = 1.0 / D1;
    zeta_of_eta(1) = D1;
    S1 = substitute_param(S1, eta_of_zeta);

    // phase rotation at the fixed points: omega = (tau / conj tau)^{1/4} in s = sqrt(zeta)
    const int ns = 2 * E + 3;
    CVec<double> ts = CVec<double>::Zero(ns);
    for (int j = 1; j <= Wi; ++j)
        for (int k = 0; k <= E; ++k) {
            const int p = j - 1 + 2 * k;
            if (p < ns) ts(p) += double(j) * S1(j, k);
        }
    const CVec<double> tsb = ts.conjugate();
    const CVec<double> omega = s1::pow1<double>(s1::mul<double>(ts, s1::inv<double>(tsb, ns), ns), 0.25, ns);
    CVec<double> A0 = CVec<double>::Zero(E + 1), A1 = CVec<double>::Zero(E + 1);
    for (int i = 0; i <= E; ++i) {
        if (2 * i + 1 < ns) A0(i) = omega(2 * i + 1) / 2.0;
        if (2 * i + 2 < ns) A1(i) = omega(2 * i + 2) / 2.0;
    }
    Series H2 = linear_series(A0, A1, Wi, E);
    Series phi2 = multiply_quadratic<double>(H2, CVec<double>::Zero(E + 1), -eps_monomial<double>(E));
    phi2 += Series::identity(Wi, E);
    Series S2 = conjugate_by(S1, phi2);

    // canonical parameter from the multipliers at ±sqrt(zeta)
    const double R = 0.5 * fam.r_param;
    Series S2w = S2.retruncated(std::max(dw, 16), E);
    S2w.set_conjugating(true);
    NodeData nd = node_invariants(S2w, chebyshev_nodes(opt.nodes, R), [](double z) {
        const cplx s = std::sqrt(cplx(z));
        return std::pair<cplx, cplx>{s, -s};
    });
    std::vector<double> ratio(nd.nodes.size());
    for (size_t i = 0; i < ratio.size(); ++i) ratio[i] = nd.eps[i] / nd.nodes[i];
    double r1 = 0, r2 = 0;
    const CVec<double> rat = lsq_fit(nd.nodes, ratio, E, R, &r1);
    const CVec<double> b_zeta = lsq_fit(nd.nodes, nd.b, E, R, &r2);
    if (!(rat(0).real() > 0.0)) throw PreparationError("canonical parameter has the wrong orientation");
    const double sgn = S2(2, 0).real() >= 0.0 ? 1.0 : -1.0;
    const CVec<double> cc = sgn * std::sqrt(rat(0).real()) * s1::pow1<double>(rat / rat(0), 0.5, E + 1);
    Series L = linear_series(CVec<double>::Zero(E + 1), real_vec(cc), Wi, E);
    Series Linv = linear_series(CVec<double>::Zero(E + 1), real_vec(s1::inv<double>(cc, E + 1)), Wi, E);
    Series S3 = compose(L, compose(S2, Linv));
    CVec<double> eps_zeta = CVec<double>::Zero(E + 1);
    for (int k = 0; k < E; ++k) eps_zeta(k + 1) = rat(k).real();
    const CVec<double> zeta_eps = s1::revert<double>(eps_zeta, E + 1);
    Series S4 = substitute_param(S3, zeta_eps);

    // prepared structure
    Series dS = S4 - Series::identity(Wi, E);
    dS.set_conjugating(false);
    QuadraticDivision<double> q1 = divide_by_w2_minus_eps<double>(dS);
    QuadraticDivision<double> q2 = divide_by_w2_minus_eps<double>(q1.quotient);
    double fixed_defect = 0.0;
    for (int k = 0; k <= de; ++k) fixed_defect = std::max({fixed_defect, std::abs(q1.rem0(k)), std::abs(q1.rem1(k))});
    const CVec<double> B0 = q2.rem0.head(de + 1), B1 = q2.rem1.head(de + 1);
    const double imag_defect = std::max(max_imag(B0), max_imag(B1));
    Series Q = q2.quotient.retruncated(std::max(dw - 4, 0), std::max(de - 2, 0));
    Series prep = prepared_series(real_vec(B0), real_vec(B1), Q, dw, de, true);

    // total change in the input parameter
    const CVec<double> zeta_in = zeta_of_eta;
    Series phi2_eta = substitute_param(phi2, zeta_in);
    Series Linv_eta = substitute_param(Linv, zeta_in);
    Series chain = compose(P, compose(phi1, compose(phi2_eta, Linv_eta)));
    chain(0, 0) += c;
    out.change = chain.retruncated(dw, de);
    out.change.set_conjugating(false);
    // input parameter eta = zeta / D1 as a function of eps
    out.param_of_eps = (zeta_eps / D1).head(de + 1);

    out.inv.eps_of_eta = eps_zeta.head(de + 1);
    out.inv.b_of_eta = real_vec(b_zeta).head(de + 1);
    out.inv.eta_of_param = zeta_of_eta.head(de + 1);
    out.inv.b_series = real_vec(s1::compose<double>(b_zeta, zeta_eps, E + 1)).head(de + 1);
    out.inv.B0 = real_vec(B0);
    out.inv.B1 = real_vec(B1);
    out.inv.Q = Q;
    out.inv.nodes = nd.nodes;
    out.inv.eps_nodes = nd.eps;
    out.inv.b_nodes = nd.b;
    out.inv.fit_residual = std::max(r1 * R, r2);
    out.inv.realness_defect = nd.realness;

    // sup-norm bound on the polydisc |u| <= r, |eta| <= r'/2
    auto polydisc_norm = [&](const Series& d) {
        double acc = 0.0;
        for (int j = 0; j <= d.deg_w(); ++j)
            for (int k = 0; k <= d.deg_eps(); ++k) acc += std::abs(d(j, k)) * std::pow(fam.r, j) * std::pow(R, k);
        return acc;
    };
    const double change_dev = polydisc_norm(out.change - Series::identity(dw, de));
    CVec<double> pe = out.param_of_eps;
    if (pe.size() > 1) pe(1) -= 1.0;
    double param_dev = 0.0;
    for (int k = 0; k < pe.size(); ++k) param_dev += std::abs(pe(k)) * std::pow(R, k);
    out.residuals["change_minus_identity"] = change_dev;
    out.residuals["structure_remainder"] = fixed_defect;
    out.residuals["B_imaginary_discarded"] = imag_defect;
    out.residuals["node_realness"] = nd.realness;
    out.residuals["fit_residual"] = out.inv.fit_residual;
    out.residuals["splitting_direction_imag"] = std::abs(D1c.imag());

    GermFamily pf = make_family(prep, fam.label.empty() ? "prepared" : fam.label + ":prepared", fam.r, fam.r_param);
    out.residuals["param_map_minus_identity"] = param_dev;
    out.identity = change_dev < 1e-10 && param_dev < 1e-10;
    out.prepared = out.identity ? fam : pf;
    if (out.identity) {
        out.change = Series::identity(dw, de);
        out.param_of_eps = CVec<double>::Zero(de + 1);
        if (de >= 1) out.param_of_eps(1) = 1.0;
    }

    // conjugacy check on samples: change o prepared = original o change
    double conj_res = 0.0;
    for (double eps : {-0.4 * R, -0.1 * R, 0.1 * R, 0.4 * R}) {
        const double eta = s1::eval<double>(out.param_of_eps, eps).real();
        for (int k = 0; k < 8; ++k) {
            const cplx u = std::polar(0.05, 0.7 + 0.8 * k);
            const cplx lhs = out.change.evaluate_holo(eta, evaluate(out.prepared, eps, u));
            const cplx rhs = evaluate(fam, eta, out.change.evaluate_holo(eta, u));
            conj_res = std::max(conj_res, std::abs(lhs - rhs));
        }
    }
    out.residuals["conjugacy"] = conj_res;
    for (auto& [k, v] : prepared_form_residuals(out.prepared)) out.residuals["prepared_" + k] = v;
    double worst = 0.0;
    std::string worst_name;
    for (const char* k : {"prepared_B_real", "prepared_B0_half", "prepared_tau_symmetry", "prepared_fixed_points"}) {
        if (out.residuals[k] > worst) {
            worst = out.residuals[k];
            worst_name = k;
        }
    }
    if (worst > opt.tol)
        throw PreparationError("prepared-form verification failed: " + worst_name + " = " + std::to_string(worst));
    if (conj_res > 1e-6)
        throw PreparationError("conjugacy check failed: residual " + std::to_string(conj_res));
    return out;
}

std::map<std::string, double> prepared_form_residuals(const GermFamily& fam) {
    std::map<std::string, double> r;
    const Series& S = fam.series;
    const int de = S.deg_eps();
    Series dS = S - Series::identity(S.deg_w(), de);
    dS.set_conjugating(false);
    QuadraticDivision<double> q1 = divide_by_w2_minus_eps<double>(dS);
    QuadraticDivision<double> q2 = divide_by_w2_minus_eps<double>(q1.quotient);
    double fixed = 0.0;
    for (int k = 0; k < de; ++k) fixed = std::max({fixed, std::abs(q1.rem0(k)), std::abs(q1.rem1(k))});
    r["B_real"] = std::max(max_imag(q2.rem0), max_imag(q2.rem1));
    r["B0_half"] = std::abs(q2.rem0(0) - 0.5);
    double tau_sym = 0.0;
    const double R = fam.r_param;
    for (double eps : {-0.8 * R, -0.2 * R, 0.0, 0.2 * R, 0.8 * R}) {
        FixedPointData d = fixed_point_data(fam, eps);
        if (eps > 0)
            tau_sym = std::max({tau_sym, std::abs(d.tau[0].imag()), std::abs(d.tau[1].imag())});
        else if (eps < 0)
            tau_sym = std::max(tau_sym, std::abs(d.tau[0] - std::conj(d.tau[1])));
        else
            tau_sym = std::max(tau_sym, std::abs(d.tau[0] - 1.0));
        if (eps != 0.0) {
            const cplx s = std::sqrt(cplx(eps));
            fixed = std::max({fixed, std::abs(S.evaluate_holo(eps, s) - s), std::abs(S.evaluate_holo(eps, -s) + s)});
        }
    }
    r["tau_symmetry"] = tau_sym;
    r["fixed_points"] = fixed;
    return r;
}

json preparation_report(const PrepareResult& r) {
    json j;
    j["identity_change"] = r.identity;
    j["residuals"] = r.residuals;
    auto vec = [](const CVec<double>& v) {
        json a = json::array();
        for (int i = 0; i < v.size(); ++i) a.push_back(v(i).real());
        return a;
    };
    j["b_series"] = vec(r.inv.b_series);
    j["eps_of_eta"] = vec(r.inv.eps_of_eta);
    j["eta_of_param"] = vec(r.inv.eta_of_param);
    j["param_of_eps"] = vec(r.param_of_eps);
    j["B0"] = vec(r.inv.B0);
    j["B1"] = vec(r.inv.B1);
    j["grid"] = {{"nodes", r.inv.nodes.size()}, {"kind", "chebyshev"}, {"half_width", r.inv.nodes.empty() ? 0.0 : r.inv.nodes.front()}};
    Series ch = r.change;
    j["change"] = series_to_json(ch, FamilyKind::CoordinateChange);
    return j;
}

}  // namespace pmod
