#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "pmod/series.hpp"

namespace pmod {

using cplx = std::complex<double>;

enum class FamilyKind { Antiholomorphic, Holomorphic, CoordinateChange };

std::string kind_name(FamilyKind k);
FamilyKind kind_from_name(const std::string& s);

// Exact model: sigma o v^time (antiholomorphic) or v^time (holomorphic) for
// dz/dt = (z^2 - eps)/(1 + b z). Dynamics use the closed form, the series
// holds its Taylor truncation.
struct ModelSpec {
    double b = 0.0;
    double time = 0.5;
};

struct GermFamily {
    Series series{12, 6, true};
    std::optional<ModelSpec> model;
    double r = 0.5;
    double r_param = 0.05;
    std::string label;
    FamilyKind kind = FamilyKind::Antiholomorphic;

    bool conjugating() const { return series.conjugating(); }
};

GermFamily make_family(Series s, std::string label, double r = 0.5, double r_param = 0.05);

struct FixedPointData {
    cplx eps;
    std::vector<cplx> points;       // p_+ first
    std::vector<cplx> multipliers;  // dg/dz at each point
    std::vector<cplx> tau;          // df/dzbar at each point (antiholomorphic families)
    bool periodic = false;          // f swaps the pair
    double newton_residual = 0.0;
};

// f_eps(z) (or g_eps(z)); complex eps uses the conjugate parameter for
// antiholomorphic families.
cplx evaluate(const GermFamily& fam, cplx eps, cplx z);

// Polynomial coefficients (in w) of S(eps, .) and of its coefficient conjugate.
CVec<double> poly_at(const Series& s, cplx eps);
CVec<double> conj_poly_at(const Series& s, cplx eps);

GermFamily second_iterate(const GermFamily& fam);

double genericity_margin(const GermFamily& fam);
bool is_generic(const GermFamily& fam, double threshold = 1e-9);

// p_sqrt overrides the seed sqrt(eps) (lifted square root on the sector).
FixedPointData fixed_point_data(const GermFamily& fam, cplx eps,
                                std::optional<cplx> p_sqrt = std::nullopt);

// Model and test families.
// w + (w^2 - eps)(B0 + B1 w + (w^2 - eps) Q), built exactly inside the truncation.
Series prepared_series(const CVec<double>& B0, const CVec<double>& B1, const Series& Q,
                       int deg_w = 12, int deg_eps = 6, bool conjugating = true);
// Time-t map of (w^2 - eps)/(1 + b(eps) w), as a series.
Series model_flow_series(const CVec<double>& b, double t, int deg_w = 12, int deg_eps = 6);
// sigma o v^{1/2}, re-synthesized in prepared structure.
GermFamily normal_form_family(const CVec<double>& b, int deg_w = 12, int deg_eps = 6);
GermFamily normal_form_family(double b, int deg_w = 12, int deg_eps = 6);
// v^1 (holomorphic)
GermFamily model_time_one_family(double b, int deg_w = 12, int deg_eps = 6);
// z̄ + (z̄^2 - eps)(B0 + B1 z̄) with constant coefficients
GermFamily simple_family(double B0 = 0.5, double B1 = 0.25, int deg_w = 12, int deg_eps = 6);
// complex-coefficient family with fixed points at ±sqrt(eta)
GermFamily random_generic_family(unsigned seed, int deg_w = 12, int deg_eps = 6);

CVec<double> eps_series_const(double c, int deg_eps);

}  // namespace pmod
