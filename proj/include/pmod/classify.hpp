#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pmod/modulus.hpp"

namespace pmod {

// ---------------------------------------------------------------- modes of a record

// Upper / lower transition maps of a record in one-sided form: up[n] is mode n of the map above
// the hole, down[k] mode -k of the map below. Glutsyuk records are split via Psi^U = Psi^G and
// Psi^L = T_{alpha-} Psi^G T_{alpha+}.
struct SideModes {
    std::vector<cplx> up, down;
    std::vector<int> unres_up, unres_down;
};
SideModes side_modes(const ModulusRecord& rec, int nmax);

// c_n -> c_n e^{-2 pi i n C} on every stored mode (renormalization Phi^± -> T_C Phi^±)
ModulusRecord shifted_record(const ModulusRecord& rec, cplx C, int nmax);
ModulusData shifted_modulus(const ModulusData& m, cplx C);

// ---------------------------------------------------------------- comparison

enum class Verdict { Equivalent, Inequivalent, Inconclusive };
std::string verdict_name(Verdict v);

struct EquivalenceReport {
    Verdict verdict = Verdict::Inconclusive;
    Mode mode = Mode::Weak;
    std::vector<cplx> shift;  // per record (real in weak mode)
    double worst_residual = 0.0;
    double symmetry_residual = 0.0;  // strong: |C(conj eps) - conj C(eps)| on paired rays
    std::optional<int> failing_record;
    std::string reason;
    double tol = 1e-6;
};

struct RecordMatch {
    bool equivalent = false;
    cplx shift{};
    double residual = 0.0;
    std::string reason;
};
// c0 equality and c'_n = c_n e^{-2 pi i n C}; complex C allowed when complex_shift.
RecordMatch match_records(const ModulusRecord& a, const ModulusRecord& b, int nmax, bool complex_shift, double tol);

EquivalenceReport compare_moduli(const ModulusData& m1, const ModulusData& m2, double tol = 1e-6);
json equivalence_to_json(const EquivalenceReport& r);

// ---------------------------------------------------------------- conjugacy

std::vector<cplx> square_grid(double half_width, int n, cplx center = 0.0);

struct ConjugacyOptions {
    ModulusOptions modulus;
    double compare_tol = 1e-6;
    double seam_tol = 1e-7;
    bool throw_on_seam = true;
};

struct SampledMap {
    std::vector<cplx> points, values;
    std::vector<char> ok;
    int count() const;
    // max |values - F(points)| over defined samples
    double distance(const std::function<cplx(cplx)>& F) const;
    json to_json() const;
};

struct ConjugacyResult {
    double eps = 0.0;
    double shift = 0.0;       // real C aligning the two moduli
    SampledMap h;             // plus-side values (minus side where plus is undefined)
    double conjugation_residual = 0.0;  // sup |h(f2 z) - f1(h z)|
    double seam_residual = 0.0;         // sup |h+ - h-| where both are defined
    int seam_samples = 0;
    EquivalenceReport report;
};
// h = Z^-1 o Phi_1^-1 o T_{-C} o Phi_2 o Z, so that h o f2 = f1 o h.
ConjugacyResult build_conjugacy(const GermFamily& f1, const GermFamily& f2, double eps, const std::vector<cplx>& grid,
                                const ConjugacyOptions& opt = {});

// ---------------------------------------------------------------- square root

struct SqrtTestResult {
    bool passes = false;
    double residual = 0.0;
    double tol = 1e-6;
    std::vector<double> per_record;
    std::vector<cplx> shift;  // fitted renormalization per record
    std::optional<int> failing_record;
    std::optional<double> parabolic_residual;  // eps = 0 relation when a record at eps = 0 exists
};
SqrtTestResult square_root_test(const ModulusData& mg, double tol = 1e-6);

struct SqrtOptions {
    ModulusOptions modulus;
    double tol = 1e-6;
    int fit_degree = 12;  // polynomial fit in conj z (0 = skip)
};
struct SqrtExtraction {
    double eps = 0.0;
    cplx shift{};
    SampledMap f;
    double roundtrip_residual = 0.0;  // sup |f(f(z)) - g(z)|
    double seam_residual = 0.0;       // sup |f+ - f-|
    int seam_samples = 0;
    std::vector<cplx> fit;            // f(z) ~ sum fit[k] conj(z)^k
    double fit_residual = 0.0;
    double criterion_residual = 0.0;
};
// f = Z^-1 o Phi^-1 o Sigma T_{1/2} o Phi o Z with Phi renormalized by the fitted shift; g holomorphic.
SqrtExtraction extract_square_root(const GermFamily& g, double eps, const std::vector<cplx>& grid,
                                   const SqrtOptions& opt = {});
json sqrt_test_to_json(const SqrtTestResult& r);
json sqrt_extraction_to_json(const SqrtExtraction& r);

// ---------------------------------------------------------------- invariant curve

struct CurveTestResult {
    bool invariant = false;
    double residual = 0.0;  // max odd |c_n|
    double tol = 1e-6;
};
CurveTestResult invariant_curve_test(const ModulusRecord& rec, int nmax, double tol = 1e-6);
// direct oracle: max |Im f_eps(x)| over real x in [-0.9 r, 0.9 r]
double real_axis_defect(const GermFamily& fam, double eps, int samples = 101);

// ---------------------------------------------------------------- return maps

struct LinearizerOptions {
    double tol = 1e-13;  // increment size that ends the iteration
    int max_iter = 400;
    double delta = 0.2;
};

// H with H o R = T_{-alpha+} o H, R = Psi o T_{-i pi / sqrt eps} for arg in (-pi + delta, pi - delta)
// and R = T_{-i pi / sqrt eps} o Psi for arg in (pi + delta, 3 pi - delta); H - id -> 0 upward.
class ReturnLinearizer {
public:
    std::function<cplx(cplx)> psi;
    SectorParam param;
    cplx b{};
    cplx alpha{};   // alpha+ of the lifted parameter
    cplx lav{};     // -i pi / sqrt eps
    bool psi_first = true;
    LinearizerOptions opt;

    cplx R(cplx W) const;
    cplx R_inverse(cplx W) const;
    cplx operator()(cplx W) const;
    cplx inverse(cplx V) const;
    int iterations(cplx W) const;
    // sup |H(R W) - H(W) + alpha+| on Im W = y (sampled on one period)
    double conjugation_residual(double y, int samples = 16) const;
    // sup |H - id| on Im W = y
    double distance_to_identity(double y, int samples = 16) const;
};

// Newton inverse of a holomorphic map close to a translation
cplx invert_map(const std::function<cplx(cplx)>& F, cplx W, double tol = 1e-15, int max_iter = 60);

ReturnLinearizer return_linearizer(std::function<cplx(cplx)> psi, const SectorParam& param, cplx b,
                                   const LinearizerOptions& opt = {});
ReturnLinearizer return_linearizer(const TransitionMap& psi, const SectorParam& param, cplx b,
                                   const LinearizerOptions& opt = {});
// Psi^inf rebuilt from the stored modes of a record (levels 1 / radius)
TransitionMap record_transition(const ModulusRecord& rec, int nmax, double radius, double h);

// ---------------------------------------------------------------- compatibility

struct CompatibilityOptions {
    double h0 = 0.0;      // lower edge of the band Im W in [h0, h0 + 1] (0: 1 / r + h)
    int nx = 8, ny = 4;   // band samples
    int max_iter = 30;
    ModulusOptions modulus;
    LinearizerOptions linearizer;
};
struct CompatibilityResult {
    double eps = 0.0;
    double residual = 0.0;
    double initial_residual = 0.0;
    cplx D{}, Dp{};
    double h0 = 0.0;
    int samples = 0;
    int iterations = 0;
    std::map<std::string, double> diagnostics;
};
// Sides of H~ o N o H^-1 o N^-1 = T_D o N o H~ o N^-1 o H^-1 o T_D', N = T_{i pi / sqrt eps} T_{1/2} Sigma
CompatibilityResult compatibility_residual(const std::function<cplx(cplx)>& H_hat,
                                           const std::function<cplx(cplx)>& H_tilde, double eps,
                                           const CompatibilityOptions& opt);
// strong records at arg 0 and arg 2 pi of |eps|; eps > 0
CompatibilityResult compatibility_residual(const GermFamily& fam, double eps, const CompatibilityOptions& opt = {});
json compatibility_to_json(const CompatibilityResult& r);

}  // namespace pmod
