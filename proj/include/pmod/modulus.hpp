#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pmod/fatou.hpp"
#include "pmod/io.hpp"

namespace pmod {

// Inf: above the hole; Zero: below; Gap/Upper: upper gap (eps > 0); Lower: lower gap.
enum class TransitionKind { Inf, Zero, Gap, Upper, Lower };
std::string transition_kind_name(TransitionKind k);

class TransitionMap {
public:
    TransitionKind kind = TransitionKind::Inf;
    SectorParam param;
    double height = 0.0;  // default sampling line (absolute Im W)
    // levels at which mode amplitudes are reported: n > 0 uses ref_up, n < 0 uses ref_down
    double ref_up = 0.0, ref_down = 0.0;
    std::shared_ptr<const FatouPair> pair;
    std::function<cplx(cplx)> fn;  // synthetic maps

    cplx operator()(cplx W) const;
    // values on W_j = x0 + j/M + i y, j = 0..M-1
    std::vector<cplx> line(double y, int M, double x0 = -1.0) const;
    // sup |Psi(W + 1) - Psi(W) - 1| on a sample line
    double commutation_residual(double y, int samples = 8) const;
};

TransitionMap synthetic_transition(std::function<cplx(cplx)> fn, double height, TransitionKind kind = TransitionKind::Inf);
// W + c0 + sum_n c_n e^{2 pi i n (W - i ref(n))}; keys are mode indices
TransitionMap fourier_transition(const std::map<int, cplx>& coeffs, double height, double ref_up = 0.0,
                                 double ref_down = 0.0, TransitionKind kind = TransitionKind::Inf);

struct TransitionSet {
    std::map<TransitionKind, TransitionMap> maps;
    double y_up = 0.0, y_down = 0.0, y_high = 0.0;  // sampling lines
    const TransitionMap& at(TransitionKind k) const;
    bool has(TransitionKind k) const { return maps.count(k) > 0; }
};
// Inf/Zero for eps <= 0 and sectoral parameters; Gap (= Upper) and Lower for Glutsyuk domains.
TransitionSet transition_maps(const std::shared_ptr<const FatouPair>& fp, double h = 1.5);

struct FourierResult {
    int nmax = 0;
    double height = 0.0;
    int samples = 0;
    double floor = 0.0;             // DFT noise level (top quarter of the spectrum)
    std::vector<cplx> c;            // n = -nmax..nmax at index n + nmax (reported amplitudes)
    std::vector<double> error;      // estimated absolute error per mode
    std::vector<char> resolved;     // mode above its error estimate
    cplx at(int n) const { return c[n + nmax]; }
    double err(int n) const { return error[n + nmax]; }
    bool ok(int n) const { return resolved[n + nmax] != 0; }
};
struct FourierOptions {
    int samples = 0;         // 0: max(64, 4 nmax)
    double alias_tol = 1e-9; // bound on the spectral noise floor
    double resolve_factor = 8.0;
};
// DFT of Psi(W) - W on Im W = y over one period, weighted by e^{2 pi n (y - ref)}.
FourierResult fourier_modulus(const TransitionMap& psi, int nmax, double y, const FourierOptions& opt = {});

struct ModulusRecord {
    SectorParam param;
    cplx eps{}, b{};
    std::string kind;
    bool valid = true;
    std::string error;
    std::string normalization;
    std::vector<cplx> c_inf, c_0, c_G;    // c_0[k] = c^0_{-k}; c_G[n + nmax]
    std::vector<int> unresolved_inf, unresolved_0, unresolved_G;
    std::map<std::string, double> residuals;
    std::shared_ptr<const FatouPair> pair;  // not serialized
};

struct ModulusOptions {
    int nmax = 16;
    double h = 1.5;
    double h_check = 2.0;  // second height for the height-independence oracle (0 = skip)
    double hard_cap = 1e-3;
    FatouOptions fatou;
    FourierOptions fourier;
    int relation_samples = 16;
    bool seam_check = true;  // strong: compare arg pi records with the real negative records
};

struct ModulusData {
    std::string family;
    Mode mode = Mode::Weak;
    int nmax = 16;
    double h = 1.5;
    double delta = 0.2;
    double radius = 0.5;
    std::vector<double> grid;         // weak
    std::vector<double> rays, radii;  // strong
    std::vector<ModulusRecord> records;
};

ModulusRecord modulus_record(const GermFamily& fam, const SectorParam& param, const ModulusOptions& opt = {});
// residuals (a)-(e) plus commutation, one-sidedness and gap consistency; needs rec.pair
std::map<std::string, double> relation_report(const ModulusRecord& rec, const ModulusOptions& opt = {});
// names of residuals that decide validity against the hard cap
bool is_relation_residual(const std::string& name);

ModulusData weak_modulus(const GermFamily& fam, const std::vector<double>& grid, const ModulusOptions& opt = {});
ModulusData strong_modulus(const GermFamily& fam, const std::vector<double>& rays, const std::vector<double>& radii,
                           const ModulusOptions& opt = {});

// Coefficient form of Sigma T_{1/2} Psi^inf = Psi^0 Sigma T_{1/2} up to a common renormalization T_C:
// c_n (-1)^n e^{-2 pi i n C} = conj(d_{-n}), d_{-n} = c_0_bar[n]. C is fitted (imaginary part only
// unless fit_phase); modes unresolved on either side are skipped in the fit and the residual.
struct RelationFit {
    double residual = 0.0;
    cplx shift{};
    int modes = 0;  // nonconstant modes used in the fit
};
RelationFit sigma_relation(const std::vector<cplx>& c_inf, const std::vector<cplx>& c_0_bar,
                           const std::vector<int>& unresolved_inf = {}, const std::vector<int>& unresolved_0 = {},
                           bool fit_phase = false);

json modulus_to_json(const ModulusData& m);
ModulusData modulus_from_json(const json& j);
json record_to_json(const ModulusRecord& r, int nmax);

}  // namespace pmod
