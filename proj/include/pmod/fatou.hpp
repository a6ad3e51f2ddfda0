#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pmod/dynamics.hpp"

namespace pmod {

// Parameter on the universal cover of the punctured disk: modulus and lifted argument.
struct SectorParam {
    double modulus = 0.0;
    double arg = 0.0;

    cplx eps() const;
    cplx sqrt_eps() const { return lifted_sqrt(modulus, arg); }
    // real parameter with its natural determination (arg 0 or pi)
    static SectorParam real(double eps);
    bool is_real() const;
    // reflection of the sector: arg -> 2 pi - arg
    SectorParam sector_conj() const { return {modulus, 2.0 * M_PI - arg}; }
};

enum class DomainKind { Glutsyuk, Lavaurs, Sectoral, Parabolic };
std::string domain_kind_name(DomainKind k);

enum class Mode { Weak, Strong };

struct FatouOptions {
    double tol = 1e-8;
    Mode mode = Mode::Weak;
    double delta = 0.2;          // sector margin
    double x0 = 4.0;             // initial distance of the line from the anchor point
    std::optional<double> slope; // direction angle of the line (radians)
    double dt = 0.0;             // grid step along the line (0 = automatic)
    int max_iter = 200;
    long max_depth = 100000;
    double min_clearance = 2.0;
    double height = 1.5;         // sampling height above the hole for the normalization constant
    bool periodic_strip = false; // Glutsyuk: Fourier solve on one period instead of orbit sums
    double base_radius = 0.0;    // base point X = Z^+(base_radius) on the real axis (0 = r)
};

// ℓ: Z = base + t dir (t real) in the chart of its side.
struct TranslationDomain {
    SectorParam param;
    int side = +1;
    DomainKind kind = DomainKind::Lavaurs;
    cplx base{}, dir{};
    double clearance = 0.0;   // distance from ℓ to the hole boundary (sampled)
    double step_margin = 0.0; // min transversal displacement of G along ℓ
    double t_lo = 0.0, t_hi = 0.0;
};

// Fourier representation of phi = Phi - Z on the line (strip solver).
struct StripData {
    cplx Z0{}, d{};
    double t0 = 0.0, dt = 0.25, L = 0.0;
    int N = 0;
    bool periodic = false;
    std::vector<cplx> coef;  // psi_hat / N, FFT ordering
    std::vector<double> k;
    cplx mu{};
    double width = 2.0;
    std::vector<OrbitPoint> line;  // marched points t = t_first + j dt
    double t_first = 0.0;
    int iterations = 0;
    double update = 0.0;
    double spectrum_tail = 0.0;

    cplx phi(cplx tau) const;
    cplx dphi(cplx tau) const;
    // nearest marched point
    const OrbitPoint& nearest(double t) const;
};

enum class FatouMethod { Identity, OrbitSum, Strip, Parabolic };

class FatouCoordinate {
public:
    std::shared_ptr<const Dynamics> dyn;
    TranslationDomain domain;
    FatouMethod method = FatouMethod::Identity;
    int side = +1;
    cplx C{};  // additive normalization constant
    std::string normalization;
    std::map<std::string, double> residuals;
    std::shared_ptr<const StripData> strip;
    std::vector<cplx> hseries;  // parabolic tail correction h(z) = sum h_m z^m
    double parabolic_stop = 0.02;
    long max_depth = 100000;

    cplx value(const OrbitPoint& p) const;
    cplx raw(const OrbitPoint& p) const { return value(p) - C; }
    struct Preimage {
        OrbitPoint p;
        int shift = 0;  // value(p) = W - shift
    };
    // seed: a point whose straight Z-path to the preimage stays in the domain.
    Preimage inverse(cplx W, std::optional<OrbitPoint> seed = std::nullopt) const;
    // Point on ℓ at parameter t (strip) or at base + t dir.
    OrbitPoint line_point(double t) const;
    OrbitPoint anchor_point() const;

private:
    cplx orbit_sum(const OrbitPoint& p) const;
    cplx parabolic_value(const OrbitPoint& p) const;
    cplx strip_value(const OrbitPoint& p) const;
};

struct HoleExtent {
    double top = 0.0, bottom = 0.0;  // Im Z^+ over the upper / lower arc
    double left = 0.0, right = 0.0;  // Re Z^+ range of the circle image
};
HoleExtent hole_extent(const Dynamics& dyn, int samples = 400);

TranslationDomain translation_domain(const Dynamics& dyn, const SectorParam& param, int side, const FatouOptions& opt);

struct FatouPair {
    std::shared_ptr<const Dynamics> dyn;
    SectorParam param;
    FatouCoordinate plus, minus;
    HoleExtent hole;
    std::map<std::string, double> residuals;
    std::map<std::string, std::string> notes;
    cplx b() const { return dyn->b(); }
    // reference boundary level |Im W| = 1/r for sampling heights and reported Fourier amplitudes
    double ref_level() const { return 1.0 / dyn->radius(); }
};

// Raw coordinates (Phi^+(X) = 0 normalization only).
FatouPair fatou_pair_raw(const GermFamily& fam, const SectorParam& param, const FatouOptions& opt = {});
// Fully normalized pair (weak: real eps with the antiholomorphic adjustment; strong: c0 = -i pi b).
FatouPair fatou_pair(const GermFamily& fam, const SectorParam& param, const FatouOptions& opt = {});

// Psi(W) = Phi^- o T_{-/+ i pi b} o (Phi^+)^{-1}(W); above = true uses -i pi b.
cplx transition_value(const FatouPair& fp, cplx W, bool above, std::optional<OrbitPoint> seed = std::nullopt);
// Absolute Im W of a sampling line h above the reference level (or below its mirror).
double sampling_height(const FatouPair& fp, double h, bool above);
// Seed point on the Z^+ side at height Im Z = y, just left of the base point.
OrbitPoint transition_seed(const FatouPair& fp, double y);

// Abel residual sup |Phi(G p) - Phi(p) - 1| on a test set near the line.
double abel_residual(const FatouCoordinate& phi, int samples = 24);
// sup |Phi(F p) - conj Phi(p) - 1/2| and the extracted constant kappa (real eps).
std::pair<double, cplx> antiholomorphic_residual(const FatouCoordinate& phi, int samples = 12);
// Glutsyuk: sup |Phi(p + alpha) - Phi(p) - alpha|.
double period_commutation_residual(const FatouCoordinate& phi, int samples = 12);

// CSV: t, Z_re, Z_im, phi_re, phi_im, abel_residual
void dump_fatou_csv(const FatouCoordinate& phi, const std::string& path, int samples = 200);

}  // namespace pmod
