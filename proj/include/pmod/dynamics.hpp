#pragma once

// Lifted dynamics of the second iterate in the time chart matched to the
// multipliers of a family at one parameter value.

#include <complex>
#include <optional>

#include "pmod/germ.hpp"
#include "pmod/poly.hpp"
#include "pmod/time_chart.hpp"

namespace pmod {

// A point of the lifted domain. d1 = z - p1 and d2 = z - p2 are kept to full
// relative precision (both equal z in the parabolic chart); Z is the lifted
// time coordinate in whichever chart the caller works in.
struct OrbitPoint {
    cplx z, d1, d2;
    cplx Z;
};

class Dynamics {
public:
    // sqrt_lift selects the sheet: p1 is the fixed point near sqrt_lift.
    static Dynamics build(const GermFamily& fam, cplx eps, std::optional<cplx> sqrt_lift = std::nullopt);

    bool parabolic() const { return parabolic_; }
    bool is_model() const { return model_; }
    bool antiholomorphic() const { return two_step_; }
    cplx eps() const { return eps_; }
    cplx sqrt_eps() const { return sqrt_eps_; }
    double radius() const { return r_; }
    cplx p1() const { return p1_; }
    cplx p2() const { return p2_; }
    cplx A() const { return A_; }
    cplx B() const { return B_; }
    cplx c() const { return c_; }
    cplx beta() const { return beta_; }
    // formal invariant of the matched chart: A + B (or beta at eps = 0)
    cplx b() const { return parabolic_ ? beta_ : A_ + B_; }
    // 2 pi i A = alpha^+, 2 pi i B = alpha^-
    cplx alpha_plus() const;
    cplx alpha_minus() const;
    cplx minus_offset() const { return minus_offset_; }
    const Chart& chart(int sign) const { return sign >= 0 ? plus_ : minus_; }

    // Principal point: logs along the straight segment from sign * r.
    OrbitPoint at(cplx z, int sign) const;
    // X = Z^+(r) = 0
    OrbitPoint base_point() const { return at(r_, +1); }
    // Continue p along the straight Z-segment to Z_target.
    OrbitPoint seek(const OrbitPoint& p, cplx Z_target) const;
    OrbitPoint forward(const OrbitPoint& p) const;
    OrbitPoint backward(const OrbitPoint& p) const;
    // u = Z(G(p)) - Z(p) - 1
    cplx defect(const OrbitPoint& p) const;
    // Lift of f itself (real eps, antiholomorphic families).
    OrbitPoint flift(const OrbitPoint& p) const;
    // Time-chart derivative dZ/dz at p.
    cplx dZdz(const OrbitPoint& p) const;
    // g = second iterate (or the holomorphic family itself)
    cplx g(cplx z) const;
    cplx f(cplx z) const;
    double singular_distance(const OrbitPoint& p) const;
    bool real_parameter() const { return eps_.imag() == 0.0; }
    double time_step() const { return model_time_; }
    // Taylor coefficients of g at 0, orders 0..n-1
    poly::Poly g_series(int n) const;

private:
    struct Step {
        cplx rho1, rho2;  // (g(z) - p_i)/(z - p_i), or g(z)/z
        cplx dZ;
    };
    Step step_data(const OrbitPoint& p) const;
    cplx rho(cplx z, int i) const;
    cplx gprime(cplx z) const;

    bool parabolic_ = false, model_ = false, two_step_ = true;
    cplx eps_{}, sqrt_eps_{};
    double r_ = 0.5;
    double model_b_ = 0.0, model_time_ = 0.5;
    cplx p1_{}, p2_{}, A_{}, B_{}, c_{}, beta_{};
    cplx w1_{}, w2_{};  // Sb(p_i)
    cplx minus_offset_{};
    poly::Poly S_, Sb_;
    Chart plus_ = Chart::parabolic(1.0, 0.0, 0.5), minus_ = Chart::parabolic(1.0, 0.0, -0.5);
};

}  // namespace pmod
