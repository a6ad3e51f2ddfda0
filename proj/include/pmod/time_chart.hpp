#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "pmod/errors.hpp"

namespace pmod {

using cplx = std::complex<double>;

// A point of the universal cover: z together with continuously tracked
// logarithms L1 = log((z - p1)/(a - p1)), L2 = log((z - p2)/(a - p2)).
// In the parabolic chart only L1 = log(z/a) is used.
struct LiftedPoint {
    cplx z;
    cplx L1, L2;
};

// Time coordinate Z = A L1 + B L2 + offset (two simple singular points) or
// Z = -c/z + c/a + beta L1 + offset (one double point at 0).
class Chart {
public:
    static Chart two_point(cplx p1, cplx p2, cplx A, cplx B, double anchor);
    static Chart parabolic(cplx c, cplx beta, double anchor);

    bool is_parabolic() const { return parabolic_; }
    cplx p1() const { return p1_; }
    cplx p2() const { return p2_; }
    cplx A() const { return A_; }
    cplx B() const { return B_; }
    cplx c() const { return c_; }
    cplx beta() const { return beta_; }
    double anchor() const { return anchor_; }
    cplx offset() const { return offset_; }
    void set_offset(cplx o) { offset_ = o; }

    cplx Z(const LiftedPoint& p) const;
    cplx dZdz(cplx z) const;
    // Logs continued along the straight segment from the anchor.
    LiftedPoint principal(cplx z) const;
    // Continue the logs from p (small move assumed).
    LiftedPoint advance(const LiftedPoint& p, cplx z_new) const;
    // Continue p along the straight Z-segment to Z(target).
    LiftedPoint continue_to(const LiftedPoint& from, cplx Z_target, double escape_radius = 1e9) const;
    // Path continuation of the logs along a polyline in z starting at the anchor.
    LiftedPoint along_path(const std::vector<cplx>& waypoints, cplx z) const;
    // Distance-like scale to the nearest singular point.
    double singular_distance(cplx z) const;

private:
    bool parabolic_ = false;
    cplx p1_{}, p2_{}, A_{}, B_{}, c_{}, beta_{};
    double anchor_ = 0.5;
    cplx offset_{};
};

// Model chart for dz/dt = (z^2 - eps)/(1 + b z).
struct TimeChart {
    cplx eps;
    double b = 0.0;
    int sign = +1;
    double r = 0.5;
    cplx sqrt_eps;  // lifted square root used for the singular points
    std::vector<cplx> path;  // optional waypoints (branch_track); empty = straight segments
    Chart chart = Chart::parabolic(1.0, 0.0, 0.5);
    std::vector<std::pair<cplx, LiftedPoint>> seeds;  // coarse (Z, lifted z) grid
};

// sqrt_lift: a square root of eps selecting the sheet (default principal).
TimeChart make_time_chart(cplx eps, double b, int sign, double r,
                          std::optional<cplx> sqrt_lift = std::nullopt);

// Anchor offset so that Z+ - Z- = ±i pi b on the circle |z| = r.
cplx minus_chart_offset(const Chart& plus, const Chart& minus_plain, double r);

cplx time_coord(const TimeChart& chart, cplx z);
LiftedPoint time_coord_lifted(const TimeChart& chart, cplx z);
cplx time_inverse(const TimeChart& chart, cplx Z, std::optional<cplx> seed = std::nullopt);
LiftedPoint time_inverse_lifted(const TimeChart& chart, cplx Z, std::optional<LiftedPoint> seed = std::nullopt);

// ±i pi / sqrt(eps) + i pi b (principal square root unless lifted).
cplx period(cplx eps, double b, int sign, std::optional<cplx> sqrt_lift = std::nullopt);

// v^t(z) = Z^{-1}(Z(z) + t), continued along the straight Z-segment.
cplx flow_map(cplx eps, double b, cplx t, cplx z, double r = 0.5);

// Principal complex square root with an optional lifted argument in
// (-pi + delta, 3pi - delta): returns |eps|^{1/2} e^{i arg/2}.
cplx lifted_sqrt(double modulus, double arg);

}  // namespace pmod
