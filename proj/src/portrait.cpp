#include "pmod/portrait.hpp"

#include <cmath>
#include <iomanip>

namespace pmod {

std::vector<PortraitPoint> orbit_portrait(const GermFamily& fam, double eps, const PortraitOptions& opt) {
    std::vector<PortraitPoint> pts;
    for (int k = 0; k < opt.orbits; ++k) {
        cplx z = std::polar(opt.seed_radius * fam.r, 2.0 * M_PI * (k + 0.5) / opt.orbits);
        for (int n = 0; n < opt.iterates; ++n) {
            pts.push_back({z, k, n});
            if (std::abs(z) >= 0.999 * fam.r) break;
            z = evaluate(fam, eps, z);
            if (!std::isfinite(std::abs(z))) break;
        }
    }
    const bool anti = fam.conjugating();
    for (int j = 0; j < opt.boundary_samples; ++j) {
        // slightly inside the circle so that evaluation stays in the domain
        const cplx z = std::polar(0.999 * fam.r, 2.0 * M_PI * j / opt.boundary_samples);
        pts.push_back({z, -1, j});
        cplx w = evaluate(fam, eps, z);
        if (anti && std::abs(w) < fam.r) w = evaluate(fam, eps, w);
        else if (anti) continue;
        pts.push_back({w, -2, j});
    }
    return pts;
}

void write_portrait_csv(std::ostream& out, const std::vector<PortraitPoint>& pts) {
    out << "z_re,z_im,orbit_id,iterate_index\n";
    out << std::setprecision(17);
    for (const auto& p : pts) out << p.z.real() << ',' << p.z.imag() << ',' << p.orbit_id << ',' << p.index << '\n';
}

}  // namespace pmod
