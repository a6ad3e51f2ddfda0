#pragma once

#include <ostream>
#include <vector>

#include "pmod/germ.hpp"

namespace pmod {

struct PortraitPoint {
    cplx z;
    int orbit_id = 0;  // >= 0: forward orbit; -1: circle |z| = r; -2: its image under g (croissant edge)
    int index = 0;
};

struct PortraitOptions {
    int orbits = 24;
    int iterates = 400;
    double seed_radius = 0.8;  // seeds on |z| = seed_radius * r
    int boundary_samples = 256;
};

std::vector<PortraitPoint> orbit_portrait(const GermFamily& fam, double eps, const PortraitOptions& opt = {});
// columns z_re, z_im, orbit_id, iterate_index
void write_portrait_csv(std::ostream& out, const std::vector<PortraitPoint>& pts);

}  // namespace pmod
