#pragma once

#include <map>
#include <string>
#include <vector>

#include "pmod/germ.hpp"
#include "pmod/io.hpp"

namespace pmod {

struct PreparedInvariants {
    // eps as a series in the fixed-point parameter eta (fixed points at z^2 = eta)
    CVec<double> eps_of_eta;
    // b as a series in the canonical parameter
    CVec<double> b_series;
    // b as a series in eta (before reparametrization)
    CVec<double> b_of_eta;
    // eta as a series in the input family's own parameter
    CVec<double> eta_of_param;
    CVec<double> B0, B1;
    Series Q{12, 6};
    // raw node data
    std::vector<double> nodes;
    std::vector<double> eps_nodes, b_nodes;
    double fit_residual = 0.0;
    double realness_defect = 0.0;  // max |Im| of eps, b over the nodes
    std::vector<double> eps_nodes_param;  // same values indexed by the input parameter nodes
};

struct PrepareOptions {
    int nodes = 16;
    double tol = 1e-9;
};

// Canonical parameter and formal invariant from the multipliers of g at its
// two fixed points, sampled on Chebyshev nodes of the family's own parameter.
PreparedInvariants canonical_invariants(const GermFamily& fam, const PrepareOptions& opt = {});

// eps and b from a pair of multipliers (principal logs).
std::pair<cplx, cplx> eps_b_from_multipliers(cplx lambda_plus, cplx lambda_minus);

struct PrepareResult {
    // z_original = change(param, u); change is written in the input parameter
    Series change{12, 6};
    // input parameter as a series in the canonical parameter
    CVec<double> param_of_eps;
    GermFamily prepared;
    PreparedInvariants inv;
    std::map<std::string, double> residuals;
    bool identity = false;
};

PrepareResult prepare(const GermFamily& fam, const PrepareOptions& opt = {});

json preparation_report(const PrepareResult& r);

// Residuals of the prepared-form checks (realness of B0/B1, B0(0) = 1/2,
// tau symmetry on a small eps grid, exact fixed points).
std::map<std::string, double> prepared_form_residuals(const GermFamily& fam);

}  // namespace pmod
