#pragma once

#include <vector>

#include "evobs/geometry.hpp"

namespace evobs {

/// Rank-3 coefficient array of the first-derivative correction tensor,
/// indexed [k][l][m] (all indices < dim).
struct LambdaTensor {
    double v[2][2][2] = {};
    double operator()(int k, int l, int m) const { return v[k][l][m]; }
};

/// lambda[k][l][m] = -sum_p dg_kl/dx_p * g_pm + 2 sum_p g_kp * dg_lm/dx_p.
LambdaTensor lambda_tensor(const MetricField& g, int node);

struct ThetaField {
    std::vector<Sym2> theta;      // per node, symmetrized
    double max_asymmetry = 0.0;   // largest |Theta - Theta^T| entry before symmetrization
};

/// Theta_g(h) = 2 g (Hess h) g + Upsilon_g(h), Upsilon_kl = sum_m lambda_klm d_m h.
ThetaField theta_tensor(const MetricField& g, const WeightFunction& h);

struct PseudoconvexReport {
    std::vector<Sym2> theta;
    std::vector<double> grad_norm; // |grad h| per node
    double kappa = 0.0;            // min over nodes of lambda_min(Theta)
    double m_h = 0.0;              // min over nodes of |grad h|
    bool is_pseudoconvex = false;  // kappa > 0 and m_h > 0
    double max_asymmetry = 0.0;
    // Aligned with grid.boundary_ids():
    std::vector<double> conormal;  // (g grad h | nu) per boundary node
    std::vector<int> gamma_mask;   // boundary node ids with conormal > 0 (strict)
};

PseudoconvexReport check_pseudoconvex(const MetricField& g, const WeightFunction& h,
                                      const Grid& grid);

/// CSV of (node, lambda_min(Theta), |grad h|, conormal) — conormal is empty
/// for interior nodes.
void write_pseudoconvex_csv(const PseudoconvexReport& rep, const Grid& grid,
                            const std::string& path);

} // namespace evobs
