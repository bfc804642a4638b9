#pragma once

#include "evobs/continuation.hpp"
#include "evobs/report.hpp"

namespace evobs {

/// Everything a suite run needs, built once from the config: grid, fields,
/// operators (pure and q-shifted), bases and the standard observation regions.
struct Workspace {
    RunConfig cfg;
    std::shared_ptr<const Grid> grid;
    MetricField metric;
    WeightFunction psi;
    PseudoconvexReport pc;

    std::shared_ptr<const SpectralBasis> basis_pure;
    std::shared_ptr<const SpectralBasis> basis_q;  // null when no potential configured
    Eigen::VectorXd p_interior;                    // empty when no damping configured

    ObservationRegion gamma;          // lateral, conormal-positive boundary part
    ObservationRegion full_boundary;  // lateral, all boundary nodes
    ObservationRegion omega;          // interior cylinder
    ObservationRegion spacetime_f;    // random (boundary node, step) subset, L1
};

Workspace build_workspace(const RunConfig& cfg);

SuiteReport run_check_pseudoconvex(const Workspace& ws, const std::string& outdir);
SuiteReport run_simulate(const Workspace& ws, const std::string& outdir);
SuiteReport run_verify_energy(const Workspace& ws, const std::string& outdir);
SuiteReport run_verify_continuation(const Workspace& ws, const std::string& outdir);
SuiteReport run_observability_scan(const Workspace& ws, const std::string& outdir);
SuiteReport run_full_suite(const Workspace& ws, const std::string& outdir);

} // namespace evobs
