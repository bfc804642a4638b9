#pragma once

#include <memory>

#include <Eigen/Dense>

#include "evobs/spectral.hpp"

namespace evobs {

enum class Equation { heat, schrodinger, wave };
enum class Method { spectral, stepper };

/// Nodal states of one evolution run at uniform times t_m = horizon*m/steps.
/// States live on interior nodes; the boundary trace is identically zero and
/// full_state() materializes it that way. Schrodinger states keep split
/// real/imaginary parts; wave runs also carry the velocity.
struct Trajectory {
    Equation equation = Equation::heat;
    Method method = Method::spectral;
    double horizon = 0.0;
    int steps = 0;

    Eigen::MatrixXd re;           // N_int x (steps+1)
    Eigen::MatrixXd im;           // empty unless schrodinger
    Eigen::MatrixXd velocity;     // wave only

    Eigen::VectorXd q;            // interior potential (folded into the operator)
    Eigen::VectorXd p;            // interior damping (wave only; empty = 0)
    double delta = 0.0;           // sup q if positive, else 0

    std::shared_ptr<const SpectralBasis> basis;

    double dt() const { return horizon / steps; }
    double time(int m) const { return horizon * m / steps; }
    bool is_complex() const { return im.size() > 0; }
    const Grid& grid() const { return basis->grid(); }

    Eigen::VectorXd full_state_re(int m) const;
    Eigen::VectorXd full_state_im(int m) const;
};

/// Heat flow u' = -A u. Spectral evaluation is exact per step; the stepper is
/// Crank-Nicolson. Shifted operators may have negative eigenvalues (growth);
/// modes that would overflow exp are rejected up front.
Trajectory heat_propagate(std::shared_ptr<const SpectralBasis> basis,
                          const Eigen::VectorXd& u0, double horizon, int steps,
                          Method method);

/// Schrodinger flow u' = -i A u; spectral phases or Crank-Nicolson (Cayley),
/// which is unitary in the mass inner product.
Trajectory schrodinger_propagate(std::shared_ptr<const SpectralBasis> basis,
                                 const Eigen::VectorXd& u0_re, const Eigen::VectorXd& u0_im,
                                 double horizon, int steps, Method method);

/// Wave flow u'' = -A u + p u'. Spectral requires p = 0 and positive spectrum;
/// otherwise implicit midpoint on the first-order system.
Trajectory wave_propagate(std::shared_ptr<const SpectralBasis> basis,
                          const Eigen::VectorXd& u0, const Eigen::VectorXd& u1,
                          const Eigen::VectorXd& p_interior, double horizon, int steps,
                          Method method);

/// Conormal (g grad u | nu) and Euclidean (grad u | nu) boundary derivatives,
/// reconstructed per boundary node by one-sided second-order differences along
/// the inward axis; tangential derivatives vanish with the Dirichlet data.
struct FluxTrace {
    std::shared_ptr<const Grid> grid;
    double horizon = 0.0;
    int steps = 0;
    // rows aligned with grid->boundary_ids()
    Eigen::MatrixXd conormal_re, euclid_re;
    Eigen::MatrixXd conormal_im, euclid_im;  // empty for real equations

    bool is_complex() const { return conormal_im.size() > 0; }
};

FluxTrace boundary_flux(const Trajectory& traj, const Grid& grid, const MetricField& g);

enum class FluxComponent { conormal, euclidean };

/// Space-time norm of a flux trace over a lateral or spacetime region
/// (trapezoid in time, boundary quadrature in space).
double region_norm(const FluxTrace& flux, const ObservationRegion& region, NormKind nk,
                   FluxComponent which = FluxComponent::conormal);

/// Space-time norm of the states over an interior or spacetime region.
double region_norm(const Trajectory& traj, const ObservationRegion& region, NormKind nk);

void write_trajectory_csv(const Trajectory& traj, const std::string& path);
void write_flux_csv(const FluxTrace& flux, const std::string& path);

} // namespace evobs
