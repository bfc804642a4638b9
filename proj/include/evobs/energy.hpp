#pragma once

#include <string>
#include <vector>

#include "evobs/evolution.hpp"

namespace evobs {

/// How time integrals over Q_t are evaluated. Trapezoid works on any stored
/// trajectory; closed_form is available for spectral trajectories with a
/// constant (or absent) potential and removes quadrature error entirely, so
/// inequality margins are meaningful down to rounding.
enum class TimeQuadrature { trapezoid, closed_form, automatic };

struct EnergyCheck {
    std::string name;      // statement tag, e.g. "e4", "e5", "balance"
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;   // rhs - lhs for inequalities
    double residual = 0.0; // relative, for identities
    double tolerance = 0.0;
    bool pass = true;
    bool informational = false;
};

struct EnergyReport {
    Equation equation = Equation::heat;
    TimeQuadrature quadrature = TimeQuadrature::trapezoid;
    std::vector<double> times;
    std::vector<double> l2norm;            // ||u(t)||
    std::vector<double> grad_energy;       // ||sqrt(g) grad u||^2
    std::vector<double> potential_energy;  // ||sqrt(delta-q) u||^2 or ||sqrt(-q) u||^2
    std::vector<double> kinetic_energy;    // wave only
    std::vector<EnergyCheck> checks;

    bool all_pass() const;
    const EnergyCheck& check(const std::string& name) const;
};

/// Heat flow audit: the balance identity of the damped substitution
/// v = e^{-delta t} u, plus the a-priori bounds tagged e4 / e5 / e7 (the e7
/// trailing term is evaluated in both its Q- and Omega-norm readings).
EnergyReport heat_audit(const Trajectory& traj,
                        TimeQuadrature quadrature = TimeQuadrature::automatic);

/// Schrodinger audit: L2 conservation (e9) and graded-energy conservation
/// (e8); requires q <= 0.
EnergyReport schrodinger_audit(const Trajectory& traj);

/// Wave audit: total-energy monotonicity (e11) and the dissipation identity
/// E(t) - E(0) = 2 int p |du/dt|^2; requires p <= 0 and q <= 0.
EnergyReport wave_audit(const Trajectory& traj,
                        TimeQuadrature quadrature = TimeQuadrature::automatic);

void write_energy_csv(const EnergyReport& rep, const std::string& path);

} // namespace evobs
