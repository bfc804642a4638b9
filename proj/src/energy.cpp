#include "evobs/energy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "evobs/errors.hpp"
#include "evobs/util.hpp"

namespace evobs {

namespace {

double trapezoid(const std::vector<double>& f, double dt) {
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t m = 1; m + 1 < f.size(); ++m) s += f[m];
    return s * dt;
}

// Estimated trapezoid error of int f dt from the stored samples:
// (dt^2/12) int |f''|, with f'' read off second differences. Oscillatory
// integrands (wave energies) need the integral form, not endpoint slopes.
double quad_error_estimate(const std::vector<double>& f, double dt) {
    if (f.size() < 3) return 0.0;
    double acc = 0.0;
    for (std::size_t m = 1; m + 1 < f.size(); ++m)
        acc += std::abs(f[m + 1] - 2.0 * f[m] + f[m - 1]);
    return dt * acc / 6.0;
}

bool potential_is_constant(const Eigen::VectorXd& q) {
    if (q.size() == 0) return true;
    return (q.array() - q(0)).abs().maxCoeff() <= 1e-14 * (1.0 + std::abs(q(0)));
}

EnergyCheck identity_check(std::string name, double residual, double tol) {
    EnergyCheck c;
    c.name = std::move(name);
    c.residual = residual;
    c.tolerance = tol;
    c.pass = residual <= tol;
    return c;
}

EnergyCheck inequality_check(std::string name, double lhs, double rhs, double tol,
                             bool informational = false) {
    EnergyCheck c;
    c.name = std::move(name);
    c.lhs = lhs;
    c.rhs = rhs;
    c.margin = rhs - lhs;
    c.tolerance = tol;
    c.pass = c.margin >= -tol;
    c.informational = informational;
    return c;
}

} // namespace

bool EnergyReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.informational && !c.pass) return false;
    return true;
}

const EnergyCheck& EnergyReport::check(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw ConfigError("no energy check named '" + name + "'");
}

// ---------------------------------------------------------------------------
// Heat
// ---------------------------------------------------------------------------

EnergyReport heat_audit(const Trajectory& traj, TimeQuadrature quadrature) {
    if (traj.equation != Equation::heat) throw ConfigError("heat_audit: wrong equation tag");
    const DiscreteOperator& op = *traj.basis->op;
    const int M = traj.steps;
    const double dt = traj.dt();
    const double T = traj.horizon;
    const double delta = traj.delta;
    const Eigen::VectorXd q =
        traj.q.size() ? traj.q : Eigen::VectorXd::Zero(op.size());
    const Eigen::VectorXd delta_minus_q = Eigen::VectorXd::Constant(op.size(), delta) - q;

    if (quadrature == TimeQuadrature::automatic)
        quadrature = (traj.method == Method::spectral && potential_is_constant(q))
                         ? TimeQuadrature::closed_form
                         : TimeQuadrature::trapezoid;
    if (quadrature == TimeQuadrature::closed_form &&
        (traj.method != Method::spectral || !potential_is_constant(q)))
        throw ConfigError("closed-form quadrature needs a spectral run with constant potential");

    EnergyReport rep;
    rep.equation = Equation::heat;
    rep.quadrature = quadrature;

    // Per-step scalars (in u).
    std::vector<double> grad_u(M + 1), dtu_sq(M + 1), pot_u(M + 1);
    rep.times.resize(M + 1);
    rep.l2norm.resize(M + 1);
    for (int m = 0; m <= M; ++m) {
        const Eigen::VectorXd u = traj.re.col(m);
        rep.times[m] = traj.time(m);
        rep.l2norm[m] = op.mass_norm(u);
        grad_u[m] = op.pure_quad_form(u);
        pot_u[m] = op.weighted_mass_form(delta_minus_q, u);
        const Eigen::VectorXd dudt = -(op.matrix * u);
        dtu_sq[m] = op.mass_dot(dudt, dudt);
    }
    rep.grad_energy = grad_u;
    rep.potential_energy = pot_u;

    const double l2_0 = rep.l2norm[0];

    // Balance identity for v = e^{-delta t} u at every stored t:
    //   int_0^t ||sqrt(g) grad v||^2 + int_0^t (delta-q) v^2
    //     = 1/2 ||v(0)||^2 - 1/2 ||v(t)||^2.
    double worst_balance = 0.0;
    double balance_tol = 1e-10;
    if (quadrature == TimeQuadrature::trapezoid) {
        std::vector<double> integrand(M + 1);
        for (int m = 0; m <= M; ++m) {
            const double damp = std::exp(-2.0 * delta * rep.times[m]);
            integrand[m] = damp * (grad_u[m] + pot_u[m]);
        }
        double acc = 0.0;
        for (int m = 1; m <= M; ++m) {
            acc += 0.5 * dt * (integrand[m - 1] + integrand[m]);
            const double v0 = l2_0;
            const double vt = std::exp(-delta * rep.times[m]) * rep.l2norm[m];
            const double residual =
                std::abs(acc - 0.5 * v0 * v0 + 0.5 * vt * vt) / (0.5 * v0 * v0);
            worst_balance = std::max(worst_balance, residual);
        }
        balance_tol =
            std::max(1e-10, quad_error_estimate(integrand, dt) / (0.5 * l2_0 * l2_0));
    } else {
        // Spectral run, constant q: everything reduces to per-mode integrals.
        const double qc = q.size() ? q(0) : 0.0;
        const Eigen::VectorXd c0 = coeffs(traj.re.col(0), *traj.basis);
        const Eigen::VectorXd& mu = traj.basis->lambdas;  // shifted eigenvalues
        for (int m = 1; m <= M; ++m) {
            const double t = rep.times[m];
            double lhs = 0.0;
            for (int j = 0; j < c0.size(); ++j) {
                // grad + (delta-q) terms of v, integrated exactly
                const double w = (mu(j) + qc) + (delta - qc);
                lhs += w * c0(j) * c0(j) * decay_integral(mu(j) + delta, t);
            }
            const double v0 = l2_0;
            double vt_sq = 0.0;
            for (int j = 0; j < c0.size(); ++j)
                vt_sq += c0(j) * c0(j) * std::exp(-2.0 * (mu(j) + delta) * t);
            const double residual =
                std::abs(lhs - 0.5 * v0 * v0 + 0.5 * vt_sq) / (0.5 * v0 * v0);
            worst_balance = std::max(worst_balance, residual);
        }
    }
    rep.checks.push_back(identity_check("balance", worst_balance, balance_tol));

    // (e4): sqrt(2) ||sqrt(g) grad u||_{L2(Q)} <= e^{delta T} ||u(0)||.
    double grad_Q, dtu_Q, u_Q;
    double grad_err = 0.0, dtu_err = 0.0;  // quadrature error of the squared integrals
    if (quadrature == TimeQuadrature::trapezoid) {
        std::vector<double> l2sq(M + 1);
        for (int m = 0; m <= M; ++m) l2sq[m] = rep.l2norm[m] * rep.l2norm[m];
        grad_Q = trapezoid(grad_u, dt);
        dtu_Q = trapezoid(dtu_sq, dt);
        u_Q = trapezoid(l2sq, dt);
        grad_err = quad_error_estimate(grad_u, dt);
        dtu_err = quad_error_estimate(dtu_sq, dt);
    } else {
        const double qc = q.size() ? q(0) : 0.0;
        const Eigen::VectorXd c0 = coeffs(traj.re.col(0), *traj.basis);
        const Eigen::VectorXd& mu = traj.basis->lambdas;
        grad_Q = dtu_Q = u_Q = 0.0;
        for (int j = 0; j < c0.size(); ++j) {
            const double I = decay_integral(mu(j), T);
            const double c2 = c0(j) * c0(j);
            grad_Q += (mu(j) + qc) * c2 * I;
            dtu_Q += mu(j) * mu(j) * c2 * I;
            u_Q += c2 * I;
        }
    }
    const double growth = std::exp(delta * T);
    // Tolerance of an unsquared bound whose LHS^2 carries quadrature error e:
    // |d sqrt(x)| = e / (2 sqrt(x)).
    auto sqrt_tol = [&](double lhs, double err) {
        return 1e-12 * std::max(1.0, l2_0) + (err > 0.0 ? err / std::max(2.0 * lhs, 1e-30) : 0.0);
    };
    const double lhs_e4 = std::sqrt(2.0 * grad_Q);
    rep.checks.push_back(
        inequality_check("e4", lhs_e4, growth * l2_0, sqrt_tol(lhs_e4, 2.0 * grad_err)));

    // (e5): ||u(t)|| <= e^{delta T} ||u(0)|| at every stored t (no quadrature).
    double worst_l2 = 0.0;
    for (int m = 0; m <= M; ++m) worst_l2 = std::max(worst_l2, rep.l2norm[m]);
    rep.checks.push_back(
        inequality_check("e5", worst_l2, growth * l2_0, 1e-12 * std::max(1.0, l2_0)));

    // (e7): ||du/dt||_{L2(Q)} <= e^{delta T}(||sqrt(g) grad u(0)|| +
    //        sup sqrt(delta-q) ||u(0)||) + delta * <trailing term>.
    // Trailing term recorded in both readings: L2(Q) (normative) and the
    // sup-in-time L2(Omega) reading.
    const double sup_sqrt = std::sqrt(delta_minus_q.maxCoeff());
    const double common = growth * (std::sqrt(grad_u[0]) + sup_sqrt * l2_0);
    const double lhs_e7 = std::sqrt(dtu_Q);
    rep.checks.push_back(inequality_check("e7", lhs_e7, common + delta * std::sqrt(u_Q),
                                          sqrt_tol(lhs_e7, dtu_err)));
    rep.checks.push_back(inequality_check("e7-omega", lhs_e7, common + delta * worst_l2,
                                          sqrt_tol(lhs_e7, dtu_err),
                                          /*informational=*/true));
    return rep;
}

// ---------------------------------------------------------------------------
// Schrodinger
// ---------------------------------------------------------------------------

EnergyReport schrodinger_audit(const Trajectory& traj) {
    if (traj.equation != Equation::schrodinger)
        throw ConfigError("schrodinger_audit: wrong equation tag");
    if (traj.q.size() && traj.q.maxCoeff() > 0.0)
        throw ConfigError("schrodinger_audit: requires q <= 0");
    const DiscreteOperator& op = *traj.basis->op;
    const int M = traj.steps;

    EnergyReport rep;
    rep.equation = Equation::schrodinger;
    rep.times.resize(M + 1);
    rep.l2norm.resize(M + 1);
    rep.grad_energy.resize(M + 1);
    rep.potential_energy.resize(M + 1);

    const Eigen::VectorXd minus_q =
        traj.q.size() ? Eigen::VectorXd(-traj.q) : Eigen::VectorXd::Zero(op.size());

    std::vector<double> graded(M + 1);
    for (int m = 0; m <= M; ++m) {
        const Eigen::VectorXd re = traj.re.col(m), im = traj.im.col(m);
        rep.times[m] = traj.time(m);
        rep.l2norm[m] = std::sqrt(op.mass_dot(re, re) + op.mass_dot(im, im));
        rep.grad_energy[m] = op.pure_quad_form(re) + op.pure_quad_form(im);
        rep.potential_energy[m] =
            op.weighted_mass_form(minus_q, re) + op.weighted_mass_form(minus_q, im);
        graded[m] = rep.grad_energy[m] + rep.potential_energy[m];
    }

    const double tol_l2 = traj.method == Method::spectral ? 1e-12 : 1e-11;
    double worst_l2 = 0.0, worst_graded = 0.0;
    for (int m = 0; m <= M; ++m) {
        worst_l2 = std::max(worst_l2, std::abs(rep.l2norm[m] - rep.l2norm[0]) / rep.l2norm[0]);
        worst_graded = std::max(worst_graded, std::abs(graded[m] - graded[0]) / graded[0]);
    }
    rep.checks.push_back(identity_check("e9", worst_l2, tol_l2));
    rep.checks.push_back(identity_check("e8", worst_graded, 1e-10));
    return rep;
}

// ---------------------------------------------------------------------------
// Wave
// ---------------------------------------------------------------------------

EnergyReport wave_audit(const Trajectory& traj, TimeQuadrature quadrature) {
    if (traj.equation != Equation::wave) throw ConfigError("wave_audit: wrong equation tag");
    if (traj.q.size() && traj.q.maxCoeff() > 0.0)
        throw ConfigError("wave_audit: requires q <= 0");
    if (traj.p.size() && traj.p.maxCoeff() > 0.0)
        throw ConfigError("wave_audit: requires p <= 0");
    const DiscreteOperator& op = *traj.basis->op;
    const int M = traj.steps;
    const double dt = traj.dt();
    if (quadrature == TimeQuadrature::automatic) quadrature = TimeQuadrature::trapezoid;

    EnergyReport rep;
    rep.equation = Equation::wave;
    rep.quadrature = quadrature;
    rep.times.resize(M + 1);
    rep.l2norm.resize(M + 1);
    rep.grad_energy.resize(M + 1);
    rep.potential_energy.resize(M + 1);
    rep.kinetic_energy.resize(M + 1);

    const Eigen::VectorXd minus_q =
        traj.q.size() ? Eigen::VectorXd(-traj.q) : Eigen::VectorXd::Zero(op.size());

    std::vector<double> total(M + 1), damping_rate(M + 1);
    for (int m = 0; m <= M; ++m) {
        const Eigen::VectorXd u = traj.re.col(m), v = traj.velocity.col(m);
        rep.times[m] = traj.time(m);
        rep.l2norm[m] = op.mass_norm(u);
        rep.kinetic_energy[m] = op.mass_dot(v, v);
        rep.grad_energy[m] = op.pure_quad_form(u);
        rep.potential_energy[m] = op.weighted_mass_form(minus_q, u);
        total[m] = rep.kinetic_energy[m] + rep.grad_energy[m] + rep.potential_energy[m];
        damping_rate[m] = traj.p.size() ? op.weighted_mass_form(traj.p, v) : 0.0;
    }

    const double e0 = total[0];
    const double scale = std::max(1.0, e0);

    // (e11): E nonincreasing; with p = 0 it is conserved.
    double worst_violation = 0.0;
    for (int m = 0; m < M; ++m)
        worst_violation = std::max(worst_violation, total[m + 1] - total[m]);
    rep.checks.push_back(
        inequality_check("e11-monotone", worst_violation, 0.0, 1e-10 * scale));
    const bool undamped = traj.p.size() == 0 || traj.p.cwiseAbs().maxCoeff() == 0.0;
    if (undamped) {
        double worst_drift = 0.0;
        for (int m = 0; m <= M; ++m)
            worst_drift = std::max(worst_drift, std::abs(total[m] - e0) / e0);
        rep.checks.push_back(
            identity_check("e11-conservation", worst_drift,
                           traj.method == Method::spectral ? 1e-10 : 1e-9));
    }

    // Dissipation identity: E(t) - E(0) = 2 int_0^t int p |du/dt|^2.
    double worst_dissipation = 0.0;
    double acc = 0.0;
    for (int m = 1; m <= M; ++m) {
        acc += 0.5 * dt * (damping_rate[m - 1] + damping_rate[m]);
        worst_dissipation =
            std::max(worst_dissipation, std::abs(total[m] - e0 - 2.0 * acc) / e0);
    }
    // The identity's discrete form integrates |du/dt|^2 at step midpoints, so
    // the mismatch against the stored-node trapezoid carries an extra dt^2/4
    // term on top of the trapezoid's own dt^2/12.
    const double diss_tol =
        std::max(1e-10, 4.0 * quad_error_estimate(damping_rate, dt) / e0);
    rep.checks.push_back(identity_check("dissipation", worst_dissipation, diss_tol));
    return rep;
}

void write_energy_csv(const EnergyReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "t,l2norm,grad_energy,potential_energy,kinetic_energy\n";
    out.precision(17);
    for (std::size_t m = 0; m < rep.times.size(); ++m) {
        out << rep.times[m] << ',' << rep.l2norm[m] << ',' << rep.grad_energy[m] << ','
            << rep.potential_energy[m] << ','
            << (rep.kinetic_energy.empty() ? 0.0 : rep.kinetic_energy[m]) << '\n';
    }
}

} // namespace evobs
