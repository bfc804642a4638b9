#include "evobs/evolution.hpp"

#include <cmath>
#include <complex>
#include <fstream>

#include <Eigen/SparseLU>

#include "evobs/errors.hpp"

namespace evobs {

namespace {

Eigen::SparseMatrix<double> sparse_identity(int n) {
    Eigen::SparseMatrix<double> id(n, n);
    id.setIdentity();
    return id;
}

void check_state_size(const SpectralBasis& basis, const Eigen::VectorXd& u0) {
    if (u0.size() != basis.modes.rows())
        throw ConfigError("initial state size does not match operator");
}

Trajectory make_traj(Equation eq, Method method, std::shared_ptr<const SpectralBasis> basis,
                     double horizon, int steps) {
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    if (steps < 1) throw ConfigError("steps must be >= 1");
    Trajectory t;
    t.equation = eq;
    t.method = method;
    t.basis = std::move(basis);
    t.horizon = horizon;
    t.steps = steps;
    t.q = t.basis->op->potential;
    t.delta = t.q.size() > 0 ? std::max(0.0, t.q.maxCoeff()) : 0.0;
    return t;
}

} // namespace

Eigen::VectorXd Trajectory::full_state_re(int m) const {
    const Grid& g = grid();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(g.num_nodes());
    for (int i = 0; i < g.num_interior(); ++i) out(g.interior_ids()[i]) = re(i, m);
    return out;
}

Eigen::VectorXd Trajectory::full_state_im(int m) const {
    const Grid& g = grid();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(g.num_nodes());
    if (im.size() == 0) return out;
    for (int i = 0; i < g.num_interior(); ++i) out(g.interior_ids()[i]) = im(i, m);
    return out;
}

// ---------------------------------------------------------------------------
// Heat
// ---------------------------------------------------------------------------

Trajectory heat_propagate(std::shared_ptr<const SpectralBasis> basis,
                          const Eigen::VectorXd& u0, double horizon, int steps,
                          Method method) {
    check_state_size(*basis, u0);
    Trajectory traj = make_traj(Equation::heat, method, basis, horizon, steps);
    const int N = basis->size();
    traj.re.resize(N, steps + 1);

    if (method == Method::spectral) {
        for (int j = 0; j < N; ++j)
            if (basis->lambdas(j) * horizon < -700.0)
                throw ConfigError("heat propagation overflows: lambda*t < -700 at mode " +
                                  std::to_string(j + 1));
        const Eigen::VectorXd c0 = coeffs(u0, *basis);
        Eigen::MatrixXd damped(N, steps + 1);
        for (int m = 0; m <= steps; ++m)
            damped.col(m) = (-basis->lambdas.array() * traj.time(m)).exp() * c0.array();
        traj.re = basis->modes * damped;
        return traj;
    }

    const double half = 0.5 * traj.dt();
    const Eigen::SparseMatrix<double> id = sparse_identity(N);
    Eigen::SparseMatrix<double> lhs = id + half * basis->op->matrix;
    Eigen::SparseMatrix<double> rhs = id - half * basis->op->matrix;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(lhs);
    if (lu.info() != Eigen::Success) throw NumericalError("Crank-Nicolson factorization failed");

    traj.re.col(0) = u0;
    for (int m = 0; m < steps; ++m) traj.re.col(m + 1) = lu.solve(rhs * traj.re.col(m));
    return traj;
}

// ---------------------------------------------------------------------------
// Schrodinger
// ---------------------------------------------------------------------------

Trajectory schrodinger_propagate(std::shared_ptr<const SpectralBasis> basis,
                                 const Eigen::VectorXd& u0_re, const Eigen::VectorXd& u0_im,
                                 double horizon, int steps, Method method) {
    check_state_size(*basis, u0_re);
    check_state_size(*basis, u0_im);
    Trajectory traj = make_traj(Equation::schrodinger, method, basis, horizon, steps);
    const int N = basis->size();
    traj.re.resize(N, steps + 1);
    traj.im.resize(N, steps + 1);

    if (method == Method::spectral) {
        // u(t) = sum exp(-i lambda_j t) c_j phi_j
        const Eigen::VectorXd a = coeffs(u0_re, *basis);
        const Eigen::VectorXd b = coeffs(u0_im, *basis);
        Eigen::MatrixXd cre(N, steps + 1), cim(N, steps + 1);
        for (int m = 0; m <= steps; ++m) {
            const Eigen::ArrayXd phase = basis->lambdas.array() * traj.time(m);
            const Eigen::ArrayXd cs = phase.cos(), sn = phase.sin();
            cre.col(m) = a.array() * cs + b.array() * sn;
            cim.col(m) = b.array() * cs - a.array() * sn;
        }
        traj.re = basis->modes * cre;
        traj.im = basis->modes * cim;
        return traj;
    }

    using Cplx = std::complex<double>;
    const Cplx ihalf(0.0, 0.5 * traj.dt());
    Eigen::SparseMatrix<Cplx> A = basis->op->matrix.cast<Cplx>();
    Eigen::SparseMatrix<Cplx> id(N, N);
    id.setIdentity();
    Eigen::SparseMatrix<Cplx> lhs = id + ihalf * A;
    Eigen::SparseMatrix<Cplx> rhs = id - ihalf * A;
    Eigen::SparseLU<Eigen::SparseMatrix<Cplx>> lu(lhs);
    if (lu.info() != Eigen::Success) throw NumericalError("Cayley factorization failed");

    Eigen::VectorXcd u = u0_re + Cplx(0.0, 1.0) * u0_im;
    traj.re.col(0) = u.real();
    traj.im.col(0) = u.imag();
    for (int m = 0; m < steps; ++m) {
        u = lu.solve(rhs * u);
        traj.re.col(m + 1) = u.real();
        traj.im.col(m + 1) = u.imag();
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Wave
// ---------------------------------------------------------------------------

Trajectory wave_propagate(std::shared_ptr<const SpectralBasis> basis,
                          const Eigen::VectorXd& u0, const Eigen::VectorXd& u1,
                          const Eigen::VectorXd& p_interior, double horizon, int steps,
                          Method method) {
    check_state_size(*basis, u0);
    check_state_size(*basis, u1);
    Trajectory traj = make_traj(Equation::wave, method, basis, horizon, steps);
    const int N = basis->size();
    const bool damped = p_interior.size() > 0 && p_interior.cwiseAbs().maxCoeff() > 0.0;
    if (p_interior.size() > 0 && p_interior.size() != N)
        throw ConfigError("damping field size mismatch");
    traj.p = damped ? p_interior : Eigen::VectorXd::Zero(N);
    traj.re.resize(N, steps + 1);
    traj.velocity.resize(N, steps + 1);

    if (method == Method::spectral) {
        if (damped)
            throw ConfigError("spectral wave propagation requires zero damping; use the stepper");
        if (basis->lambdas(0) <= 0.0)
            throw ConfigError("spectral wave propagation requires a positive spectrum");
        const Eigen::VectorXd a = coeffs(u0, *basis);
        const Eigen::VectorXd b = coeffs(u1, *basis);
        const Eigen::ArrayXd omega = basis->lambdas.array().sqrt();
        Eigen::MatrixXd cu(N, steps + 1), cv(N, steps + 1);
        for (int m = 0; m <= steps; ++m) {
            const Eigen::ArrayXd phase = omega * traj.time(m);
            const Eigen::ArrayXd cs = phase.cos(), sn = phase.sin();
            cu.col(m) = a.array() * cs + b.array() * sn / omega;
            cv.col(m) = -a.array() * omega * sn + b.array() * cs;
        }
        traj.re = basis->modes * cu;
        traj.velocity = basis->modes * cv;
        return traj;
    }

    // Implicit midpoint on (u, v): solve (I + k^2 A - k P) vbar = v - k A u,
    // then u+ = u + dt vbar, v+ = 2 vbar - v.  Unconditionally stable and
    // exactly energy-balanced: E_{m+1} - E_m = 2 dt <P vbar, vbar>_mass.
    const double k = 0.5 * traj.dt();
    Eigen::SparseMatrix<double> lhs = sparse_identity(N);
    lhs += (k * k) * basis->op->matrix;
    if (damped) {
        Eigen::SparseMatrix<double> P(N, N);
        P.reserve(Eigen::VectorXi::Constant(N, 1));
        for (int i = 0; i < N; ++i) P.insert(i, i) = traj.p(i);
        lhs -= k * P;
    }
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(lhs);
    if (lu.info() != Eigen::Success) throw NumericalError("midpoint factorization failed");

    Eigen::VectorXd u = u0, v = u1;
    traj.re.col(0) = u;
    traj.velocity.col(0) = v;
    for (int m = 0; m < steps; ++m) {
        const Eigen::VectorXd vbar = lu.solve(v - k * (basis->op->matrix * u));
        u += traj.dt() * vbar;
        v = 2.0 * vbar - v;
        traj.re.col(m + 1) = u;
        traj.velocity.col(m + 1) = v;
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Boundary flux
// ---------------------------------------------------------------------------

namespace {

// One-sided second-order normal derivative at boundary node `id` along wall
// axis `axis` (sigma = outward sign). With u(id) = 0 on the wall:
//   d_axis u = -sigma * (4 u_1 - u_2) / (2 h).
double wall_derivative(const Grid& grid, const Eigen::VectorXd& full, int id, int axis,
                       double sigma) {
    const int stride = (axis == 0) ? 1 : grid.nodes_per_axis(0);
    const int step = static_cast<int>(-sigma) * stride;
    const double u1 = full(id + step);
    const double u2 = full(id + 2 * step);
    return -sigma * (4.0 * u1 - u2) / (2.0 * grid.spacing(axis));
}

void flux_at_step(const Grid& grid, const MetricField& g, const Eigen::VectorXd& full,
                  int m, Eigen::MatrixXd& conormal, Eigen::MatrixXd& euclid) {
    for (int b = 0; b < grid.num_boundary(); ++b) {
        const int id = grid.boundary_ids()[b];
        const int ix = grid.ix_of(id);
        const int iy = grid.iy_of(id);
        Vec2 grad{};
        if (ix == 0) grad.x = wall_derivative(grid, full, id, 0, -1.0);
        if (ix == grid.nodes_per_axis(0) - 1) grad.x = wall_derivative(grid, full, id, 0, 1.0);
        if (grid.dim() == 2) {
            if (iy == 0) grad.y = wall_derivative(grid, full, id, 1, -1.0);
            if (iy == grid.nodes_per_axis(1) - 1)
                grad.y = wall_derivative(grid, full, id, 1, 1.0);
        }
        const Vec2 nu = grid.normal(id);
        conormal(b, m) = g.at(id).apply(grad, grid.dim()).dot(nu);
        euclid(b, m) = grad.dot(nu);
    }
}

} // namespace

FluxTrace boundary_flux(const Trajectory& traj, const Grid& grid, const MetricField& g) {
    for (int k = 0; k < grid.dim(); ++k)
        if (grid.nodes_per_axis(k) < 4)
            throw ConfigError("boundary flux needs at least 4 nodes per axis");
    if (&traj.grid() != &grid) throw ConfigError("trajectory and grid mismatch");

    FluxTrace flux;
    flux.grid = traj.basis->op->grid;
    flux.horizon = traj.horizon;
    flux.steps = traj.steps;
    const int B = grid.num_boundary();
    flux.conormal_re.resize(B, traj.steps + 1);
    flux.euclid_re.resize(B, traj.steps + 1);
    if (traj.is_complex()) {
        flux.conormal_im.resize(B, traj.steps + 1);
        flux.euclid_im.resize(B, traj.steps + 1);
    }

    for (int m = 0; m <= traj.steps; ++m) {
        flux_at_step(grid, g, traj.full_state_re(m), m, flux.conormal_re, flux.euclid_re);
        if (traj.is_complex())
            flux_at_step(grid, g, traj.full_state_im(m), m, flux.conormal_im, flux.euclid_im);
    }
    return flux;
}

// ---------------------------------------------------------------------------
// Region norms
// ---------------------------------------------------------------------------

namespace {

double time_weight(double horizon, int steps, int m) {
    const double dt = horizon / steps;
    return (m == 0 || m == steps) ? 0.5 * dt : dt;
}

} // namespace

double region_norm(const FluxTrace& flux, const ObservationRegion& region, NormKind nk,
                   FluxComponent which) {
    if (region.kind == RegionKind::interior_cylinder)
        throw ConfigError("interior region needs trajectory states, not a flux trace");
    const Grid& grid = *flux.grid;

    const Eigen::MatrixXd& vre =
        which == FluxComponent::conormal ? flux.conormal_re : flux.euclid_re;
    const Eigen::MatrixXd* vim = nullptr;
    if (flux.is_complex())
        vim = which == FluxComponent::conormal ? &flux.conormal_im : &flux.euclid_im;

    if (region.kind == RegionKind::spacetime_set && region.steps != flux.steps)
        throw ConfigError("spacetime region step count does not match the trace");

    double acc = 0.0;
    for (std::size_t k = 0; k < region.space_mask.size(); ++k) {
        const int id = region.space_mask[k];
        const int b = grid.boundary_index(id);
        if (b < 0) throw ConfigError("flux region norm over a non-boundary node");
        const double w_space = grid.bweight(id);
        for (int m = 0; m <= flux.steps; ++m) {
            if (region.kind == RegionKind::spacetime_set && !region.time_mask[k][m]) continue;
            const double wt = time_weight(flux.horizon, flux.steps, m) * w_space;
            const double re = vre(b, m);
            const double imv = vim ? (*vim)(b, m) : 0.0;
            if (nk == NormKind::L2)
                acc += wt * (re * re + imv * imv);
            else
                acc += wt * std::sqrt(re * re + imv * imv);
        }
    }
    return nk == NormKind::L2 ? std::sqrt(acc) : acc;
}

double region_norm(const Trajectory& traj, const ObservationRegion& region, NormKind nk) {
    if (region.kind == RegionKind::lateral_boundary)
        throw ConfigError("lateral region needs a flux trace, not trajectory states");
    const Grid& grid = traj.grid();
    if (region.kind == RegionKind::spacetime_set && region.steps != traj.steps)
        throw ConfigError("spacetime region step count does not match the trajectory");

    double acc = 0.0;
    for (std::size_t k = 0; k < region.space_mask.size(); ++k) {
        const int id = region.space_mask[k];
        const int i = grid.interior_index(id);
        if (i < 0) throw ConfigError("state region norm over a boundary node");
        const double w_space = grid.vweight(id);
        for (int m = 0; m <= traj.steps; ++m) {
            if (region.kind == RegionKind::spacetime_set && !region.time_mask[k][m]) continue;
            const double wt = time_weight(traj.horizon, traj.steps, m) * w_space;
            const double re = traj.re(i, m);
            const double imv = traj.is_complex() ? traj.im(i, m) : 0.0;
            if (nk == NormKind::L2)
                acc += wt * (re * re + imv * imv);
            else
                acc += wt * std::sqrt(re * re + imv * imv);
        }
    }
    return nk == NormKind::L2 ? std::sqrt(acc) : acc;
}

// ---------------------------------------------------------------------------
// Dumps
// ---------------------------------------------------------------------------

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << (traj.is_complex() ? "t,node,re,im\n" : "t,node,value\n");
    out.precision(17);
    const Grid& grid = traj.grid();
    for (int m = 0; m <= traj.steps; ++m)
        for (int i = 0; i < grid.num_interior(); ++i) {
            out << traj.time(m) << ',' << grid.interior_ids()[i] << ',' << traj.re(i, m);
            if (traj.is_complex()) out << ',' << traj.im(i, m);
            out << '\n';
        }
}

void write_flux_csv(const FluxTrace& flux, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "t,node,conormal,euclidean\n";
    out.precision(17);
    const Grid& grid = *flux.grid;
    for (int m = 0; m <= flux.steps; ++m) {
        const double t = flux.horizon * m / flux.steps;
        for (int b = 0; b < grid.num_boundary(); ++b)
            out << t << ',' << grid.boundary_ids()[b] << ',' << flux.conormal_re(b, m) << ','
                << flux.euclid_re(b, m) << '\n';
    }
}

} // namespace evobs
