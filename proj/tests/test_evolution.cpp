#include <doctest.h>

#include <cmath>
#include <random>

#include "evobs/errors.hpp"
#include "evobs/evolution.hpp"
#include "evobs/pseudoconvex.hpp"

using namespace evobs;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Setup {
    std::shared_ptr<const Grid> grid;
    MetricField metric;
    std::shared_ptr<const SpectralBasis> basis;
};

Setup setup_1d(int nodes, double length = kPi) {
    Setup s;
    s.grid = build_grid(1, {0.0, 0.0}, {length, 0.0}, {nodes, 0});
    s.metric = sample_metric(MetricSpec{}, s.grid);
    s.basis = eigendecompose(assemble(s.metric, s.grid));
    return s;
}

Eigen::VectorXd random_state(const SpectralBasis& basis, int modes, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(basis.size());
    for (int j = 0; j < std::min(modes, basis.size()); ++j) c(j) = gauss(rng);
    c /= c.norm();
    return basis.modes * c;
}

} // namespace

TEST_SUITE_BEGIN("evolution");

TEST_CASE("heat single mode decays with the exact factor") {
    auto s = setup_1d(80);
    const double T = 0.1;
    const Trajectory traj =
        heat_propagate(s.basis, s.basis->modes.col(0), T, 10, Method::spectral);
    const double c = coeffs(traj.re.col(traj.steps), *s.basis)(0);
    const double expected = std::exp(-s.basis->lambdas(0) * T);
    CHECK(std::abs(c - expected) / expected <= 1e-12);
}

TEST_CASE("heat L2 norm never grows without a positive potential") {
    auto s = setup_1d(60);
    const Eigen::VectorXd u0 = random_state(*s.basis, 40, 17);
    const Trajectory traj = heat_propagate(s.basis, u0, 0.2, 50, Method::spectral);
    double prev = s.basis->op->mass_norm(traj.re.col(0));
    for (int m = 1; m <= traj.steps; ++m) {
        const double cur = s.basis->op->mass_norm(traj.re.col(m));
        CHECK(cur <= prev + 1e-14);
        prev = cur;
    }
}

TEST_CASE("Crank-Nicolson heat converges at second order to the spectral flow") {
    auto s = setup_1d(48);
    const Eigen::VectorXd u0 = random_state(*s.basis, 6, 3);
    const double T = 0.1;
    const Trajectory ref = heat_propagate(s.basis, u0, T, 1, Method::spectral);
    auto err = [&](int M) {
        const Trajectory cn = heat_propagate(s.basis, u0, T, M, Method::stepper);
        const Eigen::VectorXd d = cn.re.col(M) - ref.re.col(ref.steps);
        return std::sqrt(s.basis->op->mass_dot(d, d));
    };
    const double order = std::log2(err(100) / err(200));
    CHECK(order >= 1.8);
    CHECK(order <= 2.2);
}

TEST_CASE("heat overflow guard rejects runaway growth") {
    auto grid = build_grid(1, {0.0, 0.0}, {kPi, 0.0}, {40, 0});
    const MetricField g = sample_metric(MetricSpec{}, grid);
    std::vector<double> q(grid->num_nodes(), 1.0e4);  // lambda - q strongly negative
    auto basis = eigendecompose(assemble(g, grid, q));
    const Eigen::VectorXd u0 = basis->modes.col(0);
    CHECK_THROWS_AS(heat_propagate(basis, u0, 0.1, 10, Method::spectral), ConfigError);
}

TEST_CASE("Schrodinger conserves the L2 norm; single-mode phase rotates") {
    auto s = setup_1d(64);
    const Eigen::VectorXd re0 = random_state(*s.basis, 20, 5);
    const Eigen::VectorXd im0 = random_state(*s.basis, 20, 6);
    const double norm0 = std::sqrt(s.basis->op->mass_dot(re0, re0) +
                                   s.basis->op->mass_dot(im0, im0));

    for (Method method : {Method::spectral, Method::stepper}) {
        const Trajectory traj = schrodinger_propagate(s.basis, re0, im0, 0.3, 200, method);
        for (int m = 0; m <= traj.steps; m += 40) {
            const double nm = std::sqrt(s.basis->op->mass_dot(traj.re.col(m), traj.re.col(m)) +
                                        s.basis->op->mass_dot(traj.im.col(m), traj.im.col(m)));
            CHECK(std::abs(nm - norm0) / norm0 <= 1e-12);
        }
    }

    const Eigen::VectorXd phi1 = s.basis->modes.col(0);
    const Trajectory one =
        schrodinger_propagate(s.basis, phi1, Eigen::VectorXd::Zero(phi1.size()), 0.5, 100,
                              Method::spectral);
    for (int m = 0; m <= one.steps; m += 25) {
        const double cre = coeffs(one.re.col(m), *s.basis)(0);
        const double cim = coeffs(one.im.col(m), *s.basis)(0);
        CHECK(std::hypot(cre, cim) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("Schrodinger single mode returns after one period") {
    auto s = setup_1d(40);
    const double period = 2.0 * kPi / s.basis->lambdas(0);
    const Eigen::VectorXd phi1 = s.basis->modes.col(0);
    const Trajectory traj = schrodinger_propagate(
        s.basis, phi1, Eigen::VectorXd::Zero(phi1.size()), period, 64, Method::spectral);
    CHECK((traj.re.col(traj.steps) - phi1).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(traj.im.col(traj.steps).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("Cayley stepper drift stays below 1e-12 over 1000 steps") {
    auto s = setup_1d(50);
    const Eigen::VectorXd re0 = random_state(*s.basis, 30, 8);
    const Eigen::VectorXd im0 = random_state(*s.basis, 30, 9);
    const Trajectory traj = schrodinger_propagate(s.basis, re0, im0, 1.0, 1000,
                                                  Method::stepper);
    const double n0 = std::sqrt(s.basis->op->mass_dot(traj.re.col(0), traj.re.col(0)) +
                                s.basis->op->mass_dot(traj.im.col(0), traj.im.col(0)));
    double worst = 0.0;
    for (int m = 1; m <= traj.steps; ++m) {
        const double nm = std::sqrt(s.basis->op->mass_dot(traj.re.col(m), traj.re.col(m)) +
                                    s.basis->op->mass_dot(traj.im.col(m), traj.im.col(m)));
        worst = std::max(worst, std::abs(nm - n0) / n0);
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("wave single mode follows the cosine; spectral energy is flat") {
    auto s = setup_1d(72);
    const Eigen::VectorXd phi1 = s.basis->modes.col(0);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(phi1.size());
    const Trajectory traj = wave_propagate(s.basis, phi1, zero, {}, 2.0, 100, Method::spectral);
    const double omega = std::sqrt(s.basis->lambdas(0));
    for (int m = 0; m <= traj.steps; m += 10) {
        const Eigen::VectorXd expected = std::cos(omega * traj.time(m)) * phi1;
        CHECK((traj.re.col(m) - expected).cwiseAbs().maxCoeff() <= 1e-10);
    }

    const auto energy = [&](int m) {
        return s.basis->op->mass_dot(traj.velocity.col(m), traj.velocity.col(m)) +
               s.basis->op->quad_form(traj.re.col(m));
    };
    const double e0 = energy(0);
    for (int m = 0; m <= traj.steps; m += 10)
        CHECK(std::abs(energy(m) - e0) / e0 <= 1e-10);
}

TEST_CASE("implicit midpoint with damping never gains energy") {
    auto s = setup_1d(48);
    const Eigen::VectorXd u0 = random_state(*s.basis, 12, 30);
    const Eigen::VectorXd u1 = random_state(*s.basis, 12, 31);
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(s.basis->size(), -0.5);
    const Trajectory traj = wave_propagate(s.basis, u0, u1, p, 1.0, 400, Method::stepper);
    const auto energy = [&](int m) {
        return s.basis->op->mass_dot(traj.velocity.col(m), traj.velocity.col(m)) +
               s.basis->op->quad_form(traj.re.col(m));
    };
    double prev = energy(0);
    for (int m = 1; m <= traj.steps; ++m) {
        const double cur = energy(m);
        CHECK(cur <= prev + 1e-10 * std::max(1.0, prev));
        prev = cur;
    }
}

TEST_CASE("spectral wave requires zero damping") {
    auto s = setup_1d(20);
    const Eigen::VectorXd u0 = s.basis->modes.col(0);
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(s.basis->size(), -0.1);
    CHECK_THROWS_AS(
        wave_propagate(s.basis, u0, u0, p, 1.0, 10, Method::spectral), ConfigError);
}

TEST_CASE("wave time reversal returns the initial state") {
    auto s = setup_1d(56);
    const Eigen::VectorXd u0 = random_state(*s.basis, 15, 41);
    const Eigen::VectorXd u1 = random_state(*s.basis, 15, 42);
    const Trajectory fwd = wave_propagate(s.basis, u0, u1, {}, 0.7, 64, Method::spectral);
    const Trajectory back = wave_propagate(s.basis, fwd.re.col(fwd.steps),
                                           Eigen::VectorXd(-fwd.velocity.col(fwd.steps)), {},
                                           0.7, 64, Method::spectral);
    const Eigen::VectorXd diff = back.re.col(back.steps) - u0;
    CHECK(std::sqrt(s.basis->op->mass_dot(diff, diff)) <= 1e-9);
}

TEST_CASE("boundary read-back is exactly zero") {
    auto s = setup_1d(32);
    const Trajectory traj = heat_propagate(s.basis, random_state(*s.basis, 10, 2), 0.1, 20,
                                           Method::spectral);
    for (int m = 0; m <= traj.steps; ++m) {
        const Eigen::VectorXd full = traj.full_state_re(m);
        for (int id : s.grid->boundary_ids()) CHECK(full(id) == 0.0);
    }
}

TEST_CASE("boundary flux of sin(x) is -1 at the left endpoint, second order") {
    auto flux_error = [&](int nodes) {
        auto s = setup_1d(nodes);
        Eigen::VectorXd u(s.basis->size());
        for (int i = 0; i < s.basis->size(); ++i)
            u(i) = std::sin(s.grid->coord(s.grid->interior_ids()[i]).x);
        Trajectory traj = heat_propagate(s.basis, u, 1.0, 1, Method::spectral);
        traj.re.col(0) = u;  // inspect the t=0 slice of the sampled field
        const FluxTrace flux = boundary_flux(traj, *s.grid, s.metric);
        // outward nu = -1 at x=0: d_nu u = -u'(0) = -cos(0) = -1
        return std::abs(flux.euclid_re(0, 0) - (-1.0));
    };
    const double e1 = flux_error(41);
    const double e2 = flux_error(81);
    CHECK(flux_error(81) <= 1e-3);
    const double order = std::log2(e1 / e2);
    CHECK(order >= 1.7);
    CHECK(order <= 2.3);
}

TEST_CASE("zero states give zero flux and zero region norms") {
    auto s = setup_1d(24);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(s.basis->size());
    const Trajectory traj = heat_propagate(s.basis, zero, 0.1, 8, Method::spectral);
    const FluxTrace flux = boundary_flux(traj, *s.grid, s.metric);
    CHECK(flux.conormal_re.cwiseAbs().maxCoeff() == 0.0);

    const ObservationRegion lat = build_lateral_region(s.grid->boundary_ids(), *s.grid);
    CHECK(region_norm(flux, lat, NormKind::L2) == 0.0);
    CHECK(region_norm(flux, lat, NormKind::L1) == 0.0);
}

TEST_CASE("flux reconstruction needs four nodes per axis") {
    auto s = setup_1d(3);
    const Trajectory traj = heat_propagate(s.basis, Eigen::VectorXd::Zero(1), 0.1, 2,
                                           Method::spectral);
    CHECK_THROWS_AS(boundary_flux(traj, *s.grid, s.metric), ConfigError);
}

TEST_CASE("region norms: subset monotone, interior L1 matches a direct sum") {
    auto grid = build_grid(2, {0.0, 0.0}, {1.0, 1.0}, {10, 10});
    const MetricField g = sample_metric(MetricSpec{}, grid);
    auto basis = eigendecompose(assemble(g, grid));
    const Eigen::VectorXd u0 = random_state(*basis, 20, 55);
    const Trajectory traj = heat_propagate(basis, u0, 0.05, 16, Method::spectral);
    const FluxTrace flux = boundary_flux(traj, *grid, g);

    // gamma from psi = |x-x0|^2 is a strict subset of the boundary
    const WeightFunction psi = sample_weight({"sq-dist", {-1.0, -1.0}}, grid);
    const PseudoconvexReport pc = check_pseudoconvex(g, psi, *grid);
    const ObservationRegion gamma = build_lateral_region(pc.gamma_mask, *grid, "gamma");
    const ObservationRegion full = build_lateral_region(grid->boundary_ids(), *grid, "full");
    const double sub = region_norm(flux, gamma, NormKind::L2);
    const double all = region_norm(flux, full, NormKind::L2);
    CHECK(sub <= all + 1e-12 * all);

    // interior L1 over the whole cylinder vs an independently coded double sum
    const ObservationRegion omega =
        build_interior_region(grid->interior_ids(), *grid, "all-interior", NormKind::L1);
    const double lib = region_norm(traj, omega, NormKind::L1);
    double direct = 0.0;
    for (int m = 0; m <= traj.steps; ++m) {
        const double wt = (m == 0 || m == traj.steps) ? 0.5 * traj.dt() : traj.dt();
        for (int i = 0; i < grid->num_interior(); ++i)
            direct += wt * grid->vweight(grid->interior_ids()[i]) * std::abs(traj.re(i, m));
    }
    CHECK(lib == doctest::Approx(direct).epsilon(1e-12));

    // misuse of region kinds
    CHECK_THROWS_AS(region_norm(traj, full, NormKind::L2), ConfigError);
    CHECK_THROWS_AS(region_norm(flux, omega, NormKind::L2), ConfigError);
}

TEST_CASE("spacetime region norms select exactly the masked cells") {
    auto s = setup_1d(16);
    const Eigen::VectorXd u0 = random_state(*s.basis, 8, 70);
    const Trajectory traj = heat_propagate(s.basis, u0, 0.1, 12, Method::spectral);
    const FluxTrace flux = boundary_flux(traj, *s.grid, s.metric);

    const ObservationRegion st =
        build_spacetime_region(s.grid->boundary_ids(), *s.grid, 12, 0.35, 7, "F");
    double direct = 0.0;
    for (std::size_t k = 0; k < st.space_mask.size(); ++k) {
        const int b = s.grid->boundary_index(st.space_mask[k]);
        for (int m = 0; m <= 12; ++m) {
            if (!st.time_mask[k][m]) continue;
            const double wt = (m == 0 || m == 12) ? 0.5 * traj.dt() : traj.dt();
            direct += wt * s.grid->bweight(st.space_mask[k]) * std::abs(flux.conormal_re(b, m));
        }
    }
    CHECK(region_norm(flux, st, NormKind::L1) == doctest::Approx(direct).epsilon(1e-13));

    // mismatched step count is rejected
    const Trajectory other = heat_propagate(s.basis, u0, 0.1, 6, Method::spectral);
    const FluxTrace flux_other = boundary_flux(other, *s.grid, s.metric);
    CHECK_THROWS_AS(region_norm(flux_other, st, NormKind::L1), ConfigError);
}

TEST_SUITE_END();
