#include <doctest.h>

#include <cmath>
#include <random>

#include "evobs/errors.hpp"
#include "evobs/spectral.hpp"

using namespace evobs;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::shared_ptr<const SpectralBasis> basis_1d(int nodes, double length = kPi) {
    auto grid = build_grid(1, {0.0, 0.0}, {length, 0.0}, {nodes, 0});
    return eigendecompose(assemble(sample_metric(MetricSpec{}, grid), grid));
}

Eigen::VectorXd random_field(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = gauss(rng);
    return w;
}

} // namespace

TEST_SUITE_BEGIN("spectral");

TEST_CASE("1D eigenvalues match the tridiagonal closed form") {
    const int nodes = 80;
    auto basis = basis_1d(nodes);
    const double h = kPi / (nodes - 1);
    for (int j = 1; j <= basis->size(); ++j) {
        const double mu = (2.0 - 2.0 * std::cos(j * kPi / (nodes - 1))) / (h * h);
        CHECK(basis->lambdas(j - 1) == doctest::Approx(mu).epsilon(1e-9));
    }
}

TEST_CASE("modes are mass-orthonormal and satisfy the eigen relation") {
    auto basis = basis_1d(60);
    const int N = basis->size();
    const Eigen::MatrixXd gram =
        basis->modes.transpose() * basis->op->mass.asDiagonal() * basis->modes;
    CHECK((gram - Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff() <= 1e-10);

    for (int j : {0, N / 2, N - 1}) {
        const Eigen::VectorXd r =
            basis->op->matrix * basis->modes.col(j) - basis->lambdas(j) * basis->modes.col(j);
        const double res = std::sqrt(basis->op->mass_dot(r, r));
        CHECK(res <= 1e-9 * std::max(1.0, basis->lambdas(j)));
    }
    CHECK(basis->lambdas(0) > 0.0);
    for (int j = 1; j < N; ++j) CHECK(basis->lambdas(j) >= basis->lambdas(j - 1));
}

TEST_CASE("coefficients: unit vectors, linearity, Parseval") {
    auto basis = basis_1d(50);
    const int N = basis->size();

    const Eigen::VectorXd c3 = coeffs(basis->modes.col(2), *basis);
    for (int j = 0; j < N; ++j)
        CHECK(std::abs(c3(j) - (j == 2 ? 1.0 : 0.0)) <= 1e-10);

    const Eigen::VectorXd mix = 2.0 * basis->modes.col(0) + 3.0 * basis->modes.col(4);
    const Eigen::VectorXd cm = coeffs(mix, *basis);
    CHECK(cm(0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(cm(4) == doctest::Approx(3.0).epsilon(1e-10));
    for (int j = 0; j < N; ++j)
        if (j != 0 && j != 4) CHECK(std::abs(cm(j)) <= 1e-10);

    const Eigen::VectorXd w = random_field(N, 5);
    const double parseval = coeffs(w, *basis).squaredNorm();
    const double l2 = basis->op->mass_dot(w, w);
    CHECK(std::abs(parseval - l2) / l2 <= 1e-10);
}

TEST_CASE("spectral reconstruction closes on random fields") {
    auto basis = basis_1d(40);
    for (unsigned s = 0; s < 100; ++s) {
        const Eigen::VectorXd w = random_field(basis->size(), 100 + s);
        const Eigen::VectorXd back = reconstruct(coeffs(w, *basis), *basis);
        const double err = std::sqrt(basis->op->mass_dot(back - w, back - w));
        CHECK(err <= 1e-9 * std::sqrt(basis->op->mass_dot(w, w)));
    }
}

TEST_CASE("spectral norms: single modes and operator identities") {
    auto basis = basis_1d(48);
    const Eigen::VectorXd phi1 = basis->modes.col(0);
    CHECK(snorm(phi1, *basis, SNorm::H10) ==
          doctest::Approx(std::sqrt(basis->lambdas(0))).epsilon(1e-12));

    const Eigen::VectorXd w = random_field(basis->size(), 9);
    const double h10sq = snorm(w, *basis, SNorm::H10);
    CHECK(h10sq * h10sq == doctest::Approx(basis->op->quad_form(w)).epsilon(1e-10));

    const double ht2 = snorm(w, *basis, SNorm::Htheta, 2.0);
    const Eigen::VectorXd aw = basis->op->apply(w);
    CHECK(ht2 == doctest::Approx(std::sqrt(basis->op->mass_dot(aw, aw))).epsilon(1e-10));

    CHECK_THROWS_AS(snorm(w, *basis, SNorm::Htheta, 1.0), ConfigError);
}

TEST_CASE("projection: edge thresholds, exact complement, Pythagoras") {
    auto basis = basis_1d(30);
    const Eigen::VectorXd w = random_field(basis->size(), 21);

    const Eigen::VectorXd low_all =
        project(w, *basis, basis->lambdas(basis->size() - 1), SplitSide::low);
    const Eigen::VectorXd high_none =
        project(w, *basis, basis->lambdas(basis->size() - 1), SplitSide::high);
    CHECK((low_all + high_none - w).cwiseAbs().maxCoeff() == 0.0);
    CHECK(high_none.cwiseAbs().maxCoeff() <= 1e-12);

    const Eigen::VectorXd low1 = project(w, *basis, basis->lambdas(0), SplitSide::low);
    const double c1 = coeffs(w, *basis)(0);
    const double diff = std::sqrt(
        basis->op->mass_dot(low1 - c1 * basis->modes.col(0), low1 - c1 * basis->modes.col(0)));
    CHECK(diff <= 1e-10 * std::abs(c1));

    const double lambda_mid = basis->lambdas(basis->size() / 2);
    const Eigen::VectorXd lo = project(w, *basis, lambda_mid, SplitSide::low);
    const Eigen::VectorXd hi = project(w, *basis, lambda_mid, SplitSide::high);
    // high is defined as w - low, so the sum closes to one rounding per entry
    CHECK((lo + hi - w).cwiseAbs().maxCoeff() <= 4e-16 * w.cwiseAbs().maxCoeff());
    const double l2w = basis->op->mass_dot(w, w);
    const double pyth = basis->op->mass_dot(lo, lo) + basis->op->mass_dot(hi, hi);
    CHECK(std::abs(pyth - l2w) / l2w <= 1e-10);

    CHECK_THROWS_AS(project(w, *basis, 0.5 * basis->lambdas(0), SplitSide::low), ConfigError);
}

TEST_CASE("projection is threshold-based on a degenerate 2D eigenvalue") {
    auto grid = build_grid(2, {0.0, 0.0}, {kPi, kPi}, {12, 12});
    auto basis = eigendecompose(assemble(sample_metric(MetricSpec{}, grid), grid));
    // lambda_2 = lambda_3 on the square; split at that value keeps both
    CHECK(basis->lambdas(1) == doctest::Approx(basis->lambdas(2)).epsilon(1e-12));
    const Eigen::VectorXd w = random_field(basis->size(), 77);
    const Eigen::VectorXd lo = project(w, *basis, basis->lambdas(1), SplitSide::low);
    const Eigen::VectorXd c = coeffs(lo, *basis);
    CHECK(std::abs(c(1)) > 0.0);
    CHECK(std::abs(c(2)) > 0.0);
    for (int j = 3; j < basis->size(); ++j) CHECK(std::abs(c(j)) <= 1e-10);
}

TEST_CASE("interpolation ratio: equality on modes, Hoelder below one") {
    auto basis = basis_1d(56);
    const int N = basis->size();

    for (int j : {0, 3, N - 1})
        for (double theta : {1.5, 2.0, 3.0})
            CHECK(std::abs(interpolation_ratio(basis->modes.col(j), *basis, theta) - 1.0) <=
                  1e-12);

    for (unsigned s = 0; s < 40; ++s) {
        const Eigen::VectorXd w = random_field(N, 300 + s);
        CHECK(interpolation_ratio(w, *basis, 2.0) <= 1.0 + 1e-10);
    }

    // strictly below one for a two-mode spread
    const Eigen::VectorXd two = basis->modes.col(0) + basis->modes.col(N - 1);
    CHECK(interpolation_ratio(two, *basis, 3.0) < 1.0 - 1e-6);

    CHECK_THROWS_AS(interpolation_ratio(basis->modes.col(0), *basis, 1.0), ConfigError);
    CHECK_THROWS_AS(interpolation_ratio(Eigen::VectorXd::Zero(N), *basis, 2.0), ConfigError);
}

TEST_CASE("Htheta is nondecreasing in theta once lambda_1 >= 1") {
    auto basis = basis_1d(40, 1.0);  // (0,1): lambda_1 ~ pi^2
    CHECK(basis->lambdas(0) >= 1.0);
    Eigen::VectorXd w = random_field(basis->size(), 13);
    w /= std::sqrt(basis->op->mass_dot(w, w));
    double prev = 0.0;
    for (double theta : {1.5, 2.0, 2.5, 3.0, 4.0}) {
        const double cur = snorm(w, *basis, SNorm::Htheta, theta);
        CHECK(cur >= prev);
        prev = cur;
    }
}

TEST_CASE("dense size cap is enforced") {
    auto grid = build_grid(2, {0.0, 0.0}, {1.0, 1.0}, {80, 80});
    auto op = assemble(sample_metric(MetricSpec{}, grid), grid);
    CHECK(op->size() > 5000);
    CHECK_THROWS_AS(eigendecompose(op), ConfigError);
}

TEST_SUITE_END();
