#include "evobs/spectral.hpp"

#include <cmath>
#include <fstream>

#include "evobs/errors.hpp"

namespace evobs {

namespace {

constexpr int kMaxDenseSize = 5000;

Eigen::MatrixXd mass_symmetrized_dense(const DiscreteOperator& op) {
    // S = D^{1/2} A D^{-1/2} is plain-symmetric when A is symmetric in the
    // mass inner product. On tensor grids the interior masses are all equal,
    // so S == A; the scaling keeps the general path correct.
    const Eigen::ArrayXd s = op.mass.array().sqrt();
    Eigen::MatrixXd S = Eigen::MatrixXd(op.matrix);
    S.array().colwise() *= s;
    S.array().rowwise() /= s.transpose();
    return 0.5 * (S + S.transpose());
}

} // namespace

std::shared_ptr<const SpectralBasis>
eigendecompose(std::shared_ptr<const DiscreteOperator> op) {
    const int N = op->size();
    if (N > kMaxDenseSize)
        throw ConfigError("grid has " + std::to_string(N) +
                          " interior nodes; dense eigensolve is capped at " +
                          std::to_string(kMaxDenseSize));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mass_symmetrized_dense(*op));
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");

    auto basis = std::make_shared<SpectralBasis>();
    basis->op = std::move(op);
    basis->lambdas = es.eigenvalues();
    basis->modes = es.eigenvectors();
    const Eigen::ArrayXd inv_s = basis->op->mass.array().rsqrt();
    basis->modes.array().colwise() *= inv_s;
    return basis;
}

Eigen::VectorXd dirichlet_eigenvalues(const DiscreteOperator& op) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mass_symmetrized_dense(op),
                                                      Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    return es.eigenvalues();
}

Eigen::VectorXd coeffs(const Eigen::VectorXd& w, const SpectralBasis& basis) {
    if (w.size() != basis.modes.rows()) throw ConfigError("coeffs: dimension mismatch");
    return basis.modes.transpose() * (basis.op->mass.asDiagonal() * w);
}

Eigen::VectorXd reconstruct(const Eigen::VectorXd& c, const SpectralBasis& basis) {
    if (c.size() != basis.modes.cols()) throw ConfigError("reconstruct: dimension mismatch");
    return basis.modes * c;
}

double snorm_coeffs(const Eigen::VectorXd& c, const SpectralBasis& basis, SNorm kind,
                    double theta) {
    switch (kind) {
        case SNorm::L2:
            return c.norm();
        case SNorm::H10:
            return std::sqrt((basis.lambdas.array() * c.array().square()).sum());
        case SNorm::Htheta: {
            if (!(theta > 1.0)) throw ConfigError("Htheta norm requires theta > 1");
            return std::sqrt(
                (basis.lambdas.array().pow(theta) * c.array().square()).sum());
        }
    }
    throw ConfigError("unknown norm kind");
}

double snorm(const Eigen::VectorXd& w, const SpectralBasis& basis, SNorm kind, double theta) {
    return snorm_coeffs(coeffs(w, basis), basis, kind, theta);
}

Eigen::VectorXd project(const Eigen::VectorXd& w, const SpectralBasis& basis, double lambda,
                        SplitSide side) {
    if (lambda < basis.lambdas(0))
        throw ConfigError("projection threshold below the first eigenvalue");
    Eigen::VectorXd c = coeffs(w, basis);
    for (int j = 0; j < basis.size(); ++j)
        if (basis.lambdas(j) > lambda) c(j) = 0.0;
    const Eigen::VectorXd low = reconstruct(c, basis);
    return side == SplitSide::low ? low : Eigen::VectorXd(w - low);
}

double interpolation_ratio(const Eigen::VectorXd& w, const SpectralBasis& basis, double theta) {
    if (!(theta > 1.0)) throw ConfigError("interpolation ratio requires theta > 1");
    const Eigen::VectorXd c = coeffs(w, basis);
    const double l2 = snorm_coeffs(c, basis, SNorm::L2);
    if (l2 == 0.0) throw ConfigError("interpolation ratio undefined for w = 0");
    const double h10 = snorm_coeffs(c, basis, SNorm::H10);
    const double ht = snorm_coeffs(c, basis, SNorm::Htheta, theta);
    return h10 / (std::pow(ht, 1.0 / theta) * std::pow(l2, 1.0 - 1.0 / theta));
}

void write_eigenvalue_csv(const Eigen::VectorXd& lambdas, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "j,lambda\n";
    out.precision(17);
    for (int j = 0; j < lambdas.size(); ++j) out << (j + 1) << ',' << lambdas(j) << '\n';
}

void write_mode_csv(const SpectralBasis& basis, const std::vector<int>& mode_indices,
                    const std::string& path) {
    for (int j : mode_indices)
        if (j < 0 || j >= basis.size())
            throw ConfigError("mode dump index " + std::to_string(j) + " out of range");
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    const Grid& grid = basis.grid();
    out << "id,x,y";
    for (int j : mode_indices) out << ",phi_" << (j + 1);
    out << '\n';
    out.precision(17);
    for (int id = 0; id < grid.num_nodes(); ++id) {
        const Vec2 x = grid.coord(id);
        out << id << ',' << x.x << ',' << x.y;
        const int i = grid.interior_index(id);
        for (int j : mode_indices) out << ',' << (i >= 0 ? basis.modes(i, j) : 0.0);
        out << '\n';
    }
}

} // namespace evobs
