#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "evobs/geometry.hpp"

namespace evobs {

/// Symmetric finite-difference discretization of -div(g grad .) on interior
/// nodes, with homogeneous Dirichlet rows/columns eliminated. When a potential
/// q is supplied the matrix is A - diag(q) ("shifted" kind), so propagators
/// see the full spatial operator of the evolution equation in one piece.
///
/// The diagonal entries of g couple through 3/5-point fluxes with
/// face-averaged coefficients; the 2D mixed entry g12 couples through centered
/// cross-differences assembled in transpose pairs, so the matrix is exactly
/// symmetric by construction.
struct DiscreteOperator {
    Eigen::SparseMatrix<double> matrix;  // N_int x N_int
    Eigen::VectorXd mass;                // interior trapezoid volumes (positive)
    Eigen::VectorXd potential;           // q on interior nodes (zero vector if pure)
    bool shifted = false;
    std::shared_ptr<const Grid> grid;

    int size() const { return static_cast<int>(matrix.rows()); }

    Eigen::VectorXd apply(const Eigen::VectorXd& w) const;

    double mass_dot(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    double mass_norm(const Eigen::VectorXd& u) const;

    /// <matrix u, u>_mass — the quadratic form of the operator as assembled.
    double quad_form(const Eigen::VectorXd& u) const;
    /// <(matrix + diag q) u, u>_mass — the discrete gradient energy
    /// ||sqrt(g) grad u||^2 regardless of any folded-in potential.
    double pure_quad_form(const Eigen::VectorXd& u) const;
    /// sum_i mass_i * q_i * u_i^2 with the given nodal weight w (e.g. delta-q).
    double weighted_mass_form(const Eigen::VectorXd& weights, const Eigen::VectorXd& u) const;
};

std::shared_ptr<const DiscreteOperator>
assemble(const MetricField& g, std::shared_ptr<const Grid> grid,
         const std::optional<std::vector<double>>& q_nodal = std::nullopt);

/// Coordinate-format dump (row,col,value) of the assembled matrix.
void write_matrix_csv(const DiscreteOperator& op, const std::string& path);

} // namespace evobs
