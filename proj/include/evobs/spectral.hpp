#pragma once

#include <memory>

#include <Eigen/Dense>

#include "evobs/op.hpp"

namespace evobs {

/// Full eigendecomposition of a DiscreteOperator; eigenvalues nondecreasing,
/// eigenvectors orthonormal in the mass inner product.
struct SpectralBasis {
    Eigen::VectorXd lambdas;   // ascending
    Eigen::MatrixXd modes;     // column j = phi_j
    std::shared_ptr<const DiscreteOperator> op;

    int size() const { return static_cast<int>(lambdas.size()); }
    const Grid& grid() const { return *op->grid; }
};

/// Dense symmetric eigensolve; callers keep interior sizes at desk scale
/// (N_int <= 5000, enforced).
std::shared_ptr<const SpectralBasis>
eigendecompose(std::shared_ptr<const DiscreteOperator> op);

/// Eigenvalues only — for spectrum tables on grids where the full mode matrix
/// is not needed.
Eigen::VectorXd dirichlet_eigenvalues(const DiscreteOperator& op);

/// c_j = <w, phi_j>_mass.
Eigen::VectorXd coeffs(const Eigen::VectorXd& w, const SpectralBasis& basis);
Eigen::VectorXd reconstruct(const Eigen::VectorXd& c, const SpectralBasis& basis);

enum class SNorm { L2, H10, Htheta };

/// Spectral norms from a coefficient vector: L2 = (sum c^2)^1/2,
/// H10 = (sum lambda c^2)^1/2, Htheta = (sum lambda^theta c^2)^1/2.
double snorm_coeffs(const Eigen::VectorXd& c, const SpectralBasis& basis, SNorm kind,
                    double theta = 0.0);
double snorm(const Eigen::VectorXd& w, const SpectralBasis& basis, SNorm kind,
             double theta = 0.0);

enum class SplitSide { low, high };

/// Keep modes with lambda_j <= lambda (low) or > lambda (high). The high part
/// is returned as w - low so the two parts always sum to w exactly.
Eigen::VectorXd project(const Eigen::VectorXd& w, const SpectralBasis& basis, double lambda,
                        SplitSide side);

/// H10(w) / (Htheta(w)^{1/theta} * L2(w)^{1-1/theta}); <= 1 for spectral
/// norms, with equality on single modes.
double interpolation_ratio(const Eigen::VectorXd& w, const SpectralBasis& basis, double theta);

void write_eigenvalue_csv(const Eigen::VectorXd& lambdas, const std::string& path);

/// Nodal dump of selected modes (zero on the boundary): one row per node,
/// one column per requested 0-based mode index.
void write_mode_csv(const SpectralBasis& basis, const std::vector<int>& mode_indices,
                    const std::string& path);

} // namespace evobs
