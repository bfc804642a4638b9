#include "evobs/op.hpp"

#include <fstream>

#include "evobs/errors.hpp"

namespace evobs {

Eigen::VectorXd DiscreteOperator::apply(const Eigen::VectorXd& w) const {
    if (w.size() != matrix.rows()) throw ConfigError("operator apply: dimension mismatch");
    return matrix * w;
}

double DiscreteOperator::mass_dot(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    return (u.array() * mass.array() * v.array()).sum();
}

double DiscreteOperator::mass_norm(const Eigen::VectorXd& u) const {
    return std::sqrt(mass_dot(u, u));
}

double DiscreteOperator::quad_form(const Eigen::VectorXd& u) const {
    return mass_dot(matrix * u, u);
}

double DiscreteOperator::pure_quad_form(const Eigen::VectorXd& u) const {
    double v = quad_form(u);
    if (shifted) v += (mass.array() * potential.array() * u.array().square()).sum();
    return v;
}

double DiscreteOperator::weighted_mass_form(const Eigen::VectorXd& weights,
                                            const Eigen::VectorXd& u) const {
    return (mass.array() * weights.array() * u.array().square()).sum();
}

std::shared_ptr<const DiscreteOperator>
assemble(const MetricField& g, std::shared_ptr<const Grid> grid,
         const std::optional<std::vector<double>>& q_nodal) {
    if (g.grid.get() != grid.get() || static_cast<int>(g.g.size()) != grid->num_nodes())
        throw ConfigError("assemble: metric and grid mismatch");

    const int dim = grid->dim();
    const int Nint = grid->num_interior();
    auto op = std::make_shared<DiscreteOperator>();
    op->grid = grid;
    op->mass.resize(Nint);
    for (int i = 0; i < Nint; ++i) op->mass(i) = grid->vweight(grid->interior_ids()[i]);

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(Nint) * (dim == 1 ? 3 : 9));

    auto neighbor = [&](int id, int axis, int step) {
        return axis == 0 ? id + step : id + step * grid->nodes_per_axis(0);
    };

    // Diagonal entries of g: flux form
    //   (A u)_i = sum_k [ gf(i,i+e_k)(u_i - u_{i+e_k}) + gf(i,i-e_k)(u_i - u_{i-e_k}) ] / h_k^2
    // with gf the face average of g_kk. Dirichlet columns are dropped.
    for (int ii = 0; ii < Nint; ++ii) {
        const int id = grid->interior_ids()[ii];
        for (int k = 0; k < dim; ++k) {
            const double inv_h2 = 1.0 / (grid->spacing(k) * grid->spacing(k));
            for (int step : {-1, +1}) {
                const int nb = neighbor(id, k, step);
                const double gkk_i = (k == 0) ? g.at(id).a11 : g.at(id).a22;
                const double gkk_n = (k == 0) ? g.at(nb).a11 : g.at(nb).a22;
                const double gf = 0.5 * (gkk_i + gkk_n);
                trips.emplace_back(ii, ii, gf * inv_h2);
                const int jj = grid->interior_index(nb);
                if (jj >= 0) trips.emplace_back(ii, jj, -gf * inv_h2);
            }
        }
    }

    // Mixed entry g12 (2D): quadratic form 2 sum_m g12(m) (D1 u)_m (D2 u)_m with
    // nodal centered differences; emitted as (i,j)+(j,i) pairs.
    if (dim == 2) {
        const double c = 1.0 / (4.0 * grid->spacing(0) * grid->spacing(1));
        for (int mm = 0; mm < Nint; ++mm) {
            const int m = grid->interior_ids()[mm];
            const double g12 = g.at(m).a12;
            if (g12 == 0.0) continue;
            for (int s1 : {-1, +1}) {
                const int i = neighbor(m, 0, s1);
                const int ii = grid->interior_index(i);
                if (ii < 0) continue;
                for (int s2 : {-1, +1}) {
                    const int j = neighbor(m, 1, s2);
                    const int jj = grid->interior_index(j);
                    if (jj < 0) continue;
                    const double w = g12 * c * s1 * s2;
                    trips.emplace_back(ii, jj, w);
                    trips.emplace_back(jj, ii, w);
                }
            }
        }
    }

    if (q_nodal) {
        if (static_cast<int>(q_nodal->size()) != grid->num_nodes())
            throw ConfigError("assemble: potential size mismatch");
        op->shifted = true;
        op->potential.resize(Nint);
        for (int ii = 0; ii < Nint; ++ii) {
            const double q = (*q_nodal)[grid->interior_ids()[ii]];
            op->potential(ii) = q;
            trips.emplace_back(ii, ii, -q);
        }
    } else {
        op->potential = Eigen::VectorXd::Zero(Nint);
    }

    op->matrix.resize(Nint, Nint);
    op->matrix.setFromTriplets(trips.begin(), trips.end());
    op->matrix.makeCompressed();
    return op;
}

void write_matrix_csv(const DiscreteOperator& op, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "row,col,value\n";
    out.precision(17);
    for (int k = 0; k < op.matrix.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(op.matrix, k); it; ++it)
            out << it.row() << ',' << it.col() << ',' << it.value() << '\n';
}

} // namespace evobs
