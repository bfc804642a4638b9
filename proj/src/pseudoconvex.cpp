#include "evobs/pseudoconvex.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "evobs/errors.hpp"

namespace evobs {

LambdaTensor lambda_tensor(const MetricField& g, int node) {
    LambdaTensor lam;
    const int d = g.dim;
    for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l)
            for (int m = 0; m < d; ++m) {
                double v = 0.0;
                for (int p = 0; p < d; ++p) {
                    v += -g.deriv(node, p)(k, l) * g.at(node)(p, m) +
                         2.0 * g.at(node)(k, p) * g.deriv(node, p)(l, m);
                }
                lam.v[k][l][m] = v;
            }
    return lam;
}

ThetaField theta_tensor(const MetricField& g, const WeightFunction& h) {
    const int d = g.dim;
    const int N = static_cast<int>(g.g.size());
    if (static_cast<int>(h.values.size()) != N)
        throw ConfigError("metric and weight live on different grids");

    ThetaField out;
    out.theta.resize(N);
    for (int id = 0; id < N; ++id) {
        const Sym2 core = sandwich(g.at(id), h.hess[id], d).scaled(2.0);
        const LambdaTensor lam = lambda_tensor(g, id);

        // Upsilon is not symmetric in general; form the full matrix, record the
        // asymmetry, then average with the transpose.
        double u[2][2] = {};
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l)
                for (int m = 0; m < d; ++m)
                    u[k][l] += lam(k, l, m) * h.grad[id][m];

        double full[2][2] = {};
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l)
                full[k][l] = core(k, l) + u[k][l];

        if (d == 2)
            out.max_asymmetry = std::max(out.max_asymmetry, std::abs(full[0][1] - full[1][0]));

        Sym2 t;
        t.a11 = full[0][0];
        if (d == 2) {
            t.a12 = 0.5 * (full[0][1] + full[1][0]);
            t.a22 = full[1][1];
        }
        out.theta[id] = t;
    }
    return out;
}

PseudoconvexReport check_pseudoconvex(const MetricField& g, const WeightFunction& h,
                                      const Grid& grid) {
    PseudoconvexReport rep;
    ThetaField tf = theta_tensor(g, h);
    rep.theta = std::move(tf.theta);
    rep.max_asymmetry = tf.max_asymmetry;

    rep.kappa = std::numeric_limits<double>::infinity();
    rep.m_h = std::numeric_limits<double>::infinity();
    rep.grad_norm.resize(grid.num_nodes());
    for (int id = 0; id < grid.num_nodes(); ++id) {
        rep.kappa = std::min(rep.kappa, rep.theta[id].min_eigenvalue(g.dim));
        double gn = h.grad[id].x * h.grad[id].x;
        if (g.dim == 2) gn += h.grad[id].y * h.grad[id].y;
        rep.grad_norm[id] = std::sqrt(gn);
        rep.m_h = std::min(rep.m_h, rep.grad_norm[id]);
    }
    rep.is_pseudoconvex = (rep.kappa > 0.0) && (rep.m_h > 0.0);

    rep.conormal.resize(grid.num_boundary());
    for (int b = 0; b < grid.num_boundary(); ++b) {
        const int id = grid.boundary_ids()[b];
        const Vec2 flux = g.at(id).apply(h.grad[id], g.dim);
        const double c = flux.dot(grid.normal(id));
        rep.conormal[b] = c;
        if (c > 0.0) rep.gamma_mask.push_back(id);  // strict sign, no tolerance
    }
    return rep;
}

void write_pseudoconvex_csv(const PseudoconvexReport& rep, const Grid& grid,
                            const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "id,lambda_min_theta,grad_norm,conormal\n";
    out.precision(17);
    for (int id = 0; id < grid.num_nodes(); ++id) {
        out << id << ',' << rep.theta[id].min_eigenvalue(grid.dim()) << ','
            << rep.grad_norm[id] << ',';
        const int b = grid.boundary_index(id);
        if (b >= 0) out << rep.conormal[b];  // empty for interior nodes
        out << '\n';
    }
}

} // namespace evobs
