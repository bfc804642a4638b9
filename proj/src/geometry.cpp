#include "evobs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "evobs/errors.hpp"

namespace evobs {

Grid::Grid(int dim, std::array<double, 2> lo, std::array<double, 2> hi, std::array<int, 2> n)
    : dim_(dim), lo_(lo), hi_(hi), n_(n) {
    if (dim != 1 && dim != 2) throw ConfigError("grid dim must be 1 or 2");
    for (int k = 0; k < dim; ++k) {
        if (n[k] < 3) throw ConfigError("grid needs at least 3 nodes per axis");
        if (!(hi[k] > lo[k])) throw ConfigError("degenerate extents");
        h_[k] = (hi[k] - lo[k]) / (n[k] - 1);
    }
    if (dim == 1) {
        n_[1] = 1;
        h_[1] = 0.0;
    }

    total_ = n_[0] * n_[1];
    interior_pos_.assign(total_, -1);
    boundary_pos_.assign(total_, -1);
    normal_.assign(total_, Vec2{});
    bweight_.assign(total_, 0.0);
    vweight_.assign(total_, 0.0);

    auto axis_weight = [&](int k, int i) {
        const bool end = (i == 0 || i == n_[k] - 1);
        return end ? 0.5 * h_[k] : h_[k];
    };

    for (int iy = 0; iy < n_[1]; ++iy) {
        for (int ix = 0; ix < n_[0]; ++ix) {
            const int id = node_id(ix, iy);
            const bool bx = (ix == 0 || ix == n_[0] - 1);
            const bool by = (dim_ == 2) && (iy == 0 || iy == n_[1] - 1);

            vweight_[id] = axis_weight(0, ix) * (dim_ == 2 ? axis_weight(1, iy) : 1.0);

            if (!bx && !by) {
                interior_pos_[id] = static_cast<int>(interior_ids_.size());
                interior_ids_.push_back(id);
                continue;
            }

            boundary_pos_[id] = static_cast<int>(boundary_ids_.size());
            boundary_ids_.push_back(id);

            Vec2 nu{};
            if (ix == 0) nu.x -= 1.0;
            if (ix == n_[0] - 1) nu.x += 1.0;
            if (dim_ == 2 && iy == 0) nu.y -= 1.0;
            if (dim_ == 2 && iy == n_[1] - 1) nu.y += 1.0;
            const double len = nu.norm();
            normal_[id] = {nu.x / len, nu.y / len};

            if (dim_ == 1) {
                bweight_[id] = 1.0;  // counting measure on the two endpoints
            } else {
                // Trapezoid weight per face; corners sit on two faces and
                // collect half of each face's end weight.
                double w = 0.0;
                if (bx) w += axis_weight(1, iy);
                if (by) w += axis_weight(0, ix);
                bweight_[id] = w;
            }
        }
    }
}

Vec2 Grid::coord(int id) const {
    // endpoint-exact: the last node lands on hi bit-for-bit
    auto axis = [&](int i, int k) {
        return lo_[k] + (hi_[k] - lo_[k]) * (static_cast<double>(i) / (n_[k] - 1));
    };
    Vec2 x{axis(ix_of(id), 0), 0.0};
    if (dim_ == 2) x.y = axis(iy_of(id), 1);
    return x;
}

double Grid::volume() const {
    double v = hi_[0] - lo_[0];
    if (dim_ == 2) v *= hi_[1] - lo_[1];
    return v;
}

double Grid::boundary_measure() const {
    if (dim_ == 1) return 2.0;
    return 2.0 * ((hi_[0] - lo_[0]) + (hi_[1] - lo_[1]));
}

std::shared_ptr<const Grid> build_grid(int dim, std::array<double, 2> lo,
                                       std::array<double, 2> hi, std::array<int, 2> n) {
    return std::make_shared<const Grid>(dim, lo, hi, n);
}

// ---------------------------------------------------------------------------
// Scalar field registry
// ---------------------------------------------------------------------------

namespace {

void need_params(const ScalarFieldSpec& s, std::size_t n) {
    if (s.params.size() < n)
        throw ConfigError("scalar form '" + s.form + "' needs " + std::to_string(n) +
                          " parameters, got " + std::to_string(s.params.size()));
}

} // namespace

bool scalar_form_known(const std::string& form) {
    return form == "constant" || form == "affine" || form == "sq-dist" ||
           form == "sin-axis" || form == "quadratic";
}

ScalarSample eval_scalar_form(const ScalarFieldSpec& spec, const Vec2& x, int dim) {
    ScalarSample s;
    if (spec.form == "constant") {
        need_params(spec, 1);
        s.value = spec.params[0];
        return s;
    }
    if (spec.form == "affine") {
        need_params(spec, static_cast<std::size_t>(1 + dim));
        s.value = spec.params[0];
        for (int k = 0; k < dim; ++k) {
            s.value += spec.params[1 + k] * x[k];
            s.grad[k] = spec.params[1 + k];
        }
        return s;
    }
    if (spec.form == "sq-dist") {
        need_params(spec, static_cast<std::size_t>(dim));
        for (int k = 0; k < dim; ++k) {
            const double d = x[k] - spec.params[k];
            s.value += d * d;
            s.grad[k] = 2.0 * d;
        }
        s.hess.a11 = 2.0;
        if (dim == 2) s.hess.a22 = 2.0;
        return s;
    }
    if (spec.form == "sin-axis") {
        need_params(spec, 4);
        const double off = spec.params[0], amp = spec.params[1], freq = spec.params[2];
        const int axis = static_cast<int>(spec.params[3]);
        if (axis < 0 || axis >= dim) throw ConfigError("sin-axis: axis out of range");
        const double arg = freq * x[axis];
        s.value = off + amp * std::sin(arg);
        s.grad[axis] = amp * freq * std::cos(arg);
        const double d2 = -amp * freq * freq * std::sin(arg);
        if (axis == 0) s.hess.a11 = d2; else s.hess.a22 = d2;
        return s;
    }
    if (spec.form == "quadratic") {
        // c + b.x + (x|Ax), A symmetric
        const std::size_t nb = static_cast<std::size_t>(dim);
        const std::size_t na = (dim == 1) ? 1 : 3;
        need_params(spec, 1 + nb + na);
        const double* p = spec.params.data();
        s.value = p[0];
        Vec2 b{p[1], dim == 2 ? p[2] : 0.0};
        Sym2 A;
        if (dim == 1) {
            A.a11 = p[2];
        } else {
            A = {p[3], p[4], p[5]};
        }
        s.value += b.dot(x) + x.dot(A.apply(x, dim));
        const Vec2 Ax = A.apply(x, dim);
        for (int k = 0; k < dim; ++k) s.grad[k] = b[k] + 2.0 * Ax[k];
        s.hess = A.scaled(2.0);
        return s;
    }
    throw ConfigError("unknown scalar form '" + spec.form + "'");
}

std::vector<double> sample_scalar(const ScalarFieldSpec& spec, const Grid& grid) {
    std::vector<double> out(grid.num_nodes());
    for (int id = 0; id < grid.num_nodes(); ++id)
        out[id] = eval_scalar_form(spec, grid.coord(id), grid.dim()).value;
    return out;
}

std::vector<double> fd_derivative(const std::vector<double>& f, const Grid& grid, int p) {
    const int nx = grid.nodes_per_axis(0);
    const int ny = grid.dim() == 2 ? grid.nodes_per_axis(1) : 1;
    const double h = grid.spacing(p);
    const int stride = (p == 0) ? 1 : nx;
    const int count = (p == 0) ? nx : ny;
    std::vector<double> out(f.size(), 0.0);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const int id = ix + nx * iy;
            const int i = (p == 0) ? ix : iy;
            if (i == 0) {
                out[id] = (-3.0 * f[id] + 4.0 * f[id + stride] - f[id + 2 * stride]) / (2.0 * h);
            } else if (i == count - 1) {
                out[id] = (3.0 * f[id] - 4.0 * f[id - stride] + f[id - 2 * stride]) / (2.0 * h);
            } else {
                out[id] = (f[id + stride] - f[id - stride]) / (2.0 * h);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metric sampling
// ---------------------------------------------------------------------------

namespace {

void certify_ellipticity(MetricField& m) {
    const Grid& grid = *m.grid;
    double kappa = 1.0;
    for (int id = 0; id < grid.num_nodes(); ++id) {
        const Sym2& g = m.g[id];
        const double lmin = g.min_eigenvalue(m.dim);
        const double lmax = g.max_eigenvalue(m.dim);
        if (!(lmin > 0.0))
            throw EllipticityError("metric not positive definite at node " + std::to_string(id));
        kappa = std::max({kappa, lmax, 1.0 / lmin});
    }
    m.varkappa = kappa;
}

} // namespace

MetricField sample_metric(const MetricSpec& spec, std::shared_ptr<const Grid> grid) {
    MetricField m;
    m.dim = grid->dim();
    m.grid = grid;
    m.deriv_source = DerivSource::analytic;
    const int N = grid->num_nodes();
    m.g.assign(N, Sym2::identity(m.dim));
    m.dg.assign(N, {Sym2{}, Sym2{}});

    if (spec.kind == MetricSpec::Kind::identity) {
        m.varkappa = 1.0;
        return m;
    }

    const std::size_t expected =
        spec.kind == MetricSpec::Kind::diagonal ? static_cast<std::size_t>(m.dim)
                                                : (m.dim == 1 ? 1 : 3);
    if (spec.entries.size() != expected)
        throw ConfigError("metric spec entry count mismatch");

    for (int id = 0; id < N; ++id) {
        const Vec2 x = grid->coord(id);
        auto put = [&](int slot, const ScalarSample& s) {
            // slot 0 -> g11, 1 -> g12, 2 -> g22
            if (slot == 0) m.g[id].a11 = s.value;
            if (slot == 1) m.g[id].a12 = s.value;
            if (slot == 2) m.g[id].a22 = s.value;
            for (int p = 0; p < m.dim; ++p) {
                if (slot == 0) m.dg[id][p].a11 = s.grad[p];
                if (slot == 1) m.dg[id][p].a12 = s.grad[p];
                if (slot == 2) m.dg[id][p].a22 = s.grad[p];
            }
        };
        if (spec.kind == MetricSpec::Kind::diagonal) {
            put(0, eval_scalar_form(spec.entries[0], x, m.dim));
            if (m.dim == 2) put(2, eval_scalar_form(spec.entries[1], x, m.dim));
        } else {
            put(0, eval_scalar_form(spec.entries[0], x, m.dim));
            if (m.dim == 2) {
                put(1, eval_scalar_form(spec.entries[1], x, m.dim));
                put(2, eval_scalar_form(spec.entries[2], x, m.dim));
            }
        }
    }
    certify_ellipticity(m);
    return m;
}

MetricField metric_from_values(std::vector<Sym2> values, std::shared_ptr<const Grid> grid) {
    if (static_cast<int>(values.size()) != grid->num_nodes())
        throw ConfigError("metric value count does not match grid");
    MetricField m;
    m.dim = grid->dim();
    m.grid = grid;
    m.deriv_source = DerivSource::finite_difference;
    m.g = std::move(values);
    const int N = grid->num_nodes();
    m.dg.assign(N, {Sym2{}, Sym2{}});

    std::vector<double> comp(N);
    for (int slot = 0; slot < (m.dim == 1 ? 1 : 3); ++slot) {
        for (int id = 0; id < N; ++id)
            comp[id] = slot == 0 ? m.g[id].a11 : (slot == 1 ? m.g[id].a12 : m.g[id].a22);
        for (int p = 0; p < m.dim; ++p) {
            const auto d = fd_derivative(comp, *grid, p);
            for (int id = 0; id < N; ++id) {
                if (slot == 0) m.dg[id][p].a11 = d[id];
                if (slot == 1) m.dg[id][p].a12 = d[id];
                if (slot == 2) m.dg[id][p].a22 = d[id];
            }
        }
    }
    certify_ellipticity(m);
    return m;
}

// ---------------------------------------------------------------------------
// Weight functions
// ---------------------------------------------------------------------------

WeightFunction sample_weight(const ScalarFieldSpec& spec, std::shared_ptr<const Grid> grid) {
    WeightFunction w;
    w.grid = grid;
    w.source = DerivSource::analytic;
    const int N = grid->num_nodes();
    w.values.resize(N);
    w.grad.resize(N);
    w.hess.resize(N);
    for (int id = 0; id < N; ++id) {
        const ScalarSample s = eval_scalar_form(spec, grid->coord(id), grid->dim());
        w.values[id] = s.value;
        w.grad[id] = s.grad;
        w.hess[id] = s.hess;
    }
    return w;
}

WeightFunction weight_from_values(std::vector<double> values, std::shared_ptr<const Grid> grid) {
    if (static_cast<int>(values.size()) != grid->num_nodes())
        throw ConfigError("weight value count does not match grid");
    WeightFunction w;
    w.grid = grid;
    w.source = DerivSource::finite_difference;
    w.values = std::move(values);
    const int N = grid->num_nodes();
    w.grad.assign(N, Vec2{});
    w.hess.assign(N, Sym2{});

    std::vector<std::vector<double>> d1(grid->dim());
    for (int p = 0; p < grid->dim(); ++p) {
        d1[p] = fd_derivative(w.values, *grid, p);
        for (int id = 0; id < N; ++id) w.grad[id][p] = d1[p][id];
    }
    // Hessian as derivative of the gradient; the cross term is symmetrized.
    const auto dxx = fd_derivative(d1[0], *grid, 0);
    for (int id = 0; id < N; ++id) w.hess[id].a11 = dxx[id];
    if (grid->dim() == 2) {
        const auto dxy = fd_derivative(d1[0], *grid, 1);
        const auto dyx = fd_derivative(d1[1], *grid, 0);
        const auto dyy = fd_derivative(d1[1], *grid, 1);
        for (int id = 0; id < N; ++id) {
            w.hess[id].a12 = 0.5 * (dxy[id] + dyx[id]);
            w.hess[id].a22 = dyy[id];
        }
    }
    return w;
}

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

ObservationRegion build_lateral_region(std::vector<int> boundary_nodes, const Grid& grid,
                                       std::string name, NormKind nk) {
    for (int id : boundary_nodes)
        if (!grid.is_boundary(id))
            throw ConfigError("lateral region contains non-boundary node " + std::to_string(id));
    if (boundary_nodes.empty()) throw ConfigError("region '" + name + "' is empty");
    ObservationRegion r;
    r.kind = RegionKind::lateral_boundary;
    r.norm_kind = nk;
    r.name = std::move(name);
    r.space_mask = std::move(boundary_nodes);
    std::sort(r.space_mask.begin(), r.space_mask.end());
    return r;
}

ObservationRegion build_interior_region(std::vector<int> interior_nodes, const Grid& grid,
                                        std::string name, NormKind nk) {
    for (int id : interior_nodes)
        if (grid.is_boundary(id))
            throw ConfigError("interior region contains boundary node " + std::to_string(id));
    if (interior_nodes.empty()) throw ConfigError("region '" + name + "' is empty");
    ObservationRegion r;
    r.kind = RegionKind::interior_cylinder;
    r.norm_kind = nk;
    r.name = std::move(name);
    r.space_mask = std::move(interior_nodes);
    std::sort(r.space_mask.begin(), r.space_mask.end());
    return r;
}

ObservationRegion build_spacetime_region(const std::vector<int>& base_nodes, const Grid& grid,
                                         int steps, double fraction, std::uint64_t seed,
                                         std::string name, NormKind nk) {
    if (base_nodes.empty()) throw ConfigError("region '" + name + "' has empty base set");
    if (steps < 1) throw ConfigError("spacetime region needs steps >= 1");
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("spacetime fraction must be in (0,1]");

    ObservationRegion r;
    r.kind = RegionKind::spacetime_set;
    r.norm_kind = nk;
    r.name = std::move(name);
    r.space_mask = base_nodes;
    std::sort(r.space_mask.begin(), r.space_mask.end());
    r.steps = steps;
    r.time_mask.assign(r.space_mask.size(), std::vector<std::uint8_t>(steps + 1, 0));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::size_t count = 0;
    for (auto& row : r.time_mask)
        for (auto& cell : row)
            if (unif(rng) < fraction) {
                cell = 1;
                ++count;
            }
    if (count == 0) {
        (void)grid;
        throw ConfigError("spacetime region '" + r.name + "' has zero measure");
    }
    return r;
}

// ---------------------------------------------------------------------------
// CSV dumps
// ---------------------------------------------------------------------------

void write_grid_csv(const Grid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "id,x,y,boundary,nu_x,nu_y,vweight,bweight\n";
    out.precision(17);
    for (int id = 0; id < grid.num_nodes(); ++id) {
        const Vec2 x = grid.coord(id);
        const Vec2 nu = grid.normal(id);
        out << id << ',' << x.x << ',' << x.y << ',' << (grid.is_boundary(id) ? 1 : 0) << ','
            << nu.x << ',' << nu.y << ',' << grid.vweight(id) << ',' << grid.bweight(id) << '\n';
    }
}

void write_field_csv(const Grid& grid, const std::vector<double>& nodal,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "id,x,y,value\n";
    out.precision(17);
    for (int id = 0; id < grid.num_nodes(); ++id) {
        const Vec2 x = grid.coord(id);
        out << id << ',' << x.x << ',' << x.y << ',' << nodal[id] << '\n';
    }
}

} // namespace evobs
