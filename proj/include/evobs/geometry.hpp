#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "evobs/smallmat.hpp"

namespace evobs {

/// Tensor-product node grid on an axis-aligned interval (1D) or rectangle (2D).
///
/// Nodes are numbered x-fastest: id = ix + n[0]*iy. Interior and boundary id
/// sets are disjoint and cover all nodes. vweight is the trapezoid cell volume
/// per node (sums to the domain volume exactly); bweight is the per-face
/// trapezoid weight of each boundary node (sums to the boundary measure; in 1D
/// each endpoint counts 1). Outward unit normals are axis-aligned on faces and
/// diagonal at 2D corners.
class Grid {
public:
    Grid(int dim, std::array<double, 2> lo, std::array<double, 2> hi, std::array<int, 2> n);

    int dim() const { return dim_; }
    int nodes_per_axis(int k) const { return n_[k]; }
    double lo(int k) const { return lo_[k]; }
    double hi(int k) const { return hi_[k]; }
    double spacing(int k) const { return h_[k]; }

    int num_nodes() const { return total_; }
    int num_interior() const { return static_cast<int>(interior_ids_.size()); }
    int num_boundary() const { return static_cast<int>(boundary_ids_.size()); }

    const std::vector<int>& interior_ids() const { return interior_ids_; }
    const std::vector<int>& boundary_ids() const { return boundary_ids_; }

    bool is_boundary(int id) const { return interior_pos_[id] < 0; }
    /// Position of a node id inside interior_ids(), or -1 for boundary nodes.
    int interior_index(int id) const { return interior_pos_[id]; }
    /// Position of a node id inside boundary_ids(), or -1 for interior nodes.
    int boundary_index(int id) const { return boundary_pos_[id]; }

    int node_id(int ix, int iy = 0) const { return ix + n_[0] * iy; }
    int ix_of(int id) const { return id % n_[0]; }
    int iy_of(int id) const { return id / n_[0]; }
    Vec2 coord(int id) const;

    /// Outward unit normal; zero vector for interior nodes.
    Vec2 normal(int id) const { return normal_[id]; }
    double bweight(int id) const { return bweight_[id]; }
    double vweight(int id) const { return vweight_[id]; }

    double volume() const;
    double boundary_measure() const;

private:
    int dim_;
    std::array<double, 2> lo_{}, hi_{}, h_{};
    std::array<int, 2> n_{};
    int total_ = 0;
    std::vector<int> interior_ids_, boundary_ids_;
    std::vector<int> interior_pos_, boundary_pos_;
    std::vector<Vec2> normal_;
    std::vector<double> bweight_, vweight_;
};

std::shared_ptr<const Grid> build_grid(int dim, std::array<double, 2> lo,
                                       std::array<double, 2> hi, std::array<int, 2> n);

// ---------------------------------------------------------------------------
// Named analytic coefficient forms.
//
// Config files refer to scalar fields by (form, params). Every registered form
// carries exact first and second derivatives so pseudo-convexity checks can
// run on analytic data.
//   constant    params {c}
//   affine      params {a0, a1[, a2]}            a0 + sum a_k x_k
//   sq-dist     params {x0[, y0]}                |x - x0|^2
//   sin-axis    params {off, amp, freq, axis}    off + amp*sin(freq*x_axis)
//   quadratic   params {c, b1[, b2], a11[, a12, a22]}  c + b.x + x.A x
// ---------------------------------------------------------------------------

struct ScalarFieldSpec {
    std::string form;
    std::vector<double> params;
};

struct ScalarSample {
    double value = 0.0;
    Vec2 grad;
    Sym2 hess;
};

ScalarSample eval_scalar_form(const ScalarFieldSpec& spec, const Vec2& x, int dim);
bool scalar_form_known(const std::string& form);

enum class DerivSource { analytic, finite_difference };

/// Per-node symmetric coefficient matrix g with certified ellipticity
/// constant; derivatives are analytic when the field came from the registry
/// and centered differences otherwise.
struct MetricField {
    int dim = 1;
    std::vector<Sym2> g;                      // one entry per node
    std::vector<std::array<Sym2, 2>> dg;      // dg[node][p] = d g / d x_p
    double varkappa = 1.0;                    // >= 1
    DerivSource deriv_source = DerivSource::analytic;
    std::shared_ptr<const Grid> grid;

    const Sym2& at(int node) const { return g[node]; }
    const Sym2& deriv(int node, int p) const { return dg[node][p]; }
};

struct MetricSpec {
    enum class Kind { identity, diagonal, full };
    Kind kind = Kind::identity;
    // diagonal: one spec per axis; full (2D): {g11, g12, g22}.
    std::vector<ScalarFieldSpec> entries;
};

MetricField sample_metric(const MetricSpec& spec, std::shared_ptr<const Grid> grid);

/// Build a MetricField from raw nodal values; derivatives by centered
/// differences (one-sided second order at walls).
MetricField metric_from_values(std::vector<Sym2> values, std::shared_ptr<const Grid> grid);

/// Nodal weight function psi with gradient and Hessian.
struct WeightFunction {
    std::vector<double> values;
    std::vector<Vec2> grad;
    std::vector<Sym2> hess;
    DerivSource source = DerivSource::analytic;
    std::shared_ptr<const Grid> grid;
};

WeightFunction sample_weight(const ScalarFieldSpec& spec, std::shared_ptr<const Grid> grid);
WeightFunction weight_from_values(std::vector<double> values, std::shared_ptr<const Grid> grid);

/// Sample a plain scalar field (e.g. potentials q, p) over all nodes.
std::vector<double> sample_scalar(const ScalarFieldSpec& spec, const Grid& grid);

/// Centered-difference partial derivative of a nodal field along axis p
/// (one-sided second order at walls).
std::vector<double> fd_derivative(const std::vector<double>& f, const Grid& grid, int p);

// ---------------------------------------------------------------------------
// Observation regions
// ---------------------------------------------------------------------------

enum class RegionKind { lateral_boundary, interior_cylinder, spacetime_set };
enum class NormKind { L2, L1 };

/// Where (and in which norm) a flow is observed. Lateral regions mask boundary
/// nodes, interior cylinders mask interior nodes, spacetime sets mask
/// (node, step) pairs over a fixed step count.
struct ObservationRegion {
    RegionKind kind = RegionKind::lateral_boundary;
    NormKind norm_kind = NormKind::L2;
    std::string name;
    std::vector<int> space_mask;              // node ids
    // spacetime only: time_mask[k][m] selects (space_mask[k], step m).
    std::vector<std::vector<std::uint8_t>> time_mask;
    int steps = 0;                            // spacetime only: M (mask has M+1 columns)

    bool empty() const { return space_mask.empty(); }
};

ObservationRegion build_lateral_region(std::vector<int> boundary_nodes, const Grid& grid,
                                       std::string name = "lateral", NormKind nk = NormKind::L2);
ObservationRegion build_interior_region(std::vector<int> interior_nodes, const Grid& grid,
                                        std::string name = "interior", NormKind nk = NormKind::L2);
/// Random (node, step) subset of the given base node set; `fraction` of all
/// pairs, drawn with the given seed. Throws if the result has zero measure.
ObservationRegion build_spacetime_region(const std::vector<int>& base_nodes, const Grid& grid,
                                         int steps, double fraction, std::uint64_t seed,
                                         std::string name = "spacetime",
                                         NormKind nk = NormKind::L1);

/// CSV dump of node data (id, coordinates, interior flag, normals, weights).
void write_grid_csv(const Grid& grid, const std::string& path);
void write_field_csv(const Grid& grid, const std::vector<double>& nodal,
                     const std::string& path);

} // namespace evobs
