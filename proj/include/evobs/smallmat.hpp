#pragma once

#include <array>
#include <cmath>

namespace evobs {

// Dense storage for 1x1 / 2x2 symmetric matrices and 1D/2D vectors.
// Everything here is closed-form; no iterative eigensolver is involved.

struct Vec2 {
    double x = 0.0, y = 0.0;

    double operator[](int k) const { return k == 0 ? x : y; }
    double& operator[](int k) { return k == 0 ? x : y; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

struct Sym2 {
    // [a11 a12; a12 a22]; in 1D only a11 is meaningful.
    double a11 = 0.0, a12 = 0.0, a22 = 0.0;

    double operator()(int k, int l) const {
        if (k == 0 && l == 0) return a11;
        if (k == 1 && l == 1) return a22;
        return a12;
    }

    static Sym2 identity(int dim) { return {1.0, 0.0, dim == 2 ? 1.0 : 0.0}; }

    Vec2 apply(const Vec2& v, int dim) const {
        if (dim == 1) return {a11 * v.x, 0.0};
        return {a11 * v.x + a12 * v.y, a12 * v.x + a22 * v.y};
    }

    Sym2 scaled(double s) const { return {s * a11, s * a12, s * a22}; }

    Sym2 plus(const Sym2& o) const { return {a11 + o.a11, a12 + o.a12, a22 + o.a22}; }

    double min_eigenvalue(int dim) const {
        if (dim == 1) return a11;
        const double tr = a11 + a22;
        const double gap = std::hypot(a11 - a22, 2.0 * a12);
        return 0.5 * (tr - gap);
    }

    double max_eigenvalue(int dim) const {
        if (dim == 1) return a11;
        const double tr = a11 + a22;
        const double gap = std::hypot(a11 - a22, 2.0 * a12);
        return 0.5 * (tr + gap);
    }
};

// C = A * S * A for general (non-symmetric intermediate) products is not needed;
// the only composite we form is 2 g H g, which is symmetric when g, H are.
inline Sym2 sandwich(const Sym2& g, const Sym2& h, int dim) {
    if (dim == 1) return {g.a11 * h.a11 * g.a11, 0.0, 0.0};
    // m = g*h
    const double m11 = g.a11 * h.a11 + g.a12 * h.a12;
    const double m12 = g.a11 * h.a12 + g.a12 * h.a22;
    const double m21 = g.a12 * h.a11 + g.a22 * h.a12;
    const double m22 = g.a12 * h.a12 + g.a22 * h.a22;
    // r = m*g (symmetric since g,h are)
    return {m11 * g.a11 + m12 * g.a12,
            m11 * g.a12 + m12 * g.a22,
            m21 * g.a12 + m22 * g.a22};
}

} // namespace evobs
