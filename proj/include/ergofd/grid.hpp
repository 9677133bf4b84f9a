#ifndef ERGOFD_GRID_HPP
#define ERGOFD_GRID_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergofd/operators.hpp"

// Structured grids for intervals, rectangles and disks: boundary masks,
// exact analytic distance fields, and subdomain extraction.

namespace ergofd {

enum class DomainKind { Interval, Rectangle, Disk };

struct DomainSpec {
    DomainKind kind = DomainKind::Interval;
    // Interval: [x0, x1].  Rectangle: [x0, x1] x [y0, y1].  Disk: center (cx, cy), radius r.
    double x0 = 0.0, x1 = 1.0;
    double y0 = 0.0, y1 = 1.0;
    double cx = 0.0, cy = 0.0, radius = 1.0;

    int dim() const { return kind == DomainKind::Interval ? 1 : 2; }

    static DomainSpec interval(double a, double b) {
        DomainSpec d;
        d.kind = DomainKind::Interval;
        d.x0 = a;
        d.x1 = b;
        return d;
    }
    static DomainSpec rectangle(double a, double b, double c, double e) {
        DomainSpec d;
        d.kind = DomainKind::Rectangle;
        d.x0 = a;
        d.x1 = b;
        d.y0 = c;
        d.y1 = e;
        return d;
    }
    static DomainSpec disk(double cx, double cy, double r) {
        DomainSpec d;
        d.kind = DomainKind::Disk;
        d.cx = cx;
        d.cy = cy;
        d.radius = r;
        return d;
    }

    Vec center() const {
        switch (kind) {
            case DomainKind::Interval: return Vec(0.5 * (x0 + x1));
            case DomainKind::Rectangle: return Vec(0.5 * (x0 + x1), 0.5 * (y0 + y1));
            case DomainKind::Disk: return Vec(cx, cy);
        }
        return Vec(0.0);
    }

    // Exact Euclidean distance to the boundary (negative outside a disk).
    double distance(const Vec& p) const {
        switch (kind) {
            case DomainKind::Interval: return std::min(p[0] - x0, x1 - p[0]);
            case DomainKind::Rectangle:
                return std::min(std::min(p[0] - x0, x1 - p[0]), std::min(p[1] - y0, y1 - p[1]));
            case DomainKind::Disk: {
                const double r = std::hypot(p[0] - cx, p[1] - cy);
                return radius - r;
            }
        }
        return 0.0;
    }

    // Inward unit normal ((minus) gradient of the distance); valid away from the
    // medial axis, which barrier bands never reach.
    Vec grad_distance(const Vec& p) const {
        switch (kind) {
            case DomainKind::Interval: return Vec(p[0] - x0 <= x1 - p[0] ? 1.0 : -1.0);
            case DomainKind::Rectangle: {
                const double dl = p[0] - x0, dr = x1 - p[0], db = p[1] - y0, dt = y1 - p[1];
                const double m = std::min(std::min(dl, dr), std::min(db, dt));
                if (m == dl) return Vec(1.0, 0.0);
                if (m == dr) return Vec(-1.0, 0.0);
                if (m == db) return Vec(0.0, 1.0);
                return Vec(0.0, -1.0);
            }
            case DomainKind::Disk: {
                const double rx = p[0] - cx, ry = p[1] - cy;
                const double r = std::hypot(rx, ry);
                if (r == 0.0) return Vec(1.0, 0.0);
                return Vec(-rx / r, -ry / r);
            }
        }
        return Vec(1.0);
    }

    // Hessian of the distance (zero for flat boundaries, curvature term for disks).
    SymMat hess_distance(const Vec& p) const {
        if (kind != DomainKind::Disk) return dim() == 1 ? SymMat(0.0) : SymMat(0.0, 0.0, 0.0);
        const double rx = p[0] - cx, ry = p[1] - cy;
        const double r = std::hypot(rx, ry);
        const double ux = rx / r, uy = ry / r;
        // D^2(radius - |x - c|) = -(I - u u^T)/|x - c|
        return SymMat(-(1.0 - ux * ux) / r, -(1.0 - uy * uy) / r, ux * uy / r);
    }
};

enum class NodeClass : unsigned char { Interior, Boundary, Exterior };

struct Grid {
    DomainSpec domain;
    int dim = 1;
    int nx = 0, ny = 1;
    double h = 0.0;
    double ox = 0.0, oy = 0.0;  // lattice origin
    std::vector<NodeClass> cls;
    std::vector<double> dist;
    std::vector<int> interior_nodes;

    int size() const { return nx * ny; }
    int index(int i, int j = 0) const { return i + nx * j; }
    int ix(int n) const { return n % nx; }
    int iy(int n) const { return n / nx; }

    Vec coord(int n) const {
        if (dim == 1) return Vec(ox + ix(n) * h);
        return Vec(ox + ix(n) * h, oy + iy(n) * h);
    }

    bool is_interior(int n) const { return cls[n] == NodeClass::Interior; }
    bool is_boundary(int n) const { return cls[n] == NodeClass::Boundary; }
    bool is_exterior(int n) const { return cls[n] == NodeClass::Exterior; }

    int stride(int axis) const { return axis == 0 ? 1 : nx; }

    // Node index nearest a point (clamped to the lattice).
    int nearest(const Vec& p) const {
        int i = (int)std::lround((p[0] - ox) / h);
        i = std::clamp(i, 0, nx - 1);
        if (dim == 1) return i;
        int j = (int)std::lround((p[1] - oy) / h);
        j = std::clamp(j, 0, ny - 1);
        return index(i, j);
    }
};

namespace detail {

inline void classify_nodes(Grid& g) {
    const int n = g.size();
    g.cls.assign(n, NodeClass::Interior);
    g.dist.assign(n, 0.0);

    if (g.domain.kind != DomainKind::Disk) {
        for (int k = 0; k < n; ++k) {
            const int i = g.ix(k), j = g.iy(k);
            const bool on_edge = (i == 0 || i == g.nx - 1) ||
                                 (g.dim == 2 && (j == 0 || j == g.ny - 1));
            g.cls[k] = on_edge ? NodeClass::Boundary : NodeClass::Interior;
            g.dist[k] = on_edge ? 0.0 : g.domain.distance(g.coord(k));
        }
    } else {
        // First pass: in/out.
        for (int k = 0; k < n; ++k)
            if (g.domain.distance(g.coord(k)) < 0.0) g.cls[k] = NodeClass::Exterior;
        // Second pass: boundary layer = inside nodes within h/2 of the circle or
        // with any exterior 8-neighbor (keeps every interior stencil inside).
        for (int k = 0; k < n; ++k) {
            if (g.cls[k] == NodeClass::Exterior) continue;
            const double d = g.domain.distance(g.coord(k));
            bool near = d < 0.5 * g.h;
            const int i = g.ix(k), j = g.iy(k);
            for (int dj = -1; dj <= 1 && !near; ++dj)
                for (int di = -1; di <= 1 && !near; ++di) {
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= g.nx || jj < 0 || jj >= g.ny) {
                        near = true;  // lattice edge inside the disk: treat as boundary
                        continue;
                    }
                    if (g.cls[g.index(ii, jj)] == NodeClass::Exterior) near = true;
                }
            if (near) {
                g.cls[k] = NodeClass::Boundary;
                g.dist[k] = 0.0;
            } else {
                g.dist[k] = d;
            }
        }
    }
    g.interior_nodes.clear();
    for (int k = 0; k < n; ++k)
        if (g.cls[k] == NodeClass::Interior) g.interior_nodes.push_back(k);
}

}  // namespace detail

inline Grid build_grid(const DomainSpec& domain, int resolution) {
    if (resolution < 8) throw std::invalid_argument("build_grid: resolution must be >= 8");
    Grid g;
    g.domain = domain;
    g.dim = domain.dim();
    switch (domain.kind) {
        case DomainKind::Interval: {
            if (!(domain.x1 > domain.x0))
                throw std::invalid_argument("build_grid: degenerate interval");
            g.nx = resolution;
            g.ny = 1;
            g.ox = domain.x0;
            g.h = (domain.x1 - domain.x0) / (resolution - 1);
            break;
        }
        case DomainKind::Rectangle: {
            const double lx = domain.x1 - domain.x0, ly = domain.y1 - domain.y0;
            if (!(lx > 0.0) || !(ly > 0.0))
                throw std::invalid_argument("build_grid: degenerate rectangle");
            g.nx = resolution;
            g.h = lx / (resolution - 1);
            const double nyf = ly / g.h;
            g.ny = (int)std::lround(nyf) + 1;
            if (std::abs(nyf - std::lround(nyf)) > 1e-9 || g.ny < 8)
                throw std::invalid_argument(
                    "build_grid: rectangle extents must be commensurate with h and give >= 8 "
                    "nodes per axis");
            g.ox = domain.x0;
            g.oy = domain.y0;
            break;
        }
        case DomainKind::Disk: {
            if (!(domain.radius > 0.0))
                throw std::invalid_argument("build_grid: degenerate disk");
            g.nx = g.ny = resolution;
            g.h = 2.0 * domain.radius / (resolution - 1);
            g.ox = domain.cx - domain.radius;
            g.oy = domain.cy - domain.radius;
            break;
        }
    }
    detail::classify_nodes(g);
    return g;
}

// Same domain kind scaled about its center; node count keeps h (or refines
// slightly so at least 8 nodes per axis remain).
inline Grid subdomain(const Grid& g, double shrink) {
    if (!(shrink > 0.0) || !(shrink < 1.0))
        throw std::invalid_argument("subdomain: shrink factor must lie in (0,1)");
    const int n_old = g.domain.kind == DomainKind::Rectangle
                          ? std::max(g.nx, g.ny)
                          : g.nx;
    int n_new = (int)std::lround(shrink * (n_old - 1)) + 1;
    n_new = std::max(n_new, 8);
    DomainSpec d = g.domain;
    switch (d.kind) {
        case DomainKind::Interval: {
            const double c = 0.5 * (d.x0 + d.x1), half = 0.5 * (d.x1 - d.x0) * shrink;
            d.x0 = c - half;
            d.x1 = c + half;
            break;
        }
        case DomainKind::Rectangle: {
            const double cx = 0.5 * (d.x0 + d.x1), cy = 0.5 * (d.y0 + d.y1);
            const double hx = 0.5 * (d.x1 - d.x0) * shrink, hy = 0.5 * (d.y1 - d.y0) * shrink;
            d.x0 = cx - hx;
            d.x1 = cx + hx;
            d.y0 = cy - hy;
            d.y1 = cy + hy;
            break;
        }
        case DomainKind::Disk: d.radius *= shrink; break;
    }
    return build_grid(d, n_new);
}

// Per-node scalar field bound to a grid.
struct Field {
    const Grid* grid = nullptr;
    std::vector<double> v;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0) : grid(&g), v(g.size(), fill) {}

    double& operator[](int n) { return v[n]; }
    double operator[](int n) const { return v[n]; }
    int size() const { return (int)v.size(); }

    double max_abs() const {
        double m = 0.0;
        for (int k : grid->interior_nodes) m = std::max(m, std::abs(v[k]));
        for (int k = 0; k < size(); ++k)
            if (grid->is_boundary(k)) m = std::max(m, std::abs(v[k]));
        return m;
    }
    double min_interior() const {
        double m = std::numeric_limits<double>::infinity();
        for (int k : grid->interior_nodes) m = std::min(m, v[k]);
        return m;
    }
    double max_interior() const {
        double m = -std::numeric_limits<double>::infinity();
        for (int k : grid->interior_nodes) m = std::max(m, v[k]);
        return m;
    }
    int argmin_interior() const {
        int best = grid->interior_nodes.front();
        for (int k : grid->interior_nodes)
            if (v[k] < v[best]) best = k;
        return best;
    }
};

inline Field distance_field(const Grid& g) {
    Field f(g);
    f.v = g.dist;
    return f;
}

namespace detail {
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}
}  // namespace detail

// CSV export with columns node_index, x, [y,] d, value (exterior nodes skipped).
inline void write_field_csv(const Field& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_field_csv: cannot open " + path);
    const Grid& g = *f.grid;
    out << (g.dim == 1 ? "node_index,x,d,value\n" : "node_index,x,y,d,value\n");
    for (int k = 0; k < g.size(); ++k) {
        if (g.is_exterior(k)) continue;
        const Vec p = g.coord(k);
        out << k << ',' << detail::fmt17(p[0]);
        if (g.dim == 2) out << ',' << detail::fmt17(p[1]);
        out << ',' << detail::fmt17(g.dist[k]) << ',' << detail::fmt17(f.v[k]) << '\n';
    }
    if (!out) throw std::runtime_error("write_field_csv: write failed for " + path);
}

}  // namespace ergofd

#endif
