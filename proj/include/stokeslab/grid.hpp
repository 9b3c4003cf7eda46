#pragma once
#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace stokeslab {

// Interior nodes of a uniform mesh on the unit square. Node (i, j), 1-based in
// both axes, sits at (i*h, j*h) with h = 1/(n+1). Boundary nodes are never
// stored; homogeneous Dirichlet data is structural. Storage is row-major in y,
// x fastest: index (i, j) -> (j-1)*n + (i-1).
struct Grid {
    int n = 0;
    double h = 0.0;

    explicit Grid(int n_interior);

    int nodes() const { return n * n; }
    int index(int i, int j) const { return (j - 1) * n + (i - 1); }
    double x(int i) const { return i * h; }
    double y(int j) const { return j * h; }
};

// Axis-aligned half-open box [x0,x1) x [y0,y1).
struct Rect {
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
};

// Parses "x0,x1,y0,y1" ('.' decimal separator). Throws ConfigError on
// malformed text or a box not contained in the unit square.
Rect parse_rect(const std::string& text);

// Node subset of a grid cut out by a rect. Construction fails when the box
// captures no node: an empty observation region is never silently accepted.
struct ObservationMask {
    Rect rect{};
    std::vector<std::uint8_t> active;
    int count = 0;

    ObservationMask(const Grid& grid, const Rect& r);
};

struct ScalarField {
    Eigen::VectorXd values;
};

struct VectorField {
    Eigen::VectorXd c1, c2;
};

ScalarField make_scalar(const Grid& grid, double fill = 0.0);
VectorField make_vector(const Grid& grid, double fill = 0.0);

// Discrete L2 pairing: sum a*b*h^2 over active nodes (all nodes when mask is
// null). Vector fields pair both components.
double inner_product(const Grid& grid, const ScalarField& a, const ScalarField& b,
                     const ObservationMask* mask = nullptr);
double inner_product(const Grid& grid, const VectorField& a, const VectorField& b,
                     const ObservationMask* mask = nullptr);
double field_norm(const Grid& grid, const ScalarField& a, const ObservationMask* mask = nullptr);
double field_norm(const Grid& grid, const VectorField& a, const ObservationMask* mask = nullptr);

}  // namespace stokeslab
