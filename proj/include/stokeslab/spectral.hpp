#pragma once
#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

#include "stokeslab/grid.hpp"

namespace stokeslab {

// Standard 5-point Dirichlet Laplacian, SPD convention (-Delta_h). Its exact
// spectrum is (4 - 2cos(k pi h) - 2cos(l pi h)) / h^2 with product-sine
// eigenvectors, which the tests pin against the assembled matrix.
Eigen::MatrixXd assemble_laplacian(const Grid& grid);
double laplacian_eigenvalue(const Grid& grid, int k, int l);

// Central first-difference operators with zero extension past the boundary,
// (u_{i+1} - u_{i-1}) / 2h along each axis. They are exactly skew-symmetric
// and commute exactly as assembled matrices, which is what makes the curl
// construction divergence-free at operator level.
Eigen::SparseMatrix<double> central_dx(const Grid& grid);
Eigen::SparseMatrix<double> central_dy(const Grid& grid);

// Gram matrix of the central gradient, Dx^T Dx + Dy^T Dy. This is the SPD
// metric in which the discrete velocity pairing is computed; it doubles as a
// (wide) discrete Dirichlet Laplacian and is the second matrix of the
// buckling pencil below.
Eigen::SparseMatrix<double> gradient_metric(const Grid& grid);

// 13-point clamped-plate bilaplacian. The zero normal derivative is closed by
// mirror ghosts (psi_{-1} = psi_{+1}), which only bumps diagonal entries of
// boundary-adjacent rows.
Eigen::MatrixXd assemble_biharmonic(const Grid& grid);
Eigen::SparseMatrix<double> biharmonic_sparse(const Grid& grid);

// Velocity from a stream function: e = (Dy psi, -Dx psi). Boundary values of
// both components vanish identically under the clamped conventions.
VectorField curl(const Grid& grid, const ScalarField& psi);
// Central-difference divergence Dx v1 + Dy v2 of a velocity pair.
ScalarField divergence(const Grid& grid, const VectorField& v);

struct FrequencyWindow {
    double lambda = 0.0;
    std::vector<int> idx;  // 0-based mode indices with mu_j <= lambda
};

// Discrete Stokes eigenbasis obtained from the stream-function buckling
// pencil B psi = mu * M psi (B clamped bilaplacian, M gradient metric).
// Velocities are L2-normalized; their full-domain Gram is the identity to
// solver precision because the pencil is solved in exactly that metric.
struct StokesEigenbasis {
    Grid grid;
    int m = 0;
    Eigen::VectorXd mu;          // the m kept eigenvalues, ascending
    Eigen::MatrixXd psi;         // stream functions, one column per mode
    std::vector<VectorField> e;  // unit-norm velocity fields
    Eigen::VectorXd residual;    // L2h pencil residuals per mode
    double resolution_limit = 0.0;  // 0.25 / h^2
    int resolved_count = 0;         // modes among the m below the limit
    Eigen::VectorXd spectrum;       // full pencil spectrum, ascending
    Eigen::SparseMatrix<double> op_b;       // bilaplacian the pencil used
    Eigen::SparseMatrix<double> op_metric;  // metric the pencil used

    explicit StokesEigenbasis(const Grid& g) : grid(g) {}

    FrequencyWindow window(double lambda) const;
};

// Solves the buckling pencil and keeps the lowest m modes. Throws
// NumericalError when the metric factorization fails or a pencil residual
// exceeds 1e-8 * mu_j; throws ConfigError when m is out of range.
StokesEigenbasis solve_buckling(const Grid& grid, int m);

// Gram matrix of one velocity component over the masked region (whole domain
// when mask is null): G_{jk} = <e_{j,c}, e_{k,c}>_{omega}.
Eigen::MatrixXd component_gram(const StokesEigenbasis& basis, int component,
                               const ObservationMask* mask = nullptr);

}  // namespace stokeslab
