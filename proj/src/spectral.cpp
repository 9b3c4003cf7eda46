#include "stokeslab/spectral.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

#include "stokeslab/errors.hpp"

namespace stokeslab {

Eigen::MatrixXd assemble_laplacian(const Grid& grid) {
    const int n = grid.n;
    const double ih2 = 1.0 / (grid.h * grid.h);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(grid.nodes(), grid.nodes());
    for (int j = 1; j <= n; ++j) {
        for (int i = 1; i <= n; ++i) {
            const int row = grid.index(i, j);
            a(row, row) = 4.0 * ih2;
            if (i > 1) a(row, grid.index(i - 1, j)) = -ih2;
            if (i < n) a(row, grid.index(i + 1, j)) = -ih2;
            if (j > 1) a(row, grid.index(i, j - 1)) = -ih2;
            if (j < n) a(row, grid.index(i, j + 1)) = -ih2;
        }
    }
    return a;
}

double laplacian_eigenvalue(const Grid& grid, int k, int l) {
    const double pih = M_PI * grid.h;
    return (4.0 - 2.0 * std::cos(k * pih) - 2.0 * std::cos(l * pih)) / (grid.h * grid.h);
}

namespace {

Eigen::SparseMatrix<double> central_diff(const Grid& grid, bool along_x) {
    const int n = grid.n;
    const double c = 1.0 / (2.0 * grid.h);
    Eigen::SparseMatrix<double> d(grid.nodes(), grid.nodes());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(2 * grid.nodes()));
    for (int j = 1; j <= n; ++j) {
        for (int i = 1; i <= n; ++i) {
            const int row = grid.index(i, j);
            const int p = along_x ? i : j;
            if (p > 1) trip.emplace_back(row, along_x ? grid.index(i - 1, j) : grid.index(i, j - 1), -c);
            if (p < n) trip.emplace_back(row, along_x ? grid.index(i + 1, j) : grid.index(i, j + 1), c);
        }
    }
    d.setFromTriplets(trip.begin(), trip.end());
    return d;
}

}  // namespace

Eigen::SparseMatrix<double> central_dx(const Grid& grid) { return central_diff(grid, true); }
Eigen::SparseMatrix<double> central_dy(const Grid& grid) { return central_diff(grid, false); }

Eigen::SparseMatrix<double> gradient_metric(const Grid& grid) {
    // Dx^T Dx + Dy^T Dy assembled entry-wise: per axis the diagonal counts the
    // rows reaching node i and the (i, i+-2) couplings carry -c^2.
    const int n = grid.n;
    const double c2 = 1.0 / (4.0 * grid.h * grid.h);
    Eigen::SparseMatrix<double> m(grid.nodes(), grid.nodes());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(6 * grid.nodes()));
    for (int j = 1; j <= n; ++j) {
        for (int i = 1; i <= n; ++i) {
            const int row = grid.index(i, j);
            const int cx = (i > 1 ? 1 : 0) + (i < n ? 1 : 0);
            const int cy = (j > 1 ? 1 : 0) + (j < n ? 1 : 0);
            trip.emplace_back(row, row, (cx + cy) * c2);
            if (i > 2) trip.emplace_back(row, grid.index(i - 2, j), -c2);
            if (i < n - 1) trip.emplace_back(row, grid.index(i + 2, j), -c2);
            if (j > 2) trip.emplace_back(row, grid.index(i, j - 2), -c2);
            if (j < n - 1) trip.emplace_back(row, grid.index(i, j + 2), -c2);
        }
    }
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

Eigen::SparseMatrix<double> biharmonic_sparse(const Grid& grid) {
    const int n = grid.n;
    const double ih4 = 1.0 / (grid.h * grid.h * grid.h * grid.h);
    Eigen::SparseMatrix<double> b(grid.nodes(), grid.nodes());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(13 * grid.nodes()));
    for (int j = 1; j <= n; ++j) {
        for (int i = 1; i <= n; ++i) {
            const int row = grid.index(i, j);
            // Mirror ghosts for the clamped edge: an arm two steps past the
            // wall folds back onto the interior neighbor it mirrors, i.e.
            // onto this node itself.
            double diag = 20.0;
            if (i == 1) diag += 1.0;
            if (i == n) diag += 1.0;
            if (j == 1) diag += 1.0;
            if (j == n) diag += 1.0;
            trip.emplace_back(row, row, diag * ih4);
            if (i > 1) trip.emplace_back(row, grid.index(i - 1, j), -8.0 * ih4);
            if (i < n) trip.emplace_back(row, grid.index(i + 1, j), -8.0 * ih4);
            if (j > 1) trip.emplace_back(row, grid.index(i, j - 1), -8.0 * ih4);
            if (j < n) trip.emplace_back(row, grid.index(i, j + 1), -8.0 * ih4);
            if (i > 1 && j > 1) trip.emplace_back(row, grid.index(i - 1, j - 1), 2.0 * ih4);
            if (i > 1 && j < n) trip.emplace_back(row, grid.index(i - 1, j + 1), 2.0 * ih4);
            if (i < n && j > 1) trip.emplace_back(row, grid.index(i + 1, j - 1), 2.0 * ih4);
            if (i < n && j < n) trip.emplace_back(row, grid.index(i + 1, j + 1), 2.0 * ih4);
            if (i > 2) trip.emplace_back(row, grid.index(i - 2, j), ih4);
            if (i < n - 1) trip.emplace_back(row, grid.index(i + 2, j), ih4);
            if (j > 2) trip.emplace_back(row, grid.index(i, j - 2), ih4);
            if (j < n - 1) trip.emplace_back(row, grid.index(i, j + 2), ih4);
        }
    }
    b.setFromTriplets(trip.begin(), trip.end());
    return b;
}

Eigen::MatrixXd assemble_biharmonic(const Grid& grid) {
    return Eigen::MatrixXd(biharmonic_sparse(grid));
}

VectorField curl(const Grid& grid, const ScalarField& psi) {
    if (psi.values.size() != grid.nodes()) throw ConfigError("curl: field size does not match grid");
    static thread_local int cached_n = -1;
    static thread_local Eigen::SparseMatrix<double> dx, dy;
    if (cached_n != grid.n) {
        dx = central_dx(grid);
        dy = central_dy(grid);
        cached_n = grid.n;
    }
    VectorField v;
    v.c1 = dy * psi.values;
    v.c2 = -(dx * psi.values);
    return v;
}

ScalarField divergence(const Grid& grid, const VectorField& v) {
    if (v.c1.size() != grid.nodes() || v.c2.size() != grid.nodes())
        throw ConfigError("divergence: field size does not match grid");
    static thread_local int cached_n = -1;
    static thread_local Eigen::SparseMatrix<double> dx, dy;
    if (cached_n != grid.n) {
        dx = central_dx(grid);
        dy = central_dy(grid);
        cached_n = grid.n;
    }
    return ScalarField{dx * v.c1 + dy * v.c2};
}

FrequencyWindow StokesEigenbasis::window(double lambda) const {
    FrequencyWindow w;
    w.lambda = lambda;
    for (int j = 0; j < m; ++j)
        if (mu[j] <= lambda) w.idx.push_back(j);
    return w;
}

StokesEigenbasis solve_buckling(const Grid& grid, int m) {
    if (m < 1 || m > grid.nodes())
        throw ConfigError("m: basis size must lie in [1, n^2] = [1, " +
                          std::to_string(grid.nodes()) + "], got " + std::to_string(m));

    const Eigen::MatrixXd b = assemble_biharmonic(grid);
    const Eigen::SparseMatrix<double> metric_sp = gradient_metric(grid);
    const Eigen::MatrixXd metric(metric_sp);

    Eigen::LLT<Eigen::MatrixXd> llt(metric);
    if (llt.info() != Eigen::Success)
        throw NumericalError(
            "gradient metric is not positive definite (grid too coarse or odd n); "
            "Cholesky factorization failed");

    // Congruence to a standard symmetric problem: C = L^-1 B L^-T.
    Eigen::MatrixXd c = llt.matrixL().solve(b).transpose().eval();
    c = llt.matrixL().solve(c);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    if (es.info() != Eigen::Success)
        throw NumericalError("symmetric eigensolve failed to converge");

    StokesEigenbasis basis(grid);
    basis.m = m;
    basis.spectrum = es.eigenvalues();
    basis.mu = basis.spectrum.head(m);
    basis.resolution_limit = 0.25 / (grid.h * grid.h);
    basis.resolved_count = 0;
    for (int j = 0; j < m; ++j)
        if (basis.mu[j] <= basis.resolution_limit) ++basis.resolved_count;
    basis.op_b = biharmonic_sparse(grid);
    basis.op_metric = metric_sp;

    basis.psi.resize(grid.nodes(), m);
    basis.residual.resize(m);
    basis.e.reserve(static_cast<std::size_t>(m));
    const Eigen::SparseMatrix<double> dx = central_dx(grid);
    const Eigen::SparseMatrix<double> dy = central_dy(grid);
    for (int j = 0; j < m; ++j) {
        Eigen::VectorXd psi = llt.matrixU().solve(es.eigenvectors().col(j));
        psi /= grid.h;  // unit L2 velocity norm: |e|^2 = h^2 psi^T M psi
        int kmax = 0;
        psi.cwiseAbs().maxCoeff(&kmax);
        if (psi[kmax] < 0.0) psi = -psi;
        basis.psi.col(j) = psi;
        basis.e.push_back(VectorField{dy * psi, -(dx * psi)});

        const double mu = basis.mu[j];
        const double r = grid.h * (basis.op_b * psi - mu * (metric_sp * psi)).norm();
        basis.residual[j] = r;
        if (!(r <= 1e-8 * mu))
            throw NumericalError("pencil residual " + std::to_string(r) + " for mode " +
                                 std::to_string(j + 1) + " exceeds 1e-8 * mu_j");
    }
    return basis;
}

Eigen::MatrixXd component_gram(const StokesEigenbasis& basis, int component,
                               const ObservationMask* mask) {
    if (component != 1 && component != 2)
        throw ConfigError("component: must be 1 or 2, got " + std::to_string(component));
    const int nodes = basis.grid.nodes();
    Eigen::MatrixXd e(nodes, basis.m);
    for (int j = 0; j < basis.m; ++j)
        e.col(j) = (component == 1) ? basis.e[static_cast<std::size_t>(j)].c1
                                    : basis.e[static_cast<std::size_t>(j)].c2;
    if (mask) {
        for (int k = 0; k < nodes; ++k)
            if (!mask->active[static_cast<std::size_t>(k)]) e.row(k).setZero();
    }
    Eigen::MatrixXd g = (basis.grid.h * basis.grid.h) * (e.transpose() * e);
    g = 0.5 * (g + g.transpose()).eval();
    return g;
}

}  // namespace stokeslab
