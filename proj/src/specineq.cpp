#include "stokeslab/specineq.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

#include "stokeslab/errors.hpp"

namespace stokeslab {

namespace {

// Window size for the cutoff, rejecting empty windows up front. Eigenvalues
// are ascending, so a window is always a prefix of the mode list.
int window_size(const StokesEigenbasis& basis, double lambda, const char* who) {
    FrequencyWindow win = basis.window(lambda);
    if (win.idx.empty()) {
        std::ostringstream msg;
        msg << who << ": the frequency window [0, " << lambda
            << "] contains no mode (smallest eigenvalue is " << basis.mu[0] << ")";
        throw ConfigError(msg.str());
    }
    return static_cast<int>(win.idx.size());
}

// Smallest eigenvalue of a symmetric Gram block, with a loud failure when the
// block is numerically singular: anything below 1e-15 of the largest
// eigenvalue is indistinguishable from solver noise and must not silently
// enter a reciprocal.
double smallest_gram_eigenvalue(const Eigen::MatrixXd& gram, const char* who) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw NumericalError(std::string(who) + ": eigenvalue iteration failed on the Gram block");
    }
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || lo < 1e-15 * hi) {
        std::ostringstream msg;
        msg << who << ": restricted Gram is numerically singular (lambda_min = " << lo
            << ", lambda_max = " << hi
            << "); enlarge the observation region or shrink the frequency window";
        throw NumericalError(msg.str());
    }
    return lo;
}

// Columns Delta_h e_{j,1} for the window modes: the wide Laplacian (pencil
// metric, SPD convention) applied to the first velocity component, with the
// continuum sign restored.
Eigen::MatrixXd laplacian_component_columns(const StokesEigenbasis& basis, int w) {
    const Eigen::SparseMatrix<double> metric = gradient_metric(basis.grid);
    Eigen::MatrixXd d(basis.grid.nodes(), w);
    for (int j = 0; j < w; ++j) {
        d.col(j) = -(metric * basis.e[static_cast<std::size_t>(j)].c1);
    }
    return d;
}

// Propagated coefficient weights sinh(s*sqrt(mu_j))/sqrt(mu_j) for the first
// w modes, scaled by the seed coefficients when given.
Eigen::VectorXd propagated_coefficients(const StokesEigenbasis& basis, int w, double s,
                                        const Eigen::VectorXd* seed) {
    Eigen::VectorXd a(w);
    for (int j = 0; j < w; ++j) {
        const double root = std::sqrt(basis.mu[j]);
        const double weight = std::sinh(s * root) / root;
        a[j] = seed ? (*seed)[j] * weight : weight;
    }
    return a;
}

}  // namespace

double best_constant(const StokesEigenbasis& basis, const ObservationMask* mask,
                     double lambda) {
    const int w = window_size(basis, lambda, "best_constant");
    const Eigen::MatrixXd gram = component_gram(basis, 1, mask);
    const double lo = smallest_gram_eigenvalue(gram.topLeftCorner(w, w), "best_constant");
    return 1.0 / lo;
}

std::vector<LawSample> spectral_law_samples(const StokesEigenbasis& basis,
                                            const ObservationMask* mask, int max_modes) {
    int cap = basis.resolved_count;
    if (max_modes > 0 && max_modes < cap) cap = max_modes;
    if (cap > basis.m) cap = basis.m;

    std::vector<LawSample> out;
    if (cap < 2) return out;

    const Eigen::MatrixXd gram = component_gram(basis, 1, mask);
    out.reserve(static_cast<std::size_t>(cap - 1));
    for (int k = 1; k < cap; ++k) {
        const double lambda = 0.5 * (basis.mu[k - 1] + basis.mu[k]);
        const double lo =
            smallest_gram_eigenvalue(gram.topLeftCorner(k, k), "spectral_law_samples");
        out.push_back(LawSample{lambda, k, 1.0 / lo});
    }
    return out;
}

SqrtLawFit fit_sqrt_law(const std::vector<LawSample>& samples) {
    if (samples.size() < 5) {
        throw ConfigError("fit_sqrt_law: need at least five samples");
    }
    const int n = static_cast<int>(samples.size());
    Eigen::VectorXd x(n), y(n);
    for (int i = 0; i < n; ++i) {
        if (!(samples[static_cast<std::size_t>(i)].lambda > 0.0) ||
            !(samples[static_cast<std::size_t>(i)].c > 0.0)) {
            throw ConfigError("fit_sqrt_law: samples must have positive cutoff and constant");
        }
        x[i] = std::sqrt(samples[static_cast<std::size_t>(i)].lambda);
        y[i] = std::log(samples[static_cast<std::size_t>(i)].c);
    }

    const double xbar = x.mean();
    const double ybar = y.mean();
    const Eigen::VectorXd xc = x.array() - xbar;
    const Eigen::VectorXd yc = y.array() - ybar;
    const double sxx = xc.squaredNorm();
    if (!(sxx > 0.0)) {
        throw ConfigError("fit_sqrt_law: all samples share one cutoff");
    }

    SqrtLawFit fit;
    fit.k = xc.dot(yc) / sxx;
    fit.log_m = ybar - fit.k * xbar;

    const double sst = yc.squaredNorm();
    const double ssr = (yc - fit.k * xc).squaredNorm();
    fit.r2 = (sst > 0.0) ? 1.0 - ssr / sst : 1.0;
    return fit;
}

double coefficient_recovery_constant(const StokesEigenbasis& basis, double lambda,
                                     const std::vector<double>& s_samples) {
    const int w = window_size(basis, lambda, "coefficient_recovery_constant");
    const Eigen::MatrixXd d = laplacian_component_columns(basis, w);
    const double h2 = basis.grid.h * basis.grid.h;
    const Eigen::MatrixXd gram = h2 * (d.transpose() * d);
    const double lo = smallest_gram_eigenvalue(gram, "coefficient_recovery_constant");
    const double c = 1.0 / lo;

    // Certificate sweep: propagated coefficients at each requested level must
    // respect the bound the eigenvalue route just certified.
    for (double s : s_samples) {
        const Eigen::VectorXd a = propagated_coefficients(basis, w, s, nullptr);
        const double num = a.squaredNorm();
        if (num == 0.0) continue;  // s == 0 propagates to the zero field
        const double den = h2 * (d * a).squaredNorm();
        if (!(den > 0.0) || num / den > c * (1.0 + 1e-8)) {
            std::ostringstream msg;
            msg << "coefficient_recovery_constant: certificate failed at level s = " << s
                << " (ratio " << (den > 0.0 ? num / den : std::nan("")) << " vs constant " << c
                << ")";
            throw NumericalError(msg.str());
        }
    }
    return c;
}

AugmentedField assemble_augmented_field(const StokesEigenbasis& basis, double lambda,
                                        const Eigen::VectorXd& a,
                                        const std::vector<double>& s_samples) {
    const int w = window_size(basis, lambda, "assemble_augmented_field");
    if (a.size() != w) {
        std::ostringstream msg;
        msg << "assemble_augmented_field: coefficient vector has " << a.size()
            << " entries but the window holds " << w << " modes";
        throw ConfigError(msg.str());
    }
    if (s_samples.empty()) {
        throw ConfigError("assemble_augmented_field: need at least one level of the extension variable");
    }

    const int levels = static_cast<int>(s_samples.size());
    AugmentedField out;
    out.s = s_samples;
    out.coeff.resize(w, levels);
    for (int k = 0; k < levels; ++k) {
        out.coeff.col(k) = propagated_coefficients(basis, w, s_samples[static_cast<std::size_t>(k)], &a);
    }
    out.value = laplacian_component_columns(basis, w) * out.coeff;
    return out;
}

double augmented_field_residual(const StokesEigenbasis& basis, double lambda,
                                const Eigen::VectorXd& a,
                                const std::vector<double>& s_samples) {
    const int w = window_size(basis, lambda, "augmented_field_residual");
    if (a.size() != w) {
        std::ostringstream msg;
        msg << "augmented_field_residual: coefficient vector has " << a.size()
            << " entries but the window holds " << w << " modes";
        throw ConfigError(msg.str());
    }
    if (s_samples.empty()) {
        throw ConfigError("augmented_field_residual: need at least one level of the extension variable");
    }

    // Pencil defect of each stream mode, pushed to the first velocity
    // component the same way the mode's velocity is produced.
    const Eigen::SparseMatrix<double> dy = central_dy(basis.grid);
    Eigen::MatrixXd pushed(basis.grid.nodes(), w);
    for (int j = 0; j < w; ++j) {
        const Eigen::VectorXd rho =
            basis.op_b * basis.psi.col(j) - basis.mu[j] * (basis.op_metric * basis.psi.col(j));
        pushed.col(j) = dy * rho;
    }

    double worst = 0.0;
    for (double s : s_samples) {
        const Eigen::VectorXd coeff = propagated_coefficients(basis, w, s, &a);
        const double norm = basis.grid.h * (pushed * coeff).norm();
        if (norm > worst) worst = norm;
    }
    return worst;
}

}  // namespace stokeslab
