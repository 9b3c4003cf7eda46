#pragma once
#include <Eigen/Dense>

#include <vector>

#include "stokeslab/spectral.hpp"

namespace stokeslab {

// Smallest constant C such that, for every coefficient vector a supported on
// the frequency window {mu_j <= lambda},
//
//     sum_j a_j^2  <=  C * || sum_j a_j e_{j,1} ||^2_{omega},
//
// i.e. the masked first velocity components of the window modes control the
// full coefficient energy. Computed as 1 / lambda_min of the masked component
// Gram restricted to the window (mask == nullptr means the whole domain,
// where the Gram is the identity up to solver precision).
//
// Throws ConfigError when the window is empty and NumericalError when the
// restricted Gram is numerically singular, which happens when the observation
// region is too small or the window too wide for the mesh; the message
// reports the offending smallest eigenvalue.
double best_constant(const StokesEigenbasis& basis, const ObservationMask* mask,
                     double lambda);

// One point of the measured curve lambda -> C(lambda).
struct LawSample {
    double lambda = 0.0;  // window cutoff
    int modes = 0;        // number of modes below the cutoff
    double c = 0.0;       // window constant at this cutoff
};

// Sweeps best_constant over cutoffs placed at consecutive eigenvalue
// midpoints, so each sample sits strictly between two spectral levels and the
// window content is unambiguous. Only certified modes (below the mesh
// resolution limit) are swept; max_modes > 0 caps the sweep further.
std::vector<LawSample> spectral_law_samples(const StokesEigenbasis& basis,
                                            const ObservationMask* mask,
                                            int max_modes = 0);

// Least-squares fit of log C = log_m + k * sqrt(lambda) to a sampled curve,
// with the coefficient of determination of the fit. Requires at least five
// samples with positive constants; exactly exponential-in-sqrt data is
// recovered to round-off and constant data yields k == 0.
struct SqrtLawFit {
    double log_m = 0.0;
    double k = 0.0;
    double r2 = 0.0;
};
SqrtLawFit fit_sqrt_law(const std::vector<LawSample>& samples);

// Smallest constant C such that, for coefficients supported on the window,
//
//     sum_j A_j^2  <=  C * || sum_j A_j * Delta_h e_{j,1} ||^2_{Omega},
//
// where Delta_h is the wide discrete Laplacian (the pencil metric) applied to
// the first velocity component and the norm runs over the whole domain.
// Computed as 1 / lambda_min of the corresponding full-domain Gram. Each
// entry of s_samples triggers a deterministic certificate: the propagated
// coefficients A_j = sinh(s*sqrt(mu_j))/sqrt(mu_j) must produce a Rayleigh
// ratio within (1 + 1e-8) of the returned constant's bound, otherwise
// NumericalError is thrown.
double coefficient_recovery_constant(const StokesEigenbasis& basis, double lambda,
                                     const std::vector<double>& s_samples = {});

// A window field extended into an auxiliary variable s: starting from
// coefficients a on the window, each mode carries the propagated weight
//
//     A_j(s) = a_j * sinh(s * sqrt(mu_j)) / sqrt(mu_j),
//
// so A_j(0) = 0 and dA_j/ds(0) = a_j, and the field at level s is
// sum_j A_j(s) * Delta_h e_{j,1}. `coeff` holds A_j(s_k) (window x samples),
// `value` the assembled nodal fields (nodes x samples).
struct AugmentedField {
    std::vector<double> s;  // levels of the extension variable
    Eigen::MatrixXd coeff;  // propagated coefficients, one column per level
    Eigen::MatrixXd value;  // assembled field, one column per level
};

// Builds the extended field for the window {mu_j <= lambda}. The coefficient
// vector must match the window size and at least one level is required.
AugmentedField assemble_augmented_field(const StokesEigenbasis& basis, double lambda,
                                        const Eigen::VectorXd& a,
                                        const std::vector<double>& s_samples);

// Defect of the extended field against the elliptic equation it is designed
// to satisfy: because the propagated weights obey A_j'' = mu_j * A_j exactly,
// everything cancels except the pencil defect of each stream mode pushed to
// the first velocity component. Returns the largest weighted defect norm over
// the sampled levels,
//
//     max_s  || sum_j A_j(s) * Dy (B - mu_j M) psi_j ||_{L2h},
//
// which is zero for a = 0 and bounded by sum_j |A_j(s)| * r_j / h in terms of
// the per-mode pencil residuals r_j.
double augmented_field_residual(const StokesEigenbasis& basis, double lambda,
                                const Eigen::VectorXd& a,
                                const std::vector<double>& s_samples);

}  // namespace stokeslab
