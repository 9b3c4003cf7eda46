#pragma once
#include <Eigen/Dense>

#include <vector>

#include "stokeslab/ddreal.hpp"
#include "stokeslab/spectral.hpp"

namespace stokeslab {

// State in the modal energy space: coefficients against the orthonormal
// velocity basis, so the squared H-norm is the plain squared Euclidean norm.
struct ModeCoeffs {
    Eigen::VectorXd a;

    double norm_h() const { return a.norm(); }
};

// One active control interval. The realized control is a single-component
// field supported on the observation region,
//
//     f1(x, t) = sum_{j in source} q_j e^{-mu_j (t_end - t)} e_{j,1}(x) 1_omega(x),
//
// with the second component identically zero. The exponential-in-time shape
// makes every integral of the forced evolution closed-form, so no quadrature
// error ever enters a cost measurement; it is also the minimal-norm shape for
// steering the source modes.
//
// `weight` is the reported weight vector. `weight_dd`, when non-empty, holds
// the same weights in extended precision and is the authoritative value: at
// strong window conditioning, rounding the weights to binary64 before they
// hit the evolution would already scatter more energy onto the steered modes
// than the steering tolerances allow.
struct ControlSignal {
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<int> source;     // 0-based mode indices carrying weights
    Eigen::VectorXd weight;      // one weight per source entry
    std::vector<dd> weight_dd;   // optional extended-precision weights

    double duration() const { return t_end - t_start; }
};

// Everything the closed-form evolution needs: per-mode decay rates and the
// Gram matrix of the observed first component over the observation region.
// Tests may fill this with synthetic data; production code derives it from a
// solved basis and a mask.
struct ControlContext {
    Eigen::VectorXd mu;    // decay rate per mode, ascending
    Eigen::MatrixXd gram;  // masked first-component Gram, m x m
};

ControlContext make_context(const StokesEigenbasis& basis, const ObservationMask& mask);

// Closed-form interval weight integral(0,tau) e^{-s (tau - t)} dt =
// (1 - e^{-s tau}) / s, evaluated without cancellation for any s > 0,
// including s*tau below round-off and beyond exponential saturation.
double duhamel_weight(double s, double tau);
dd duhamel_weight_dd(dd s, dd tau);

// Free evolution over tau >= 0: a_j -> a_j e^{-mu_j tau}. The H-norm never
// increases and the map composes exactly over subintervals.
ModeCoeffs decay(const Eigen::VectorXd& mu, const ModeCoeffs& state, double tau);

// Forced evolution over the signal's interval, in closed form:
//
//   a_k(t_end) = a_k(t_start) e^{-mu_k tau}
//              + sum_{j in source} q_j G_{jk} (1 - e^{-(mu_j+mu_k) tau})/(mu_j+mu_k),
//
// including the spillover onto every mode k <= m, not only the sourced ones.
// Accumulation runs in extended precision: the forced term is engineered to
// cancel the decayed state on steered modes, and the cancellation must not be
// polluted by the summation itself. Throws ConfigError on a degenerate
// interval, a source index out of range, or mismatched weight sizes.
ModeCoeffs apply_control(const ControlContext& ctx, const ModeCoeffs& state,
                         const ControlSignal& signal);

// Observation functional of the free adjoint evolution from datum z0 over
// [0, T], in closed form:
//
//     integral(0,T) || z_1(t) ||^2_omega dt  =  a^T N_T a,
//     N_T(j,k) = G_{jk} (1 - e^{-(mu_j+mu_k) T})/(mu_j+mu_k).
//
// Nonnegative by construction; an exact zero means the datum is invisible
// from the observation region. Throws ConfigError for T <= 0.
double adjoint_observe(const ControlContext& ctx, const ModeCoeffs& z0, double t_final);

// Squared control norm || f ||^2 over the signal's space-time cylinder:
// the same kernel as the observation functional, restricted to the sources.
double control_energy(const ControlContext& ctx, const ControlSignal& signal);

}  // namespace stokeslab
