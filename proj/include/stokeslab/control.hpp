#pragma once
// Finite-dimensional minimal-norm steering of the low-frequency block through
// a single velocity component, a dyadic multi-stage controller that alternates
// steering intervals with free-decay intervals, and a penalized comparator
// that reaches the same control through conjugate gradients.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stokeslab/ddreal.hpp"
#include "stokeslab/evolution.hpp"
#include "stokeslab/spectral.hpp"

namespace stokeslab {

// Control Gramian of the modes with mu_j <= lambda over an interval of length
// tau: W_jk = G_jk * (1 - e^{-(mu_j+mu_k) tau}) / (mu_j + mu_k), where G is
// the masked first-component Gram matrix. Entries, extremal eigenvalues and
// the cached Cholesky factor are computed in double-double arithmetic because
// the matrix is exponentially ill-conditioned in sqrt(lambda).
struct Gramian {
    double lambda = 0.0;      // frequency cutoff defining the window
    double tau = 0.0;         // interval length entering the kernel weights
    int size = 0;             // number of modes in the window
    Eigen::VectorXd mu;       // eigenvalues of the window modes
    Eigen::MatrixXd w;        // double mirror of the matrix (reports, oracles)
    ddmat w_dd{0};            // authoritative double-double entries
    ddmat chol{0};            // cached lower Cholesky factor of w_dd
    double lambda_min = 0.0;  // smallest eigenvalue (double-double accurate)
    double lambda_max = 0.0;  // largest eigenvalue
};

// Assembles the Gramian for the given eigenvalues and component Gram matrix.
// Throws ConfigError when the window is empty or the inputs are inconsistent,
// and NumericalError when the matrix is numerically singular or its
// eigenvalue ratio falls below 1e-13 (with a suggestion to lower the cutoff
// or enlarge the observation region or the interval).
Gramian build_gramian(const Eigen::VectorXd& mu, const Eigen::MatrixXd& gram,
                      double lambda, double tau);

// Convenience overload assembling the masked component Gram from the basis.
Gramian build_gramian(const StokesEigenbasis& basis, const ObservationMask& mask,
                      double lambda, double tau);

struct SteerResult {
    ControlSignal signal;  // sources = window modes, double-double weights
    double cost = 0.0;     // L2(omega x interval) norm of the control
    double cost_sq = 0.0;  // cost squared as accumulated in double-double
};

// Minimal-norm control zeroing the window block at the end of the interval
// [t_start, t_start + gramian.tau]: solves W q = -diag(e^{-mu_j tau}) a_low in
// double-double, so after apply_control the window coefficients vanish to the
// linear-solver tolerance. A state with no support in the window yields an
// exactly zero signal and zero cost.
SteerResult steer_low_modes(const ModeCoeffs& state, const Gramian& gramian,
                            double t_start = 0.0);

struct ScheduleInterval {
    bool active = false;   // true: steer the window; false: free decay
    double lambda = 0.0;   // frequency cutoff attached to this interval
    double t_start = 0.0;
    double t_end = 0.0;
};

// Alternating steer/decay schedule on [0, horizon]. Stage k occupies a slice
// of duration c * horizon * ratio^k (normalized so the slices tile the
// horizon) split half active, half passive, with cutoff
// Lambda_k = min((2^k / (eps * horizon))^2, lambda_max).
struct ControlSchedule {
    double horizon = 0.0;
    double eps = 0.0;         // cutoff knob: sqrt(Lambda_0) = 1/(eps*horizon)
    double ratio = 0.0;       // geometric duration ratio between stages
    double lambda_max = 0.0;  // cutoff cap (largest steerable frequency)
    double tol_target = 1e-6; // terminal-norm target relative to the datum
    std::vector<ScheduleInterval> intervals;

    // Checks the invariants: positive durations tiling [0, horizon] exactly,
    // cutoffs nondecreasing across active intervals. Throws ConfigError.
    void validate() const;

    // Plain-text dump, one line per interval: k t_start t_end active Lambda_k.
    std::string dump() const;
};

// Builds the dyadic schedule. Requires 0 < eps <= 1 and 0 < ratio < 1. The
// number of stages is the smallest K with 2^{K-1} >= eps * horizon *
// sqrt(lambda_max), i.e. the last cutoff is the first to reach the cap.
// Throws ConfigError when the first cutoff already exceeds lambda_max (the
// horizon is below the resolution floor of the window).
ControlSchedule lr_schedule(double horizon, double eps, double ratio,
                            double lambda_max);

struct ControlRunReport {
    double initial_norm = 0.0;
    double terminal_norm = 0.0;   // full-state norm at the horizon
    double low_block_norm = 0.0;  // window block of the last active cutoff
    double total_cost = 0.0;      // sqrt(total_cost_sq)
    double total_cost_sq = 0.0;   // ordered sum of interval cost squares
    struct ActiveInterval {
        double lambda = 0.0;
        double t_start = 0.0;
        double t_end = 0.0;
        double cost = 0.0;       // steering cost of this interval
        double spillover = 0.0;  // norm of modes above lambda right after it
    };
    std::vector<ActiveInterval> intervals;  // one entry per active interval
    std::vector<ControlSignal> signals;     // synthesized nonzero controls

    // CSV table (one row per active interval):
    // interval,lambda,t_start,t_end,cost,spillover
    std::string csv() const;
};

// Runs the alternating controller: steers the window below Lambda_k on active
// intervals, lets the state decay on passive ones, and reports per-interval
// costs and spillover norms. Throws NumericalError when the terminal norm
// misses tol_target * ||u0|| (the achieved norm is part of the message).
ControlRunReport run_lr(const ModeCoeffs& state0, const ControlSchedule& schedule,
                        const StokesEigenbasis& basis, const ObservationMask& mask);

struct HumResult {
    std::vector<ControlSignal> signals;  // empty for a zero datum
    double cost = 0.0;                   // L2(omega x (0,T)) control norm
    double terminal_window_norm = 0.0;   // penalized block at the horizon
    double terminal_norm = 0.0;          // full-state norm at the horizon
    int iterations = 0;                  // conjugate-gradient iterations
    std::vector<double> residual_history;
    double dual_bound = 0.0;             // optimal value of the dual form
};

// Penalized minimal-norm control of the window block over [0, horizon]:
// minimizes 1/2 z^T (W + eps_pen I) z + z^T diag(e^{-mu T}) a_low by
// conjugate gradients (at most 10 * window size iterations) and applies the
// resulting control. The terminal window norm obeys
// terminal^2 <= eps_pen * dual_bound. Throws NumericalError when the
// conjugate gradient stalls (the residual history is part of the message).
HumResult hum_penalized(const ModeCoeffs& state0, double horizon, double eps_pen,
                        const StokesEigenbasis& basis, const ObservationMask& mask,
                        double lambda);

}  // namespace stokeslab
