#pragma once
// Observability constants of spectral windows, cost-versus-horizon curves for
// the controllers, inverse-power exponent fitting with a residual table, and
// a weighted-decay certificate checker that turns sampled adjoint data into
// an observability bound.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stokeslab/control.hpp"
#include "stokeslab/spectral.hpp"

namespace stokeslab {

// Observability constant of the window {mu_j <= lambda_max} at horizon T.
// The value can dwarf double range in extreme configurations, so the natural
// log is carried alongside and is the authoritative channel for comparisons.
struct ObsConstant {
    double value = 0.0;      // C
    double log_value = 0.0;  // ln C
    int window_size = 0;     // number of modes in the window
    bool jittered = false;   // Tikhonov fallback engaged during factorization
};

// Smallest constant C with ||z(T)|| <= C * (observation integral)^{1/2} over
// adjoint trajectories supported on the window: the square root of the
// largest eigenvalue of the pencil (D_T, N_T) with D_T = diag(e^{-2 mu_j T})
// and N_T the windowed observation Gramian. Assembled and diagonalized in
// double-double arithmetic. When the Gramian's Cholesky factorization fails,
// a single Tikhonov shift of 1e-14 * trace is applied and flagged; a second
// failure aborts with a NumericalError diagnostic.
ObsConstant obs_constant(const Eigen::VectorXd& mu, const Eigen::MatrixXd& gram,
                         double lambda_max, double horizon);
ObsConstant obs_constant(const StokesEigenbasis& basis, const ObservationMask& mask,
                         double lambda_max, double horizon);

// Worst-datum steering constant of the window: 1 / sqrt(lambda_min(N_T)),
// the largest eigenvalue of N_T^{-1} computed by double-double power
// iteration on the cached Cholesky solve — an independent route to the same
// matrix that build_gramian diagonalizes, used for duality cross-checks.
ObsConstant window_constant(const Eigen::VectorXd& mu, const Eigen::MatrixXd& gram,
                            double lambda_max, double horizon);
ObsConstant window_constant(const StokesEigenbasis& basis, const ObservationMask& mask,
                            double lambda_max, double horizon);

enum class CurveKind { observability, lr_cost, hum_cost };

std::string curve_kind_name(CurveKind kind);

struct CurveSample {
    double horizon = 0.0;
    double value = 0.0;        // C or measured cost; NaN when status != "ok"
    double log_value = 0.0;    // ln of value (authoritative for fits)
    std::string status = "ok";
    // For lr-cost samples: duality lower bound implied by the window Gramian
    // at the same horizon, its ratio to the measured cost (logged, as the
    // consistency evidence), and the terminal state norm of the run. NaN for
    // other kinds or failed samples.
    double lower_bound = std::numeric_limits<double>::quiet_NaN();
    double bound_ratio = std::numeric_limits<double>::quiet_NaN();
    double terminal = std::numeric_limits<double>::quiet_NaN();
};

struct CostCurveConfig {
    double lambda_max = 0.0;   // window / schedule frequency cap (required)
    double kappa = 3.0;        // resolution-floor multiplier T_min = kappa/sqrt(cap)
    double eps = 0.5;          // schedule cutoff knob (lr-cost)
    double rho = 0.5;          // schedule geometric ratio (lr-cost)
    double tol_target = 1e-6;  // terminal-norm target (lr-cost)
    double eps_pen = 1e-8;     // penalization strength (hum-cost)
    std::optional<Eigen::VectorXd> datum;  // initial coefficients (lr/hum kinds)
    int mesh_n = 0;            // metadata: interior grid size
    std::string omega;         // metadata: observation-region descriptor
};

// Cost-versus-horizon curve with window metadata. Horizons are strictly
// monotone and positive; successful samples carry positive values.
struct CostCurve {
    CurveKind kind = CurveKind::observability;
    double lambda_max = 0.0;
    double t_min_floor = 0.0;  // kappa / sqrt(min(lambda_max, mu_m))
    int mesh_n = 0;
    std::string omega;
    std::vector<CurveSample> samples;

    // Successful sample count.
    int ok_count() const;
    // CSV table: T,C,logC,inv_T,status (one row per sample, LF endings).
    std::string csv() const;
};

// Samples the requested cost kind on the horizon grid:
//   observability — obs_constant of the window {mu <= lambda_max},
//   lr-cost       — total cost of the dyadic controller run on cfg.datum,
//   hum-cost      — cost of the penalized comparator on cfg.datum.
// The grid must be strictly monotone, positive, and lie inside the
// resolution window [T_min, inf) with T_min = kappa / sqrt(min(lambda_max,
// mu_m)); the floor is stored in the curve and printed in every report.
// Per-sample numerical failures are recorded in the sample status rather
// than thrown; an empty successful set raises NumericalError.
CostCurve cost_curve(CurveKind kind, const std::vector<double>& horizons,
                     const StokesEigenbasis& basis, const ObservationMask& mask,
                     const CostCurveConfig& cfg);

struct FitRow {
    double p = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double r2 = 0.0;
    double ssr = 0.0;  // sum of squared residuals in log space
};

// Least-squares fit of log C = alpha + beta * T^{-p}. The exponent is picked
// from the candidate set {0.5, 1, 2, 4, 9} by least residual, then refined
// by golden-section search on [0.5, 9]; the full residual table is retained
// as the discriminating evidence.
struct ExponentFit {
    std::string model = "inv-T-power";
    double p = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double r2 = 0.0;
    double ssr = 0.0;
    std::vector<FitRow> table;  // candidate rows, then the refined row last
    double t_min_floor = 0.0;   // echoed from the curve (0 when fit from raw data)

    // Residual-table report; always prints the resolution floor when set.
    std::string report() const;
};

// Fits the inverse-power law to (horizon, value) pairs. Requires at least 6
// samples spanning a factor >= 4 in T (ConfigError) and positive values
// (NumericalError).
ExponentFit fit_exponent(const std::vector<double>& horizons,
                         const std::vector<double>& values);
// Same on the successful samples of a curve; echoes the curve's floor.
ExponentFit fit_exponent(const CostCurve& curve);

// Weighted-decay certificate h(T) = h0 * exp(-2/(d2 T)^beta),
// g(T) = g0 * exp(-2/(d1 T)^beta) with d1 < d2.
struct WeightCertificate {
    double h0 = 0.0;
    double g0 = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double beta = 1.0;
};

struct CertificateOptions {
    std::optional<double> d;  // rate for the concluded bound; must be
                              // < d2 - d1, or defaulted to d2 - d1 when
                              // g0 <= h0 (the certificate's closing clause)
    int draws = 5;            // adjoint samples per horizon
    unsigned long long seed = 1234567891011ull;
};

struct CertificateRow {
    double horizon = 0.0;
    double h = 0.0;
    double g = 0.0;
    double terminal_sq = 0.0;  // worst draw: ||z(T)||^2
    double datum_sq = 0.0;     // worst draw: ||z0||^2
    double observed = 0.0;     // worst draw: observation integral
    double margin = 0.0;       // observed - (h*terminal_sq - g*datum_sq), min over draws
    bool cert_holds = false;
    double log_bound_rhs = 0.0;  // ln of e^{2/(dT)^beta}/h0, +inf when h0 == 0
    double log_c = 0.0;          // ln of the curve's constant at this horizon
    bool bound_holds = false;    // C^2 <= e^{2/(dT)^beta}/h0
};

struct CertificateReport {
    std::vector<CertificateRow> rows;
    bool all_cert_hold = false;
    bool all_bound_hold = false;
    double d_used = 0.0;
    double t_prime = 0.0;  // right endpoint of the certified horizon range
    WeightCertificate cert;

    // Margin CSV: T,h,g,terminal_sq,datum_sq,observed,margin,cert_holds,
    // log_bound_rhs,logC,bound_holds
    std::string csv() const;
};

// Checks, on randomly sampled window-supported adjoint data at every
// successful horizon of an observability curve, that
//   h(T) ||z(T)||^2 - g(T) ||z0||^2 <= observation integral,
// then checks the concluded bound C^2 <= e^{2/(dT)^beta} / h0 against the
// curve's constants. Violations are reported per-horizon (informative, not
// errors); only malformed parameters throw ConfigError.
CertificateReport verify_weight_certificate(const CostCurve& curve,
                                            const WeightCertificate& cert,
                                            const StokesEigenbasis& basis,
                                            const ObservationMask& mask,
                                            const CertificateOptions& opts = {});

}  // namespace stokeslab
