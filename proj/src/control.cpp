#include "stokeslab/control.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>

#include "stokeslab/csv.hpp"
#include "stokeslab/errors.hpp"

namespace stokeslab {

namespace {

int window_count(const Eigen::VectorXd& mu, double lambda) {
    int w = 0;
    while (w < mu.size() && mu[w] <= lambda) ++w;
    return w;
}

// Decayed window datum -diag(e^{-mu_j tau}) a_j in double-double.
std::vector<dd> decayed_rhs(const Eigen::VectorXd& mu, const Eigen::VectorXd& a,
                            int w, double tau) {
    const dd tau_dd(tau);
    std::vector<dd> rhs(static_cast<std::size_t>(w));
    for (int j = 0; j < w; ++j) {
        rhs[static_cast<std::size_t>(j)] =
            -(dd(a[j]) * dd_exp(-(dd(mu[j]) * tau_dd)));
    }
    return rhs;
}

}  // namespace

Gramian build_gramian(const Eigen::VectorXd& mu, const Eigen::MatrixXd& gram,
                      double lambda, double tau) {
    if (!(tau > 0.0)) {
        throw ConfigError("gramian interval length must be positive, got " +
                          format_number(tau));
    }
    if (mu.size() == 0) throw ConfigError("gramian needs at least one mode");
    if (gram.rows() != mu.size() || gram.cols() != mu.size()) {
        throw ConfigError("component Gram matrix is " + format_number(static_cast<long long>(gram.rows())) +
                          "x" + format_number(static_cast<long long>(gram.cols())) + " but " +
                          format_number(static_cast<long long>(mu.size())) + " eigenvalues were given");
    }
    const int w = window_count(mu, lambda);
    if (w == 0) {
        throw ConfigError("no modes at or below the cutoff " + format_number(lambda) +
                          "; the smallest eigenvalue is " + format_number(mu[0]));
    }

    Gramian g;
    g.lambda = lambda;
    g.tau = tau;
    g.size = w;
    g.mu = mu.head(w);
    g.w_dd = ddmat(w);
    const dd tau_dd(tau);
    for (int i = 0; i < w; ++i) {
        for (int j = i; j < w; ++j) {
            const dd entry = dd(gram(i, j)) * duhamel_weight_dd(dd(mu[i]) + dd(mu[j]), tau_dd);
            g.w_dd.at(i, j) = entry;
            g.w_dd.at(j, i) = entry;
        }
    }
    g.w = Eigen::MatrixXd(w, w);
    for (int i = 0; i < w; ++i) {
        for (int j = 0; j < w; ++j) g.w(i, j) = to_double(g.w_dd.at(i, j));
    }

    ddmat jac = g.w_dd;
    const std::vector<dd> eigs = dd_jacobi_eigenvalues(jac);
    double lo = to_double(eigs.front());
    double hi = lo;
    for (const dd& e : eigs) {
        const double v = to_double(e);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    g.lambda_min = lo;
    g.lambda_max = hi;
    if (!(lo > 0.0) || lo < 1e-13 * hi) {
        throw NumericalError(
            "gramian is numerically singular: smallest eigenvalue " + format_number(lo) +
            " vs largest " + format_number(hi) +
            "; lower the cutoff or enlarge the observation region or the interval");
    }
    g.chol = g.w_dd;
    if (!dd_cholesky(g.chol)) {
        throw NumericalError("gramian factorization lost positive definiteness at cutoff " +
                             format_number(lambda));
    }
    return g;
}

Gramian build_gramian(const StokesEigenbasis& basis, const ObservationMask& mask,
                      double lambda, double tau) {
    const Eigen::MatrixXd gram = component_gram(basis, 1, &mask);
    return build_gramian(basis.mu, gram, lambda, tau);
}

SteerResult steer_low_modes(const ModeCoeffs& state, const Gramian& gramian,
                            double t_start) {
    const int w = gramian.size;
    if (state.a.size() < w) {
        throw ConfigError("state has " + format_number(static_cast<long long>(state.a.size())) +
                          " coefficients but the gramian window holds " +
                          format_number(static_cast<long long>(w)));
    }
    SteerResult out;
    out.signal.t_start = t_start;
    out.signal.t_end = t_start + gramian.tau;
    out.signal.source.resize(static_cast<std::size_t>(w));
    std::iota(out.signal.source.begin(), out.signal.source.end(), 0);
    out.signal.weight = Eigen::VectorXd::Zero(w);
    out.signal.weight_dd.assign(static_cast<std::size_t>(w), dd(0.0));

    bool in_window = false;
    for (int j = 0; j < w; ++j) {
        if (state.a[j] != 0.0) in_window = true;
    }
    if (!in_window) return out;  // nothing to steer: zero signal, zero cost

    const std::vector<dd> rhs = decayed_rhs(gramian.mu, state.a, w, gramian.tau);
    const std::vector<dd> q = dd_cholesky_solve(gramian.chol, rhs);
    dd cost_sq(0.0);
    for (int j = 0; j < w; ++j) {
        const std::size_t k = static_cast<std::size_t>(j);
        cost_sq += q[k] * rhs[k];
        out.signal.weight_dd[k] = q[k];
        out.signal.weight[j] = to_double(q[k]);
    }
    out.cost_sq = std::max(0.0, to_double(cost_sq));
    out.cost = std::sqrt(out.cost_sq);
    return out;
}

void ControlSchedule::validate() const {
    if (!(horizon > 0.0)) throw ConfigError("schedule horizon must be positive");
    if (!(tol_target > 0.0)) throw ConfigError("schedule tol_target must be positive");
    if (intervals.empty()) throw ConfigError("schedule has no intervals");
    const double slack = 1e-12 * horizon;
    double prev_end = 0.0;
    double prev_cut = 0.0;
    for (const ScheduleInterval& row : intervals) {
        if (!(row.t_end > row.t_start)) {
            throw ConfigError("schedule interval [" + format_number(row.t_start) + ", " +
                              format_number(row.t_end) + ") is degenerate");
        }
        if (std::abs(row.t_start - prev_end) > slack) {
            throw ConfigError("schedule intervals must tile [0, horizon]: gap at t = " +
                              format_number(row.t_start));
        }
        if (row.active) {
            if (!(row.lambda > 0.0)) {
                throw ConfigError("active interval needs a positive cutoff");
            }
            if (row.lambda < prev_cut * (1.0 - 1e-12)) {
                throw ConfigError("active cutoffs must be nondecreasing: " +
                                  format_number(row.lambda) + " after " + format_number(prev_cut));
            }
            prev_cut = std::max(prev_cut, row.lambda);
        }
        prev_end = row.t_end;
    }
    if (std::abs(prev_end - horizon) > slack) {
        throw ConfigError("schedule interval durations must sum to the horizon: last end " +
                          format_number(prev_end) + " vs horizon " + format_number(horizon));
    }
}

std::string ControlSchedule::dump() const {
    std::string out = "k t_start t_end active Lambda_k\n";
    long long k = 0;
    for (const ScheduleInterval& row : intervals) {
        out += format_number(k) + " " + format_number(row.t_start) + " " +
               format_number(row.t_end) + " " + (row.active ? "1" : "0") + " " +
               format_number(row.lambda) + "\n";
        ++k;
    }
    return out;
}

ControlSchedule lr_schedule(double horizon, double eps, double ratio,
                            double lambda_max) {
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    if (!(eps > 0.0 && eps <= 1.0)) {
        throw ConfigError("cutoff knob eps must lie in (0, 1], got " + format_number(eps));
    }
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw ConfigError("geometric ratio must lie in (0, 1), got " + format_number(ratio));
    }
    if (!(lambda_max > 0.0)) throw ConfigError("lambda_max must be positive");

    const double sqrt_l0 = 1.0 / (eps * horizon);
    if (sqrt_l0 * sqrt_l0 > lambda_max) {
        throw ConfigError(
            "first cutoff " + format_number(sqrt_l0 * sqrt_l0) + " already exceeds lambda_max " +
            format_number(lambda_max) +
            " (out-of-resolution: the horizon is too short for this window); "
            "increase the horizon, raise eps, or enlarge lambda_max");
    }
    // Smallest k with 2^k >= eps * horizon * sqrt(lambda_max): stage k is the
    // first whose uncapped cutoff reaches the cap, and the schedule stops there.
    const double reach = eps * horizon * std::sqrt(lambda_max);
    int k_cap = 0;
    double pow2 = 1.0;
    while (pow2 < reach) {
        pow2 *= 2.0;
        ++k_cap;
    }
    const int stages = k_cap + 1;
    const double c = (1.0 - ratio) / (1.0 - std::pow(ratio, stages));

    ControlSchedule s;
    s.horizon = horizon;
    s.eps = eps;
    s.ratio = ratio;
    s.lambda_max = lambda_max;
    double t = 0.0;
    double rk = 1.0;    // ratio^k
    double two_k = 1.0; // 2^k
    for (int k = 0; k < stages; ++k) {
        const double dur = c * horizon * rk;
        const double sq = two_k * sqrt_l0;
        const double cut = std::min(sq * sq, lambda_max);
        const double mid = t + 0.5 * dur;
        const double end = (k == stages - 1) ? horizon : t + dur;
        s.intervals.push_back({true, cut, t, mid});
        s.intervals.push_back({false, cut, mid, end});
        t = end;
        rk *= ratio;
        two_k *= 2.0;
    }
    s.validate();
    return s;
}

ControlRunReport run_lr(const ModeCoeffs& state0, const ControlSchedule& schedule,
                        const StokesEigenbasis& basis, const ObservationMask& mask) {
    schedule.validate();
    const int m = basis.m;
    if (state0.a.size() != m) {
        throw ConfigError("state has " + format_number(static_cast<long long>(state0.a.size())) +
                          " coefficients but the basis holds " + format_number(static_cast<long long>(m)));
    }
    const ControlContext ctx = make_context(basis, mask);

    ControlRunReport report;
    report.initial_norm = state0.norm_h();
    ModeCoeffs state = state0;
    double last_active_lambda = 0.0;

    for (const ScheduleInterval& row : schedule.intervals) {
        const double dur = row.t_end - row.t_start;
        if (!row.active) {
            state = decay(basis.mu, state, dur);
            continue;
        }
        last_active_lambda = row.lambda;
        const int w = window_count(basis.mu, row.lambda);
        ControlRunReport::ActiveInterval rec;
        rec.lambda = row.lambda;
        rec.t_start = row.t_start;
        rec.t_end = row.t_end;
        if (w == 0) {
            // The window is empty: nothing to steer, the state just decays.
            state = decay(basis.mu, state, dur);
            rec.cost = 0.0;
            rec.spillover = state.a.norm();
            report.intervals.push_back(rec);
            continue;
        }
        const Gramian gramian = build_gramian(basis.mu, ctx.gram, row.lambda, dur);
        const SteerResult steer = steer_low_modes(state, gramian, row.t_start);
        state = apply_control(ctx, state, steer.signal);
        rec.cost = steer.cost;
        rec.spillover = state.a.tail(m - w).norm();
        report.intervals.push_back(rec);
        report.signals.push_back(steer.signal);
    }

    report.terminal_norm = state.a.norm();
    const int w_last = window_count(basis.mu, last_active_lambda);
    report.low_block_norm = state.a.head(w_last).norm();
    double total_sq = 0.0;
    for (const ControlRunReport::ActiveInterval& rec : report.intervals) {
        total_sq += rec.cost * rec.cost;
    }
    report.total_cost_sq = total_sq;
    report.total_cost = std::sqrt(total_sq);

    if (report.terminal_norm > schedule.tol_target * report.initial_norm) {
        throw NumericalError(
            "terminal norm target missed: achieved " + format_number(report.terminal_norm) +
            " vs target " + format_number(schedule.tol_target * report.initial_norm) +
            " (tol " + format_number(schedule.tol_target) + " x datum norm " +
            format_number(report.initial_norm) + "); total cost so far " +
            format_number(report.total_cost));
    }
    return report;
}

std::string ControlRunReport::csv() const {
    std::string out = csv_row({"interval", "lambda", "t_start", "t_end", "cost", "spillover"});
    long long k = 0;
    for (const ActiveInterval& rec : intervals) {
        out += csv_row({format_number(k), format_number(rec.lambda), format_number(rec.t_start),
                        format_number(rec.t_end), format_number(rec.cost),
                        format_number(rec.spillover)});
        ++k;
    }
    return out;
}

HumResult hum_penalized(const ModeCoeffs& state0, double horizon, double eps_pen,
                        const StokesEigenbasis& basis, const ObservationMask& mask,
                        double lambda) {
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    if (!(eps_pen > 0.0)) throw ConfigError("penalty eps_pen must be positive");
    const int m = basis.m;
    if (state0.a.size() != m) {
        throw ConfigError("state has " + format_number(static_cast<long long>(state0.a.size())) +
                          " coefficients but the basis holds " + format_number(static_cast<long long>(m)));
    }
    const ControlContext ctx = make_context(basis, mask);
    const int w = window_count(basis.mu, lambda);
    if (w == 0) {
        throw ConfigError("no modes at or below the cutoff " + format_number(lambda) +
                          "; the smallest eigenvalue is " + format_number(basis.mu[0]));
    }

    HumResult out;
    const Eigen::VectorXd a_low = state0.a.head(w);
    if (a_low.norm() == 0.0) {
        // Zero datum in the window: zero control, zero iterations.
        const ModeCoeffs drift = decay(basis.mu, state0, horizon);
        out.terminal_norm = drift.a.norm();
        out.terminal_window_norm = drift.a.head(w).norm();
        return out;
    }

    const Gramian gramian = build_gramian(basis.mu, ctx.gram, lambda, horizon);

    // Conjugate gradient on (W + eps_pen I) z = -diag(e^{-mu T}) a_low, in
    // double precision: the penalty shift keeps the system solvable there,
    // and the tolerance adapts to the conditioning it allows.
    Eigen::MatrixXd a_mat = gramian.w;
    for (int j = 0; j < w; ++j) a_mat(j, j) += eps_pen;
    Eigen::VectorXd b(w);
    for (int j = 0; j < w; ++j) b[j] = -(std::exp(-basis.mu[j] * horizon) * a_low[j]);

    const double cond_est = (gramian.lambda_max + eps_pen) / (std::max(gramian.lambda_min, 0.0) + eps_pen);
    const double tol = std::max(1e-13, 100.0 * 2.2e-16 * cond_est) * b.norm();
    const int max_iter = 10 * w;

    Eigen::VectorXd z = Eigen::VectorXd::Zero(w);
    Eigen::VectorXd r = b;
    Eigen::VectorXd p = r;
    double rs = r.squaredNorm();
    out.residual_history.push_back(std::sqrt(rs));
    int iter = 0;
    while (std::sqrt(rs) > tol && iter < max_iter) {
        const Eigen::VectorXd ap = a_mat * p;
        const double alpha = rs / p.dot(ap);
        z += alpha * p;
        r -= alpha * ap;
        const double rs_new = r.squaredNorm();
        p = r + (rs_new / rs) * p;
        rs = rs_new;
        ++iter;
        out.residual_history.push_back(std::sqrt(rs));
    }
    out.iterations = iter;
    if (std::sqrt(rs) > tol) {
        std::string hist = "conjugate gradient stalled after " +
                           format_number(static_cast<long long>(iter)) + " iterations; residuals:";
        const std::size_t n = out.residual_history.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (i < 3 || i + 3 >= n) {
                hist += " " + format_number(out.residual_history[i]);
            } else if (i == 3) {
                hist += " ...";
            }
        }
        throw NumericalError(hist);
    }

    ControlSignal sig;
    sig.t_start = 0.0;
    sig.t_end = horizon;
    sig.source.resize(static_cast<std::size_t>(w));
    std::iota(sig.source.begin(), sig.source.end(), 0);
    sig.weight = z;

    out.dual_bound = b.dot(z);
    out.cost = std::sqrt(std::max(0.0, control_energy(ctx, sig)));
    const ModeCoeffs u_final = apply_control(ctx, state0, sig);
    out.terminal_window_norm = u_final.a.head(w).norm();
    out.terminal_norm = u_final.a.norm();
    out.signals.push_back(sig);
    return out;
}

}  // namespace stokeslab
