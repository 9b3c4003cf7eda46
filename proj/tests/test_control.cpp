#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "stokeslab/control.hpp"
#include "stokeslab/errors.hpp"
#include "stokeslab/evolution.hpp"
#include "stokeslab/grid.hpp"
#include "stokeslab/spectral.hpp"

using namespace stokeslab;

namespace {

const StokesEigenbasis& basis32() {
    static StokesEigenbasis b = solve_buckling(Grid(32), 24);
    return b;
}

const StokesEigenbasis& basis200() {
    static StokesEigenbasis b = solve_buckling(Grid(32), 200);
    return b;
}

ObservationMask corner_mask(const Grid& grid) {
    return ObservationMask(grid, Rect{0.0, 0.3, 0.0, 0.3});
}

ModeCoeffs random_state(int m, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ModeCoeffs state;
    state.a.resize(m);
    for (int j = 0; j < m; ++j) state.a[j] = gauss(rng);
    return state;
}

// Midpoint cutoff that puts exactly w modes into the window.
double cutoff_for(const StokesEigenbasis& basis, int w) {
    return 0.5 * (basis.mu[w - 1] + basis.mu[w]);
}

// Least-norm piecewise-constant control oracle on `steps` time slices:
// minimizing the L2(omega x (0,tau)) energy subject to zeroing the window at
// tau leads to cost^2 = r^T M^{-1} r with M the slice-summed kernel matrix.
double qp_least_norm_cost(const Eigen::VectorXd& mu, const Eigen::MatrixXd& gram_w,
                          const Eigen::VectorXd& a_low, double tau, int steps) {
    const int w = static_cast<int>(mu.size());
    const double dt = tau / steps;
    Eigen::MatrixXd m_mat = Eigen::MatrixXd::Zero(w, w);
    for (int i = 0; i < steps; ++i) {
        const double t0 = i * dt;
        const double t1 = (i + 1) * dt;
        Eigen::VectorXd d(w);
        for (int k = 0; k < w; ++k) {
            d[k] = (std::exp(-mu[k] * (tau - t1)) - std::exp(-mu[k] * (tau - t0))) / mu[k];
        }
        m_mat += (1.0 / dt) * d.asDiagonal() * gram_w * d.asDiagonal();
    }
    Eigen::VectorXd r(w);
    for (int k = 0; k < w; ++k) r[k] = std::exp(-mu[k] * tau) * a_low[k];
    const Eigen::VectorXd x = m_mat.llt().solve(r);
    return std::sqrt(r.dot(x));
}

}  // namespace

TEST_CASE("window gramian: closed forms, tail limit, guards") {
    const StokesEigenbasis& basis = basis32();
    const ObservationMask mask = corner_mask(basis.grid);
    const Eigen::MatrixXd gram = component_gram(basis, 1, &mask);

    // Single-mode window: the kernel weight is the scalar Duhamel integral.
    {
        const double tau = 0.4;
        const Gramian g = build_gramian(basis, mask, cutoff_for(basis, 1), tau);
        REQUIRE(g.size == 1);
        const double expected =
            gram(0, 0) * (1.0 - std::exp(-2.0 * basis.mu[0] * tau)) / (2.0 * basis.mu[0]);
        CHECK(g.w(0, 0) == doctest::Approx(expected).epsilon(1e-13));
        CHECK(g.lambda_min == doctest::Approx(expected).epsilon(1e-12));
        CHECK(g.chol.n == 1);
    }

    // Long intervals saturate the kernel: W_jk -> G_jk / (mu_j + mu_k).
    {
        const double tau = 50.0 / basis.mu[0];
        const Gramian g = build_gramian(basis, mask, cutoff_for(basis, 10), tau);
        REQUIRE(g.size == 10);
        double scale = 0.0;
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j)
                scale = std::max(scale, std::abs(gram(i, j)) / (basis.mu[i] + basis.mu[j]));
        for (int i = 0; i < 10; ++i) {
            for (int j = 0; j < 10; ++j) {
                const double limit = gram(i, j) / (basis.mu[i] + basis.mu[j]);
                CHECK(std::abs(g.w(i, j) - limit) <= 1e-10 * scale);
            }
        }
    }

    // Positive definiteness across window sizes, and exact symmetry.
    for (int w : {3, 7, 12, 20}) {
        const Gramian g = build_gramian(basis, mask, cutoff_for(basis, w), 0.25);
        REQUIRE(g.size == w);
        CHECK(g.lambda_min > 0.0);
        CHECK(g.lambda_min >= -1e-12);
        CHECK(g.w == g.w.transpose());
    }

    // Empty window and degenerate interval are configuration errors.
    CHECK_THROWS_AS(build_gramian(basis, mask, 0.5 * basis.mu[0], 0.3), ConfigError);
    CHECK_THROWS_AS(build_gramian(basis, mask, cutoff_for(basis, 3), 0.0), ConfigError);

    // A one-node observation region cannot support a wide window: the matrix
    // is numerically singular and the diagnostic says what to enlarge.
    {
        const double h = basis.grid.h;
        const ObservationMask point(basis.grid, Rect{0.5 * h, 1.5 * h, 0.5 * h, 1.5 * h});
        bool threw = false;
        try {
            build_gramian(basis, point, 1.01 * basis.mu[23], 0.3);
        } catch (const NumericalError& e) {
            threw = true;
            const std::string msg = e.what();
            CHECK(msg.find("singular") != std::string::npos);
            CHECK(msg.find("enlarge") != std::string::npos);
        }
        CHECK(threw);
    }

    // Mismatched inputs are rejected before any arithmetic.
    {
        Eigen::VectorXd mu(3);
        mu << 1.0, 2.0, 3.0;
        CHECK_THROWS_AS(build_gramian(mu, Eigen::MatrixXd::Identity(2, 2), 2.5, 0.3), ConfigError);
    }
}

TEST_CASE("minimal-norm steering: scalar closed form and empty support") {
    // Scalar system: cost^2 = a^2 e^{-2 mu tau} 2 mu / (G (1 - e^{-2 mu tau})).
    {
        Eigen::VectorXd mu(1);
        mu << 1.9;
        Eigen::MatrixXd gram(1, 1);
        gram << 0.37;
        const double tau = 0.45;
        const Gramian g = build_gramian(mu, gram, 2.0, tau);
        ModeCoeffs state;
        state.a.resize(1);
        state.a << 0.8;
        const SteerResult steer = steer_low_modes(state, g, 0.1);
        const double e2 = std::exp(-2.0 * 1.9 * tau);
        const double expected_sq = 0.8 * 0.8 * e2 * 2.0 * 1.9 / (0.37 * (1.0 - e2));
        CHECK(steer.cost_sq == doctest::Approx(expected_sq).epsilon(1e-12));
        CHECK(steer.signal.t_start == 0.1);
        CHECK(steer.signal.t_end == doctest::Approx(0.55));
        REQUIRE(steer.signal.weight_dd.size() == 1);

        ControlContext ctx;
        ctx.mu = mu;
        ctx.gram = gram;
        const ModeCoeffs after = apply_control(ctx, state, steer.signal);
        CHECK(std::abs(after.a[0]) <= 1e-12 * 0.8);
    }

    // A state supported above the window produces the zero control exactly.
    {
        Eigen::VectorXd mu(5);
        mu << 0.7, 1.3, 2.2, 3.1, 4.6;
        std::mt19937_64 rng(7u);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::MatrixXd b(5, 5);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) b(i, j) = gauss(rng);
        Eigen::MatrixXd gram = b * b.transpose();
        gram /= gram.diagonal().maxCoeff() * 2.0;

        const Gramian g = build_gramian(mu, gram, 2.5, 0.6);
        REQUIRE(g.size == 3);
        ModeCoeffs state;
        state.a.resize(5);
        state.a << 0.0, 0.0, 0.0, 1.3, -0.4;
        const SteerResult steer = steer_low_modes(state, g, 0.0);
        CHECK(steer.cost == 0.0);
        CHECK(steer.cost_sq == 0.0);
        for (int j = 0; j < 3; ++j) CHECK(steer.signal.weight[j] == 0.0);

        ControlContext ctx;
        ctx.mu = mu;
        ctx.gram = gram;
        const ModeCoeffs forced = apply_control(ctx, state, steer.signal);
        const ModeCoeffs drift = decay(mu, state, 0.6);
        for (int j = 0; j < 5; ++j) {
            CHECK(forced.a[j] == doctest::Approx(drift.a[j]).epsilon(1e-14));
        }
    }

    // A state shorter than the window is rejected.
    {
        Eigen::VectorXd mu(2);
        mu << 1.0, 2.0;
        const Gramian g = build_gramian(mu, Eigen::MatrixXd::Identity(2, 2) * 0.5, 2.5, 0.3);
        ModeCoeffs state;
        state.a.resize(1);
        state.a << 1.0;
        CHECK_THROWS_AS(steer_low_modes(state, g, 0.0), ConfigError);
    }
}

TEST_CASE("minimal-norm steering matches the discretized least-norm oracle") {
    const StokesEigenbasis& basis = basis32();
    const ObservationMask mask = corner_mask(basis.grid);
    const double tau = 0.25;
    const Gramian g = build_gramian(basis, mask, cutoff_for(basis, 5), tau);
    REQUIRE(g.size == 5);

    const ModeCoeffs state = random_state(24, 314159u);
    const SteerResult steer = steer_low_modes(state, g, 0.0);

    // The steered window block vanishes to solver tolerance.
    const ControlContext ctx = make_context(basis, mask);
    const ModeCoeffs after = apply_control(ctx, state, steer.signal);
    CHECK(after.a.head(5).norm() <= 1e-10 * state.a.head(5).norm());

    // Cost agrees with the brute-force quadratic program on 400 time slices.
    const Eigen::MatrixXd gram_w = ctx.gram.topLeftCorner(5, 5);
    const double qp_cost = qp_least_norm_cost(g.mu, gram_w, state.a.head(5), tau, 400);
    CHECK(std::abs(steer.cost - qp_cost) <= 0.02 * qp_cost);

    // Cross-check of the quadratic form against a plain double solve.
    Eigen::VectorXd rhs(5);
    for (int j = 0; j < 5; ++j) rhs[j] = std::exp(-basis.mu[j] * tau) * state.a[j];
    const Eigen::VectorXd x = g.w.llt().solve(rhs);
    CHECK(steer.cost_sq == doctest::Approx(rhs.dot(x)).epsilon(1e-6));
}

TEST_CASE("dyadic schedule: explicit geometry and rejection") {
    // Two-stage example: durations follow the geometric normalization and the
    // second cutoff lands on the cap.
    {
        const ControlSchedule s = lr_schedule(0.25, 0.3, 0.5, 250.0);
        REQUIRE(s.intervals.size() == 4);
        CHECK_NOTHROW(s.validate());

        const double l0 = 1.0 / (0.3 * 0.25);
        CHECK(s.intervals[0].active);
        CHECK(!s.intervals[1].active);
        CHECK(s.intervals[0].lambda == doctest::Approx(l0 * l0).epsilon(1e-12));
        CHECK(s.intervals[2].lambda == 250.0);

        // Stage durations T * 2^{-(k+1)} / (1 - 2^{-K}) for K = 2 stages.
        const double stage0 = (s.intervals[0].t_end - s.intervals[0].t_start) +
                              (s.intervals[1].t_end - s.intervals[1].t_start);
        const double stage1 = (s.intervals[2].t_end - s.intervals[2].t_start) +
                              (s.intervals[3].t_end - s.intervals[3].t_start);
        CHECK(stage0 == doctest::Approx(0.25 * 0.5 / 0.75).epsilon(1e-12));
        CHECK(stage1 == doctest::Approx(0.25 * 0.25 / 0.75).epsilon(1e-12));
        CHECK(s.intervals[3].t_end == 0.25);

        // Active halves split each stage evenly.
        CHECK(s.intervals[0].t_end - s.intervals[0].t_start ==
              doctest::Approx(0.5 * stage0).epsilon(1e-12));

        const std::string dump = s.dump();
        CHECK(dump.find("k t_start t_end active Lambda_k") == 0);
        CHECK(dump.find("250") != std::string::npos);
    }

    // eps = 1 puts the first cutoff exactly at 1/T^2.
    {
        const ControlSchedule s = lr_schedule(0.2, 1.0, 0.5, 1.0e4);
        CHECK(s.intervals[0].lambda == doctest::Approx(25.0).epsilon(1e-12));
    }

    // Single-stage edge: the first cutoff already sits on the cap.
    {
        const ControlSchedule s = lr_schedule(1.0, 1.0, 0.5, 1.0);
        REQUIRE(s.intervals.size() == 2);
        CHECK(s.intervals[0].lambda == 1.0);
    }

    // A horizon too short for the window is rejected as out-of-resolution.
    {
        bool threw = false;
        try {
            lr_schedule(0.01, 0.3, 0.5, 250.0);
        } catch (const ConfigError& e) {
            threw = true;
            CHECK(std::string(e.what()).find("out-of-resolution") != std::string::npos);
        }
        CHECK(threw);
    }

    // Knob validation.
    CHECK_THROWS_AS(lr_schedule(0.25, 0.0, 0.5, 250.0), ConfigError);
    CHECK_THROWS_AS(lr_schedule(0.25, 1.5, 0.5, 250.0), ConfigError);
    CHECK_THROWS_AS(lr_schedule(0.25, 0.3, 1.0, 250.0), ConfigError);
    CHECK_THROWS_AS(lr_schedule(0.25, 0.3, 0.0, 250.0), ConfigError);
    CHECK_THROWS_AS(lr_schedule(0.0, 0.3, 0.5, 250.0), ConfigError);
    CHECK_THROWS_AS(lr_schedule(0.25, 0.3, 0.5, 0.0), ConfigError);
}

TEST_CASE("dyadic controller: full-window steering, equivariance, spillover bookkeeping") {
    const StokesEigenbasis& basis = basis32();
    const ObservationMask mask = corner_mask(basis.grid);

    // A datum in the lowest mode with a window covering the whole basis is
    // steered to zero exactly: there is nothing left for spillover to excite.
    {
        ControlSchedule s;
        s.horizon = 0.3;
        s.eps = 0.3;
        s.ratio = 0.5;
        s.lambda_max = 1.01 * basis.mu[23];
        s.intervals.push_back({true, 1.01 * basis.mu[23], 0.0, 0.15});
        s.intervals.push_back({false, 1.01 * basis.mu[23], 0.15, 0.3});

        ModeCoeffs e1;
        e1.a = Eigen::VectorXd::Zero(24);
        e1.a[0] = 1.0;
        const ControlRunReport report = run_lr(e1, s, basis, mask);
        CHECK(report.terminal_norm <= 1e-10);
        CHECK(report.low_block_norm <= report.terminal_norm + 1e-300);
        REQUIRE(report.intervals.size() == 1);
        CHECK(report.intervals[0].spillover == 0.0);
        CHECK(report.total_cost == report.intervals[0].cost);
        CHECK(report.initial_norm == 1.0);
        REQUIRE(report.signals.size() == 1);

        const std::string csv = report.csv();
        CHECK(csv.find("interval,lambda,t_start,t_end,cost,spillover") == 0);
    }

    // Linearity: scaling the datum scales every control and cost exactly.
    {
        const ControlSchedule s = lr_schedule(0.25, 0.3, 0.5, 250.0);
        ModeCoeffs u = random_state(24, 99u);
        ModeCoeffs u_scaled;
        u_scaled.a = 3.7 * u.a;
        const ControlRunReport r1 = run_lr(u, s, basis, mask);
        const ControlRunReport r2 = run_lr(u_scaled, s, basis, mask);
        REQUIRE(r1.intervals.size() == r2.intervals.size());
        for (std::size_t k = 0; k < r1.intervals.size(); ++k) {
            CHECK(std::abs(r2.intervals[k].cost - 3.7 * r1.intervals[k].cost) <=
                  1e-12 * (3.7 * r1.intervals[k].cost + 1e-300));
        }
        CHECK(std::abs(r2.total_cost - 3.7 * r1.total_cost) <= 1e-12 * 3.7 * r1.total_cost);
        REQUIRE(r1.signals.size() == r2.signals.size());
        for (std::size_t p = 0; p < r1.signals.size(); ++p) {
            const Eigen::VectorXd diff = r2.signals[p].weight - 3.7 * r1.signals[p].weight;
            CHECK(diff.norm() <= 1e-12 * (3.7 * r1.signals[p].weight.norm() + 1e-300));
        }
        CHECK(std::abs(r2.terminal_norm - 3.7 * r1.terminal_norm) <=
              1e-12 * 3.7 * r1.initial_norm);

        // Ordered cost-square sum reproduces the stored total bit for bit.
        double total_sq = 0.0;
        for (const auto& rec : r1.intervals) total_sq += rec.cost * rec.cost;
        CHECK(total_sq == r1.total_cost_sq);
    }

    // Spillover bookkeeping: an independent double-precision Duhamel
    // reconstruction of the run reproduces the reported high-block norms.
    {
        const ControlSchedule s = lr_schedule(0.25, 0.3, 0.5, 250.0);
        const ModeCoeffs u = random_state(24, 99u);
        const ControlRunReport report = run_lr(u, s, basis, mask);
        const Eigen::MatrixXd gram = component_gram(basis, 1, &mask);

        Eigen::VectorXd a = u.a;
        std::size_t sig_idx = 0;
        std::size_t rec_idx = 0;
        for (const ScheduleInterval& row : s.intervals) {
            const double dur = row.t_end - row.t_start;
            if (!row.active) {
                for (int k = 0; k < 24; ++k) a[k] *= std::exp(-basis.mu[k] * dur);
                continue;
            }
            REQUIRE(sig_idx < report.signals.size());
            const ControlSignal& sig = report.signals[sig_idx++];
            Eigen::VectorXd next(24);
            for (int k = 0; k < 24; ++k) {
                double acc = a[k] * std::exp(-basis.mu[k] * dur);
                for (std::size_t p = 0; p < sig.source.size(); ++p) {
                    const int j = sig.source[p];
                    acc += sig.weight[static_cast<Eigen::Index>(p)] * gram(j, k) *
                           duhamel_weight(basis.mu[j] + basis.mu[k], dur);
                }
                next[k] = acc;
            }
            a = next;
            int w = 0;
            while (w < 24 && basis.mu[w] <= row.lambda) ++w;
            const double predicted = a.tail(24 - w).norm();
            REQUIRE(rec_idx < report.intervals.size());
            CHECK(std::abs(report.intervals[rec_idx].spillover - predicted) <=
                  1e-10 * u.a.norm());
            ++rec_idx;
        }
    }

    // Full pipeline on the larger basis: a random unit datum reaches the
    // default terminal target.
    {
        const StokesEigenbasis& big = basis200();
        const ObservationMask big_mask = corner_mask(big.grid);
        ModeCoeffs u = random_state(200, 2026u);
        u.a /= u.a.norm();
        const ControlSchedule s = lr_schedule(0.25, 0.3, 0.5, 250.0);
        const ControlRunReport report = run_lr(u, s, big, big_mask);
        CHECK(report.terminal_norm <= 1e-6);
        CHECK(std::isfinite(report.total_cost));
        CHECK(report.total_cost > 0.0);
    }

    // An impossible schedule fails loudly with the achieved norm.
    {
        ControlSchedule s;
        s.horizon = 0.01;
        s.eps = 0.3;
        s.ratio = 0.5;
        s.lambda_max = cutoff_for(basis, 1);
        s.intervals.push_back({true, cutoff_for(basis, 1), 0.0, 0.005});
        s.intervals.push_back({false, cutoff_for(basis, 1), 0.005, 0.01});
        const ModeCoeffs u = random_state(24, 5u);
        bool threw = false;
        try {
            run_lr(u, s, basis, mask);
        } catch (const NumericalError& e) {
            threw = true;
            CHECK(std::string(e.what()).find("achieved") != std::string::npos);
        }
        CHECK(threw);
    }
}

TEST_CASE("penalized comparator: scalar formula, exact-steer limit, zero datum") {
    const StokesEigenbasis& basis = basis32();
    const ObservationMask mask = corner_mask(basis.grid);
    const Eigen::MatrixXd gram = component_gram(basis, 1, &mask);

    // Single-mode window: the penalized cost has a scalar closed form and is
    // dominated by the exact-steering cost.
    {
        const double horizon = 0.3;
        const double eps_pen = 1e-3;
        ModeCoeffs u;
        u.a = Eigen::VectorXd::Zero(24);
        u.a[0] = 0.9;
        const double lambda = cutoff_for(basis, 1);
        const HumResult hum = hum_penalized(u, horizon, eps_pen, basis, mask, lambda);

        const double mu = basis.mu[0];
        const double g11 = gram(0, 0);
        const double one_minus = 1.0 - std::exp(-2.0 * mu * horizon);
        const double denom = one_minus + 2.0 * mu * eps_pen / g11;
        const double expected_sq =
            0.9 * 0.9 * std::exp(-2.0 * mu * horizon) * (2.0 * mu / g11) * one_minus / (denom * denom);
        CHECK(hum.cost * hum.cost == doctest::Approx(expected_sq).epsilon(1e-10));

        const Gramian g = build_gramian(basis, mask, lambda, horizon);
        const SteerResult steer = steer_low_modes(u, g, 0.0);
        CHECK(hum.cost <= steer.cost * (1.0 + 1e-12));

        CHECK(hum.terminal_window_norm * hum.terminal_window_norm <=
              eps_pen * hum.dual_bound * (1.0 + 1e-8));
        CHECK(hum.iterations <= 10);
        REQUIRE(hum.signals.size() == 1);
    }

    // Vanishing penalty converges to the minimal-norm steering cost.
    {
        const double horizon = 0.3;
        const double lambda = cutoff_for(basis, 5);
        const ModeCoeffs u = random_state(24, 424242u);
        const HumResult hum = hum_penalized(u, horizon, 1e-10, basis, mask, lambda);
        const Gramian g = build_gramian(basis, mask, lambda, horizon);
        const SteerResult steer = steer_low_modes(u, g, 0.0);
        CHECK(std::abs(hum.cost - steer.cost) <= 0.01 * steer.cost);
        CHECK(hum.iterations <= 50);
        REQUIRE(!hum.residual_history.empty());
        CHECK(hum.residual_history.back() <= hum.residual_history.front());
    }

    // Zero datum: zero control, zero iterations, free decay.
    {
        ModeCoeffs zero;
        zero.a = Eigen::VectorXd::Zero(24);
        const HumResult hum = hum_penalized(zero, 0.3, 1e-6, basis, mask, cutoff_for(basis, 3));
        CHECK(hum.iterations == 0);
        CHECK(hum.cost == 0.0);
        CHECK(hum.signals.empty());
        CHECK(hum.terminal_norm == 0.0);
    }

    // Parameter validation.
    {
        const ModeCoeffs u = random_state(24, 1u);
        CHECK_THROWS_AS(hum_penalized(u, 0.3, 0.0, basis, mask, cutoff_for(basis, 3)), ConfigError);
        CHECK_THROWS_AS(hum_penalized(u, 0.0, 1e-6, basis, mask, cutoff_for(basis, 3)), ConfigError);
        CHECK_THROWS_AS(hum_penalized(u, 0.3, 1e-6, basis, mask, 0.5 * basis.mu[0]), ConfigError);
    }
}
