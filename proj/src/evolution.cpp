#include "stokeslab/evolution.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>

#include "stokeslab/errors.hpp"

namespace stokeslab {

namespace {

void check_sizes(const ControlContext& ctx, const ModeCoeffs& state, const char* who) {
    const Eigen::Index m = ctx.mu.size();
    if (ctx.gram.rows() != m || ctx.gram.cols() != m) {
        throw ConfigError(std::string(who) + ": context Gram does not match the mode count");
    }
    if (state.a.size() != m) {
        std::ostringstream msg;
        msg << who << ": state has " << state.a.size() << " coefficients for " << m << " modes";
        throw ConfigError(msg.str());
    }
}

void check_signal(const ControlContext& ctx, const ControlSignal& signal, const char* who) {
    if (!(signal.duration() > 0.0)) {
        std::ostringstream msg;
        msg << who << ": degenerate control interval [" << signal.t_start << ", "
            << signal.t_end << "]";
        throw ConfigError(msg.str());
    }
    if (signal.weight.size() != static_cast<Eigen::Index>(signal.source.size())) {
        throw ConfigError(std::string(who) + ": weight vector does not match the source set");
    }
    if (!signal.weight_dd.empty() && signal.weight_dd.size() != signal.source.size()) {
        throw ConfigError(std::string(who) +
                          ": extended-precision weights do not match the source set");
    }
    for (int j : signal.source) {
        if (j < 0 || j >= ctx.mu.size()) {
            std::ostringstream msg;
            msg << who << ": source mode " << j << " outside the basis (m = " << ctx.mu.size()
                << ")";
            throw ConfigError(msg.str());
        }
    }
}

dd signal_weight(const ControlSignal& signal, std::size_t pos) {
    return signal.weight_dd.empty() ? dd(signal.weight[static_cast<Eigen::Index>(pos)])
                                    : signal.weight_dd[pos];
}

// Symmetric kernel sum  sum_{j,k} c_j c_k G_{jk} w(mu_j + mu_k), accumulated
// in extended precision with a running magnitude so a negative round-off
// residue of a positive form can be told apart from a real sign error.
double kernel_form(const ControlContext& ctx, const std::vector<int>& idx,
                   const std::vector<dd>& coeff, double tau, const char* who) {
    const std::size_t n = idx.size();
    dd acc(0.0);
    double scale = 0.0;
    const dd tau_dd(tau);
    for (std::size_t p = 0; p < n; ++p) {
        const dd mu_p(ctx.mu[idx[p]]);
        for (std::size_t r = p; r < n; ++r) {
            const dd w = duhamel_weight_dd(mu_p + dd(ctx.mu[idx[r]]), tau_dd);
            dd term = coeff[p] * coeff[r] * dd(ctx.gram(idx[p], idx[r])) * w;
            if (r != p) term = term + term;
            acc += term;
            scale += std::abs(to_double(term));
        }
    }
    const double value = to_double(acc);
    if (value < 0.0) {
        if (-value <= 1e-25 * scale) return 0.0;
        std::ostringstream msg;
        msg << who << ": positive form evaluated to " << value << " (magnitude " << scale
            << "); kernel data is inconsistent";
        throw NumericalError(msg.str());
    }
    return value;
}

}  // namespace

ControlContext make_context(const StokesEigenbasis& basis, const ObservationMask& mask) {
    ControlContext ctx;
    ctx.mu = basis.mu;
    ctx.gram = component_gram(basis, 1, &mask);
    return ctx;
}

double duhamel_weight(double s, double tau) {
    return -std::expm1(-s * tau) / s;
}

dd duhamel_weight_dd(dd s, dd tau) {
    return tau * dd_one_minus_exp_over(s * tau);
}

ModeCoeffs decay(const Eigen::VectorXd& mu, const ModeCoeffs& state, double tau) {
    if (!(tau >= 0.0)) {
        throw ConfigError("decay: negative interval length");
    }
    if (state.a.size() != mu.size()) {
        throw ConfigError("decay: state does not match the mode count");
    }
    ModeCoeffs out;
    out.a = state.a.array() * (-tau * mu.array()).exp();
    return out;
}

ModeCoeffs apply_control(const ControlContext& ctx, const ModeCoeffs& state,
                         const ControlSignal& signal) {
    check_sizes(ctx, state, "apply_control");
    check_signal(ctx, signal, "apply_control");

    const Eigen::Index m = ctx.mu.size();
    const double tau = signal.duration();
    const dd tau_dd(tau);
    const std::size_t ns = signal.source.size();

    std::vector<dd> q(ns);
    for (std::size_t p = 0; p < ns; ++p) q[p] = signal_weight(signal, p);

    ModeCoeffs out;
    out.a.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const dd mu_k(ctx.mu[k]);
        dd acc = dd(state.a[k]) * dd_exp(-(mu_k * tau_dd));
        for (std::size_t p = 0; p < ns; ++p) {
            const int j = signal.source[p];
            const dd w = duhamel_weight_dd(dd(ctx.mu[j]) + mu_k, tau_dd);
            acc += q[p] * dd(ctx.gram(j, k)) * w;
        }
        out.a[k] = to_double(acc);
    }
    return out;
}

double adjoint_observe(const ControlContext& ctx, const ModeCoeffs& z0, double t_final) {
    check_sizes(ctx, z0, "adjoint_observe");
    if (!(t_final > 0.0)) {
        throw ConfigError("adjoint_observe: the horizon must be positive");
    }
    const Eigen::Index m = ctx.mu.size();
    std::vector<int> idx(static_cast<std::size_t>(m));
    std::vector<dd> coeff(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) {
        idx[static_cast<std::size_t>(j)] = static_cast<int>(j);
        coeff[static_cast<std::size_t>(j)] = dd(z0.a[j]);
    }
    return kernel_form(ctx, idx, coeff, t_final, "adjoint_observe");
}

double control_energy(const ControlContext& ctx, const ControlSignal& signal) {
    check_signal(ctx, signal, "control_energy");
    const std::size_t ns = signal.source.size();
    std::vector<dd> coeff(ns);
    for (std::size_t p = 0; p < ns; ++p) coeff[p] = signal_weight(signal, p);
    return kernel_form(ctx, signal.source, coeff, signal.duration(), "control_energy");
}

}  // namespace stokeslab
