#include "stokeslab/cli.hpp"

#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "stokeslab/config.hpp"
#include "stokeslab/control.hpp"
#include "stokeslab/cost_analysis.hpp"
#include "stokeslab/csv.hpp"
#include "stokeslab/errors.hpp"
#include "stokeslab/grid.hpp"
#include "stokeslab/specineq.hpp"
#include "stokeslab/spectral.hpp"

namespace stokeslab {

double standard_normal(std::mt19937_64& rng) {
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1p-53;  // (0, 1]
    const double u2 = static_cast<double>(rng() >> 11) * 0x1p-53;          // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

Eigen::VectorXd seeded_unit_coeffs(int m, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    Eigen::VectorXd a(m);
    for (int j = 0; j < m; ++j) a[j] = standard_normal(rng);
    const double norm = a.norm();
    if (norm > 0.0)
        a /= norm;
    else
        a[0] = 1.0;
    return a;
}

namespace {

struct Session {
    ConfigMap cfg;
    std::string out_dir;
    unsigned long long seed = 0;
    std::ostream* out = nullptr;
};

std::string path_join(const std::string& dir, const std::string& name) {
    if (dir.empty()) return name;
    return dir.back() == '/' ? dir + name : dir + "/" + name;
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("output directory '" + dir + "': " + ec.message());
}

int require_mesh(const ConfigMap& cfg) {
    const long long n = cfg.get_int("n");
    if (n < 3 || n > 4096) throw ConfigError("config key 'n': must be in [3, 4096]");
    return static_cast<int>(n);
}

int require_modes(const ConfigMap& cfg, int n) {
    const long long m = cfg.get_int("m");
    if (m < 1) throw ConfigError("config key 'm': must be positive");
    if (m > static_cast<long long>(n) * n)
        throw ConfigError("config key 'm': must be at most n^2 = " +
                          std::to_string(static_cast<long long>(n) * n) + ", got " +
                          std::to_string(m));
    return static_cast<int>(m);
}

std::vector<double> require_t_grid(const ConfigMap& cfg) {
    const std::vector<double> grid = cfg.get_list("t_grid");
    for (double t : grid)
        if (!(t > 0.0)) throw ConfigError("config key 't_grid': horizons must be positive");
    return grid;
}

double require_positive(const ConfigMap& cfg, const std::string& key, double fallback) {
    const double v = cfg.get_double(key, fallback);
    if (!(v > 0.0)) throw ConfigError("config key '" + key + "': must be positive");
    return v;
}

std::string omega_descriptor(const Rect& r) {
    return "[" + format_number(r.x0) + "," + format_number(r.x1) + ")x[" +
           format_number(r.y0) + "," + format_number(r.y1) + ")";
}

// ---------------------------------------------------------------- subcommands

int cmd_eig(Session& s) {
    const int n = require_mesh(s.cfg);
    const int m = require_modes(s.cfg, n);
    const StokesEigenbasis basis = solve_buckling(Grid(n), m);
    std::string csv = "j,mu,residual,resolved\n";
    for (int j = 0; j < m; ++j) {
        csv += csv_row({format_number(static_cast<long long>(j + 1)),
                        format_number(basis.mu[j]), format_number(basis.residual[j]),
                        basis.mu[j] <= basis.resolution_limit ? "1" : "0"});
    }
    write_file_atomic(path_join(s.out_dir, "eig.csv"), csv);
    *s.out << "eig: m=" << m << " mu_1=" << format_number(basis.mu[0])
           << " mu_m=" << format_number(basis.mu[m - 1])
           << " resolution_limit=" << format_number(basis.resolution_limit)
           << " resolved=" << basis.resolved_count << "\n";
    return 0;
}

int cmd_specineq(Session& s) {
    const int n = require_mesh(s.cfg);
    const int m = require_modes(s.cfg, n);
    const Rect omega = s.cfg.get_rect("omega");
    const Grid grid(n);
    const ObservationMask mask(grid, omega);
    const StokesEigenbasis basis = solve_buckling(grid, m);

    std::vector<LawSample> samples;
    if (s.cfg.has("lambda_list")) {
        for (double lam : s.cfg.get_list("lambda_list")) {
            LawSample row;
            row.lambda = lam;
            row.c = best_constant(basis, &mask, lam);
            row.modes = 0;
            while (row.modes < m && basis.mu[row.modes] <= lam) ++row.modes;
            samples.push_back(row);
        }
    } else {
        const int law_modes = static_cast<int>(s.cfg.get_int("law_modes", 0));
        samples = spectral_law_samples(basis, &mask, law_modes);
    }

    if (samples.empty())
        throw ConfigError(
            "no resolved eigenvalues below the resolution limit; refine the mesh (key 'n')");

    std::string csv = "lambda,modes,C,logC,sqrt_lambda\n";
    for (const LawSample& row : samples) {
        csv += csv_row({format_number(row.lambda),
                        format_number(static_cast<long long>(row.modes)),
                        format_number(row.c), format_number(std::log(row.c)),
                        format_number(std::sqrt(row.lambda))});
    }
    write_file_atomic(path_join(s.out_dir, "specineq_curve.csv"), csv);

    std::string summary = "omega=" + omega_descriptor(omega) + "\n";
    summary += "n=" + format_number(static_cast<long long>(n)) + "\n";
    summary += "samples=" + format_number(static_cast<long long>(samples.size())) + "\n";

    if (samples.size() < 5) {
        for (const LawSample& row : samples)
            *s.out << "specineq: C(" << format_number(row.lambda)
                   << ")=" << format_number(row.c) << "\n";
        *s.out << "specineq: no growth-law fit (" << samples.size()
               << " samples, need 5)\n";
        summary += "c=" + format_number(samples.back().c) + "\n";
        summary += "lambda=" + format_number(samples.back().lambda) + "\n";
    } else {
        const SqrtLawFit fit = fit_sqrt_law(samples);
        std::ostringstream rep;
        rep << "growth law of the window constant: log C = logM + K*sqrt(lambda)\n"
            << "K=" << format_number(fit.k) << "\n"
            << "logM=" << format_number(fit.log_m) << "\n"
            << "R2=" << format_number(fit.r2) << "\n"
            << "samples=" << samples.size() << "\n";
        write_file_atomic(path_join(s.out_dir, "specineq_fit.txt"), rep.str());
        summary += "k=" + format_number(fit.k) + "\n";
        summary += "log_m=" + format_number(fit.log_m) + "\n";
        summary += "r2=" + format_number(fit.r2) + "\n";

        // Coefficient-recovery constant at the largest swept cutoff, with two
        // deterministic certificate checks along the auxiliary variable.
        const double lam_rec = samples.back().lambda;
        const double recovery = coefficient_recovery_constant(basis, lam_rec, {0.25, 0.5});
        summary += "recovery_lambda=" + format_number(lam_rec) + "\n";
        summary += "recovery_constant=" + format_number(recovery) + "\n";
        *s.out << "specineq: K=" << format_number(fit.k) << " logM=" << format_number(fit.log_m)
               << " R2=" << format_number(fit.r2) << " samples=" << samples.size() << "\n";
    }
    write_file_atomic(path_join(s.out_dir, "specineq_summary.txt"), summary);
    return 0;
}

int cmd_obscost(Session& s) {
    const int n = require_mesh(s.cfg);
    const int m = require_modes(s.cfg, n);
    const Rect omega = s.cfg.get_rect("omega");
    const std::vector<double> t_grid = require_t_grid(s.cfg);
    CostCurveConfig ccfg;
    ccfg.lambda_max = require_positive(s.cfg, "lambda_max", 0.0);
    ccfg.kappa = require_positive(s.cfg, "kappa", 3.0);
    ccfg.mesh_n = n;
    const Grid grid(n);
    const ObservationMask mask(grid, omega);
    ccfg.omega = omega_descriptor(omega);
    const StokesEigenbasis basis = solve_buckling(grid, m);

    const CostCurve curve = cost_curve(CurveKind::observability, t_grid, basis, mask, ccfg);
    write_file_atomic(path_join(s.out_dir, "obscost_curve.csv"), curve.csv());

    std::string summary = "floor=" + format_number(curve.t_min_floor) + "\n";
    summary += "lambda_max=" + format_number(curve.lambda_max) + "\n";
    summary += "samples_ok=" + format_number(static_cast<long long>(curve.ok_count())) + "\n";

    if (curve.ok_count() >= 6) {
        const ExponentFit fit = fit_exponent(curve);
        write_file_atomic(path_join(s.out_dir, "obscost_fit.txt"), fit.report());
        summary += "p=" + format_number(fit.p) + "\n";
        summary += "beta=" + format_number(fit.beta) + "\n";
        summary += "alpha=" + format_number(fit.alpha) + "\n";
        summary += "r2=" + format_number(fit.r2) + "\n";
        *s.out << "obscost: p=" << format_number(fit.p) << " beta=" << format_number(fit.beta)
               << " R2=" << format_number(fit.r2)
               << " floor=" << format_number(curve.t_min_floor) << "\n";
    } else {
        *s.out << "obscost: " << curve.ok_count()
               << " samples (need 6 spanning 4x in T for a fit), floor="
               << format_number(curve.t_min_floor) << "\n";
    }

    // Duality cross-check on a moderate window: the inverse of the steering
    // Gramian floor against the datum-form constant, two independent routes
    // through the same matrix.
    const int w_d = std::min<int>(12, m);
    double lam_d = s.cfg.get_double("duality_lambda", 0.0);
    if (!(lam_d > 0.0))
        lam_d = w_d < m ? 0.5 * (basis.mu[w_d - 1] + basis.mu[w_d]) : basis.mu[m - 1];
    const double tau_d = t_grid[t_grid.size() / 2];
    const Gramian gw = build_gramian(basis, mask, lam_d, tau_d);
    const ObsConstant wc = window_constant(basis, mask, lam_d, tau_d);
    const double lhs = 1.0 / gw.lambda_min;
    const double rel = std::abs(lhs - wc.value * wc.value) / lhs;
    summary += "duality_lambda=" + format_number(lam_d) + "\n";
    summary += "duality_tau=" + format_number(tau_d) + "\n";
    summary += "duality_rel=" + format_number(rel) + "\n";
    write_file_atomic(path_join(s.out_dir, "obscost_summary.txt"), summary);
    return 0;
}

int cmd_lr(Session& s) {
    const int n = require_mesh(s.cfg);
    const int m = require_modes(s.cfg, n);
    const Rect omega = s.cfg.get_rect("omega");
    const std::vector<double> t_grid = require_t_grid(s.cfg);
    CostCurveConfig ccfg;
    ccfg.lambda_max = require_positive(s.cfg, "lambda_max", 0.0);
    ccfg.kappa = require_positive(s.cfg, "kappa", 3.0);
    ccfg.eps = require_positive(s.cfg, "eps", 0.5);
    if (ccfg.eps > 1.0) throw ConfigError("config key 'eps': must be in (0, 1]");
    ccfg.rho = require_positive(s.cfg, "rho_g", 0.5);
    if (ccfg.rho >= 1.0) throw ConfigError("config key 'rho_g': must be in (0, 1)");
    ccfg.tol_target = require_positive(s.cfg, "tol_target", 1e-6);
    ccfg.mesh_n = n;
    const Grid grid(n);
    const ObservationMask mask(grid, omega);
    ccfg.omega = omega_descriptor(omega);
    ccfg.datum = seeded_unit_coeffs(m, s.seed);
    const StokesEigenbasis basis = solve_buckling(grid, m);

    const CostCurve curve = cost_curve(CurveKind::lr_cost, t_grid, basis, mask, ccfg);
    write_file_atomic(path_join(s.out_dir, "lr_curve.csv"), curve.csv());

    std::ostringstream rep;
    rep << "dyadic controller sweep: eps=" << format_number(ccfg.eps)
        << " rho=" << format_number(ccfg.rho)
        << " lambda_max=" << format_number(ccfg.lambda_max)
        << " tol_target=" << format_number(ccfg.tol_target) << " seed=" << s.seed << "\n";
    rep << "resolution floor T_min = " << format_number(curve.t_min_floor) << "\n";
    rep << "T  cost  terminal  lower_bound  cost/bound  status\n";
    double min_ratio = std::numeric_limits<double>::infinity();
    double max_terminal = 0.0;
    for (const CurveSample& smp : curve.samples) {
        rep << format_number(smp.horizon) << "  " << format_number(smp.value) << "  "
            << format_number(smp.terminal) << "  " << format_number(smp.lower_bound) << "  "
            << format_number(smp.bound_ratio) << "  " << smp.status << "\n";
        if (smp.status.rfind("ok", 0) == 0) {
            min_ratio = std::min(min_ratio, smp.bound_ratio);
            max_terminal = std::max(max_terminal, smp.terminal);
        }
    }

    std::string summary = "floor=" + format_number(curve.t_min_floor) + "\n";
    summary += "samples_ok=" + format_number(static_cast<long long>(curve.ok_count())) + "\n";
    summary += "min_bound_ratio=" + format_number(min_ratio) + "\n";
    summary += "max_terminal=" + format_number(max_terminal) + "\n";
    summary += "seed=" + format_number(static_cast<long long>(s.seed)) + "\n";

    double span_ok = 0.0;
    {
        double tmin = 0.0, tmax = 0.0;
        bool first = true;
        for (const CurveSample& smp : curve.samples) {
            if (smp.status.rfind("ok", 0) != 0) continue;
            if (first) {
                tmin = tmax = smp.horizon;
                first = false;
            } else {
                tmin = std::min(tmin, smp.horizon);
                tmax = std::max(tmax, smp.horizon);
            }
        }
        span_ok = first ? 0.0 : tmax / tmin;
    }
    if (curve.ok_count() >= 6 && span_ok >= 4.0 * (1.0 - 1e-12)) {
        const ExponentFit fit = fit_exponent(curve);
        rep << "\n" << fit.report();
        summary += "p=" + format_number(fit.p) + "\n";
        summary += "beta=" + format_number(fit.beta) + "\n";
        summary += "r2=" + format_number(fit.r2) + "\n";
        *s.out << "lr: p=" << format_number(fit.p) << " R2=" << format_number(fit.r2)
               << " min cost/bound=" << format_number(min_ratio)
               << " max terminal=" << format_number(max_terminal) << "\n";
    } else {
        *s.out << "lr: " << curve.ok_count() << " samples, min cost/bound="
               << format_number(min_ratio) << " max terminal=" << format_number(max_terminal)
               << "\n";
    }
    write_file_atomic(path_join(s.out_dir, "lr_report.txt"), rep.str());
    write_file_atomic(path_join(s.out_dir, "lr_summary.txt"), summary);
    return 0;
}

int cmd_hum(Session& s) {
    const int n = require_mesh(s.cfg);
    const int m = require_modes(s.cfg, n);
    const Rect omega = s.cfg.get_rect("omega");
    const std::vector<double> t_grid = require_t_grid(s.cfg);
    CostCurveConfig ccfg;
    ccfg.lambda_max = require_positive(s.cfg, "lambda_max", 0.0);
    ccfg.kappa = require_positive(s.cfg, "kappa", 3.0);
    ccfg.eps_pen = require_positive(s.cfg, "eps_pen", 1e-8);
    ccfg.mesh_n = n;
    const Grid grid(n);
    const ObservationMask mask(grid, omega);
    ccfg.omega = omega_descriptor(omega);
    ccfg.datum = seeded_unit_coeffs(m, s.seed);
    const StokesEigenbasis basis = solve_buckling(grid, m);

    const CostCurve curve = cost_curve(CurveKind::hum_cost, t_grid, basis, mask, ccfg);
    write_file_atomic(path_join(s.out_dir, "hum_curve.csv"), curve.csv());

    std::string summary = "floor=" + format_number(curve.t_min_floor) + "\n";
    summary += "eps_pen=" + format_number(ccfg.eps_pen) + "\n";
    summary += "samples_ok=" + format_number(static_cast<long long>(curve.ok_count())) + "\n";
    summary += "cost=" + format_number(curve.samples[0].value) + "\n";
    summary += "t=" + format_number(curve.samples[0].horizon) + "\n";
    write_file_atomic(path_join(s.out_dir, "hum_summary.txt"), summary);
    for (const CurveSample& smp : curve.samples)
        *s.out << "hum: T=" << format_number(smp.horizon)
               << " cost=" << format_number(smp.value) << " (" << smp.status << ")\n";
    return 0;
}

int cmd_report(Session& s) {
    const char* required[] = {"specineq_curve.csv", "specineq_summary.txt",
                              "obscost_curve.csv",  "obscost_summary.txt",
                              "lr_curve.csv",       "lr_summary.txt"};
    for (const char* name : required) {
        const std::string path = path_join(s.out_dir, name);
        if (!std::filesystem::exists(path))
            throw ConfigError("missing input file '" + path + "'");
    }
    const ConfigMap si = ConfigMap::parse_file(path_join(s.out_dir, "specineq_summary.txt"));
    const ConfigMap obs = ConfigMap::parse_file(path_join(s.out_dir, "obscost_summary.txt"));
    const ConfigMap lr = ConfigMap::parse_file(path_join(s.out_dir, "lr_summary.txt"));

    std::ostringstream rep;
    rep << "laboratory summary\n";
    rep << "==================\n";
    rep << "spectral window law: K=" << si.get_string("k", "n/a")
        << " logM=" << si.get_string("log_m", "n/a") << " R2=" << si.get_string("r2", "n/a")
        << " (samples=" << si.get_string("samples", "0") << ")\n";
    rep << "coefficient recovery: constant=" << si.get_string("recovery_constant", "n/a")
        << " at lambda=" << si.get_string("recovery_lambda", "n/a") << "\n";
    rep << "observability curve: p=" << obs.get_string("p", "n/a")
        << " beta=" << obs.get_string("beta", "n/a") << " R2=" << obs.get_string("r2", "n/a")
        << " floor=" << obs.get_string("floor", "n/a") << "\n";
    rep << "duality cross-check: rel=" << obs.get_string("duality_rel", "n/a")
        << " at lambda=" << obs.get_string("duality_lambda", "n/a")
        << " tau=" << obs.get_string("duality_tau", "n/a") << "\n";
    rep << "controller: min cost/bound=" << lr.get_string("min_bound_ratio", "n/a")
        << " max terminal=" << lr.get_string("max_terminal", "n/a")
        << " (samples=" << lr.get_string("samples_ok", "0") << ")";
    if (lr.has("p")) rep << " p=" << lr.get_string("p");
    rep << "\n";
    const std::string hum_path = path_join(s.out_dir, "hum_summary.txt");
    if (std::filesystem::exists(hum_path)) {
        const ConfigMap hum = ConfigMap::parse_file(hum_path);
        rep << "penalized comparator: cost=" << hum.get_string("cost", "n/a")
            << " at T=" << hum.get_string("t", "n/a")
            << " eps_pen=" << hum.get_string("eps_pen", "n/a") << "\n";
    }
    write_file_atomic(path_join(s.out_dir, "summary.txt"), rep.str());
    *s.out << "report: wrote " << path_join(s.out_dir, "summary.txt") << "\n";
    return 0;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (args.empty())
        throw ConfigError(
            "usage: stokeslab <eig|specineq|obscost|lr|hum|report> --config PATH "
            "[--out DIR] [--seed U64]");
    const std::string cmd = args[0];
    if (cmd != "eig" && cmd != "specineq" && cmd != "obscost" && cmd != "lr" &&
        cmd != "hum" && cmd != "report")
        throw ConfigError("unknown subcommand '" + cmd +
                          "' (expected eig|specineq|obscost|lr|hum|report)");
    std::optional<std::string> config_path, out_override, seed_override;
    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string& a = args[i];
        auto take_value = [&](const char* flag) -> std::string {
            if (i + 1 >= args.size())
                throw ConfigError(std::string("flag ") + flag + " expects a value");
            return args[++i];
        };
        if (a == "--config")
            config_path = take_value("--config");
        else if (a == "--out")
            out_override = take_value("--out");
        else if (a == "--seed")
            seed_override = take_value("--seed");
        else
            throw ConfigError("unknown flag '" + a + "'");
    }
    if (!config_path) throw ConfigError("missing required flag --config");

    Session s;
    s.cfg = ConfigMap::parse_file(*config_path);
    if (seed_override) {
        ConfigMap one;
        one.values["seed"] = *seed_override;
        s.seed = one.get_u64("seed");
    } else {
        s.seed = s.cfg.get_u64("seed", 1);
    }
    s.out_dir = out_override ? *out_override : s.cfg.get_string("out_dir", "out");
    ensure_out_dir(s.out_dir);
    s.out = &out;
    (void)err;

    if (cmd == "eig") return cmd_eig(s);
    if (cmd == "specineq") return cmd_specineq(s);
    if (cmd == "obscost") return cmd_obscost(s);
    if (cmd == "lr") return cmd_lr(s);
    if (cmd == "hum") return cmd_hum(s);
    return cmd_report(s);
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace stokeslab
