#pragma once
// Experiment runner: subcommands binding the numerical modules to config
// files and CSV/report outputs with deterministic seeding and atomic writes.

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stokeslab {

// Standard normal draw from two 53-bit uniforms via Box-Muller (no cached
// second value, no library distribution), so a given mt19937_64 stream maps
// to the same gaussians on every platform. This is the lab's one documented
// randomness path: every random quantity in the command-line flows from the
// config seed through this function.
double standard_normal(std::mt19937_64& rng);

// Unit-norm coefficient vector of length m drawn from the seeded generator.
Eigen::VectorXd seeded_unit_coeffs(int m, unsigned long long seed);

// Runs the command line (program name excluded): subcommands
//   eig | specineq | obscost | lr | hum | report
// with flags --config PATH (required), --out DIR and --seed U64 (optional
// overrides of the config keys out_dir and seed). Returns the process exit
// code: 0 success, 2 configuration error, 3 numerical failure. Error text
// goes to err (stderr in the binary), progress text to out.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stokeslab
