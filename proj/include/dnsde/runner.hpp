#pragma once
// Experiment orchestration: each subcommand turns a validated configuration
// into CSV artifacts plus a JSON verdict, and reports pass/fail checks.
// Artifacts are deterministic functions of (config, seed), independent of
// the worker thread count.

#include <string>
#include <vector>

#include <dnsde/config.hpp>

namespace dnsde {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
};

struct RunReport {
  std::string experiment;
  std::string hash;  // config hash, 16 hex digits
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

// Paths, moment summary, a ledger for regularized schemes, and a conjugate
// descent check on deterministic runs.
RunReport run_simulate(const ExperimentConfig& cfg);

// RMS of the chain-rule residual at T across paths, one row per step size;
// nonincreasing under refinement, with a halving-ratio check when the run
// is deterministic and the steps halve.
RunReport run_ito_check(const ExperimentConfig& cfg);

// Elliptic-parameter sweep of the regularized inverse at fixed eps.
RunReport run_converge_lambda(const ExperimentConfig& cfg);

// Joint sweep eps = lambda against the graph inverse.
RunReport run_converge_joint(const ExperimentConfig& cfg);

// Derivative probes of the regularized inverse against its limit.
RunReport run_derivative_check(const ExperimentConfig& cfg);

// Shared-noise gap between two discretizations across refinement levels.
RunReport run_uniqueness_check(const ExperimentConfig& cfg);

// (lambda, eps) grid with shared noise: per-quantity boundedness of the
// ledger maxima and the uniform operator bound.
RunReport run_ledger_sweep(const ExperimentConfig& cfg);

// Empirical check of the standing graph assumptions.
RunReport run_validate_graph(const ExperimentConfig& cfg);

// Linear anchor: error against the exact decay of the first mode.
RunReport run_heat_oracle(const ExperimentConfig& cfg);

const std::vector<std::string>& subcommand_names();

// Dispatches by name, prints the JSON verdict to stdout, and returns the
// process exit code: 0 iff every check passed or violations are allowed.
int run_subcommand(const std::string& name, const ExperimentConfig& cfg,
                   bool allow_violations);

}  // namespace dnsde
