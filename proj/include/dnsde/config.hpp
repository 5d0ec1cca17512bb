#pragma once
// Experiment configuration: a line-oriented TOML subset (sections, scalar
// and array values, comments), named presets, semantic validation, a
// canonical serialization with a 64-bit content hash, and assembly of the
// configured objects.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <dnsde/graph.hpp>
#include <dnsde/mesh.hpp>
#include <dnsde/noise.hpp>
#include <dnsde/operators.hpp>
#include <dnsde/solver.hpp>

namespace dnsde {

struct GraphSpec {
  // identity | scaled-identity | sign | stefan | stefan-smooth |
  // piecewise-linear | sum-with-identity
  std::string kind = "stefan-smooth";
  double c = 1.0;      // scaled-identity scale / sum-with-identity weight
  double kappa = 1.0;  // stefan-smooth cusp weight
  std::vector<Breakpoint> breakpoints;  // piecewise-linear rows [r, lo, hi]
  std::string inner = "sign";           // sum-with-identity inner kind
};

struct ASpec {
  std::string mode = "pointwise";  // pointwise | nonlocal
  double c = 1.0;                  // nonlocal zero-order coefficient
  std::string kernel = "gaussian";
  double width = 8.0;  // k(x,y) = scale * exp(-width (x-y)^2)
  double scale = 1.0;
};

struct BSpec {
  std::string flux = "linear";  // linear | linear-plus-arctan
  double a = 1.0;
  double b = 0.0;            // arctan coefficient
  std::string beta0 = "";    // optional nodewise graph kind, empty = none
  std::optional<double> fractional_s;  // replaces the divergence part
};

struct NoiseSpec {
  int K = 4;
  double sigma0 = 0.25;
  double p = 1.5;
  std::string mult = "bounded-linear";  // additive | linear | bounded-linear
  double bound_c = 1.0;
};

// Affine drift a*u + amplitude * sin(k pi x).
struct FSpec {
  double a = 0.0;
  int b_k = 1;
  double b_amplitude = 0.0;
};

struct V0Spec {
  std::string profile = "sine";  // sine | constant-in-plateau | file
  int k = 1;
  // Large enough that after initial smoothing the state leaves the plateau
  // of the Stefan-type graphs, keeping sweep quantities comparable.
  double amplitude = 4.0;
  double value = 0.5;  // constant-in-plateau level
  std::string path;    // file profile, grid CSV
};

struct SolverSpec {
  std::string scheme = "semi-implicit";  // explicit | semi-implicit | implicit-limit
  double lambda = 0.05;
  double eps = 0.1;
  double dt = 4e-4;
  double T = 0.05;
  std::uint64_t seed = 1;
};

// Per-experiment parameters; each subcommand reads the fields it needs.
struct ExperimentSpec {
  int paths = 8;
  std::vector<double> lambdas = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  std::vector<double> dts = {4e-4, 2e-4, 1e-4};
  int levels = 3;  // uniqueness halvings
  // Base uniqueness discretization. Joint halving doubles dt * 2/lambda^2
  // per level and the finest comparison run halves once more, so the base
  // keeps that product at 2^{-(levels+1)} of the 1/2 fixed-point budget.
  // The gap between levels is floored by the initial smoothing mismatch
  // (I + eps R)^{-1} vs (I + eps/2 R)^{-1}, about mu_1 * eps/2 relative, so
  // the base eps starts low enough to land the finest pair under the
  // linear-regime gap bound.
  double uniq_dt = 1e-6;
  double uniq_lambda = 8e-3;
  double uniq_eps = 1e-3;
  double uniq_T = 1e-3;
  std::vector<double> sweep = {1e-1, 1e-2, 1e-3};  // ledger (lambda, eps) grid
  double sweep_dt = 2e-7;
  double sweep_T = 2e-6;
  int samples = 2000;  // hypothesis validation sample count
  double range = 3.0;  // hypothesis validation half-width
};

struct ExperimentConfig {
  int n = 16;
  GraphSpec graph;
  ASpec A;
  BSpec B;
  NoiseSpec noise;
  FSpec F;
  V0Spec v0;
  SolverSpec solver;
  ExperimentSpec experiment;
  std::string out = "out";
};

// Named scenarios: stefan | nonlocal-a | fractional-b | stress-stefan.
// Throws ValidationError("preset", ...) on an unknown name.
ExperimentConfig preset_config(const std::string& name);

// Parses the file on top of `base` (default: the stefan preset). Unknown
// sections or keys, malformed values, and duplicate keys are ParseError;
// the result is validated before it is returned.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config(const std::string& path, ExperimentConfig base);
ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base);

// Field-precise semantic checks; throws ValidationError(field, reason).
// Emits a hypothesis warning on stderr when the configured graph lacks a C1
// inverse (the schemes still run; the standing assumptions do not hold).
void validate(const ExperimentConfig& cfg);

// Deterministic full serialization of a validated config; equal configs
// produce equal text regardless of how they were specified.
std::string canonical_text(const ExperimentConfig& cfg);

// FNV-1a 64-bit hash of canonical_text, printed in artifact headers.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string config_hash_hex(const ExperimentConfig& cfg);

// Assembly of the configured objects. All throw ValidationError on fields
// that cannot be realized (missing v0 file, size mismatch).
Mesh1D config_mesh(const ExperimentConfig& cfg);
ScalarGraph build_graph(const GraphSpec& spec);
NemytskiiA build_A(const ExperimentConfig& cfg);
DivergenceFormB build_B(const ExperimentConfig& cfg);
NoiseModel build_noise(const ExperimentConfig& cfg);
DualGridFunction build_v0(const ExperimentConfig& cfg);
SolverConfig build_solver(const ExperimentConfig& cfg);

}  // namespace dnsde
