#pragma once
// Time stepping for d(Au) + Bu dt = F(u) dt + G(u) dW on the discrete
// Dirichlet interval. Two schemes integrate the regularized evolution
// dv + B_lambda (A_lambda^eps)^{-1} v dt = F dt + G dW; the third steps the
// limit inclusion itself, keeping v^{n+1} in A(u^{n+1}) at every step.

#include <cstdint>
#include <optional>
#include <vector>

#include <dnsde/mesh.hpp>
#include <dnsde/noise.hpp>
#include <dnsde/operators.hpp>

namespace dnsde {

enum class Scheme { ExplicitRegularized, SemiImplicitRegularized, ImplicitLimit };

// Affine nodewise drift F(u) = a*u + b(x). Default is zero drift.
struct DriftF {
  double a = 0.0;
  std::optional<GridFunction> b;
};

struct SolverConfig {
  Scheme scheme = Scheme::SemiImplicitRegularized;
  double lambda = 1e-2;
  double eps = 1e-2;
  double dt = 1e-3;
  double T = 1e-1;
  std::uint64_t seed = 0;
  NewtonConfig newton;
  DriftF drift;
  DualGridFunction v0;
};

struct PathResult {
  Scheme scheme = Scheme::SemiImplicitRegularized;
  std::vector<double> times;               // steps + 1 entries
  std::vector<DualGridFunction> v;         // evolved state
  std::vector<GridFunction> u;             // primal state, v in A(u)
  std::vector<DualGridFunction> w;         // operator value used by the step
  std::vector<std::vector<double>> noise;  // steps entries of K increments
};

// round(T/dt); requires the quotient to be an integer to 1e-9 relative
// tolerance and at most 200000.
int step_count(double dt, double T);

// Lipschitz bound of B_lambda composed with (lambda R + A^eps)^{-1} as a map
// on the dual norm: 2/lambda^2, independent of the mesh and of the flux.
double regularized_flow_lipschitz(double lambda);

// Throws ValidationError on a config the schemes cannot honor: nonpositive
// lambda/eps/dt, eps*c_alpha >= 1, T/dt not an integer, step count beyond
// the trajectory cap, or an explicit run with dt * 2/lambda^2 > 1/2.
void validate_config(const SolverConfig& cfg, const NemytskiiA& A);

// (I + eps R)^{-1} v0_raw, the smoothed initial state of the regularized
// schemes. Contracts the H-norm.
DualGridFunction initial_data(double eps, const DualGridFunction& v0_raw);

PathResult simulate_path(const SolverConfig& cfg, const NemytskiiA& A,
                         const DivergenceFormB& B, const NoiseModel& noise,
                         std::uint64_t path_index);

// Same stepping with caller-supplied increments (one vector of K draws per
// step); used for shared-noise comparisons across discretizations.
PathResult simulate_path_with_noise(const SolverConfig& cfg, const NemytskiiA& A,
                                    const DivergenceFormB& B,
                                    const NoiseModel& noise,
                                    const std::vector<std::vector<double>>& increments);

// Per-time and pathwise moment summary. Paths are reduced as they finish;
// full trajectories are not retained.
struct McSummary {
  std::vector<double> times;
  std::vector<DualGridFunction> mean_v;  // nodal mean of v per time
  std::vector<double> mean_u_H, var_u_H;  // moments of ||u||_h per time
  std::vector<double> mean_v_H, var_v_H;
  double mean_sup_u_H = 0.0, var_sup_u_H = 0.0;  // sup over time of ||u||_h
  double mean_l2V_u = 0.0, var_l2V_u = 0.0;  // sqrt(sum dt ||u^n||_V^2)
  int paths = 0;
};

// Runs path indices 0..M-1 with per-path seeds from cfg.seed. Honors the
// DNSDE_THREADS cap; the reduction order is fixed, so results do not depend
// on the thread count.
McSummary monte_carlo(const SolverConfig& cfg, const NemytskiiA& A,
                      const DivergenceFormB& B, const NoiseModel& noise,
                      int M);

}  // namespace dnsde
