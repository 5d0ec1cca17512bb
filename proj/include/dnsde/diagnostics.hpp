#pragma once
// Executable estimates over completed paths: the per-step energy ledger, the
// chain-rule (Ito) residual with its trace correction, resolvent convergence
// sweeps in the elliptic parameter, derivative convergence probes, shared-
// noise uniqueness gaps, and the linear heat anchor.

#include <array>
#include <vector>

#include <dnsde/mesh.hpp>
#include <dnsde/noise.hpp>
#include <dnsde/operators.hpp>
#include <dnsde/solver.hpp>

namespace dnsde {

// Conjugate functional of the limit problem at a dual state: the nodewise
// convex conjugate of the graph potential, or the quadratic form of the
// kernel inverse.
double conjugate_functional(const NemytskiiA& A, const DualGridFunction& v);

// Conjugate functional of the doubly regularized problem, evaluated through
// the primal state u = (lambda R + A^eps)^{-1} v:
//   lambda/2 ||u||_V^2 + eps/2 ||A^eps u||_h^2 + conjugate at A^eps u.
double conjugate_functional_regularized(const NemytskiiA& A, double lambda,
                                        double eps, const DualGridFunction& v,
                                        const NewtonConfig& nc = {});

// Seven tracked quantities per step of a regularized path.
struct LedgerRow {
  double sqrt_lambda_u_V = 0.0;   // lambda^{1/2} ||u||_V
  double sqrt_eps_aeps_H = 0.0;   // eps^{1/2} ||A^eps u||_h
  double u_H = 0.0;               // ||u||_h
  double aeps_H = 0.0;            // ||A^eps u||_h
  double conjugate_aeps = 0.0;    // conjugate functional at A^eps u
  double resolvent_B_V = 0.0;     // ||J^B_lambda u||_V
  double yosida_B_Vstar = 0.0;    // ||B_lambda u||_{V*}
};

// Requires a path from a regularized scheme.
std::vector<LedgerRow> energy_ledger(const PathResult& path, const SolverConfig& cfg,
                                     const NemytskiiA& A, const DivergenceFormB& B);

// Largest power-iteration estimate of ||(lambda R + DA^eps(u))^{-1}|| along
// the path, sampling every `stride` steps. Bounded by eps + 1/c_alpha.
double max_regularized_bound(const PathResult& path, const NemytskiiA& A,
                             double lambda, double eps, int stride = 10);

enum class ItoVariant { Limit, Regularized };

// Per time t:
//   lhs = Phi*(v(t)) + sum_{s<t} dt <w_s, u_s>
//   rhs = Phi*(v(0)) + sum_{s<t} (u_s, G_s dW_s)_h + 1/2 sum_{s<t} dt tr_s
// with left-endpoint quadrature and the trace matched to the variant.
struct ItoReport {
  std::vector<double> times, lhs, rhs, residual;
};

ItoReport ito_residual(const PathResult& path, const SolverConfig& cfg,
                       const NemytskiiA& A, const DivergenceFormB& B,
                       const NoiseModel& noise, ItoVariant variant);

// Per lambda: e1 = distance of the regularized inverse from the nodewise
// inverse eps*y + gamma(y); e2 = defect of A^eps at the regularized inverse.
struct LambdaSeries {
  std::vector<double> lambdas, e1, e2;
};

LambdaSeries convergence_lambda(const NemytskiiA& A, double eps,
                                const DualGridFunction& y,
                                const std::vector<double>& lambdas,
                                const NewtonConfig& nc = {});

// Joint sweep eps = lambda against the graph inverse x = gamma(y).
struct JointSeries {
  std::vector<double> lambdas;
  std::vector<double> e_graph;  // ||A^lambda(x_lambda) - y||_h
  std::vector<double> e_V;      // | ||x_lambda||_V - ||x||_V |
  std::vector<double> e_H;      // ||x_lambda - x||_h
};

JointSeries convergence_joint(const NemytskiiA& A, const DualGridFunction& y,
                              const std::vector<double>& lambdas,
                              const NewtonConfig& nc = {});

// Probes of the derivative of the regularized inverse against its limit
// eps*h + gamma'(y)*h, paired with the three lowest modes.
struct DerivativeSeries {
  std::vector<double> lambdas;
  std::vector<std::array<double, 3>> probes;
};

DerivativeSeries derivative_convergence(const NemytskiiA& A, double eps,
                                        const DualGridFunction& y,
                                        const GridFunction& hdir,
                                        const std::vector<double>& lambdas,
                                        const NewtonConfig& nc = {});

enum class UniquenessMode { LinearA, LinearB };

// Runs both configs on one shared noise realization (generated at the finer
// step, block-summed to the coarser) and reports the dual-norm gap on the
// coarser time grid. Configs may differ only in (lambda, eps, dt, scheme).
struct UniquenessReport {
  std::vector<double> times;
  std::vector<double> gap;
  double sup_gap = 0.0;
};

UniquenessReport uniqueness_check(const SolverConfig& c1, const SolverConfig& c2,
                                  UniquenessMode mode, const NemytskiiA& A,
                                  const DivergenceFormB& B, const NoiseModel& noise);

// L2 error at T of the limit scheme against exp(-mu_1 T) sin(pi x) for the
// all-linear problem with v0 = sin(pi x).
double heat_oracle(int n, double dt, double T);

}  // namespace dnsde
