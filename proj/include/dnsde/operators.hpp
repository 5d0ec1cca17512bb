#pragma once
// Grid operators built on the scalar graph calculus: nodewise and nonlocal
// monotone maps A with Yosida regularization, the regularized inverse
// (lambda R + A^eps)^{-1}, divergence-form B with resolvent and Yosida
// approximation, and the noise trace terms.

#include <optional>
#include <vector>

#include <dnsde/graph.hpp>
#include <dnsde/mesh.hpp>

namespace dnsde {

enum class AMode { Pointwise, NonlocalKernel };

// Monotone map on grid functions. Pointwise mode applies `graph` nodewise.
// NonlocalKernel mode realizes the linear map u -> c*u + h*K*u with K
// symmetric positive semidefinite, so the map is strongly monotone with
// constant c; `graph` is unused in that mode.
struct NemytskiiA {
  ScalarGraph graph;
  AMode mode = AMode::Pointwise;
  double c = 0.0;              // kernel mode only
  std::vector<double> kernel;  // kernel mode only, row-major n x n
  int kernel_n = 0;
};

NemytskiiA pointwise_A(ScalarGraph graph);
// kernel must be n x n row-major and symmetric; requires c > 0.
NemytskiiA nonlocal_A(double c, std::vector<double> kernel, int n);

// Strong monotonicity constant of A: graph.c_alpha or the kernel-mode c.
double monotonicity_constant(const NemytskiiA& A);

struct NewtonConfig {
  double tol_abs = 1e-11;  // residual tolerance in the relevant norm
  int max_iter = 50;
  int max_halvings = 30;  // backtracking halvings per Newton iteration
};

// Scalar edge flux q with q(0) = 0 and slopes in [a, a+b].
enum class FluxKind { Linear, LinearPlusArctan };

struct Flux {
  FluxKind kind = FluxKind::Linear;
  double a = 1.0;
  double b = 0.0;  // arctan coefficient, LinearPlusArctan only
};

Flux linear_flux(double a);
Flux linear_plus_arctan_flux(double a, double b);

double flux_value(const Flux& q, double xi);
double flux_slope(const Flux& q, double xi);
double flux_slope_inf(const Flux& q);
double flux_slope_sup(const Flux& q);

// Divergence-form monotone operator V -> V*. The divergence part applies q
// to forward-difference gradients on the n+1 edges (zero boundary values);
// fractional_s, when set, replaces that part by the spectral power R^s.
// beta0 adds a nodewise monotone graph, applied by minimal section
// everywhere except inside resolvent_B, which honors the full graph.
struct DivergenceFormB {
  Flux flux;
  std::optional<ScalarGraph> beta0;
  std::optional<double> fractional_s;
};

DivergenceFormB make_divergence_B(Flux flux,
                                  std::optional<ScalarGraph> beta0 = {},
                                  std::optional<double> fractional_s = {});

// Yosida approximation of A at step eps, nodewise in pointwise mode, via a
// kernel resolvent solve otherwise. Requires 0 < eps < 1/c_alpha.
GridFunction apply_A_eps(const NemytskiiA& A, double eps,
                         const GridFunction& u);

// Minimal-section application of A itself (nodewise alpha°, or the linear
// kernel map).
DualGridFunction apply_A_selection(const NemytskiiA& A, const GridFunction& u);

// Solves lambda R x + A^eps(x) = y to cfg.tol_abs in the H-norm by damped
// Newton. The Jacobian lambda R + diag((alpha^eps)') is tridiagonal in
// pointwise mode; kernel mode reduces to one dense symmetric solve.
GridFunction invert_A_lambda_eps(const NemytskiiA& A, double lambda,
                                 double eps, const DualGridFunction& y,
                                 const NewtonConfig& cfg = {});

// Derivative of the inverse map at v: nodewise gamma'(v)*hdir, or the
// constant kernel inverse applied to hdir.
GridFunction d_ainv_apply(const NemytskiiA& A, const DualGridFunction& v,
                          const GridFunction& hdir);

// (lambda R + DA^eps(x))^{-1} hdir, the derivative of the regularized
// inverse evaluated at the state x.
GridFunction d_alambda_inv_apply(const NemytskiiA& A, double lambda,
                                 double eps, const GridFunction& x,
                                 const GridFunction& hdir);

DualGridFunction apply_B(const DivergenceFormB& B, const GridFunction& u);

// Solves R z + lambda B(z) = R u to cfg.tol_abs in the V*-norm. Multivalued
// beta0 is handled through its resolvent inside the Newton residual.
GridFunction resolvent_B(const DivergenceFormB& B, double lambda,
                         const GridFunction& u, const NewtonConfig& cfg = {});

// B_lambda u = R(u - resolvent_B(u)) / lambda.
DualGridFunction yosida_B(const DivergenceFormB& B, double lambda,
                          const GridFunction& u, const NewtonConfig& cfg = {});

// Sum_k (D(A^{-1})(v) G_k, G_k)_H.
double trace_limit(const NemytskiiA& A, const DualGridFunction& v,
                   const std::vector<GridFunction>& G_columns);

// Sum_k ((lambda R + DA^eps(x))^{-1} G_k, G_k)_H.
double trace_regularized(const NemytskiiA& A, double lambda, double eps,
                         const GridFunction& x,
                         const std::vector<GridFunction>& G_columns);

// Power-iteration estimate of the largest H-eigenvalue of
// (lambda R + DA^eps(x))^{-1}; bounded by eps + 1/c_alpha.
double operator_bound_estimate(const NemytskiiA& A, double lambda, double eps,
                               const GridFunction& x, int iters = 120);

}  // namespace dnsde
