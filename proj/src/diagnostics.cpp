#include "dnsde/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "dnsde/errors.hpp"

namespace dnsde {

namespace {

Eigen::MatrixXd kernel_matrix(const NemytskiiA& A, const Mesh1D& m) {
  Eigen::MatrixXd M(m.n, m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j)
      M(i, j) = m.h * A.kernel[i * m.n + j] + (i == j ? A.c : 0.0);
  return M;
}

std::vector<double> kernel_solve(const NemytskiiA& A, const Mesh1D& m,
                                 const std::vector<double>& rhs) {
  const Eigen::MatrixXd M = kernel_matrix(A, m);
  Eigen::VectorXd b(m.n);
  for (int i = 0; i < m.n; ++i) b(i) = rhs[i];
  const Eigen::VectorXd x = M.llt().solve(b);
  std::vector<double> out(m.n);
  for (int i = 0; i < m.n; ++i) out[i] = x(i);
  return out;
}

// 1/2 <M^{-1} w, w>_h, the conjugate of the kernel-mode quadratic potential.
double kernel_quadratic_conjugate(const NemytskiiA& A, const Mesh1D& m,
                                  const std::vector<double>& w) {
  const std::vector<double> x = kernel_solve(A, m, w);
  double s = 0.0;
  for (int i = 0; i < m.n; ++i) s += x[i] * w[i];
  return 0.5 * m.h * s;
}

double sum_conjugate(const NemytskiiA& A, const Mesh1D& m,
                     const std::vector<double>& vals) {
  if (A.mode == AMode::NonlocalKernel) {
    return kernel_quadratic_conjugate(A, m, vals);
  }
  double s = 0.0;
  for (double v : vals) s += conjugate(A.graph, v);
  return m.h * s;
}

double sum_moreau_conjugate(const NemytskiiA& A, double eps, const Mesh1D& m,
                            const std::vector<double>& vals) {
  if (A.mode == AMode::NonlocalKernel) {
    double q = 0.0;
    for (double v : vals) q += v * v;
    return 0.5 * eps * m.h * q + kernel_quadratic_conjugate(A, m, vals);
  }
  double s = 0.0;
  for (double v : vals) s += moreau_conjugate(A.graph, eps, v);
  return m.h * s;
}

// Limit inverse (eps I + A^{-1}) y, nodewise or via the kernel solve.
GridFunction limit_inverse(const NemytskiiA& A, double eps,
                           const DualGridFunction& y) {
  GridFunction x = make_grid(y.mesh);
  if (A.mode == AMode::NonlocalKernel) {
    const std::vector<double> z = kernel_solve(A, y.mesh, y.val);
    for (int i = 0; i < y.mesh.n; ++i) x.val[i] = eps * y.val[i] + z[i];
    return x;
  }
  for (int i = 0; i < y.mesh.n; ++i) {
    x.val[i] = eps * y.val[i] + gamma(A.graph, y.val[i]);
  }
  return x;
}

bool regularized_scheme(Scheme s) { return s != Scheme::ImplicitLimit; }

bool same_values(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

void check_comparable(const SolverConfig& c1, const SolverConfig& c2) {
  if (c1.T != c2.T) {
    throw ValidationError("uniqueness configs must share the horizon");
  }
  if (c1.seed != c2.seed) {
    throw ValidationError("uniqueness configs must share the seed");
  }
  if (!same_mesh(c1.v0.mesh, c2.v0.mesh) ||
      !same_values(c1.v0.val, c2.v0.val)) {
    throw ValidationError("uniqueness configs must share the initial state");
  }
  if (c1.drift.a != c2.drift.a ||
      c1.drift.b.has_value() != c2.drift.b.has_value() ||
      (c1.drift.b && !same_values(c1.drift.b->val, c2.drift.b->val))) {
    throw ValidationError("uniqueness configs must share the drift");
  }
}

void check_regime(UniquenessMode mode, const NemytskiiA& A,
                  const DivergenceFormB& B) {
  if (mode == UniquenessMode::LinearA) {
    const bool linear = A.mode == AMode::Pointwise &&
                        (A.graph.kind == GraphKind::Identity ||
                         A.graph.kind == GraphKind::ScaledIdentity);
    if (!linear) {
      throw ValidationError("LinearA regime needs an identity-type graph");
    }
    return;
  }
  const bool plain_R = B.flux.kind == FluxKind::Linear && B.flux.a == 1.0 &&
                       !B.beta0.has_value() && !B.fractional_s.has_value();
  if (!plain_R) {
    throw ValidationError("LinearB regime needs the plain Riesz operator");
  }
}

}  // namespace

double conjugate_functional(const NemytskiiA& A, const DualGridFunction& v) {
  return sum_conjugate(A, v.mesh, v.val);
}

double conjugate_functional_regularized(const NemytskiiA& A, double lambda,
                                        double eps, const DualGridFunction& v,
                                        const NewtonConfig& nc) {
  const GridFunction u = invert_A_lambda_eps(A, lambda, eps, v, nc);
  const DualGridFunction Ru = apply_R(u);
  std::vector<double> aeps(v.mesh.n);
  for (int i = 0; i < v.mesh.n; ++i) {
    aeps[i] = v.val[i] - lambda * Ru.val[i];
  }
  const double nv = norm_V(u);
  return 0.5 * lambda * nv * nv + sum_moreau_conjugate(A, eps, v.mesh, aeps);
}

std::vector<LedgerRow> energy_ledger(const PathResult& path,
                                     const SolverConfig& cfg,
                                     const NemytskiiA& A,
                                     const DivergenceFormB& B) {
  if (!regularized_scheme(path.scheme)) {
    throw ValidationError("energy ledger requires a regularized path");
  }
  std::vector<LedgerRow> rows;
  rows.reserve(path.u.size());
  for (const GridFunction& u : path.u) {
    const GridFunction aeps = apply_A_eps(A, cfg.eps, u);
    const GridFunction J = resolvent_B(B, cfg.lambda, u, cfg.newton);
    GridFunction d = u;
    for (int i = 0; i < u.mesh.n; ++i) d.val[i] -= J.val[i];
    DualGridFunction By = apply_R(d);
    for (double& e : By.val) e /= cfg.lambda;
    LedgerRow r;
    r.sqrt_lambda_u_V = std::sqrt(cfg.lambda) * norm_V(u);
    r.sqrt_eps_aeps_H = std::sqrt(cfg.eps) * norm_H(aeps);
    r.u_H = norm_H(u);
    r.aeps_H = norm_H(aeps);
    r.conjugate_aeps = sum_conjugate(A, u.mesh, aeps.val);
    r.resolvent_B_V = norm_V(J);
    r.yosida_B_Vstar = norm_Vstar(By);
    rows.push_back(r);
  }
  return rows;
}

double max_regularized_bound(const PathResult& path, const NemytskiiA& A,
                             double lambda, double eps, int stride) {
  if (stride < 1) throw ValidationError("sampling stride must be positive");
  double best = 0.0;
  for (std::size_t t = 0; t < path.u.size(); t += stride) {
    best = std::max(best, operator_bound_estimate(A, lambda, eps, path.u[t]));
  }
  return best;
}

ItoReport ito_residual(const PathResult& path, const SolverConfig& cfg,
                       const NemytskiiA& A, const DivergenceFormB& B,
                       const NoiseModel& noise, ItoVariant variant) {
  (void)B;
  const bool reg_path = regularized_scheme(path.scheme);
  if (variant == ItoVariant::Limit && reg_path) {
    throw ValidationError("Limit variant requires a limit-scheme path");
  }
  if (variant == ItoVariant::Regularized && !reg_path) {
    throw ValidationError("Regularized variant requires a regularized path");
  }
  const auto phi = [&](const DualGridFunction& v) {
    return variant == ItoVariant::Limit
               ? conjugate_functional(A, v)
               : conjugate_functional_regularized(A, cfg.lambda, cfg.eps, v,
                                                  cfg.newton);
  };

  ItoReport rep;
  const std::size_t steps = path.noise.size();
  rep.times = path.times;
  rep.lhs.reserve(steps + 1);
  rep.rhs.reserve(steps + 1);
  rep.residual.reserve(steps + 1);
  const double phi0 = phi(path.v[0]);
  double pair_acc = 0.0, noise_acc = 0.0, trace_acc = 0.0;
  for (std::size_t t = 0; t <= steps; ++t) {
    const double lhs = (t == 0 ? phi0 : phi(path.v[t])) + pair_acc;
    const double rhs = phi0 + noise_acc + 0.5 * trace_acc;
    rep.lhs.push_back(lhs);
    rep.rhs.push_back(rhs);
    rep.residual.push_back(lhs - rhs);
    if (t == steps) break;
    const GridFunction& u = path.u[t];
    pair_acc += cfg.dt * pairing(path.w[t], u);
    const std::vector<GridFunction> cols = g_columns(noise, path.times[t], u);
    trace_acc += cfg.dt * (variant == ItoVariant::Limit
                               ? trace_limit(A, path.v[t], cols)
                               : trace_regularized(A, cfg.lambda, cfg.eps, u,
                                                   cols));
    const GridFunction gdw = apply_G(noise, path.times[t], u, path.noise[t]);
    noise_acc += inner_H(u, gdw);
  }
  return rep;
}

LambdaSeries convergence_lambda(const NemytskiiA& A, double eps,
                                const DualGridFunction& y,
                                const std::vector<double>& lambdas,
                                const NewtonConfig& nc) {
  LambdaSeries out;
  out.lambdas = lambdas;
  const GridFunction xinf = limit_inverse(A, eps, y);
  for (double lambda : lambdas) {
    const GridFunction x = invert_A_lambda_eps(A, lambda, eps, y, nc);
    const GridFunction ax = apply_A_eps(A, eps, x);
    double e1 = 0.0, e2 = 0.0;
    for (int i = 0; i < y.mesh.n; ++i) {
      const double d1 = x.val[i] - xinf.val[i];
      const double d2 = ax.val[i] - y.val[i];
      e1 += d1 * d1;
      e2 += d2 * d2;
    }
    out.e1.push_back(std::sqrt(y.mesh.h * e1));
    out.e2.push_back(std::sqrt(y.mesh.h * e2));
  }
  return out;
}

JointSeries convergence_joint(const NemytskiiA& A, const DualGridFunction& y,
                              const std::vector<double>& lambdas,
                              const NewtonConfig& nc) {
  JointSeries out;
  out.lambdas = lambdas;
  const GridFunction xlim = limit_inverse(A, 0.0, y);
  const double nv_lim = norm_V(xlim);
  for (double lambda : lambdas) {
    const GridFunction x = invert_A_lambda_eps(A, lambda, lambda, y, nc);
    const GridFunction ax = apply_A_eps(A, lambda, x);
    double eg = 0.0, eh = 0.0;
    for (int i = 0; i < y.mesh.n; ++i) {
      const double dg = ax.val[i] - y.val[i];
      const double dh = x.val[i] - xlim.val[i];
      eg += dg * dg;
      eh += dh * dh;
    }
    out.e_graph.push_back(std::sqrt(y.mesh.h * eg));
    out.e_V.push_back(std::abs(norm_V(x) - nv_lim));
    out.e_H.push_back(std::sqrt(y.mesh.h * eh));
  }
  return out;
}

DerivativeSeries derivative_convergence(const NemytskiiA& A, double eps,
                                        const DualGridFunction& y,
                                        const GridFunction& hdir,
                                        const std::vector<double>& lambdas,
                                        const NewtonConfig& nc) {
  DerivativeSeries out;
  out.lambdas = lambdas;
  GridFunction kinf = d_ainv_apply(A, y, hdir);
  for (int i = 0; i < y.mesh.n; ++i) kinf.val[i] += eps * hdir.val[i];
  const GridFunction p1 = eigenvector_R(y.mesh, 1);
  const GridFunction p2 = eigenvector_R(y.mesh, 2);
  const GridFunction p3 = eigenvector_R(y.mesh, 3);
  for (double lambda : lambdas) {
    const GridFunction x = invert_A_lambda_eps(A, lambda, eps, y, nc);
    const GridFunction k = d_alambda_inv_apply(A, lambda, eps, x, hdir);
    GridFunction diff = k;
    for (int i = 0; i < y.mesh.n; ++i) diff.val[i] -= kinf.val[i];
    out.probes.push_back(
        {inner_H(diff, p1), inner_H(diff, p2), inner_H(diff, p3)});
  }
  return out;
}

UniquenessReport uniqueness_check(const SolverConfig& c1,
                                  const SolverConfig& c2, UniquenessMode mode,
                                  const NemytskiiA& A, const DivergenceFormB& B,
                                  const NoiseModel& noise) {
  check_comparable(c1, c2);
  check_regime(mode, A, B);
  const int s1 = step_count(c1.dt, c1.T);
  const int s2 = step_count(c2.dt, c2.T);
  const bool first_fine = s1 >= s2;
  const int sf = first_fine ? s1 : s2;
  const int sc = first_fine ? s2 : s1;
  const double ratio = double(sf) / double(sc);
  const int r = int(std::lround(ratio));
  if (std::abs(ratio - r) > 1e-9 * r) {
    throw IncompatibleSteps("shared noise needs an integral step ratio");
  }

  RngStream rng{c1.seed, 0, 0};
  const double dt_fine = c1.T / sf;
  std::vector<std::vector<double>> fine(sf);
  for (int s = 0; s < sf; ++s) fine[s] = sample_increment(rng, dt_fine, noise.K);
  std::vector<std::vector<double>> coarse(sc, std::vector<double>(noise.K, 0.0));
  for (int j = 0; j < sc; ++j) {
    for (int b = 0; b < r; ++b) {
      for (int k = 0; k < noise.K; ++k) {
        coarse[j][k] += fine[j * r + b][k];
      }
    }
  }

  const PathResult p1 =
      simulate_path_with_noise(c1, A, B, noise, first_fine ? fine : coarse);
  const PathResult p2 =
      simulate_path_with_noise(c2, A, B, noise, first_fine ? coarse : fine);
  const PathResult& pf = first_fine ? p1 : p2;
  const PathResult& pc = first_fine ? p2 : p1;

  UniquenessReport rep;
  rep.times.reserve(sc + 1);
  rep.gap.reserve(sc + 1);
  for (int j = 0; j <= sc; ++j) {
    const DualGridFunction& vf = pf.v[static_cast<std::size_t>(j) * r];
    const DualGridFunction& vc = pc.v[j];
    DualGridFunction d = vc;
    for (int i = 0; i < d.mesh.n; ++i) d.val[i] = vf.val[i] - vc.val[i];
    const double g = norm_Vstar(d);
    rep.times.push_back(pc.times[j]);
    rep.gap.push_back(g);
    rep.sup_gap = std::max(rep.sup_gap, g);
  }
  return rep;
}

double heat_oracle(int n, double dt, double T) {
  const Mesh1D m = make_mesh(n);
  SolverConfig cfg;
  cfg.scheme = Scheme::ImplicitLimit;
  cfg.lambda = 0.1;
  cfg.eps = 0.1;
  cfg.dt = dt;
  cfg.T = T;
  cfg.seed = 0;
  cfg.v0 = as_dual(eigenvector_R(m, 1));
  const NemytskiiA A = pointwise_A(graphs::identity());
  const DivergenceFormB B = make_divergence_B(linear_flux(1.0));
  const NoiseModel noise = make_noise(m, 0, 0.0, 1.0, MultKind::Additive);
  const PathResult p = simulate_path(cfg, A, B, noise, 0);
  const double decay = std::exp(-eigenvalue_R(m, 1) * T);
  GridFunction diff = p.u.back();
  for (int i = 0; i < m.n; ++i) {
    diff.val[i] -= decay * std::sin(M_PI * (i + 1) * m.h);
  }
  return norm_H(diff);
}

}  // namespace dnsde
