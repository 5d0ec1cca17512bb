#include "dnsde/operators.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "dnsde/tridiag.hpp"

namespace dnsde {

namespace {

void require_positive_eps(const NemytskiiA& A, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("eps must be positive");
  const double ca = monotonicity_constant(A);
  if (ca > 0.0 && eps * ca >= 1.0) {
    throw ValidationError("eps must be < 1/c_alpha");
  }
}

void require_kernel_mesh(const NemytskiiA& A, const Mesh1D& m) {
  if (A.mode == AMode::NonlocalKernel && A.kernel_n != m.n) {
    throw MeshMismatch("kernel size does not match the mesh");
  }
}

// Derivative of the Yosida map at x: 1 / (eps + gamma'(A^eps x)), zero where
// the inverse has a vertical tangent.
double yosida_prime(const ScalarGraph& g, double eps, double x) {
  const double gp = gamma_prime(g, yosida(g, eps, x));
  if (std::isinf(gp)) return 0.0;
  return 1.0 / (eps + gp);
}

Eigen::MatrixXd kernel_matrix(const NemytskiiA& A, const Mesh1D& m) {
  const int n = m.n;
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      M(i, j) = m.h * A.kernel[static_cast<std::size_t>(i) * n + j];
    }
    M(i, i) += A.c;
  }
  return M;
}

Eigen::MatrixXd dense_riesz(const Mesh1D& m) {
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m.n, m.n);
  const double s = 1.0 / (m.h * m.h);
  for (int i = 0; i < m.n; ++i) {
    R(i, i) = 2.0 * s;
    if (i > 0) R(i, i - 1) = -s;
    if (i + 1 < m.n) R(i, i + 1) = -s;
  }
  return R;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_eigen(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// lambda R + M (I + eps M)^{-1}, the linear regularized operator in kernel
// mode.
Eigen::MatrixXd kernel_regularized(const NemytskiiA& A, const Mesh1D& m,
                                   double lambda, double eps) {
  const Eigen::MatrixXd M = kernel_matrix(A, m);
  const Eigen::MatrixXd IeM =
      Eigen::MatrixXd::Identity(m.n, m.n) + eps * M;
  const Eigen::MatrixXd Z = IeM.llt().solve(M);
  return lambda * dense_riesz(m) + Z;
}

const ScalarGraph& graph_of(const NemytskiiA& A) { return A.graph; }

}  // namespace

NemytskiiA pointwise_A(ScalarGraph graph) {
  NemytskiiA A;
  A.graph = std::move(graph);
  A.mode = AMode::Pointwise;
  return A;
}

NemytskiiA nonlocal_A(double c, std::vector<double> kernel, int n) {
  if (c <= 0.0) throw ValidationError("kernel mode requires c > 0");
  if (n < 1 || kernel.size() != static_cast<std::size_t>(n) * n) {
    throw ValidationError("kernel must be n x n");
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double a = kernel[static_cast<std::size_t>(i) * n + j];
      const double b = kernel[static_cast<std::size_t>(j) * n + i];
      if (std::abs(a - b) > 1e-12 * (1.0 + std::abs(a))) {
        throw ValidationError("kernel must be symmetric");
      }
    }
  }
  NemytskiiA A;
  A.graph = graphs::identity();
  A.mode = AMode::NonlocalKernel;
  A.c = c;
  A.kernel = std::move(kernel);
  A.kernel_n = n;
  return A;
}

double monotonicity_constant(const NemytskiiA& A) {
  return A.mode == AMode::Pointwise ? A.graph.c_alpha : A.c;
}

Flux linear_flux(double a) {
  if (a <= 0.0) throw ValidationError("flux slope must be positive");
  return Flux{FluxKind::Linear, a, 0.0};
}

Flux linear_plus_arctan_flux(double a, double b) {
  if (a <= 0.0) throw ValidationError("flux slope must be positive");
  if (b < 0.0) throw ValidationError("arctan coefficient must be nonnegative");
  return Flux{FluxKind::LinearPlusArctan, a, b};
}

double flux_value(const Flux& q, double xi) {
  return q.kind == FluxKind::Linear ? q.a * xi : q.a * xi + q.b * std::atan(xi);
}

double flux_slope(const Flux& q, double xi) {
  return q.kind == FluxKind::Linear ? q.a : q.a + q.b / (1.0 + xi * xi);
}

double flux_slope_inf(const Flux& q) { return q.a; }

double flux_slope_sup(const Flux& q) {
  return q.kind == FluxKind::Linear ? q.a : q.a + q.b;
}

DivergenceFormB make_divergence_B(Flux flux, std::optional<ScalarGraph> beta0,
                                  std::optional<double> fractional_s) {
  if (fractional_s && (*fractional_s <= 0.0 || *fractional_s >= 1.0)) {
    throw ValidationError("fractional order must lie in (0,1)");
  }
  return DivergenceFormB{flux, std::move(beta0), fractional_s};
}

GridFunction apply_A_eps(const NemytskiiA& A, double eps,
                         const GridFunction& u) {
  require_positive_eps(A, eps);
  require_kernel_mesh(A, u.mesh);
  GridFunction out = make_grid(u.mesh);
  if (A.mode == AMode::Pointwise) {
    for (int i = 0; i < u.mesh.n; ++i) {
      out.val[i] = yosida(graph_of(A), eps, u.val[i]);
    }
    return out;
  }
  const Eigen::MatrixXd M = kernel_matrix(A, u.mesh);
  const Eigen::MatrixXd IeM =
      Eigen::MatrixXd::Identity(u.mesh.n, u.mesh.n) + eps * M;
  const Eigen::VectorXd J = IeM.llt().solve(to_eigen(u.val));
  for (int i = 0; i < u.mesh.n; ++i) {
    out.val[i] = (u.val[i] - J(i)) / eps;
  }
  return out;
}

DualGridFunction apply_A_selection(const NemytskiiA& A,
                                   const GridFunction& u) {
  require_kernel_mesh(A, u.mesh);
  DualGridFunction out = make_dual(u.mesh);
  if (A.mode == AMode::Pointwise) {
    for (int i = 0; i < u.mesh.n; ++i) {
      out.val[i] = min_section(graph_of(A), u.val[i]);
    }
    return out;
  }
  const Eigen::MatrixXd M = kernel_matrix(A, u.mesh);
  const Eigen::VectorXd r = M * to_eigen(u.val);
  out.val = from_eigen(r);
  return out;
}

GridFunction invert_A_lambda_eps(const NemytskiiA& A, double lambda,
                                 double eps, const DualGridFunction& y,
                                 const NewtonConfig& cfg) {
  if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
  require_positive_eps(A, eps);
  require_kernel_mesh(A, y.mesh);
  const Mesh1D m = y.mesh;

  if (A.mode == AMode::NonlocalKernel) {
    const Eigen::MatrixXd T = kernel_regularized(A, m, lambda, eps);
    return make_grid(m, from_eigen(T.llt().solve(to_eigen(y.val))));
  }

  const ScalarGraph& g = graph_of(A);
  GridFunction x = make_grid(m);
  std::vector<double> res(m.n);
  const auto residual_norm = [&](const std::vector<double>& xv,
                                 std::vector<double>* out) {
    const DualGridFunction rx = apply_R(make_grid(m, xv));
    double rn = 0.0;
    for (int i = 0; i < m.n; ++i) {
      const double r =
          lambda * rx.val[i] + yosida(g, eps, xv[i]) - y.val[i];
      if (out) (*out)[i] = r;
      rn += r * r;
    }
    return std::sqrt(m.h * rn);
  };

  double rn = residual_norm(x.val, &res);
  const double offdiag = -lambda / (m.h * m.h);
  for (int it = 0; it < cfg.max_iter; ++it) {
    if (rn <= cfg.tol_abs) return x;
    std::vector<double> diag(m.n), sub(m.n, offdiag), sup(m.n, offdiag);
    std::vector<double> rhs(m.n);
    for (int i = 0; i < m.n; ++i) {
      diag[i] = -2.0 * offdiag + yosida_prime(g, eps, x.val[i]);
      rhs[i] = -res[i];
    }
    const std::vector<double> dx = tridiag_solve(sub, diag, sup, rhs);

    double s = 1.0;
    bool accepted = false;
    std::vector<double> trial(m.n);
    for (int half = 0; half <= cfg.max_halvings; ++half) {
      for (int i = 0; i < m.n; ++i) trial[i] = x.val[i] + s * dx[i];
      const double tn = residual_norm(trial, &res);
      if (tn <= rn * (1.0 - 1e-4 * s)) {
        x.val = trial;
        rn = tn;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) {
      throw NonConvergence("regularized inverse: backtracking stalled");
    }
  }
  if (rn <= cfg.tol_abs) return x;
  throw NonConvergence("regularized inverse: iteration budget exhausted");
}

GridFunction d_ainv_apply(const NemytskiiA& A, const DualGridFunction& v,
                          const GridFunction& hdir) {
  if (!same_mesh(v.mesh, hdir.mesh)) {
    throw MeshMismatch("d_ainv_apply: mesh mismatch");
  }
  require_kernel_mesh(A, v.mesh);
  GridFunction out = make_grid(v.mesh);
  if (A.mode == AMode::Pointwise) {
    for (int i = 0; i < v.mesh.n; ++i) {
      out.val[i] = gamma_prime(graph_of(A), v.val[i]) * hdir.val[i];
    }
    return out;
  }
  const Eigen::MatrixXd M = kernel_matrix(A, v.mesh);
  out.val = from_eigen(M.llt().solve(to_eigen(hdir.val)));
  return out;
}

GridFunction d_alambda_inv_apply(const NemytskiiA& A, double lambda,
                                 double eps, const GridFunction& x,
                                 const GridFunction& hdir) {
  if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
  require_positive_eps(A, eps);
  if (!same_mesh(x.mesh, hdir.mesh)) {
    throw MeshMismatch("d_alambda_inv_apply: mesh mismatch");
  }
  require_kernel_mesh(A, x.mesh);
  const Mesh1D m = x.mesh;
  if (A.mode == AMode::NonlocalKernel) {
    const Eigen::MatrixXd T = kernel_regularized(A, m, lambda, eps);
    return make_grid(m, from_eigen(T.llt().solve(to_eigen(hdir.val))));
  }
  const double offdiag = -lambda / (m.h * m.h);
  std::vector<double> diag(m.n), sub(m.n, offdiag), sup(m.n, offdiag);
  for (int i = 0; i < m.n; ++i) {
    diag[i] = -2.0 * offdiag + yosida_prime(graph_of(A), eps, x.val[i]);
  }
  return make_grid(m, tridiag_solve(sub, diag, sup, hdir.val));
}

namespace {

std::vector<double> edge_gradients(const GridFunction& u) {
  const int n = u.mesh.n;
  std::vector<double> g(n + 1);
  for (int e = 0; e <= n; ++e) {
    const double left = (e == 0) ? 0.0 : u.val[e - 1];
    const double right = (e == n) ? 0.0 : u.val[e];
    g[e] = (right - left) / u.mesh.h;
  }
  return g;
}

// Divergence and fractional parts of B, without beta0.
std::vector<double> smooth_B(const DivergenceFormB& B, const GridFunction& u) {
  const int n = u.mesh.n;
  std::vector<double> out(n);
  if (B.fractional_s) {
    const DualGridFunction f = fractional_R(*B.fractional_s, u);
    out = f.val;
    return out;
  }
  const std::vector<double> g = edge_gradients(u);
  for (int i = 0; i < n; ++i) {
    out[i] = (flux_value(B.flux, g[i]) - flux_value(B.flux, g[i + 1])) / u.mesh.h;
  }
  return out;
}

// Dense spectral matrix of R^s; used only when a multivalued zero-order part
// meets the fractional mode.
Eigen::MatrixXd dense_fractional(const Mesh1D& m, double s) {
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(m.n, m.n);
  for (int k = 1; k <= m.n; ++k) {
    const GridFunction vk = eigenvector_R(m, k);
    const double w = 2.0 * m.h * std::pow(eigenvalue_R(m, k), s);
    for (int i = 0; i < m.n; ++i) {
      for (int j = 0; j < m.n; ++j) {
        F(i, j) += w * vk.val[i] * vk.val[j];
      }
    }
  }
  return F;
}

GridFunction resolvent_B_smooth(const DivergenceFormB& B, double lambda,
                                const GridFunction& u,
                                const NewtonConfig& cfg) {
  const Mesh1D m = u.mesh;

  if (B.fractional_s) {
    // linear: solve (R + lambda R^s) z = R u spectrally
    GridFunction z = make_grid(m);
    const double s = *B.fractional_s;
    for (int k = 1; k <= m.n; ++k) {
      const GridFunction vk = eigenvector_R(m, k);
      const double mu = eigenvalue_R(m, k);
      const double ck = 2.0 * inner_H(u, vk);
      const double zk = ck / (1.0 + lambda * std::pow(mu, s - 1.0));
      for (int i = 0; i < m.n; ++i) z.val[i] += zk * vk.val[i];
    }
    return z;
  }

  const DualGridFunction ru = apply_R(u);
  GridFunction z = u;
  const auto residual = [&](const GridFunction& zz, DualGridFunction* out) {
    const DualGridFunction rz = apply_R(zz);
    const std::vector<double> bz = smooth_B(B, zz);
    DualGridFunction r = make_dual(m);
    for (int i = 0; i < m.n; ++i) {
      r.val[i] = rz.val[i] + lambda * bz[i] - ru.val[i];
    }
    const double rn = norm_Vstar(r);
    if (out) *out = r;
    return rn;
  };

  DualGridFunction res = make_dual(m);
  double rn = residual(z, &res);
  for (int it = 0; it < cfg.max_iter; ++it) {
    if (rn <= cfg.tol_abs) return z;
    const std::vector<double> g = edge_gradients(z);
    std::vector<double> diag(m.n), sub(m.n), sup(m.n), rhs(m.n);
    const double s2 = 1.0 / (m.h * m.h);
    for (int i = 0; i < m.n; ++i) {
      const double wl = 1.0 + lambda * flux_slope(B.flux, g[i]);
      const double wr = 1.0 + lambda * flux_slope(B.flux, g[i + 1]);
      diag[i] = (wl + wr) * s2;
      sub[i] = -(1.0 + lambda * flux_slope(B.flux, g[i])) * s2;
      sup[i] = -(1.0 + lambda * flux_slope(B.flux, g[i + 1])) * s2;
      rhs[i] = -res.val[i];
    }
    const std::vector<double> dz = tridiag_solve(sub, diag, sup, rhs);

    double step = 1.0;
    bool accepted = false;
    GridFunction trial = make_grid(m);
    for (int half = 0; half <= cfg.max_halvings; ++half) {
      for (int i = 0; i < m.n; ++i) trial.val[i] = z.val[i] + step * dz[i];
      const double tn = residual(trial, &res);
      if (tn <= rn * (1.0 - 1e-4 * step)) {
        z = trial;
        rn = tn;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) throw NonConvergence("resolvent_B: backtracking stalled");
  }
  if (rn <= cfg.tol_abs) return z;
  throw NonConvergence("resolvent_B: iteration budget exhausted");
}

// Semismooth reformulation for a (possibly multivalued) zero-order graph:
// roots of Psi(z) = z - J(z - theta*(Rz + lambda*(div part) - Ru)) with J the
// beta0 resolvent at step theta*lambda solve the full inclusion exactly.
GridFunction resolvent_B_graph(const DivergenceFormB& B, double lambda,
                               const GridFunction& u, const NewtonConfig& cfg) {
  const Mesh1D m = u.mesh;
  const ScalarGraph& b0 = *B.beta0;
  const double theta = 0.25 * m.h * m.h;
  const double mu = theta * lambda;
  const DualGridFunction ru = apply_R(u);

  const bool frac = B.fractional_s.has_value();
  Eigen::MatrixXd Fs;
  if (frac) Fs = dense_fractional(m, *B.fractional_s);

  const auto psi = [&](const GridFunction& z, std::vector<double>* w_out,
                       std::vector<double>* psi_out) {
    const DualGridFunction rz = apply_R(z);
    const std::vector<double> bz = smooth_B(B, z);
    double nrm = 0.0;
    for (int i = 0; i < m.n; ++i) {
      const double w =
          z.val[i] - theta * (rz.val[i] + lambda * bz[i] - ru.val[i]);
      const double p = z.val[i] - resolvent(b0, mu, w);
      if (w_out) (*w_out)[i] = w;
      if (psi_out) (*psi_out)[i] = p;
      nrm += p * p;
    }
    return std::sqrt(m.h * nrm);
  };

  // Inclusion defect in V*: distance of the implied zero-order selection to
  // the graph, the quantity the resolvent promises to drive below tol_abs.
  const auto defect = [&](const GridFunction& z) {
    const DualGridFunction rz = apply_R(z);
    const std::vector<double> bz = smooth_B(B, z);
    DualGridFunction r = make_dual(m);
    for (int i = 0; i < m.n; ++i) {
      const double xi =
          (ru.val[i] - rz.val[i] - lambda * bz[i]) / lambda;
      const Interval iv = graph_value(b0, z.val[i]);
      const double proj = std::clamp(xi, iv.lo, iv.hi);
      r.val[i] = lambda * (proj - xi);
    }
    return norm_Vstar(r);
  };

  GridFunction z = u;
  std::vector<double> w(m.n), p(m.n);
  double rn = psi(z, &w, &p);
  for (int it = 0; it < cfg.max_iter; ++it) {
    if (defect(z) <= cfg.tol_abs) return z;

    // resolvent slopes by forward difference; the resolvent is nonexpansive
    // and piecewise smooth, so the quotient lands in [0,1]
    std::vector<double> d(m.n);
    for (int i = 0; i < m.n; ++i) {
      const double ji = resolvent(b0, mu, w[i]);
      const double delta = 1e-7 * (1.0 + std::abs(w[i]));
      const double slope = (resolvent(b0, mu, w[i] + delta) - ji) / delta;
      d[i] = std::clamp(slope, 0.0, 1.0);
    }

    const double s2 = 1.0 / (m.h * m.h);
    if (!frac) {
      const std::vector<double> g = edge_gradients(z);
      std::vector<double> diag(m.n), sub(m.n), sup(m.n), rhs(m.n);
      for (int i = 0; i < m.n; ++i) {
        const double wl = 1.0 + lambda * flux_slope(B.flux, g[i]);
        const double wr = 1.0 + lambda * flux_slope(B.flux, g[i + 1]);
        diag[i] = (1.0 - d[i]) + d[i] * theta * (wl + wr) * s2;
        sub[i] = -d[i] * theta * wl * s2;
        sup[i] = -d[i] * theta * wr * s2;
        rhs[i] = -p[i];
      }
      const std::vector<double> dz = tridiag_solve(sub, diag, sup, rhs);
      double step = 1.0;
      bool accepted = false;
      GridFunction trial = make_grid(m);
      for (int half = 0; half <= cfg.max_halvings; ++half) {
        for (int i = 0; i < m.n; ++i) trial.val[i] = z.val[i] + step * dz[i];
        const double tn = psi(trial, &w, &p);
        if (tn <= rn * (1.0 - 1e-4 * step)) {
          z = trial;
          rn = tn;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        if (defect(z) <= cfg.tol_abs) return z;
        throw NonConvergence("resolvent_B: backtracking stalled");
      }
    } else {
      Eigen::MatrixXd Jm = lambda * Fs + dense_riesz(m);
      for (int i = 0; i < m.n; ++i) {
        for (int j = 0; j < m.n; ++j) {
          Jm(i, j) = d[i] * theta * Jm(i, j) + ((i == j) ? (1.0 - d[i]) : 0.0);
        }
      }
      Eigen::VectorXd rhs(m.n);
      for (int i = 0; i < m.n; ++i) rhs(i) = -p[i];
      const Eigen::VectorXd dz = Jm.partialPivLu().solve(rhs);
      double step = 1.0;
      bool accepted = false;
      GridFunction trial = make_grid(m);
      for (int half = 0; half <= cfg.max_halvings; ++half) {
        for (int i = 0; i < m.n; ++i) trial.val[i] = z.val[i] + step * dz(i);
        const double tn = psi(trial, &w, &p);
        if (tn <= rn * (1.0 - 1e-4 * step)) {
          z = trial;
          rn = tn;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        if (defect(z) <= cfg.tol_abs) return z;
        throw NonConvergence("resolvent_B: backtracking stalled");
      }
    }
  }
  if (defect(z) <= cfg.tol_abs) return z;
  throw NonConvergence("resolvent_B: iteration budget exhausted");
}

}  // namespace

DualGridFunction apply_B(const DivergenceFormB& B, const GridFunction& u) {
  DualGridFunction out = make_dual(u.mesh);
  out.val = smooth_B(B, u);
  if (B.beta0) {
    for (int i = 0; i < u.mesh.n; ++i) {
      out.val[i] += min_section(*B.beta0, u.val[i]);
    }
  }
  return out;
}

GridFunction resolvent_B(const DivergenceFormB& B, double lambda,
                         const GridFunction& u, const NewtonConfig& cfg) {
  if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
  return B.beta0 ? resolvent_B_graph(B, lambda, u, cfg)
                 : resolvent_B_smooth(B, lambda, u, cfg);
}

DualGridFunction yosida_B(const DivergenceFormB& B, double lambda,
                          const GridFunction& u, const NewtonConfig& cfg) {
  const GridFunction z = resolvent_B(B, lambda, u, cfg);
  GridFunction diff = make_grid(u.mesh);
  for (int i = 0; i < u.mesh.n; ++i) diff.val[i] = u.val[i] - z.val[i];
  DualGridFunction out = apply_R(diff);
  for (auto& v : out.val) v /= lambda;
  return out;
}

double trace_limit(const NemytskiiA& A, const DualGridFunction& v,
                   const std::vector<GridFunction>& G_columns) {
  require_kernel_mesh(A, v.mesh);
  double tr = 0.0;
  if (A.mode == AMode::Pointwise) {
    for (const auto& g : G_columns) {
      for (int i = 0; i < v.mesh.n; ++i) {
        tr += v.mesh.h * gamma_prime(graph_of(A), v.val[i]) * g.val[i] *
              g.val[i];
      }
    }
    return tr;
  }
  const Eigen::LLT<Eigen::MatrixXd> llt = kernel_matrix(A, v.mesh).llt();
  for (const auto& g : G_columns) {
    const Eigen::VectorXd s = llt.solve(to_eigen(g.val));
    for (int i = 0; i < v.mesh.n; ++i) tr += v.mesh.h * s(i) * g.val[i];
  }
  return tr;
}

double trace_regularized(const NemytskiiA& A, double lambda, double eps,
                         const GridFunction& x,
                         const std::vector<GridFunction>& G_columns) {
  if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
  require_positive_eps(A, eps);
  require_kernel_mesh(A, x.mesh);
  const Mesh1D m = x.mesh;
  double tr = 0.0;
  if (A.mode == AMode::Pointwise) {
    const double offdiag = -lambda / (m.h * m.h);
    std::vector<double> diag(m.n), sub(m.n, offdiag), sup(m.n, offdiag);
    for (int i = 0; i < m.n; ++i) {
      diag[i] =
          -2.0 * offdiag + yosida_prime(graph_of(A), eps, x.val[i]);
    }
    for (const auto& g : G_columns) {
      const std::vector<double> s = tridiag_solve(sub, diag, sup, g.val);
      for (int i = 0; i < m.n; ++i) tr += m.h * s[i] * g.val[i];
    }
    return tr;
  }
  const Eigen::LLT<Eigen::MatrixXd> llt =
      kernel_regularized(A, m, lambda, eps).llt();
  for (const auto& g : G_columns) {
    const Eigen::VectorXd s = llt.solve(to_eigen(g.val));
    for (int i = 0; i < m.n; ++i) tr += m.h * s(i) * g.val[i];
  }
  return tr;
}

double operator_bound_estimate(const NemytskiiA& A, double lambda, double eps,
                               const GridFunction& x, int iters) {
  if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
  require_positive_eps(A, eps);
  require_kernel_mesh(A, x.mesh);
  const Mesh1D m = x.mesh;

  std::vector<double> diag, sub, sup;
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (A.mode == AMode::Pointwise) {
    const double offdiag = -lambda / (m.h * m.h);
    diag.resize(m.n);
    sub.assign(m.n, offdiag);
    sup.assign(m.n, offdiag);
    for (int i = 0; i < m.n; ++i) {
      diag[i] =
          -2.0 * offdiag + yosida_prime(graph_of(A), eps, x.val[i]);
    }
  } else {
    llt = kernel_regularized(A, m, lambda, eps).llt();
  }
  const auto apply_inv = [&](const std::vector<double>& v) {
    if (A.mode == AMode::Pointwise) return tridiag_solve(sub, diag, sup, v);
    return from_eigen(llt.solve(to_eigen(v)));
  };

  GridFunction w = make_grid(m);
  for (int i = 0; i < m.n; ++i) w.val[i] = 1.0 + 0.01 * std::sin(i + 1.0);
  double est = 0.0;
  for (int it = 0; it < iters; ++it) {
    const GridFunction sw = make_grid(m, apply_inv(w.val));
    const double rayleigh = inner_H(sw, w) / inner_H(w, w);
    const double nn = norm_H(sw);
    if (nn == 0.0) return 0.0;
    for (int i = 0; i < m.n; ++i) w.val[i] = sw.val[i] / nn;
    if (it > 4 && std::abs(rayleigh - est) <= 1e-13 * std::abs(rayleigh)) {
      return rayleigh;
    }
    est = rayleigh;
  }
  return est;
}

}  // namespace dnsde
