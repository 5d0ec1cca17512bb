#include <dnsde/solver.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <stdexcept>
#include <thread>
#include <utility>

#include <Eigen/Dense>

#include <dnsde/errors.hpp>
#include <dnsde/graph.hpp>
#include <dnsde/tridiag.hpp>

namespace dnsde {

namespace {

constexpr int kMaxSteps = 200000;
constexpr double kFixedPointTol = 1e-10;
constexpr int kFixedPointMaxIter = 100;

double vec_norm_H(const Mesh1D& m, const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(m.h * acc);
}

GridFunction drift_value(const DriftF& f, const GridFunction& u) {
  GridFunction out = make_grid(u.mesh);
  for (int i = 0; i < u.mesh.n; ++i) out.val[i] = f.a * u.val[i];
  if (f.b) {
    if (!same_mesh(f.b->mesh, u.mesh))
      throw MeshMismatch("drift offset lives on a different mesh");
    for (int i = 0; i < u.mesh.n; ++i) out.val[i] += f.b->val[i];
  }
  return out;
}

// Forward-difference gradients on the n+1 edges, zero boundary values.
std::vector<double> edge_grads(const GridFunction& u) {
  const int n = u.mesh.n;
  std::vector<double> g(n + 1);
  g[0] = u.val[0] / u.mesh.h;
  for (int i = 1; i < n; ++i) g[i] = (u.val[i] - u.val[i - 1]) / u.mesh.h;
  g[n] = -u.val[n - 1] / u.mesh.h;
  return g;
}

struct BBands {
  std::vector<double> sub, diag, sup;
};

// Tridiagonal derivative of the non-fractional part of B at u: flux slopes
// at the edge gradients plus the forward-difference slope of beta0.
BBands b_bands(const DivergenceFormB& B, const GridFunction& u) {
  const int n = u.mesh.n;
  const double h2 = u.mesh.h * u.mesh.h;
  BBands b{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
           std::vector<double>(n, 0.0)};
  if (!B.fractional_s) {
    const std::vector<double> g = edge_grads(u);
    for (int i = 0; i < n; ++i) {
      const double ql = flux_slope(B.flux, g[i]);
      const double qr = flux_slope(B.flux, g[i + 1]);
      b.diag[i] = (ql + qr) / h2;
      if (i > 0) b.sub[i] = -ql / h2;
      if (i + 1 < n) b.sup[i] = -qr / h2;
    }
  }
  if (B.beta0) {
    for (int i = 0; i < n; ++i) {
      const double delta = 1e-7 * (1.0 + std::abs(u.val[i]));
      const double slope =
          (min_section(*B.beta0, u.val[i] + delta) - min_section(*B.beta0, u.val[i])) / delta;
      b.diag[i] += std::clamp(slope, 0.0, 1.0 / delta);
    }
  }
  return b;
}

Eigen::MatrixXd dense_fractional_matrix(const Mesh1D& m, double s) {
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(m.n, m.n);
  for (int k = 1; k <= m.n; ++k) {
    const GridFunction vk = eigenvector_R(m, k);
    const double w = std::pow(eigenvalue_R(m, k), s) * 2.0 * m.h;
    for (int i = 0; i < m.n; ++i)
      for (int j = 0; j < m.n; ++j) F(i, j) += w * vk.val[i] * vk.val[j];
  }
  return F;
}

Eigen::MatrixXd kernel_matrix(const NemytskiiA& A, const Mesh1D& m) {
  Eigen::MatrixXd M(m.n, m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j)
      M(i, j) = m.h * A.kernel[i * m.n + j] + (i == j ? A.c : 0.0);
  return M;
}

// Solves the inclusion alpha(u) + dt B(u) - rhs in 0 nodewise by semismooth
// Newton on u - J_alpha(u + rhs - dt B(u)). Convergence accepts either the
// inclusion defect or that fixed-point residual: near a vertical tangent of
// alpha the defect has a floor of alpha' times one ulp of u, while the
// residual lives in u-space and stays drivable.
GridFunction implicit_pointwise(const ScalarGraph& g, const DivergenceFormB& B,
                                double dt, const Mesh1D& m,
                                const std::vector<double>& rhs,
                                const GridFunction& start, const NewtonConfig& nc) {
  const double theta = 1.0;
  const bool dense = B.fractional_s.has_value();
  Eigen::MatrixXd Fs;
  if (dense) Fs = dense_fractional_matrix(m, *B.fractional_s);

  GridFunction u = start;
  const auto b_values = [&](const GridFunction& z) { return apply_B(B, z).val; };
  const auto defect_norm = [&](const GridFunction& z, const std::vector<double>& bz) {
    double acc = 0.0;
    for (int i = 0; i < m.n; ++i) {
      const double xi = rhs[i] - dt * bz[i];
      const Interval iv = graph_value(g, z.val[i]);
      const double d = xi < iv.lo ? iv.lo - xi : (xi > iv.hi ? xi - iv.hi : 0.0);
      acc += d * d;
    }
    return std::sqrt(m.h * acc);
  };
  const auto phi = [&](const GridFunction& z, const std::vector<double>& bz) {
    std::vector<double> p(m.n);
    for (int i = 0; i < m.n; ++i) {
      const double arg = z.val[i] + theta * (rhs[i] - dt * bz[i]);
      p[i] = z.val[i] - resolvent(g, theta, arg);
    }
    return p;
  };

  for (int iter = 0; iter < nc.max_iter; ++iter) {
    const std::vector<double> bz = b_values(u);
    if (defect_norm(u, bz) <= nc.tol_abs) return u;
    const std::vector<double> p = phi(u, bz);
    const double pn = vec_norm_H(m, p);
    if (pn <= nc.tol_abs) return u;

    // Resolvent slopes by forward difference; nonexpansive, so in [0,1].
    std::vector<double> d(m.n);
    for (int i = 0; i < m.n; ++i) {
      const double arg = u.val[i] + theta * (rhs[i] - dt * bz[i]);
      const double delta = 1e-7 * (1.0 + std::abs(arg));
      const double slope = (resolvent(g, theta, arg + delta) - resolvent(g, theta, arg)) / delta;
      d[i] = std::clamp(slope, 0.0, 1.0);
    }
    const BBands bands = b_bands(B, u);

    std::vector<double> step(m.n);
    if (!dense) {
      std::vector<double> sub(m.n), diag(m.n), sup(m.n), neg(m.n);
      for (int i = 0; i < m.n; ++i) {
        diag[i] = (1.0 - d[i]) + d[i] * theta * dt * bands.diag[i];
        sub[i] = d[i] * theta * dt * bands.sub[i];
        sup[i] = d[i] * theta * dt * bands.sup[i];
        neg[i] = -p[i];
      }
      step = tridiag_solve(sub, diag, sup, neg);
    } else {
      Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m.n, m.n);
      for (int i = 0; i < m.n; ++i) {
        for (int j = 0; j < m.n; ++j) J(i, j) = d[i] * theta * dt * Fs(i, j);
        J(i, i) += (1.0 - d[i]) + d[i] * theta * dt * bands.diag[i];
      }
      Eigen::VectorXd pv(m.n);
      for (int i = 0; i < m.n; ++i) pv(i) = -p[i];
      const Eigen::VectorXd sv = J.partialPivLu().solve(pv);
      for (int i = 0; i < m.n; ++i) step[i] = sv(i);
    }

    bool accepted = false;
    double t = 1.0;
    for (int halve = 0; halve <= nc.max_halvings; ++halve) {
      GridFunction utry = u;
      for (int i = 0; i < m.n; ++i) utry.val[i] = u.val[i] + t * step[i];
      const std::vector<double> btry = b_values(utry);
      if (vec_norm_H(m, phi(utry, btry)) <= (1.0 - 1e-4 * t) * pn) {
        u = std::move(utry);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      const std::vector<double> bz = b_values(u);
      if (defect_norm(u, bz) <= nc.tol_abs ||
          vec_norm_H(m, phi(u, bz)) <= nc.tol_abs)
        return u;
      throw NonConvergence("limit step stalled in line search");
    }
  }
  const std::vector<double> bz = b_values(u);
  if (defect_norm(u, bz) <= nc.tol_abs ||
      vec_norm_H(m, phi(u, bz)) <= nc.tol_abs)
    return u;
  throw NonConvergence("limit step iteration budget exhausted");
}

// Kernel-mode limit step: M u + dt B(u) = rhs by damped dense Newton.
GridFunction implicit_kernel(const NemytskiiA& A, const DivergenceFormB& B,
                             double dt, const Mesh1D& m,
                             const std::vector<double>& rhs,
                             const GridFunction& start, const NewtonConfig& nc) {
  const Eigen::MatrixXd M = kernel_matrix(A, m);
  Eigen::MatrixXd Fs;
  if (B.fractional_s) Fs = dense_fractional_matrix(m, *B.fractional_s);

  GridFunction u = start;
  const auto residual = [&](const GridFunction& z) {
    const std::vector<double> bz = apply_B(B, z).val;
    std::vector<double> r(m.n);
    for (int i = 0; i < m.n; ++i) {
      double mz = 0.0;
      for (int j = 0; j < m.n; ++j) mz += M(i, j) * z.val[j];
      r[i] = mz + dt * bz[i] - rhs[i];
    }
    return r;
  };

  for (int iter = 0; iter < nc.max_iter; ++iter) {
    const std::vector<double> r = residual(u);
    const double rn = vec_norm_H(m, r);
    if (rn <= nc.tol_abs) return u;

    Eigen::MatrixXd J = M;
    const BBands bands = b_bands(B, u);
    for (int i = 0; i < m.n; ++i) {
      J(i, i) += dt * bands.diag[i];
      if (i > 0) J(i, i - 1) += dt * bands.sub[i];
      if (i + 1 < m.n) J(i, i + 1) += dt * bands.sup[i];
      if (B.fractional_s)
        for (int j = 0; j < m.n; ++j) J(i, j) += dt * Fs(i, j);
    }
    Eigen::VectorXd rv(m.n);
    for (int i = 0; i < m.n; ++i) rv(i) = -r[i];
    const Eigen::VectorXd sv = J.partialPivLu().solve(rv);

    bool accepted = false;
    double t = 1.0;
    for (int halve = 0; halve <= nc.max_halvings; ++halve) {
      GridFunction utry = u;
      for (int i = 0; i < m.n; ++i) utry.val[i] = u.val[i] + t * sv(i);
      if (vec_norm_H(m, residual(utry)) <= (1.0 - 1e-4 * t) * rn) {
        u = std::move(utry);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) throw NonConvergence("kernel limit step stalled in line search");
  }
  if (vec_norm_H(m, residual(u)) <= nc.tol_abs) return u;
  throw NonConvergence("kernel limit step iteration budget exhausted");
}

// Primal state from a dual state for the limit scheme: nodewise inverse of
// the graph, or one symmetric solve in kernel mode.
GridFunction primal_of(const NemytskiiA& A, const DualGridFunction& v) {
  GridFunction u = make_grid(v.mesh);
  if (A.mode == AMode::Pointwise) {
    for (int i = 0; i < v.mesh.n; ++i) u.val[i] = gamma(A.graph, v.val[i]);
    return u;
  }
  const Eigen::MatrixXd M = kernel_matrix(A, v.mesh);
  Eigen::VectorXd b(v.mesh.n);
  for (int i = 0; i < v.mesh.n; ++i) b(i) = v.val[i];
  const Eigen::VectorXd x = M.llt().solve(b);
  for (int i = 0; i < v.mesh.n; ++i) u.val[i] = x(i);
  return u;
}

int thread_cap() {
  if (const char* env = std::getenv("DNSDE_THREADS")) {
    const long k = std::strtol(env, nullptr, 10);
    if (k >= 1) return int(std::min(k, 256L));
    return 1;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

PathResult run_path(const SolverConfig& cfg, const NemytskiiA& A,
                    const DivergenceFormB& B, const NoiseModel& noise,
                    const std::function<std::vector<double>(int)>& draw) {
  validate_config(cfg, A);
  const int steps = step_count(cfg.dt, cfg.T);
  const Mesh1D m = cfg.v0.mesh;

  PathResult out;
  out.scheme = cfg.scheme;
  out.times.reserve(steps + 1);
  out.v.reserve(steps + 1);
  out.u.reserve(steps + 1);
  out.w.reserve(steps + 1);
  out.noise.reserve(steps);

  const bool limit = cfg.scheme == Scheme::ImplicitLimit;
  DualGridFunction v = limit ? cfg.v0 : initial_data(cfg.eps, cfg.v0);
  GridFunction u = limit ? primal_of(A, v)
                         : invert_A_lambda_eps(A, cfg.lambda, cfg.eps, v, cfg.newton);
  DualGridFunction w = limit ? apply_A_selection(A, u)  // placeholder, fixed below
                             : yosida_B(B, cfg.lambda, u, cfg.newton);
  if (limit) w = apply_B(B, u);

  out.times.push_back(0.0);
  out.v.push_back(v);
  out.u.push_back(u);
  out.w.push_back(w);

  for (int n = 0; n < steps; ++n) {
    const double tn = n * cfg.dt;
    const std::vector<double> xi = draw(n);
    const GridFunction g = apply_G(noise, tn, u, xi);
    const GridFunction f = drift_value(cfg.drift, u);

    DualGridFunction v_next = make_dual(m);
    switch (cfg.scheme) {
      case Scheme::ExplicitRegularized: {
        for (int i = 0; i < m.n; ++i)
          v_next.val[i] = v.val[i] + cfg.dt * (f.val[i] - w.val[i]) + g.val[i];
        u = invert_A_lambda_eps(A, cfg.lambda, cfg.eps, v_next, cfg.newton);
        w = yosida_B(B, cfg.lambda, u, cfg.newton);
        break;
      }
      case Scheme::SemiImplicitRegularized: {
        DualGridFunction rhs = make_dual(m);
        for (int i = 0; i < m.n; ++i)
          rhs.val[i] = v.val[i] + cfg.dt * f.val[i] + g.val[i];
        DualGridFunction vi = v;
        bool converged = false;
        for (int it = 0; it < kFixedPointMaxIter; ++it) {
          const GridFunction ui =
              invert_A_lambda_eps(A, cfg.lambda, cfg.eps, vi, cfg.newton);
          const DualGridFunction wi = yosida_B(B, cfg.lambda, ui, cfg.newton);
          double delta_sq = 0.0;
          for (int i = 0; i < m.n; ++i) {
            const double next = rhs.val[i] - cfg.dt * wi.val[i];
            const double d = next - vi.val[i];
            delta_sq += d * d;
            vi.val[i] = next;
          }
          if (std::sqrt(m.h * delta_sq) < kFixedPointTol) {
            converged = true;
            break;
          }
        }
        if (!converged)
          throw NonConvergence(
              "semi-implicit fixed point did not contract; reduce dt or increase lambda");
        v_next = vi;
        u = invert_A_lambda_eps(A, cfg.lambda, cfg.eps, v_next, cfg.newton);
        for (int i = 0; i < m.n; ++i)
          w.val[i] = (rhs.val[i] - v_next.val[i]) / cfg.dt;
        break;
      }
      case Scheme::ImplicitLimit: {
        std::vector<double> rhs(m.n);
        for (int i = 0; i < m.n; ++i)
          rhs[i] = v.val[i] + cfg.dt * f.val[i] + g.val[i];
        u = (A.mode == AMode::Pointwise)
                ? implicit_pointwise(A.graph, B, cfg.dt, m, rhs, u, cfg.newton)
                : implicit_kernel(A, B, cfg.dt, m, rhs, u, cfg.newton);
        w = apply_B(B, u);
        for (int i = 0; i < m.n; ++i) v_next.val[i] = rhs[i] - cfg.dt * w.val[i];
        break;
      }
    }

    v = v_next;
    out.times.push_back((n + 1) * cfg.dt);
    out.v.push_back(v);
    out.u.push_back(u);
    out.w.push_back(w);
    out.noise.push_back(xi);
  }
  return out;
}

struct PathRecord {
  std::vector<std::vector<double>> v_vals;
  std::vector<double> u_H, v_H;
  double sup_u = 0.0;
  double l2V = 0.0;
};

PathRecord record_of(const SolverConfig& cfg, const PathResult& p) {
  PathRecord r;
  const size_t T = p.times.size();
  r.v_vals.reserve(T);
  r.u_H.reserve(T);
  r.v_H.reserve(T);
  double l2 = 0.0;
  for (size_t t = 0; t < T; ++t) {
    r.v_vals.push_back(p.v[t].val);
    const double un = norm_H(p.u[t]);
    r.u_H.push_back(un);
    r.v_H.push_back(norm_H(p.v[t]));
    r.sup_u = std::max(r.sup_u, un);
    if (t + 1 < T) l2 += cfg.dt * norm_V(p.u[t]) * norm_V(p.u[t]);
  }
  r.l2V = std::sqrt(l2);
  return r;
}

}  // namespace

int step_count(double dt, double T) {
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (T < 0.0) throw ValidationError("horizon must be nonnegative");
  const double q = T / dt;
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-9 * std::max(1.0, q))
    throw ValidationError("dt must divide the horizon T");
  if (r > double(kMaxSteps)) throw ValidationError("step count exceeds the trajectory cap");
  return int(r);
}

double regularized_flow_lipschitz(double lambda) { return 2.0 / (lambda * lambda); }

void validate_config(const SolverConfig& cfg, const NemytskiiA& A) {
  if (!(cfg.lambda > 0.0)) throw ValidationError("lambda must be positive");
  if (!(cfg.eps > 0.0)) throw ValidationError("eps must be positive");
  if (cfg.eps * monotonicity_constant(A) >= 1.0)
    throw ValidationError("eps must stay below 1/c_alpha");
  (void)step_count(cfg.dt, cfg.T);
  if (cfg.drift.b && !same_mesh(cfg.drift.b->mesh, cfg.v0.mesh))
    throw MeshMismatch("drift offset lives on a different mesh");
  if (cfg.scheme == Scheme::ExplicitRegularized &&
      cfg.dt * regularized_flow_lipschitz(cfg.lambda) > 0.5 * (1.0 + 1e-12))
    throw ValidationError("explicit scheme requires dt * 2/lambda^2 <= 1/2");
}

DualGridFunction initial_data(double eps, const DualGridFunction& v0_raw) {
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  const Mesh1D m = v0_raw.mesh;
  const double h2 = m.h * m.h;
  std::vector<double> sub(m.n, -eps / h2), diag(m.n, 1.0 + 2.0 * eps / h2),
      sup(m.n, -eps / h2);
  return make_dual(m, tridiag_solve(sub, diag, sup, v0_raw.val));
}

PathResult simulate_path(const SolverConfig& cfg, const NemytskiiA& A,
                         const DivergenceFormB& B, const NoiseModel& noise,
                         std::uint64_t path_index) {
  RngStream rng{cfg.seed, path_index, 0};
  return run_path(cfg, A, B, noise, [&](int) {
    return sample_increment(rng, cfg.dt, noise.K);
  });
}

PathResult simulate_path_with_noise(const SolverConfig& cfg, const NemytskiiA& A,
                                    const DivergenceFormB& B,
                                    const NoiseModel& noise,
                                    const std::vector<std::vector<double>>& increments) {
  const int steps = step_count(cfg.dt, cfg.T);
  if (int(increments.size()) != steps)
    throw IncompatibleSteps("increment record does not match the step count");
  for (const auto& row : increments)
    if (int(row.size()) != noise.K)
      throw DimensionMismatch("increment row does not match the mode count");
  return run_path(cfg, A, B, noise, [&](int n) { return increments[n]; });
}

McSummary monte_carlo(const SolverConfig& cfg, const NemytskiiA& A,
                      const DivergenceFormB& B, const NoiseModel& noise, int M) {
  if (M < 1) throw std::invalid_argument("path count must be at least 1");
  validate_config(cfg, A);
  const int steps = step_count(cfg.dt, cfg.T);
  const Mesh1D m = cfg.v0.mesh;
  const int T = steps + 1;

  McSummary s;
  s.paths = M;
  s.times.resize(T);
  for (int t = 0; t < T; ++t) s.times[t] = t * cfg.dt;
  std::vector<std::vector<double>> v_sum(T, std::vector<double>(m.n, 0.0));
  std::vector<double> su(T, 0.0), suu(T, 0.0), sv(T, 0.0), svv(T, 0.0);
  double ssup = 0.0, ssup2 = 0.0, sl2 = 0.0, sl22 = 0.0;

  // Paths run in blocks of at most thread_cap() workers; the fold below
  // always consumes records in path order, so the result is independent of
  // the block width.
  const int cap = std::max(1, std::min(thread_cap(), M));
  for (int base = 0; base < M; base += cap) {
    const int cnt = std::min(cap, M - base);
    std::vector<PathRecord> records(cnt);
    std::vector<std::exception_ptr> errors(cnt);
    if (cnt == 1) {
      try {
        records[0] = record_of(cfg, simulate_path(cfg, A, B, noise, base));
      } catch (...) {
        errors[0] = std::current_exception();
      }
    } else {
      std::vector<std::thread> pool;
      pool.reserve(cnt);
      for (int j = 0; j < cnt; ++j) {
        pool.emplace_back([&, j] {
          try {
            records[j] = record_of(cfg, simulate_path(cfg, A, B, noise, base + j));
          } catch (...) {
            errors[j] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
    }
    for (int j = 0; j < cnt; ++j) {
      if (errors[j]) std::rethrow_exception(errors[j]);
      const PathRecord& r = records[j];
      for (int t = 0; t < T; ++t) {
        for (int i = 0; i < m.n; ++i) v_sum[t][i] += r.v_vals[t][i];
        su[t] += r.u_H[t];
        suu[t] += r.u_H[t] * r.u_H[t];
        sv[t] += r.v_H[t];
        svv[t] += r.v_H[t] * r.v_H[t];
      }
      ssup += r.sup_u;
      ssup2 += r.sup_u * r.sup_u;
      sl2 += r.l2V;
      sl22 += r.l2V * r.l2V;
    }
  }

  const auto variance = [M](double sum, double sumsq) {
    if (M < 2) return 0.0;
    return std::max(0.0, (sumsq - sum * sum / M) / (M - 1));
  };
  s.mean_v.reserve(T);
  s.mean_u_H.resize(T);
  s.var_u_H.resize(T);
  s.mean_v_H.resize(T);
  s.var_v_H.resize(T);
  for (int t = 0; t < T; ++t) {
    DualGridFunction mv = make_dual(m);
    for (int i = 0; i < m.n; ++i) mv.val[i] = v_sum[t][i] / M;
    s.mean_v.push_back(std::move(mv));
    s.mean_u_H[t] = su[t] / M;
    s.var_u_H[t] = variance(su[t], suu[t]);
    s.mean_v_H[t] = sv[t] / M;
    s.var_v_H[t] = variance(sv[t], svv[t]);
  }
  s.mean_sup_u_H = ssup / M;
  s.var_sup_u_H = variance(ssup, ssup2);
  s.mean_l2V_u = sl2 / M;
  s.var_l2V_u = variance(sl2, sl22);
  return s;
}

}  // namespace dnsde
