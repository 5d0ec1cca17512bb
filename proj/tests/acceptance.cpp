// End-to-end acceptance harness at desk scale. Each check prints exactly one
// PASS/FAIL line; the exit code is the number of failures.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <dnsde/config.hpp>
#include <dnsde/diagnostics.hpp>
#include <dnsde/graph.hpp>
#include <dnsde/mesh.hpp>
#include <dnsde/noise.hpp>
#include <dnsde/operators.hpp>
#include <dnsde/runner.hpp>
#include <dnsde/solver.hpp>

namespace {

using namespace dnsde;

std::filesystem::path work_dir(const std::string& leaf) {
  const std::filesystem::path p =
      std::filesystem::temp_directory_path() / "dnsde-acceptance" / leaf;
  std::filesystem::create_directories(p);
  return p;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) return "<unreadable:" + p.string() + ">";
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Numeric Fenchel conjugate of the graph primitive: coarse bracket of the
// concave map x -> v*x - potential(x), then ternary refinement.
double numeric_conjugate(const ScalarGraph& g, double v) {
  const double L = 20.0;
  int best = 0;
  double sbest = v * -L - potential(g, -L);
  for (int i = 1; i <= 40; ++i) {
    const double x = -L + i;
    const double s = v * x - potential(g, x);
    if (s > sbest) {
      sbest = s;
      best = i;
    }
  }
  double lo = std::max(-L, -L + (best - 1));
  double hi = std::min(L, -L + (best + 1));
  for (int it = 0; it < 120; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    const double s1 = v * m1 - potential(g, m1);
    const double s2 = v * m2 - potential(g, m2);
    if (s1 < s2)
      lo = m1;
    else
      hi = m2;
  }
  const double xm = 0.5 * (lo + hi);
  return v * xm - potential(g, xm);
}

double interval_dist(const Interval& iv, double v) {
  return std::max({iv.lo - v, v - iv.hi, 0.0});
}

double max_step_increase(const std::vector<double>& s) {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    worst = std::max(worst, s[i + 1] - s[i]);
  return worst;
}

bool nonincreasing(const std::vector<double>& s) {
  return max_step_increase(s) <= 0.0;
}

std::string failing_checks(const RunReport& rep) {
  std::string out;
  for (const CheckResult& c : rep.checks)
    if (!c.pass)
      out += (out.empty() ? "" : ", ") + c.name + " (measured " +
             fmt(c.measured) + " vs " + fmt(c.threshold) + ")";
  return out;
}

// 1. Pointwise graph calculus: resolvent, Yosida bounds, inverse identity,
// and the conjugate of the quadratic envelope against numeric conjugation.
std::string graph_calculus_suite() {
  struct Case {
    ScalarGraph g;
    bool single_inverse;
  };
  const std::vector<Case> cases = {
      {graphs::identity(), true},
      {graphs::scaled_identity(1.7), true},
      {graphs::sign(), false},
      {graphs::stefan(), true},
      {graphs::stefan_smooth(1.0), true},
      {graphs::piecewise_linear(
           {{-1.5, -2.0, -1.2}, {0.0, -0.2, 0.6}, {1.0, 1.4, 1.4}}),
       true},
      {graphs::sum_with_identity(graphs::sign(), 0.8), true},
  };
  std::mt19937_64 rng(9001);
  std::uniform_real_distribution<double> ux(-5.0, 5.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (const Case& cs : cases) {
    const ScalarGraph& g = cs.g;
    const std::string nm = graph_name(g);
    const double emin = 1e-2;
    const double emax = 0.9 / std::max(1.0, g.c_alpha);
    for (int i = 0; i < 10000; ++i) {
      const double x = ux(rng);
      const double y = ux(rng);
      const double eps = emin * std::pow(emax / emin, u01(rng));
      const double jx = resolvent(g, eps, x);
      const double jy = resolvent(g, eps, y);
      if (std::abs(jx - jy) > std::abs(x - y) + 1e-9)
        return nm + ": resolvent expansive at x=" + fmt(x) + " y=" + fmt(y);
      const double ax = yosida(g, eps, x);
      const double ay = yosida(g, eps, y);
      if ((ax - ay) * (x - y) < 0.5 * g.c_alpha * (x - y) * (x - y) - 1e-9)
        return nm + ": Yosida monotonicity deficit at x=" + fmt(x) +
               " y=" + fmt(y);
      if (std::abs(ax - ay) > std::abs(x - y) / eps + 1e-9)
        return nm + ": Yosida Lipschitz excess at eps=" + fmt(eps);
      if (std::abs(ax) > g.C_alpha * (1.0 + 2.0 * std::abs(x)) + 1e-9)
        return nm + ": Yosida growth excess at x=" + fmt(x);
      double dual;
      if (cs.single_inverse) {
        dual = std::abs(eps * ax + gamma(g, ax) - x);
      } else {
        // Multivalued inverse: the identity holds as an inclusion through
        // the resolvent point.
        const double j = resolvent(g, eps, x);
        dual = std::max(std::abs(eps * ax + j - x),
                        interval_dist(graph_value(g, j), ax));
      }
      if (dual > 1e-9)
        return nm + ": inverse identity defect " + fmt(dual) +
               " at x=" + fmt(x) + " eps=" + fmt(eps);
      const double lhs = moreau_conjugate(g, eps, ax);
      const double rhs = numeric_conjugate(g, ax) + 0.5 * eps * ax * ax;
      if (std::abs(lhs - rhs) > 1e-8)
        return nm + ": envelope conjugate defect " + fmt(std::abs(lhs - rhs)) +
               " at v=" + fmt(ax);
    }
  }
  return "";
}

// 2. Power-iteration norm of the regularized inverse derivative stays below
// 2 / (strong monotonicity constant).
std::string regularized_inverse_bound() {
  const Mesh1D m = make_mesh(32);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> uv(-4.0, 4.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<NemytskiiA> families = {
      pointwise_A(graphs::identity()),
      pointwise_A(graphs::scaled_identity(0.5)),
      pointwise_A(graphs::scaled_identity(2.0)),
      pointwise_A(graphs::stefan_smooth(1.0)),
  };
  std::vector<double> kernel(std::size_t(m.n) * m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) {
      const double d = node_x(m, i) - node_x(m, j);
      kernel[std::size_t(i) * m.n + j] = 0.6 * std::exp(-8.0 * d * d);
    }
  families.push_back(nonlocal_A(1.0, kernel, m.n));
  for (int t = 0; t < 100; ++t) {
    const NemytskiiA& A = families[std::size_t(t) % families.size()];
    const double ca = monotonicity_constant(A);
    const double lambda = std::pow(10.0, -3.0 * u01(rng));
    const double eps = 1e-3 * std::pow(0.9 / ca / 1e-3, u01(rng));
    GridFunction u = make_grid(m);
    for (double& v : u.val) v = uv(rng);
    const double est = operator_bound_estimate(A, lambda, eps, u);
    if (!(est <= 2.0 / ca + 1e-8))
      return "estimate " + fmt(est) + " exceeds " + fmt(2.0 / ca) +
             " at lambda=" + fmt(lambda) + " eps=" + fmt(eps);
  }
  return "";
}

std::vector<double> decade_lambdas() {
  return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
}

DualGridFunction two_sine(const Mesh1D& m) {
  GridFunction y = eigenvector_R(m, 1);
  for (double& v : y.val) v *= 2.0;
  return as_dual(y);
}

// 3. Elliptic-parameter sweep of the regularized inverse, plus the linear
// closed form.
std::string elliptic_sweep() {
  const Mesh1D m = make_mesh(32);
  const NemytskiiA A = pointwise_A(graphs::stefan_smooth(1.0));
  const double eps = 0.1;
  const LambdaSeries S = convergence_lambda(A, eps, two_sine(m), decade_lambdas());
  if (!nonincreasing(S.e1)) return "e1 not nonincreasing";
  if (!nonincreasing(S.e2)) return "e2 not nonincreasing";
  if (!(S.e2.back() <= 1e-4))
    return "final e2 = " + fmt(S.e2.back()) + " exceeds 1e-4";

  const NemytskiiA Aid = pointwise_A(graphs::identity());
  const DualGridFunction y = two_sine(m);
  for (double lambda : decade_lambdas()) {
    const GridFunction x = invert_A_lambda_eps(Aid, lambda, eps, y);
    const double factor =
        2.0 / (lambda * eigenvalue_R(m, 1) + 1.0 / (1.0 + eps));
    double err = 0.0;
    for (int i = 0; i < m.n; ++i)
      err = std::max(err,
                     std::abs(x.val[i] -
                              factor * std::sin(M_PI * node_x(m, i))));
    if (err > 1e-10)
      return "linear closed form off by " + fmt(err) +
             " at lambda=" + fmt(lambda);
  }
  return "";
}

// 4. Joint sweep lambda = eps against the graph inverse.
std::string joint_sweep() {
  const Mesh1D m = make_mesh(32);
  const NemytskiiA A = pointwise_A(graphs::stefan_smooth(1.0));
  const JointSeries J = convergence_joint(A, two_sine(m), decade_lambdas());
  if (!nonincreasing(J.e_graph)) return "e_graph not nonincreasing";
  if (!(J.e_graph.back() <= 1e-4))
    return "final e_graph = " + fmt(J.e_graph.back()) + " exceeds 1e-4";
  if (!(J.e_V.back() <= 1e-3))
    return "final e_V = " + fmt(J.e_V.back()) + " exceeds 1e-3";
  return "";
}

// 5. Chain-rule residual of the default preset: RMS at T strictly decreasing
// in dt, and first-order in the noiseless sub-case.
std::string chain_rule_residual() {
  const ExperimentConfig cfg = preset_config("stefan");
  const Mesh1D m = config_mesh(cfg);
  const NemytskiiA A = build_A(cfg);
  const DivergenceFormB B = build_B(cfg);
  const NoiseModel noise = build_noise(cfg);
  SolverConfig sc = build_solver(cfg);
  const std::vector<double> dts = {4e-4, 2e-4, 1e-4};
  const int M = 32;
  std::vector<double> rms;
  for (double dt : dts) {
    sc.dt = dt;
    double sq = 0.0;
    for (int p = 0; p < M; ++p) {
      const PathResult path = simulate_path(sc, A, B, noise, std::uint64_t(p));
      const ItoReport rep =
          ito_residual(path, sc, A, B, noise, ItoVariant::Regularized);
      sq += rep.residual.back() * rep.residual.back();
    }
    rms.push_back(std::sqrt(sq / M));
  }
  if (!(rms[0] > rms[1] && rms[1] > rms[2]))
    return "stochastic RMS not strictly decreasing: " + fmt(rms[0]) + ", " +
           fmt(rms[1]) + ", " + fmt(rms[2]);

  const NoiseModel quiet = make_noise(m, 0, 0.0, 1.5, MultKind::Additive);
  std::vector<double> det;
  for (double dt : dts) {
    sc.dt = dt;
    const PathResult path = simulate_path(sc, A, B, quiet, 0);
    const ItoReport rep =
        ito_residual(path, sc, A, B, quiet, ItoVariant::Regularized);
    det.push_back(std::abs(rep.residual.back()));
  }
  if (!(det[0] >= 1.8 * det[1] && det[1] >= 1.8 * det[2]))
    return "noiseless halving ratios " + fmt(det[0] / det[1]) + ", " +
           fmt(det[1] / det[2]) + " fall below 1.8";
  return "";
}

// 6. Shared-noise ledger sweep: per-quantity max within 10x the median and
// the operator bound holds.
std::string ledger_comparability() {
  ExperimentConfig cfg = preset_config("stefan");
  cfg.out = work_dir("ledger").string();
  const RunReport rep = run_ledger_sweep(cfg);
  if (!rep.all_pass()) return failing_checks(rep);
  return "";
}

// 7. Two solutions under shared noise contract as (dt, lambda, eps) halve;
// the all-linear case closes the gap.
std::string two_path_gap() {
  ExperimentConfig cfg = preset_config("stefan");
  cfg.out = work_dir("gap-graph").string();
  const RunReport rep = run_uniqueness_check(cfg);
  if (!rep.all_pass()) return "graph case: " + failing_checks(rep);

  ExperimentConfig lin = preset_config("stefan");
  lin.graph.kind = "identity";
  lin.noise.mult = "additive";
  validate(lin);
  lin.out = work_dir("gap-linear").string();
  const RunReport rep2 = run_uniqueness_check(lin);
  if (!rep2.all_pass()) return "linear case: " + failing_checks(rep2);
  return "";
}

// 8. Linear anchor: limit scheme against the decaying sine solution.
std::string heat_anchor() {
  const double e1 = heat_oracle(128, 1e-3, 0.05);
  const double e2 = heat_oracle(128, 5e-4, 0.05);
  if (!(e1 <= 5e-3)) return "error " + fmt(e1) + " exceeds 5e-3";
  if (!(e1 >= 1.8 * e2))
    return "halving ratio " + fmt(e1 / e2) + " falls below 1.8";
  return "";
}

// 9. Deterministic runs dissipate the conjugate functional at every step.
std::string conjugate_descent() {
  struct Probe {
    Scheme scheme;
    int n;
    double lambda, eps, dt, T;
    const char* label;
  };
  const std::vector<Probe> probes = {
      {Scheme::SemiImplicitRegularized, 16, 0.05, 0.1, 4e-4, 2e-2, "semi-implicit"},
      {Scheme::ExplicitRegularized, 12, 0.3, 0.1, 2e-5, 2e-3, "explicit"},
      {Scheme::ImplicitLimit, 16, 0.05, 0.1, 1e-3, 2e-2, "implicit-limit"},
  };
  const ScalarGraph g = graphs::stefan_smooth(1.0);
  for (const Probe& pr : probes) {
    const Mesh1D m = make_mesh(pr.n);
    const NemytskiiA A = pointwise_A(g);
    const DivergenceFormB B = make_divergence_B(linear_flux(1.0));
    const NoiseModel quiet = make_noise(m, 0, 0.0, 1.5, MultKind::Additive);
    SolverConfig sc;
    sc.scheme = pr.scheme;
    sc.lambda = pr.lambda;
    sc.eps = pr.eps;
    sc.dt = pr.dt;
    sc.T = pr.T;
    sc.seed = 1;
    GridFunction v0 = eigenvector_R(m, 1);
    for (double& v : v0.val) v *= 4.0;
    sc.v0 = as_dual(v0);
    const PathResult path = simulate_path(sc, A, B, quiet, 0);
    std::vector<double> phi;
    phi.reserve(path.v.size());
    for (const DualGridFunction& v : path.v)
      phi.push_back(pr.scheme == Scheme::ImplicitLimit
                        ? conjugate_functional(A, v)
                        : conjugate_functional_regularized(A, pr.lambda,
                                                           pr.eps, v));
    const double inc = max_step_increase(phi);
    if (inc > 1e-10)
      return std::string(pr.label) + ": functional rises by " + fmt(inc);
  }
  return "";
}

// 10. Identical configuration and seed must write identical bytes no matter
// the worker thread count.
std::string thread_reproducibility() {
  ExperimentConfig cfg = preset_config("stefan");
  cfg.solver.T = 0.02;
  const char* files[] = {"simulate-summary.csv", "simulate-mean-v.csv",
                         "simulate-path0-u.csv", "simulate-path0-v.csv",
                         "simulate-ledger0.csv"};
  std::vector<std::filesystem::path> dirs;
  for (const char* threads : {"1", "2", "8"}) {
    setenv("DNSDE_THREADS", threads, 1);
    cfg.out = work_dir(std::string("threads-") + threads).string();
    run_simulate(cfg);
    dirs.push_back(cfg.out);
  }
  unsetenv("DNSDE_THREADS");
  for (const char* f : files) {
    const std::string base = read_bytes(dirs[0] / f);
    for (std::size_t d = 1; d < dirs.size(); ++d)
      if (read_bytes(dirs[d] / f) != base)
        return std::string(f) + " differs between 1 and " +
               (d == 1 ? "2" : "8") + " threads";
  }
  return "";
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<std::string()> run;
  };
  const std::vector<Criterion> criteria = {
      {"graph-calculus-suite", graph_calculus_suite},
      {"regularized-inverse-bound", regularized_inverse_bound},
      {"elliptic-sweep", elliptic_sweep},
      {"joint-sweep", joint_sweep},
      {"chain-rule-residual", chain_rule_residual},
      {"ledger-comparability", ledger_comparability},
      {"two-path-gap", two_path_gap},
      {"heat-anchor", heat_anchor},
      {"conjugate-descent", conjugate_descent},
      {"thread-reproducibility", thread_reproducibility},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    std::string err;
    try {
      err = c.run();
    } catch (const std::exception& e) {
      err = std::string("exception: ") + e.what();
    }
    if (err.empty()) {
      std::printf("PASS  %s\n", c.name);
    } else {
      std::printf("FAIL  %s :: %s\n", c.name, err.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  if (failures == 0)
    std::printf("all %zu acceptance checks passed\n", criteria.size());
  else
    std::printf("%d of %zu acceptance checks failed\n", failures,
                criteria.size());
  return failures;
}
