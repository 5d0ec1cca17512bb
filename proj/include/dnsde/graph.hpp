#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dnsde/errors.hpp"

namespace dnsde {

// Maximal monotone graphs on R, given by kind plus parameters. Conventions
// used throughout: multivalued points evaluate to closed intervals,
// selections are minimal-norm, one-sided derivatives are taken from the
// right at kinks.
enum class GraphKind {
  Identity,         // alpha(r) = r
  ScaledIdentity,   // alpha(r) = c * r
  Sign,             // alpha(0) = [-1,1], else sign(r)
  Stefan,           // sign(r) + r
  StefanSmooth,     // sign(r) + r + kappa * sign(r) * |r|^{1/3}
  PiecewiseLinear,  // monotone polyline with vertical jumps
  SumWithIdentity,  // inner(r) + c * r
};

// Vertical jump of a piecewise-linear graph at abscissa r: the graph value
// there is the interval [lo, hi].
struct Breakpoint {
  double r;
  double lo;
  double hi;
};

struct ScalarGraph {
  GraphKind kind = GraphKind::Identity;
  double c = 1.0;      // ScaledIdentity scale / SumWithIdentity weight
  double kappa = 1.0;  // StefanSmooth cusp weight
  std::vector<Breakpoint> bps;               // PiecewiseLinear only
  std::shared_ptr<const ScalarGraph> inner;  // SumWithIdentity only
  // Declared constants: strong monotonicity c_alpha and linear growth
  // C_alpha of the minimal section, |alpha0(r)| <= C_alpha * (1 + |r|).
  double c_alpha = 1.0;
  double C_alpha = 1.0;
};

namespace graphs {
ScalarGraph identity();
ScalarGraph scaled_identity(double c);  // c > 0
ScalarGraph sign();
ScalarGraph stefan();
ScalarGraph stefan_smooth(double kappa);  // kappa >= 0
ScalarGraph piecewise_linear(std::vector<Breakpoint> bps);  // >= 2 points
ScalarGraph sum_with_identity(ScalarGraph inner, double c);  // c > 0
}  // namespace graphs

std::string graph_name(const ScalarGraph& g);

struct Interval {
  double lo;
  double hi;
};

// Closure of the set alpha(r).
Interval graph_value(const ScalarGraph& g, double r);

// Minimal-norm element of alpha(r).
double min_section(const ScalarGraph& g, double r);

// Unique r with r + eps * alpha(r) containing x. Closed form for every
// kind; the cube-root cusp reduces to a scalar cubic solved by Newton.
double resolvent(const ScalarGraph& g, double eps, double x);

// Yosida regularization (x - resolvent(g, eps, x)) / eps, evaluated through
// the graph so the value stays accurate for small eps.
double yosida(const ScalarGraph& g, double eps, double x);

// Minimal-norm inverse: the element of alpha^{-1}(v) closest to 0. Throws
// std::domain_error outside the closure of the range of alpha.
double gamma(const ScalarGraph& g, double v);

// Right derivative of gamma. Total: outside the range it continues by the
// boundary value, on inverse plateaus it is 0.
double gamma_prime(const ScalarGraph& g, double v);

// Convex primitive of the minimal section with potential(0) = 0.
double potential(const ScalarGraph& g, double r);

// Fenchel conjugate of the primitive; +infinity outside the closed range.
double conjugate(const ScalarGraph& g, double v);

// Conjugate of the Moreau envelope of the primitive at level eps:
// eps/2 * v^2 + conjugate(v).
double moreau_conjugate(const ScalarGraph& g, double eps, double v);

struct HypothesisReport {
  double c_alpha_est = 0.0;  // infimum of sampled difference quotients
  double C_alpha_est = 0.0;  // supremum of |alpha0(r)| / (1 + |r|)
  bool zero_ok = false;      // 0 in alpha(0)
  bool monotone_ok = false;  // c_alpha_est consistent with the declared value
  bool growth_ok = false;    // C_alpha_est consistent with the declared value
  bool gamma_c1 = false;     // no persistent jump found in gamma_prime
  double gamma_jump = 0.0;   // size of the largest persistent jump
  double gamma_jump_at = 0.0;
  bool pass = false;
  std::string detail;
};

// Empirical check of the standing assumptions over [lo, hi] with the given
// number of samples (>= 100). Never throws on a failing graph; the report
// carries the verdict.
HypothesisReport validate_hypotheses(const ScalarGraph& g, double lo,
                                     double hi, int samples);

// Throws HypothesisViolation when the report failed.
void require_pass(const ScalarGraph& g, const HypothesisReport& rep);

}  // namespace dnsde
