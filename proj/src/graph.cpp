#include "dnsde/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dnsde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sgn(double r) { return (r > 0.0) ? 1.0 : ((r < 0.0) ? -1.0 : 0.0); }

// Slope of segment i of a piecewise-linear graph, i in [0, m-2]. The two
// half-lines beyond the ends reuse the adjacent segment's slope.
double pwl_slope(const ScalarGraph& g, std::size_t i) {
  const Breakpoint& a = g.bps[i];
  const Breakpoint& b = g.bps[i + 1];
  return (b.lo - a.hi) / (b.r - a.r);
}

// Root t >= 0 of t^3 + kappa*t = w for w >= 0. Newton from t0 = cbrt(w)
// stays above the root (f convex, f(t0) >= 0) and descends monotonically.
double cusp_root(double w, double kappa) {
  if (w <= 0.0) return 0.0;
  double t = std::cbrt(w);
  if (kappa == 0.0) return t;
  for (int it = 0; it < 80; ++it) {
    const double f = t * t * t + kappa * t - w;
    if (std::abs(f) <= 1e-15 * (1.0 + w)) break;
    t -= f / (3.0 * t * t + kappa);
  }
  return t;
}

struct Range {
  double vmin;
  double vmax;
};

Range graph_range(const ScalarGraph& g) {
  switch (g.kind) {
    case GraphKind::Sign:
      return {-1.0, 1.0};
    case GraphKind::PiecewiseLinear: {
      const std::size_t m = g.bps.size();
      const double sL = pwl_slope(g, 0);
      const double sR = pwl_slope(g, m - 2);
      return {sL > 0.0 ? -kInf : g.bps.front().lo,
              sR > 0.0 ? kInf : g.bps.back().hi};
    }
    default:
      return {-kInf, kInf};
  }
}

// Minimal-norm element of the preimage interval [plo, phi].
double clamp0(double plo, double phi) {
  return std::min(std::max(plo, 0.0), phi);
}

double pwl_gamma(const ScalarGraph& g, double v) {
  const std::size_t m = g.bps.size();
  const Range rg = graph_range(g);
  if (v < rg.vmin || v > rg.vmax) {
    throw std::domain_error(graph_name(g) + ": value outside range");
  }
  double plo = kInf;
  double phi = -kInf;
  const auto take = [&](double r) {
    plo = std::min(plo, r);
    phi = std::max(phi, r);
  };
  const double sL = pwl_slope(g, 0);
  const double sR = pwl_slope(g, m - 2);
  if (v <= g.bps.front().lo) {
    if (sL > 0.0) {
      take(g.bps.front().r + (v - g.bps.front().lo) / sL);
    } else if (v == g.bps.front().lo) {
      plo = -kInf;
      take(g.bps.front().r);
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (g.bps[i].lo <= v && v <= g.bps[i].hi) take(g.bps[i].r);
    if (i + 1 < m) {
      const double s = pwl_slope(g, i);
      if (s > 0.0) {
        if (g.bps[i].hi <= v && v <= g.bps[i + 1].lo) {
          take(g.bps[i].r + (v - g.bps[i].hi) / s);
        }
      } else if (v == g.bps[i].hi) {
        take(g.bps[i].r);
        take(g.bps[i + 1].r);
      }
    }
  }
  if (v >= g.bps.back().hi) {
    if (sR > 0.0) {
      take(g.bps.back().r + (v - g.bps.back().hi) / sR);
    } else if (v == g.bps.back().hi) {
      phi = kInf;
      take(g.bps.back().r);
    }
  }
  return clamp0(plo, phi);
}

double pwl_gamma_prime(const ScalarGraph& g, double v) {
  const std::size_t m = g.bps.size();
  const Range rg = graph_range(g);
  if (v < rg.vmin || v >= rg.vmax) return 0.0;
  const double sL = pwl_slope(g, 0);
  if (v < g.bps.front().lo) return 1.0 / sL;
  for (std::size_t i = 0; i < m; ++i) {
    if (v < g.bps[i].lo) {
      // Interior of the image of segment i-1.
      return 1.0 / pwl_slope(g, i - 1);
    }
    if (v < g.bps[i].hi) return 0.0;  // inside the jump at breakpoint i
    if (v == g.bps[i].hi) {
      if (i + 1 == m) {
        const double sR = pwl_slope(g, m - 2);
        return sR > 0.0 ? 1.0 / sR : 0.0;
      }
      const double s = pwl_slope(g, i);
      // A flat segment to the right makes the inverse jump here.
      return s > 0.0 ? 1.0 / s : kInf;
    }
  }
  return 1.0 / pwl_slope(g, m - 2);
}

double pwl_resolvent(const ScalarGraph& g, double eps, double x) {
  const std::size_t m = g.bps.size();
  const auto img_lo = [&](std::size_t i) {
    return g.bps[i].r + eps * g.bps[i].lo;
  };
  const auto img_hi = [&](std::size_t i) {
    return g.bps[i].r + eps * g.bps[i].hi;
  };
  if (x < img_lo(0)) {
    const double s = pwl_slope(g, 0);
    const Breakpoint& b = g.bps.front();
    return (x - eps * (b.lo - s * b.r)) / (1.0 + eps * s);
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (x <= img_hi(i)) return g.bps[i].r;
    if (i + 1 < m && x < img_lo(i + 1)) {
      const double s = pwl_slope(g, i);
      const Breakpoint& b = g.bps[i];
      return (x - eps * (b.hi - s * b.r)) / (1.0 + eps * s);
    }
  }
  const double s = pwl_slope(g, m - 2);
  const Breakpoint& b = g.bps.back();
  return (x - eps * (b.hi - s * b.r)) / (1.0 + eps * s);
}

// Exact integral of the minimal section of a piecewise-linear graph from 0
// to r: midpoint rule on each sub-segment, exact for affine pieces.
double pwl_potential(const ScalarGraph& g, double r) {
  if (r == 0.0) return 0.0;
  const double a = std::min(0.0, r);
  const double b = std::max(0.0, r);
  std::vector<double> knots{a};
  for (const Breakpoint& bp : g.bps) {
    if (bp.r > a && bp.r < b) knots.push_back(bp.r);
  }
  knots.push_back(b);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double mid = 0.5 * (knots[i] + knots[i + 1]);
    sum += graph_value(g, mid).lo * (knots[i + 1] - knots[i]);
  }
  return (r > 0.0) ? sum : -sum;
}

void check_eps(double eps, const char* where) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument(std::string(where) + ": eps must be > 0");
  }
}

}  // namespace

namespace graphs {

ScalarGraph identity() {
  ScalarGraph g;
  g.kind = GraphKind::Identity;
  g.c_alpha = 1.0;
  g.C_alpha = 1.0;
  return g;
}

ScalarGraph scaled_identity(double c) {
  if (!(c > 0.0)) throw ValidationError("scaled_identity: c must be > 0");
  ScalarGraph g;
  g.kind = GraphKind::ScaledIdentity;
  g.c = c;
  g.c_alpha = c;
  g.C_alpha = c;
  return g;
}

ScalarGraph sign() {
  ScalarGraph g;
  g.kind = GraphKind::Sign;
  g.c_alpha = 0.0;
  g.C_alpha = 1.0;
  return g;
}

ScalarGraph stefan() {
  ScalarGraph g;
  g.kind = GraphKind::Stefan;
  g.c_alpha = 1.0;
  g.C_alpha = 1.0;
  return g;
}

ScalarGraph stefan_smooth(double kappa) {
  if (!(kappa >= 0.0)) {
    throw ValidationError("stefan_smooth: kappa must be >= 0");
  }
  ScalarGraph g;
  g.kind = GraphKind::StefanSmooth;
  g.kappa = kappa;
  g.c_alpha = 1.0;
  g.C_alpha = 1.0 + kappa;
  return g;
}

ScalarGraph piecewise_linear(std::vector<Breakpoint> bps) {
  if (bps.size() < 2) {
    throw ValidationError("piecewise_linear: need at least two breakpoints");
  }
  for (std::size_t i = 0; i < bps.size(); ++i) {
    if (bps[i].lo > bps[i].hi) {
      throw ValidationError("piecewise_linear: lo > hi at a breakpoint");
    }
    if (i + 1 < bps.size()) {
      if (!(bps[i].r < bps[i + 1].r)) {
        throw ValidationError("piecewise_linear: abscissas must increase");
      }
      if (bps[i].hi > bps[i + 1].lo) {
        throw ValidationError("piecewise_linear: values must be monotone");
      }
    }
  }
  ScalarGraph g;
  g.kind = GraphKind::PiecewiseLinear;
  g.bps = std::move(bps);
  double cmin = kInf;
  for (std::size_t i = 0; i + 1 < g.bps.size(); ++i) {
    cmin = std::min(cmin, pwl_slope(g, i));
  }
  const double sL = pwl_slope(g, 0);
  const double sR = pwl_slope(g, g.bps.size() - 2);
  double cmax = std::max(sL, sR);
  for (const Breakpoint& b : g.bps) {
    cmax = std::max(cmax, std::max(std::abs(b.lo), std::abs(b.hi)) /
                              (1.0 + std::abs(b.r)));
  }
  g.c_alpha = cmin;
  g.C_alpha = cmax;
  return g;
}

ScalarGraph sum_with_identity(ScalarGraph inner, double c) {
  if (!(c > 0.0)) throw ValidationError("sum_with_identity: c must be > 0");
  ScalarGraph g;
  g.kind = GraphKind::SumWithIdentity;
  g.c = c;
  g.c_alpha = inner.c_alpha + c;
  g.C_alpha = inner.C_alpha + c;
  g.inner = std::make_shared<const ScalarGraph>(std::move(inner));
  return g;
}

}  // namespace graphs

std::string graph_name(const ScalarGraph& g) {
  std::ostringstream os;
  switch (g.kind) {
    case GraphKind::Identity:
      os << "identity";
      break;
    case GraphKind::ScaledIdentity:
      os << "scaled_identity(" << g.c << ")";
      break;
    case GraphKind::Sign:
      os << "sign";
      break;
    case GraphKind::Stefan:
      os << "stefan";
      break;
    case GraphKind::StefanSmooth:
      os << "stefan_smooth(" << g.kappa << ")";
      break;
    case GraphKind::PiecewiseLinear:
      os << "piecewise_linear[" << g.bps.size() << "]";
      break;
    case GraphKind::SumWithIdentity:
      os << "sum(" << graph_name(*g.inner) << " + " << g.c << "*id)";
      break;
  }
  return os.str();
}

Interval graph_value(const ScalarGraph& g, double r) {
  switch (g.kind) {
    case GraphKind::Identity:
      return {r, r};
    case GraphKind::ScaledIdentity:
      return {g.c * r, g.c * r};
    case GraphKind::Sign:
      if (r == 0.0) return {-1.0, 1.0};
      return {sgn(r), sgn(r)};
    case GraphKind::Stefan:
      if (r == 0.0) return {-1.0, 1.0};
      return {sgn(r) + r, sgn(r) + r};
    case GraphKind::StefanSmooth: {
      if (r == 0.0) return {-1.0, 1.0};
      const double y = sgn(r) * (1.0 + g.kappa * std::cbrt(std::abs(r))) + r;
      return {y, y};
    }
    case GraphKind::PiecewiseLinear: {
      const std::size_t m = g.bps.size();
      if (r < g.bps.front().r) {
        const double s = pwl_slope(g, 0);
        const double y = g.bps.front().lo + s * (r - g.bps.front().r);
        return {y, y};
      }
      if (r > g.bps.back().r) {
        const double s = pwl_slope(g, m - 2);
        const double y = g.bps.back().hi + s * (r - g.bps.back().r);
        return {y, y};
      }
      for (std::size_t i = 0; i < m; ++i) {
        if (r == g.bps[i].r) return {g.bps[i].lo, g.bps[i].hi};
        if (i + 1 < m && r < g.bps[i + 1].r) {
          const double s = pwl_slope(g, i);
          const double y = g.bps[i].hi + s * (r - g.bps[i].r);
          return {y, y};
        }
      }
      return {g.bps.back().hi, g.bps.back().hi};
    }
    case GraphKind::SumWithIdentity: {
      const Interval in = graph_value(*g.inner, r);
      return {in.lo + g.c * r, in.hi + g.c * r};
    }
  }
  throw std::logic_error("graph_value: unknown kind");
}

double min_section(const ScalarGraph& g, double r) {
  const Interval iv = graph_value(g, r);
  return clamp0(iv.lo, iv.hi);
}

double resolvent(const ScalarGraph& g, double eps, double x) {
  check_eps(eps, "resolvent");
  switch (g.kind) {
    case GraphKind::Identity:
      return x / (1.0 + eps);
    case GraphKind::ScaledIdentity:
      return x / (1.0 + eps * g.c);
    case GraphKind::Sign:
      if (std::abs(x) <= eps) return 0.0;
      return x - eps * sgn(x);
    case GraphKind::Stefan:
      if (std::abs(x) <= eps) return 0.0;
      return (x - eps * sgn(x)) / (1.0 + eps);
    case GraphKind::PiecewiseLinear:
      return pwl_resolvent(g, eps, x);
    case GraphKind::SumWithIdentity: {
      const double d = 1.0 + eps * g.c;
      return resolvent(*g.inner, eps / d, x / d);
    }
    case GraphKind::StefanSmooth: {
      // r = sgn(x) t^3 with (1+eps) t^3 + eps*kappa*t = |x| - eps.
      if (std::abs(x) <= eps) return 0.0;
      const double t = cusp_root((std::abs(x) - eps) / (1.0 + eps),
                                 eps * g.kappa / (1.0 + eps));
      return sgn(x) * t * t * t;
    }
  }
  throw std::logic_error("resolvent: unknown kind");
}

double yosida(const ScalarGraph& g, double eps, double x) {
  check_eps(eps, "yosida");
  // Evaluated through the graph at the resolvent point; the equivalent
  // (x - resolvent) / eps loses up to 1/eps of the working precision.
  switch (g.kind) {
    case GraphKind::Identity:
      return x / (1.0 + eps);
    case GraphKind::ScaledIdentity:
      return g.c * x / (1.0 + eps * g.c);
    case GraphKind::Sign:
      if (std::abs(x) <= eps) return x / eps;
      return sgn(x);
    case GraphKind::Stefan:
      if (std::abs(x) <= eps) return x / eps;
      return (x + sgn(x)) / (1.0 + eps);
    case GraphKind::StefanSmooth: {
      if (std::abs(x) <= eps) return x / eps;
      const double t = cusp_root((std::abs(x) - eps) / (1.0 + eps),
                                 eps * g.kappa / (1.0 + eps));
      return sgn(x) * (t * t * t + 1.0 + g.kappa * t);
    }
    case GraphKind::SumWithIdentity: {
      const double d = 1.0 + eps * g.c;
      return yosida(*g.inner, eps / d, x / d) +
             g.c * resolvent(*g.inner, eps / d, x / d);
    }
    case GraphKind::PiecewiseLinear:
      return (x - resolvent(g, eps, x)) / eps;
  }
  throw std::logic_error("yosida: unknown kind");
}

double gamma(const ScalarGraph& g, double v) {
  switch (g.kind) {
    case GraphKind::Identity:
      return v;
    case GraphKind::ScaledIdentity:
      return v / g.c;
    case GraphKind::Sign:
      if (std::abs(v) > 1.0) {
        throw std::domain_error("sign: value outside range");
      }
      return 0.0;
    case GraphKind::Stefan:
      if (std::abs(v) <= 1.0) return 0.0;
      return v - sgn(v);
    case GraphKind::StefanSmooth: {
      if (std::abs(v) <= 1.0) return 0.0;
      const double t = cusp_root(std::abs(v) - 1.0, g.kappa);
      return sgn(v) * t * t * t;
    }
    case GraphKind::PiecewiseLinear:
      return pwl_gamma(g, v);
    case GraphKind::SumWithIdentity:
      return resolvent(*g.inner, 1.0 / g.c, v / g.c);
  }
  throw std::logic_error("gamma: unknown kind");
}

double gamma_prime(const ScalarGraph& g, double v) {
  switch (g.kind) {
    case GraphKind::Identity:
      return 1.0;
    case GraphKind::ScaledIdentity:
      return 1.0 / g.c;
    case GraphKind::Sign:
      return 0.0;
    case GraphKind::Stefan:
      return (v >= 1.0 || v < -1.0) ? 1.0 : 0.0;
    case GraphKind::StefanSmooth: {
      if (std::abs(v) <= 1.0) return 0.0;
      const double t = cusp_root(std::abs(v) - 1.0, g.kappa);
      if (t == 0.0) return 0.0;
      return 1.0 / (1.0 + g.kappa / (3.0 * t * t));
    }
    case GraphKind::PiecewiseLinear:
      return pwl_gamma_prime(g, v);
    case GraphKind::SumWithIdentity: {
      // One-sided difference keeps the right-derivative convention.
      const double d = 1e-6 * (1.0 + std::abs(v));
      return (gamma(g, v + d) - gamma(g, v)) / d;
    }
  }
  throw std::logic_error("gamma_prime: unknown kind");
}

double potential(const ScalarGraph& g, double r) {
  switch (g.kind) {
    case GraphKind::Identity:
      return 0.5 * r * r;
    case GraphKind::ScaledIdentity:
      return 0.5 * g.c * r * r;
    case GraphKind::Sign:
      return std::abs(r);
    case GraphKind::Stefan:
      return std::abs(r) + 0.5 * r * r;
    case GraphKind::StefanSmooth:
      return std::abs(r) + 0.5 * r * r +
             0.75 * g.kappa * std::pow(std::abs(r), 4.0 / 3.0);
    case GraphKind::PiecewiseLinear:
      return pwl_potential(g, r);
    case GraphKind::SumWithIdentity:
      return potential(*g.inner, r) + 0.5 * g.c * r * r;
  }
  throw std::logic_error("potential: unknown kind");
}

double conjugate(const ScalarGraph& g, double v) {
  const Range rg = graph_range(g);
  if (v < rg.vmin || v > rg.vmax) return kInf;
  // The supremum of r*v - potential(r) is attained wherever v lies in
  // alpha(r); the minimal-norm preimage is such a point.
  const double r = gamma(g, v);
  return v * r - potential(g, r);
}

double moreau_conjugate(const ScalarGraph& g, double eps, double v) {
  check_eps(eps, "moreau_conjugate");
  return 0.5 * eps * v * v + conjugate(g, v);
}

HypothesisReport validate_hypotheses(const ScalarGraph& g, double lo,
                                     double hi, int samples) {
  if (!(lo < hi)) throw ValidationError("validate_hypotheses: lo >= hi");
  if (samples < 100) {
    throw ValidationError("validate_hypotheses: need >= 100 samples");
  }
  HypothesisReport rep;
  const double dr = (hi - lo) / (samples - 1);
  double prev_r = lo;
  double prev_a = min_section(g, lo);
  rep.c_alpha_est = kInf;
  rep.C_alpha_est = std::abs(prev_a) / (1.0 + std::abs(prev_r));
  for (int j = 1; j < samples; ++j) {
    const double r = lo + j * dr;
    const double a = min_section(g, r);
    rep.c_alpha_est = std::min(rep.c_alpha_est, (a - prev_a) / (r - prev_r));
    rep.C_alpha_est =
        std::max(rep.C_alpha_est, std::abs(a) / (1.0 + std::abs(r)));
    prev_r = r;
    prev_a = a;
  }
  const Interval at0 = graph_value(g, 0.0);
  rep.zero_ok = (at0.lo <= 0.0 && 0.0 <= at0.hi);
  rep.monotone_ok = rep.c_alpha_est >= g.c_alpha - 1e-6 * (1.0 + g.c_alpha);
  rep.growth_ok = rep.C_alpha_est <= g.C_alpha + 1e-6 * (1.0 + g.C_alpha);

  // Probe gamma_prime across the sampled image; candidate discontinuities
  // are squeezed to distinguish a genuine jump from fast smooth variation.
  const double vlo = min_section(g, lo);
  const double vhi = min_section(g, hi);
  const int nprobe = 1000;
  const double dv = (vhi - vlo) / (nprobe - 1);
  rep.gamma_c1 = true;
  double prev_v = vlo;
  double prev_d = gamma_prime(g, vlo);
  for (int j = 1; j < nprobe; ++j) {
    const double v = vlo + j * dv;
    const double d = gamma_prime(g, v);
    double diff = std::abs(d - prev_d);
    if (std::isnan(diff)) diff = 0.0;
    if (diff > 1e-3) {
      double p = prev_v;
      double q = v;
      double dp = prev_d;
      double dq = d;
      for (int it = 0; it < 60 && q - p > 1e-14 * (1.0 + std::abs(p)); ++it) {
        const double mid = 0.5 * (p + q);
        const double dm = gamma_prime(g, mid);
        if (std::abs(dm - dp) >= std::abs(dq - dm)) {
          q = mid;
          dq = dm;
        } else {
          p = mid;
          dp = dm;
        }
      }
      double jump = std::abs(dq - dp);
      if (std::isnan(jump)) jump = kInf;
      if (jump > 1e-3 && jump > rep.gamma_jump) {
        rep.gamma_c1 = false;
        rep.gamma_jump = jump;
        rep.gamma_jump_at = 0.5 * (p + q);
      }
    }
    prev_v = v;
    prev_d = d;
  }

  rep.pass = rep.zero_ok && rep.monotone_ok && rep.growth_ok &&
             rep.gamma_c1 && g.c_alpha > 0.0;
  std::ostringstream os;
  if (!rep.pass) {
    if (!(g.c_alpha > 0.0)) os << "declared c_alpha is not positive; ";
    if (!rep.zero_ok) os << "0 not in alpha(0); ";
    if (!rep.monotone_ok) {
      os << "difference quotient " << rep.c_alpha_est << " below declared "
         << g.c_alpha << "; ";
    }
    if (!rep.growth_ok) {
      os << "growth ratio " << rep.C_alpha_est << " above declared "
         << g.C_alpha << "; ";
    }
    if (!rep.gamma_c1) {
      os << "gamma_prime jumps by " << rep.gamma_jump << " near v = "
         << rep.gamma_jump_at << "; ";
    }
  }
  rep.detail = os.str();
  return rep;
}

void require_pass(const ScalarGraph& g, const HypothesisReport& rep) {
  if (!rep.pass) {
    throw HypothesisViolation(graph_name(g) + ": " + rep.detail);
  }
}

}  // namespace dnsde
