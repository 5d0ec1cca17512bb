#include <dnsde/noise.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <dnsde/errors.hpp>

namespace dnsde {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Pure function of (seed, path, tick): no shared state between paths.
std::uint64_t mix(std::uint64_t seed, std::uint64_t path, std::uint64_t tick) {
  return splitmix64(splitmix64(splitmix64(seed) ^ path) ^ tick);
}

// One standard normal per counter value, from two uniforms at the internal
// ticks 2c and 2c+1. u1 is kept away from zero so the log is finite.
double standard_normal(const RngStream& rng, std::uint64_t c) {
  const std::uint64_t x1 = mix(rng.seed, rng.path_index, 2 * c);
  const std::uint64_t x2 = mix(rng.seed, rng.path_index, 2 * c + 1);
  const double u1 = double((x1 >> 11) + 1) * 0x1.0p-53;
  const double u2 = double(x2 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void check_state(const NoiseModel& model, const GridFunction& u) {
  if (model.K > 0 && !same_mesh(u.mesh, model.shapes[0].mesh))
    throw MeshMismatch("noise: state mesh differs from shape mesh");
}

}  // namespace

NoiseModel make_noise(const Mesh1D& m, int K, double sigma0, double p,
                      MultKind mult, double bound_c) {
  if (K < 0) throw std::invalid_argument("noise: K must be >= 0");
  if (sigma0 < 0.0) throw std::invalid_argument("noise: sigma0 must be >= 0");
  if (!(p > 0.5)) throw std::invalid_argument("noise: p must be > 1/2");
  if (!(bound_c > 0.0)) throw std::invalid_argument("noise: bound_c must be > 0");
  NoiseModel nm;
  nm.K = K;
  nm.mult = mult;
  nm.bound_c = bound_c;
  nm.sigma.reserve(K);
  nm.shapes.reserve(K);
  for (int k = 1; k <= K; ++k) {
    nm.sigma.push_back(sigma0 * std::pow(double(k), -p));
    nm.shapes.push_back(sample(m, [k](double x) {
      return std::sin(double(k) * std::numbers::pi * x);
    }));
  }
  return nm;
}

std::vector<double> sample_increment(RngStream& rng, double dt, int K) {
  if (K < 0) throw std::invalid_argument("noise: K must be >= 0");
  if (dt < 0.0) throw std::invalid_argument("noise: dt must be >= 0");
  const double scale = std::sqrt(dt);
  std::vector<double> z(K);
  for (int k = 0; k < K; ++k) z[k] = scale * standard_normal(rng, rng.counter + k);
  rng.counter += std::uint64_t(K);
  return z;
}

double mult_value(const NoiseModel& model, double ui) {
  switch (model.mult) {
    case MultKind::Additive: return 1.0;
    case MultKind::Linear: return ui;
    case MultKind::BoundedLinear: return ui / (1.0 + std::abs(ui) / model.bound_c);
  }
  return 1.0;
}

GridFunction apply_G(const NoiseModel& model, double /*t*/, const GridFunction& u,
                     const std::vector<double>& xi) {
  check_state(model, u);
  if (int(xi.size()) != model.K)
    throw DimensionMismatch("noise: increment length differs from mode count");
  GridFunction out = make_grid(u.mesh);
  for (int i = 0; i < u.mesh.n; ++i) {
    const double env = mult_value(model, u.val[i]);
    double acc = 0.0;
    for (int k = 0; k < model.K; ++k)
      acc += xi[k] * model.sigma[k] * model.shapes[k].val[i];
    out.val[i] = acc * env;
  }
  return out;
}

std::vector<GridFunction> g_columns(const NoiseModel& model, double /*t*/,
                                    const GridFunction& u) {
  check_state(model, u);
  std::vector<GridFunction> cols;
  cols.reserve(model.K);
  for (int k = 0; k < model.K; ++k) {
    GridFunction col = make_grid(u.mesh);
    for (int i = 0; i < u.mesh.n; ++i)
      col.val[i] = model.sigma[k] * model.shapes[k].val[i] * mult_value(model, u.val[i]);
    cols.push_back(std::move(col));
  }
  return cols;
}

double hs_norm_sq(const NoiseModel& model, double /*t*/, const GridFunction& u) {
  check_state(model, u);
  double acc = 0.0;
  for (int k = 0; k < model.K; ++k) {
    double s = 0.0;
    for (int i = 0; i < u.mesh.n; ++i) {
      const double gi = model.sigma[k] * model.shapes[k].val[i] * mult_value(model, u.val[i]);
      s += gi * gi;
    }
    acc += u.mesh.h * s;
  }
  return acc;
}

double lipschitz_G(const NoiseModel& model) {
  double sum_sq = 0.0;
  for (double s : model.sigma) sum_sq += s * s;
  // Every envelope here is 1-Lipschitz, so the mode budget is the whole bound.
  return std::sqrt(sum_sq);
}

}  // namespace dnsde
