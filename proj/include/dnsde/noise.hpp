#pragma once
// Truncated cylindrical Wiener increments and the Hilbert-Schmidt noise
// coefficient G: K sine modes with amplitudes sigma0 * k^{-p} and an optional
// multiplicative envelope in the state.

#include <cstdint>
#include <vector>

#include <dnsde/mesh.hpp>

namespace dnsde {

enum class MultKind { Additive, Linear, BoundedLinear };

struct NoiseModel {
  int K = 0;
  std::vector<double> sigma;         // sigma0 * k^{-p}, k = 1..K
  std::vector<GridFunction> shapes;  // sampled sin(k pi x)
  MultKind mult = MultKind::Additive;
  double bound_c = 1.0;  // BoundedLinear scale
};

// Requires K >= 0, sigma0 >= 0, p > 1/2 (square-summable amplitudes), and
// bound_c > 0.
NoiseModel make_noise(const Mesh1D& m, int K, double sigma0, double p,
                      MultKind mult, double bound_c = 1.0);

// Splittable counter-based stream: the draw sequence is a pure function of
// (seed, path_index), so paths are reproducible under any scheduling.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  std::uint64_t counter = 0;
};

// K independent N(0, dt) draws; advances rng.counter by K.
std::vector<double> sample_increment(RngStream& rng, double dt, int K);

// Scalar multiplicative envelope m(u_i).
double mult_value(const NoiseModel& model, double ui);

// Sum_k xi_k * sigma_k * shape_k * m(u), nodewise.
GridFunction apply_G(const NoiseModel& model, double t, const GridFunction& u,
                     const std::vector<double>& xi);

// Columns G e_k = sigma_k * shape_k * m(u).
std::vector<GridFunction> g_columns(const NoiseModel& model, double t,
                                    const GridFunction& u);

// Squared Hilbert-Schmidt norm sum_k sigma_k^2 ||shape_k * m(u)||_h^2.
double hs_norm_sq(const NoiseModel& model, double t, const GridFunction& u);

// sqrt(sum_k sigma_k^2) * max(1, Lip(m)): a Lipschitz and growth constant
// valid for both bounds since |shape_k| <= 1 and ||shape_k||_h^2 = 1/2.
double lipschitz_G(const NoiseModel& model);

}  // namespace dnsde
