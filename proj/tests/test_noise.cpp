#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <dnsde/errors.hpp>
#include <dnsde/mesh.hpp>
#include <dnsde/noise.hpp>

using namespace dnsde;

namespace {

// Direct nodewise sum over modes, independent of apply_G's loop structure.
std::vector<double> direct_sum(const NoiseModel& nm, const GridFunction& u,
                               const std::vector<double>& xi,
                               double (*envelope)(const NoiseModel&, double)) {
  std::vector<double> out(u.mesh.n, 0.0);
  for (int k = 0; k < nm.K; ++k)
    for (int i = 0; i < u.mesh.n; ++i)
      out[i] += xi[k] * nm.sigma[k] * nm.shapes[k].val[i] * envelope(nm, u.val[i]);
  return out;
}

double env_additive(const NoiseModel&, double) { return 1.0; }
double env_linear(const NoiseModel&, double ui) { return ui; }
double env_bounded(const NoiseModel& nm, double ui) {
  return ui / (1.0 + std::abs(ui) / nm.bound_c);
}

}  // namespace

TEST_CASE("noise model construction pins amplitudes and shapes") {
  const Mesh1D m = make_mesh(16);
  const NoiseModel nm = make_noise(m, 4, 0.3, 1.5, MultKind::Additive);
  REQUIRE(nm.K == 4);
  REQUIRE(nm.sigma.size() == 4);
  REQUIRE(nm.shapes.size() == 4);
  for (int k = 1; k <= 4; ++k)
    CHECK(nm.sigma[k - 1] == doctest::Approx(0.3 * std::pow(double(k), -1.5)).epsilon(1e-14));
  for (int k = 1; k <= 4; ++k)
    for (int i = 0; i < m.n; ++i)
      CHECK(nm.shapes[k - 1].val[i] ==
            doctest::Approx(std::sin(k * std::numbers::pi * node_x(m, i))).epsilon(1e-14));
  CHECK(nm.mult == MultKind::Additive);

  CHECK_THROWS_AS(make_noise(m, -1, 0.3, 1.5, MultKind::Additive), std::invalid_argument);
  CHECK_THROWS_AS(make_noise(m, 4, -0.1, 1.5, MultKind::Additive), std::invalid_argument);
  CHECK_THROWS_AS(make_noise(m, 4, 0.3, 0.5, MultKind::Additive), std::invalid_argument);
  CHECK_THROWS_AS(make_noise(m, 4, 0.3, 1.5, MultKind::BoundedLinear, 0.0), std::invalid_argument);
  CHECK_NOTHROW(make_noise(m, 0, 0.3, 1.5, MultKind::Additive));
}

TEST_CASE("increments are standard normal at unit step") {
  // Moment and shape checks on one long deterministic stream.
  RngStream rng{12345u, 0u, 0u};
  const int N = 1000000;
  double sum = 0.0, sumsq = 0.0, sumcube = 0.0;
  int within_one = 0;
  for (int i = 0; i < N / 8; ++i) {
    const std::vector<double> z = sample_increment(rng, 1.0, 8);
    for (double v : z) {
      sum += v;
      sumsq += v * v;
      sumcube += v * v * v;
      if (std::abs(v) < 1.0) ++within_one;
    }
  }
  const double mean = sum / N;
  const double var = sumsq / N - mean * mean;
  const double skew = sumcube / N;
  CHECK(std::abs(mean) < 4e-3);
  CHECK(std::abs(var - 1.0) < 1e-2);
  CHECK(std::abs(skew) < 2e-2);
  CHECK(std::abs(double(within_one) / N - 0.682689) < 3e-3);
  CHECK(rng.counter == std::uint64_t(N));
}

TEST_CASE("streams are reproducible and counter driven") {
  RngStream a{7u, 3u, 0u};
  RngStream b{7u, 3u, 0u};
  const auto za = sample_increment(a, 0.25, 5);
  const auto zb = sample_increment(b, 0.25, 5);
  REQUIRE(za.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(za[i] == zb[i]);

  // Two short calls equal one long call split at the counter boundary.
  RngStream c{7u, 3u, 0u};
  RngStream d{7u, 3u, 0u};
  const auto z1 = sample_increment(c, 0.25, 2);
  const auto z2 = sample_increment(c, 0.25, 3);
  const auto zfull = sample_increment(d, 0.25, 5);
  CHECK(z1[0] == zfull[0]);
  CHECK(z1[1] == zfull[1]);
  CHECK(z2[0] == zfull[2]);
  CHECK(z2[2] == zfull[4]);

  // Distinct path indices decorrelate immediately.
  RngStream e{7u, 4u, 0u};
  const auto ze = sample_increment(e, 0.25, 5);
  bool any_diff = false;
  for (int i = 0; i < 5; ++i) any_diff = any_diff || (ze[i] != za[i]);
  CHECK(any_diff);

  // Resuming mid-stream from a saved counter replays the same tail.
  RngStream f{7u, 3u, 2u};
  const auto zf = sample_increment(f, 0.25, 3);
  for (int i = 0; i < 3; ++i) CHECK(zf[i] == z2[i]);
}

TEST_CASE("increment scaling in the step size is exact") {
  RngStream a{99u, 1u, 0u};
  RngStream b{99u, 1u, 0u};
  const auto z1 = sample_increment(a, 1.0, 16);
  const auto z4 = sample_increment(b, 4.0, 16);
  for (int i = 0; i < 16; ++i) CHECK(z4[i] == 2.0 * z1[i]);
  CHECK(sample_increment(a, 1.0, 0).empty());
  CHECK_THROWS_AS(sample_increment(a, -1.0, 4), std::invalid_argument);
}

TEST_CASE("multiplicative envelopes match their closed forms") {
  const Mesh1D m = make_mesh(8);
  const NoiseModel add = make_noise(m, 2, 0.5, 1.0, MultKind::Additive);
  const NoiseModel lin = make_noise(m, 2, 0.5, 1.0, MultKind::Linear);
  const NoiseModel bnd = make_noise(m, 2, 0.5, 1.0, MultKind::BoundedLinear, 2.0);
  for (double v : {-3.0, -0.4, 0.0, 0.7, 10.0}) {
    CHECK(mult_value(add, v) == 1.0);
    CHECK(mult_value(lin, v) == v);
    CHECK(mult_value(bnd, v) == doctest::Approx(v / (1.0 + std::abs(v) / 2.0)).epsilon(1e-15));
  }
  // The bounded envelope really is bounded by c.
  for (double v : {-1e6, -50.0, 50.0, 1e6}) CHECK(std::abs(mult_value(bnd, v)) < 2.0);
}

TEST_CASE("noise application agrees with direct mode summation") {
  const Mesh1D m = make_mesh(24);
  const GridFunction u = sample(m, [](double x) { return 2.0 * x - 0.5; });
  const std::vector<double> xi = {0.3, -1.2, 0.05, 2.0};

  const NoiseModel add = make_noise(m, 4, 0.7, 0.8, MultKind::Additive);
  const NoiseModel lin = make_noise(m, 4, 0.7, 0.8, MultKind::Linear);
  const NoiseModel bnd = make_noise(m, 4, 0.7, 0.8, MultKind::BoundedLinear, 1.5);

  const GridFunction ga = apply_G(add, 0.0, u, xi);
  const GridFunction gl = apply_G(lin, 0.0, u, xi);
  const GridFunction gb = apply_G(bnd, 0.0, u, xi);
  const auto oa = direct_sum(add, u, xi, env_additive);
  const auto ol = direct_sum(lin, u, xi, env_linear);
  const auto ob = direct_sum(bnd, u, xi, env_bounded);
  for (int i = 0; i < m.n; ++i) {
    CHECK(ga.val[i] == doctest::Approx(oa[i]).epsilon(1e-13).scale(1.0));
    CHECK(gl.val[i] == doctest::Approx(ol[i]).epsilon(1e-13).scale(1.0));
    CHECK(gb.val[i] == doctest::Approx(ob[i]).epsilon(1e-13).scale(1.0));
  }

  // Zero increments give the zero field, and K = 0 is a valid silent model.
  const GridFunction gz = apply_G(add, 0.0, u, std::vector<double>(4, 0.0));
  for (int i = 0; i < m.n; ++i) CHECK(gz.val[i] == 0.0);
  const NoiseModel quiet = make_noise(m, 0, 0.7, 0.8, MultKind::Additive);
  const GridFunction gq = apply_G(quiet, 0.0, u, {});
  for (int i = 0; i < m.n; ++i) CHECK(gq.val[i] == 0.0);

  CHECK_THROWS_AS(apply_G(add, 0.0, u, std::vector<double>(3, 0.0)), DimensionMismatch);
  const GridFunction wrong = make_grid(make_mesh(12));
  CHECK_THROWS_AS(apply_G(add, 0.0, wrong, xi), MeshMismatch);
}

TEST_CASE("columns assemble the Hilbert-Schmidt norm") {
  const Mesh1D m = make_mesh(20);
  const GridFunction u = sample(m, [](double x) { return std::sin(3.0 * x) - 0.2; });
  const NoiseModel nm = make_noise(m, 5, 0.4, 1.1, MultKind::BoundedLinear, 1.0);

  const auto cols = g_columns(nm, 0.0, u);
  REQUIRE(cols.size() == 5);
  double acc = 0.0;
  for (const auto& col : cols) acc += norm_H(col) * norm_H(col);
  CHECK(hs_norm_sq(nm, 0.0, u) == doctest::Approx(acc).epsilon(1e-12).scale(1.0));

  // Column k applied as a unit increment matches apply_G on e_k.
  std::vector<double> ek(5, 0.0);
  ek[2] = 1.0;
  const GridFunction g2 = apply_G(nm, 0.0, u, ek);
  for (int i = 0; i < m.n; ++i)
    CHECK(g2.val[i] == doctest::Approx(cols[2].val[i]).epsilon(1e-14).scale(1.0));

  // Direct oracle for the squared norm.
  double direct = 0.0;
  for (int k = 0; k < 5; ++k) {
    double s = 0.0;
    for (int i = 0; i < m.n; ++i) {
      const double gi = nm.sigma[k] * nm.shapes[k].val[i] * env_bounded(nm, u.val[i]);
      s += gi * gi;
    }
    direct += m.h * s;
  }
  CHECK(hs_norm_sq(nm, 0.0, u) == doctest::Approx(direct).epsilon(1e-12).scale(1.0));
}

TEST_CASE("the Lipschitz constant dominates state differences") {
  const Mesh1D m = make_mesh(32);
  const NoiseModel lin = make_noise(m, 6, 0.9, 0.7, MultKind::Linear);
  const NoiseModel bnd = make_noise(m, 6, 0.9, 0.7, MultKind::BoundedLinear, 3.0);
  const double L_lin = lipschitz_G(lin);
  const double L_bnd = lipschitz_G(bnd);

  double sum_sq = 0.0;
  for (int k = 1; k <= 6; ++k) sum_sq += std::pow(0.9 * std::pow(double(k), -0.7), 2);
  CHECK(L_lin == doctest::Approx(std::sqrt(sum_sq)).epsilon(1e-13));
  CHECK(L_bnd == doctest::Approx(std::sqrt(sum_sq)).epsilon(1e-13));

  RngStream rng{2024u, 0u, 0u};
  for (int rep = 0; rep < 10; ++rep) {
    const auto a = sample_increment(rng, 1.0, m.n);
    const auto b = sample_increment(rng, 1.0, m.n);
    const GridFunction u1 = make_grid(m, a);
    const GridFunction u2 = make_grid(m, b);
    double du = 0.0;
    for (int i = 0; i < m.n; ++i) du += (a[i] - b[i]) * (a[i] - b[i]);
    du *= m.h;
    for (const NoiseModel* nm : {&lin, &bnd}) {
      const auto c1 = g_columns(*nm, 0.0, u1);
      const auto c2 = g_columns(*nm, 0.0, u2);
      double dg = 0.0;
      for (int k = 0; k < 6; ++k) {
        GridFunction diffk = make_grid(m);
        for (int i = 0; i < m.n; ++i) diffk.val[i] = c1[k].val[i] - c2[k].val[i];
        dg += norm_H(diffk) * norm_H(diffk);
      }
      const double L = lipschitz_G(*nm);
      CHECK(dg <= L * L * du + 1e-12);
    }
  }
}

TEST_CASE("truncation level only adds energy") {
  const Mesh1D m = make_mesh(16);
  const GridFunction u = sample(m, [](double x) { return 1.0 + x; });
  double prev = -1.0;
  for (int K : {0, 1, 2, 4, 8}) {
    const NoiseModel nm = make_noise(m, K, 0.5, 1.0, MultKind::Linear);
    const double hs = hs_norm_sq(nm, 0.0, u);
    CHECK(hs >= prev);
    prev = hs;
  }
  const NoiseModel none = make_noise(m, 0, 0.5, 1.0, MultKind::Linear);
  CHECK(hs_norm_sq(none, 0.0, u) == 0.0);
  CHECK(lipschitz_G(none) == 0.0);
}
