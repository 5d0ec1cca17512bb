#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "dnsde/mesh.hpp"

using namespace dnsde;

namespace {

GridFunction random_grid(const Mesh1D& m, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  GridFunction u = make_grid(m);
  for (auto& x : u.val) x = dist(rng);
  return u;
}

}  // namespace

TEST_CASE("mesh construction and node placement") {
  const Mesh1D m = make_mesh(7);
  CHECK(m.n == 7);
  CHECK(m.h == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(node_x(m, 0) == doctest::Approx(0.125));
  CHECK(node_x(m, 6) == doctest::Approx(0.875));
  CHECK_THROWS_AS(make_mesh(1), ValidationError);
}

TEST_CASE("lumped inner product and pairing") {
  const Mesh1D m = make_mesh(4);
  const GridFunction a = make_grid(m, {1.0, 2.0, 3.0, 4.0});
  const GridFunction b = make_grid(m, {4.0, 3.0, 2.0, 1.0});
  // h * (4 + 6 + 6 + 4) with h = 1/5.
  CHECK(inner_H(a, b) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(pairing(as_dual(a), b) == doctest::Approx(inner_H(a, b)));
  const Mesh1D m2 = make_mesh(5);
  CHECK_THROWS_AS(inner_H(a, random_grid(m2, 1)), MeshMismatch);
  CHECK_THROWS_AS(make_grid(m, {1.0, 2.0}), DimensionMismatch);
}

TEST_CASE("second difference matches its closed-form spectrum") {
  const Mesh1D m = make_mesh(33);
  for (int k : {1, 2, 7, 33}) {
    const double mu = eigenvalue_R(m, k);
    const double ref =
        (2.0 - 2.0 * std::cos(k * std::numbers::pi * m.h)) / (m.h * m.h);
    CHECK(mu == doctest::Approx(ref).epsilon(1e-15));
    const GridFunction v = eigenvector_R(m, k);
    const DualGridFunction Rv = apply_R(v);
    for (int i = 0; i < m.n; ++i) {
      CHECK(Rv.val[i] == doctest::Approx(mu * v.val[i]).epsilon(1e-9));
    }
  }
  // Smallest eigenvalue approaches pi^2 as the mesh refines.
  const Mesh1D fine = make_mesh(128);
  CHECK(eigenvalue_R(fine, 1) ==
        doctest::Approx(std::numbers::pi * std::numbers::pi).epsilon(2e-4));
  CHECK_THROWS_AS(eigenvalue_R(m, 0), ValidationError);
  CHECK_THROWS_AS(eigenvector_R(m, 34), ValidationError);
}

TEST_CASE("V norm equals the summed squared difference quotients") {
  const Mesh1D m = make_mesh(64);
  const GridFunction u = random_grid(m, 42);
  double acc = 0.0;
  for (int i = 0; i <= m.n; ++i) {
    const double left = (i > 0) ? u.val[i - 1] : 0.0;
    const double right = (i < m.n) ? u.val[i] : 0.0;
    const double dq = (right - left) / m.h;
    acc += m.h * dq * dq;
  }
  const double nv = norm_V(u);
  CHECK(nv * nv == doctest::Approx(acc).epsilon(1e-10));
}

TEST_CASE("solve_R inverts apply_R") {
  const Mesh1D m = make_mesh(50);
  const GridFunction u = random_grid(m, 7);
  const GridFunction back = solve_R(apply_R(u));
  for (int i = 0; i < m.n; ++i) {
    CHECK(back.val[i] == doctest::Approx(u.val[i]).epsilon(1e-9));
  }
  const DualGridFunction f = as_dual(random_grid(m, 8));
  const DualGridFunction again = apply_R(solve_R(f));
  for (int i = 0; i < m.n; ++i) {
    CHECK(again.val[i] == doctest::Approx(f.val[i]).epsilon(1e-9));
  }
}

TEST_CASE("dual norm through the inverse map") {
  const Mesh1D m = make_mesh(40);
  const GridFunction u = random_grid(m, 3);
  CHECK(norm_Vstar(apply_R(u)) == doctest::Approx(norm_V(u)).epsilon(1e-10));
  // On eigenvectors the three norms chain through powers of mu.
  const GridFunction v2 = eigenvector_R(m, 2);
  const double mu = eigenvalue_R(m, 2);
  CHECK(norm_V(v2) ==
        doctest::Approx(std::sqrt(mu) * norm_H(v2)).epsilon(1e-12));
  CHECK(norm_Vstar(as_dual(v2)) ==
        doctest::Approx(norm_H(v2) / std::sqrt(mu)).epsilon(1e-12));
}

TEST_CASE("eigenvector normalization and orthogonality") {
  const Mesh1D m = make_mesh(17);
  for (int k = 1; k <= m.n; ++k) {
    const GridFunction vk = eigenvector_R(m, k);
    CHECK(inner_H(vk, vk) == doctest::Approx(0.5).epsilon(1e-12));
    for (int j = k + 1; j <= m.n; ++j) {
      CHECK(std::abs(inner_H(vk, eigenvector_R(m, j))) < 1e-12);
    }
  }
}

TEST_CASE("fractional power agrees with the full map at s = 1") {
  const Mesh1D m = make_mesh(32);
  const GridFunction u = random_grid(m, 11);
  const DualGridFunction full = apply_R(u);
  const DualGridFunction synth = fractional_R(1.0, u);
  for (int i = 0; i < m.n; ++i) {
    CHECK(synth.val[i] == doctest::Approx(full.val[i]).epsilon(1e-9));
  }
  CHECK_THROWS_AS(fractional_R(0.0, u), ValidationError);
  CHECK_THROWS_AS(fractional_R(1.5, u), ValidationError);
}

TEST_CASE("half powers compose to the full map") {
  const Mesh1D m = make_mesh(24);
  const GridFunction u = random_grid(m, 19);
  const DualGridFunction half = fractional_R(0.5, u);
  const DualGridFunction again = fractional_R(0.5, as_grid(half));
  const DualGridFunction full = apply_R(u);
  const double scale = norm_H(full);
  for (int i = 0; i < m.n; ++i) {
    CHECK(again.val[i] ==
          doctest::Approx(full.val[i]).epsilon(1e-8).scale(scale));
  }
}

TEST_CASE("sampling hits the nodes") {
  const Mesh1D m = make_mesh(15);
  const GridFunction s =
      sample(m, [](double x) { return std::sin(std::numbers::pi * x); });
  const GridFunction v1 = eigenvector_R(m, 1);
  for (int i = 0; i < m.n; ++i) {
    CHECK(s.val[i] == doctest::Approx(v1.val[i]).epsilon(1e-15));
  }
}

TEST_CASE("grid CSV round trip") {
  const Mesh1D m = make_mesh(9);
  const GridFunction u = random_grid(m, 23);
  std::ostringstream os;
  write_grid_csv(os, u);
  const std::string text = os.str();
  CHECK(text.rfind("# n=9 h=0.10000000000000001\n", 0) == 0);
  std::istringstream is(text);
  const GridFunction back = read_grid_csv(is);
  REQUIRE(back.mesh.n == m.n);
  for (int i = 0; i < m.n; ++i) {
    CHECK(back.val[i] == u.val[i]);
  }
  std::istringstream bad("nonsense\n1,2,3\n");
  CHECK_THROWS_AS(read_grid_csv(bad), ParseError);
  std::istringstream badrow("# n=3 h=0.25\n1,zap,3\n");
  CHECK_THROWS_AS(read_grid_csv(badrow), ParseError);
}
