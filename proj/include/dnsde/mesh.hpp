#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "dnsde/errors.hpp"

namespace dnsde {

// Uniform grid on (0,1) with homogeneous Dirichlet ends: n interior nodes,
// spacing h = 1/(n+1). Node i (0-based) sits at x = (i+1)*h.
struct Mesh1D {
  int n = 0;
  double h = 0.0;
};

Mesh1D make_mesh(int n);  // n >= 2
double node_x(const Mesh1D& m, int i);
bool same_mesh(const Mesh1D& a, const Mesh1D& b);

// Nodal values of an element of V = H^1_0(0,1) (or of the pivot space H).
struct GridFunction {
  Mesh1D mesh;
  std::vector<double> val;
};

// Element of V* kept in H coordinates through the pivot identification:
// the functional is u -> h * sum_i val[i] * u[i].
struct DualGridFunction {
  Mesh1D mesh;
  std::vector<double> val;
};

GridFunction make_grid(const Mesh1D& m);
GridFunction make_grid(const Mesh1D& m, std::vector<double> values);
DualGridFunction make_dual(const Mesh1D& m);
DualGridFunction make_dual(const Mesh1D& m, std::vector<double> values);
GridFunction sample(const Mesh1D& m, const std::function<double(double)>& f);

// Reinterpretation through the pivot space; values are copied unchanged.
GridFunction as_grid(const DualGridFunction& f);
DualGridFunction as_dual(const GridFunction& u);

// Lumped L2 product: h * sum_i a_i b_i. The duality pairing <f,u> agrees
// with it under the pivot identification.
double inner_H(const GridFunction& a, const GridFunction& b);
double pairing(const DualGridFunction& f, const GridFunction& u);
double norm_H(const GridFunction& u);
double norm_H(const DualGridFunction& f);

// Discrete Dirichlet Laplacian: (Ru)_i = (2u_i - u_{i-1} - u_{i+1}) / h^2,
// the Riesz map of V onto V* in these coordinates.
DualGridFunction apply_R(const GridFunction& u);
GridFunction solve_R(const DualGridFunction& f);

double norm_V(const GridFunction& u);        // sqrt <Ru, u>
double norm_Vstar(const DualGridFunction& f);  // sqrt <f, R^{-1} f>

// Eigenpairs of R: mu_k = (2 - 2cos(k pi h)) / h^2 with nodal eigenvector
// sin(k pi x), k = 1..n. Eigenvectors are not normalized; their squared
// H-norm is exactly 1/2.
double eigenvalue_R(const Mesh1D& m, int k);
GridFunction eigenvector_R(const Mesh1D& m, int k);
struct EigenPair {
  double mu;
  GridFunction vec;
};
std::vector<EigenPair> eigenpairs(const Mesh1D& m);

// Spectral power R^s, s in (0,1], by sine synthesis. O(n^2) per call.
DualGridFunction fractional_R(double s, const GridFunction& u);

// One header line "# n=<n> h=<h>" then one comma-separated row of values.
void write_grid_csv(std::ostream& os, const GridFunction& u);
GridFunction read_grid_csv(std::istream& is);

}  // namespace dnsde
