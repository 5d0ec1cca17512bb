#include "dnsde/mesh.hpp"

#include <cmath>
#include <numbers>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "dnsde/tridiag.hpp"

namespace dnsde {

namespace {

void check_same(const Mesh1D& a, const Mesh1D& b, const char* where) {
  if (!same_mesh(a, b)) {
    throw MeshMismatch(std::string(where) + ": operands on different meshes");
  }
}

void check_size(const Mesh1D& m, std::size_t size, const char* where) {
  if (static_cast<std::size_t>(m.n) != size) {
    throw DimensionMismatch(std::string(where) + ": got " +
                            std::to_string(size) + " values for n = " +
                            std::to_string(m.n));
  }
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

Mesh1D make_mesh(int n) {
  if (n < 2) {
    throw ValidationError("mesh needs n >= 2 interior nodes");
  }
  return Mesh1D{n, 1.0 / (n + 1)};
}

double node_x(const Mesh1D& m, int i) { return (i + 1) * m.h; }

bool same_mesh(const Mesh1D& a, const Mesh1D& b) { return a.n == b.n; }

GridFunction make_grid(const Mesh1D& m) {
  return GridFunction{m, std::vector<double>(m.n, 0.0)};
}

GridFunction make_grid(const Mesh1D& m, std::vector<double> values) {
  check_size(m, values.size(), "make_grid");
  return GridFunction{m, std::move(values)};
}

DualGridFunction make_dual(const Mesh1D& m) {
  return DualGridFunction{m, std::vector<double>(m.n, 0.0)};
}

DualGridFunction make_dual(const Mesh1D& m, std::vector<double> values) {
  check_size(m, values.size(), "make_dual");
  return DualGridFunction{m, std::move(values)};
}

GridFunction sample(const Mesh1D& m, const std::function<double(double)>& f) {
  GridFunction u = make_grid(m);
  for (int i = 0; i < m.n; ++i) u.val[i] = f(node_x(m, i));
  return u;
}

GridFunction as_grid(const DualGridFunction& f) {
  return GridFunction{f.mesh, f.val};
}

DualGridFunction as_dual(const GridFunction& u) {
  return DualGridFunction{u.mesh, u.val};
}

double inner_H(const GridFunction& a, const GridFunction& b) {
  check_same(a.mesh, b.mesh, "inner_H");
  double s = 0.0;
  for (int i = 0; i < a.mesh.n; ++i) s += a.val[i] * b.val[i];
  return a.mesh.h * s;
}

double pairing(const DualGridFunction& f, const GridFunction& u) {
  check_same(f.mesh, u.mesh, "pairing");
  double s = 0.0;
  for (int i = 0; i < u.mesh.n; ++i) s += f.val[i] * u.val[i];
  return u.mesh.h * s;
}

double norm_H(const GridFunction& u) { return std::sqrt(inner_H(u, u)); }

double norm_H(const DualGridFunction& f) { return norm_H(as_grid(f)); }

DualGridFunction apply_R(const GridFunction& u) {
  const int n = u.mesh.n;
  const double h2 = u.mesh.h * u.mesh.h;
  DualGridFunction f = make_dual(u.mesh);
  for (int i = 0; i < n; ++i) {
    const double left = (i > 0) ? u.val[i - 1] : 0.0;
    const double right = (i + 1 < n) ? u.val[i + 1] : 0.0;
    f.val[i] = (2.0 * u.val[i] - left - right) / h2;
  }
  return f;
}

GridFunction solve_R(const DualGridFunction& f) {
  const int n = f.mesh.n;
  const double h2 = f.mesh.h * f.mesh.h;
  std::vector<double> sub(n, -1.0 / h2);
  std::vector<double> diag(n, 2.0 / h2);
  std::vector<double> sup(n, -1.0 / h2);
  return GridFunction{f.mesh, tridiag_solve(sub, std::move(diag), sup, f.val)};
}

double norm_V(const GridFunction& u) {
  return std::sqrt(pairing(apply_R(u), u));
}

double norm_Vstar(const DualGridFunction& f) {
  return std::sqrt(pairing(f, solve_R(f)));
}

double eigenvalue_R(const Mesh1D& m, int k) {
  if (k < 1 || k > m.n) {
    throw ValidationError("eigenvalue_R: k out of range");
  }
  const double c = std::cos(k * std::numbers::pi * m.h);
  return (2.0 - 2.0 * c) / (m.h * m.h);
}

GridFunction eigenvector_R(const Mesh1D& m, int k) {
  if (k < 1 || k > m.n) {
    throw ValidationError("eigenvector_R: k out of range");
  }
  GridFunction v = make_grid(m);
  for (int i = 0; i < m.n; ++i) v.val[i] = std::sin(k * std::numbers::pi * node_x(m, i));
  return v;
}

std::vector<EigenPair> eigenpairs(const Mesh1D& m) {
  std::vector<EigenPair> out;
  out.reserve(m.n);
  for (int k = 1; k <= m.n; ++k) {
    out.push_back(EigenPair{eigenvalue_R(m, k), eigenvector_R(m, k)});
  }
  return out;
}

DualGridFunction fractional_R(double s, const GridFunction& u) {
  if (!(s > 0.0 && s <= 1.0)) {
    throw ValidationError("fractional_R: s must lie in (0,1]");
  }
  const int n = u.mesh.n;
  DualGridFunction f = make_dual(u.mesh);
  // Squared H-norm of each sine mode is 1/2, so coefficients carry 2*inner_H.
  for (int k = 1; k <= n; ++k) {
    const GridFunction vk = eigenvector_R(u.mesh, k);
    const double ck = 2.0 * inner_H(u, vk);
    const double w = std::pow(eigenvalue_R(u.mesh, k), s) * ck;
    for (int i = 0; i < n; ++i) f.val[i] += w * vk.val[i];
  }
  return f;
}

void write_grid_csv(std::ostream& os, const GridFunction& u) {
  os << "# n=" << u.mesh.n << " h=" << fmt17(u.mesh.h) << "\n";
  for (int i = 0; i < u.mesh.n; ++i) {
    if (i > 0) os << ",";
    os << fmt17(u.val[i]);
  }
  os << "\n";
}

GridFunction read_grid_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("# n=", 0) != 0) {
    throw ParseError(1, "n", "expected header '# n=<n> h=<h>'");
  }
  int n = 0;
  {
    std::istringstream hs(header.substr(4));
    hs >> n;
    if (!hs || n < 2) throw ParseError(1, "n", "bad node count");
  }
  std::string row;
  if (!std::getline(is, row)) throw ParseError(2, "values", "missing row");
  std::vector<double> values;
  std::istringstream rs(row);
  std::string cell;
  while (std::getline(rs, cell, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ParseError(2, "values", "bad number '" + cell + "'");
    }
  }
  const Mesh1D m = make_mesh(n);
  check_size(m, values.size(), "read_grid_csv");
  return GridFunction{m, std::move(values)};
}

}  // namespace dnsde
