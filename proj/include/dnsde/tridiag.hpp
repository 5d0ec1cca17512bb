#pragma once

#include <cstddef>
#include <vector>

namespace dnsde {

// Thomas elimination without pivoting. Every system assembled in this
// codebase is strictly diagonally dominant, which keeps this stable.
// sub[i] multiplies x[i-1] in row i (sub[0] unused), sup[i] multiplies
// x[i+1] (sup[n-1] unused). diag and rhs are consumed.
inline std::vector<double> tridiag_solve(const std::vector<double>& sub,
                                         std::vector<double> diag,
                                         const std::vector<double>& sup,
                                         std::vector<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = sub[i] / diag[i - 1];
    diag[i] -= m * sup[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
  }
  return x;
}

}  // namespace dnsde
