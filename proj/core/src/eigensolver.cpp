#include "quanta/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace quanta::linalg {

namespace {

inline double hypot_stable(double a, double b) {
  const double absa = std::fabs(a), absb = std::fabs(b);
  if (absa > absb) {
    const double r = absb / absa;
    return absa * std::sqrt(1.0 + r * r);
  }
  if (absb == 0.0) return 0.0;
  const double r = absa / absb;
  return absb * std::sqrt(1.0 + r * r);
}

// Householder reduction of the symmetric matrix in `a` (row-major, n x n) to
// tridiagonal form. On exit `a` holds the accumulated orthogonal transform,
// `d` the diagonal and `e` the subdiagonal (e[0] unused).
void tred2(std::vector<double>& a, int n, std::vector<double>& d,
           std::vector<double>& e) {
  auto A = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };

  for (int i = n - 1; i >= 1; --i) {
    const int l = i - 1;
    double h = 0.0, scale = 0.0;
    if (l > 0) {
      for (int k = 0; k <= l; ++k) scale += std::fabs(A(i, k));
      if (scale == 0.0) {
        e[i] = A(i, l);
      } else {
        for (int k = 0; k <= l; ++k) {
          A(i, k) /= scale;
          h += A(i, k) * A(i, k);
        }
        double f = A(i, l);
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        A(i, l) = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          A(j, i) = A(i, j) / h;
          g = 0.0;
          const double* row_j = &a[static_cast<std::size_t>(j) * n];
          const double* row_i = &a[static_cast<std::size_t>(i) * n];
          for (int k = 0; k <= j; ++k) g += row_j[k] * row_i[k];
          for (int k = j + 1; k <= l; ++k) g += A(k, j) * row_i[k];
          e[j] = g / h;
          f += e[j] * A(i, j);
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = A(i, j);
          e[j] = g = e[j] - hh * f;
          double* row_j = &a[static_cast<std::size_t>(j) * n];
          const double* row_i = &a[static_cast<std::size_t>(i) * n];
          for (int k = 0; k <= j; ++k) row_j[k] -= f * e[k] + g * row_i[k];
        }
      }
    } else {
      e[i] = A(i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    const int l = i - 1;
    if (d[i] != 0.0) {
      for (int j = 0; j <= l; ++j) {
        double g = 0.0;
        for (int k = 0; k <= l; ++k) g += A(i, k) * A(k, j);
        for (int k = 0; k <= l; ++k) A(k, j) -= g * A(k, i);
      }
    }
    d[i] = A(i, i);
    A(i, i) = 1.0;
    for (int j = 0; j <= l; ++j) A(j, i) = A(i, j) = 0.0;
  }
}

// Implicit-shift QL on the tridiagonal (d, e), rotating the rows of `zt`.
// zt is n x n with row j holding the jth transform column (so Givens
// rotations touch two contiguous rows). Returns total iterations.
int tql2(std::vector<double>& d, std::vector<double>& e, int n,
         std::vector<double>& zt, int max_iter) {
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  int total_iter = 0;

  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) + dd == dd) break;
      }
      if (m != l) {
        if (iter++ == max_iter)
          throw std::runtime_error(
              "implicit QL failed to converge for eigenvalue " +
              std::to_string(l) + " after " + std::to_string(max_iter) +
              " iterations (" + std::to_string(total_iter) + " total)");
        ++total_iter;
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = hypot_stable(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::fabs(r) : -std::fabs(r)));
        double s = 1.0, c = 1.0, p = 0.0;
        int i = m - 1;
        for (; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          e[i + 1] = r = hypot_stable(f, g);
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          d[i + 1] = g + (p = s * r);
          g = c * r - b;
          double* row_lo = &zt[static_cast<std::size_t>(i) * n];
          double* row_hi = &zt[static_cast<std::size_t>(i + 1) * n];
          for (int k = 0; k < n; ++k) {
            f = row_hi[k];
            row_hi[k] = s * row_lo[k] + c * f;
            row_lo[k] = c * row_lo[k] - s * f;
          }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  return total_iter;
}

}  // namespace

SymmetricEigenResult symmetric_eigen(const Eigen::MatrixXd& input) {
  if (input.rows() != input.cols())
    throw std::invalid_argument("matrix must be square");
  const int n = static_cast<int>(input.rows());
  if (n < 1) throw std::invalid_argument("matrix must be nonempty");

  // Row-major working copy (symmetric input, so no transpose needed).
  std::vector<double> a(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      a[static_cast<std::size_t>(i) * n + j] =
          0.5 * (input(i, j) + input(j, i));

  std::vector<double> d(n), e(n);
  tred2(a, n, d, e);

  // Transpose the accumulated transform so each eigenvector is a contiguous
  // row during the QL rotations.
  std::vector<double> zt(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      zt[static_cast<std::size_t>(j) * n + i] = a[static_cast<std::size_t>(i) * n + j];

  const int iterations = tql2(d, e, n, zt, 50);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return d[x] < d[y]; });

  SymmetricEigenResult result;
  result.eigenvalues.resize(n);
  result.eigenvectors.resize(n, n);
  result.ql_iterations = iterations;
  for (int j = 0; j < n; ++j) {
    result.eigenvalues[j] = d[order[j]];
    const double* row = &zt[static_cast<std::size_t>(order[j]) * n];
    for (int i = 0; i < n; ++i) result.eigenvectors(i, j) = row[i];
  }
  return result;
}

}  // namespace quanta::linalg
