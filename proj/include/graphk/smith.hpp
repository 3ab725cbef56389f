// Smith normal form with recorded transformations, integer kernels and
// linear Diophantine solving.
//
// The pivot rule (minimal absolute value, earliest position on ties) is fixed
// so that repeated runs produce identical decompositions; downstream
// certificates depend on that.

#pragma once

#include "graphk/int_matrix.hpp"

#include <optional>
#include <vector>

namespace graphk {

struct SmithDecomposition {
  IntMatrix p;  // unimodular, rows x rows
  IntMatrix q;  // unimodular, cols x cols
  IntMatrix d;  // diagonal, p * a * q = d, d(i,i) >= 0, d(i,i) | d(i+1,i+1)

  std::size_t rank() const {
    std::size_t r = 0, n = std::min(d.rows(), d.cols());
    for (std::size_t i = 0; i < n; ++i)
      if (d(i, i) != 0) ++r;
    return r;
  }
  std::vector<Int> diagonal() const {
    std::size_t n = std::min(d.rows(), d.cols());
    std::vector<Int> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = d(i, i);
    return v;
  }
};

inline SmithDecomposition smith_normal_form(const IntMatrix& a) {
  std::size_t r = a.rows(), c = a.cols();
  SmithDecomposition s{IntMatrix::identity(r), IntMatrix::identity(c), a};
  IntMatrix& m = s.d;
  std::size_t nmin = std::min(r, c);

  for (std::size_t t = 0; t < nmin; ++t) {
    while (true) {
      // Minimal-absolute-value pivot in the trailing submatrix.
      std::size_t pi = r, pj = c;
      for (std::size_t i = t; i < r; ++i)
        for (std::size_t j = t; j < c; ++j)
          if (m(i, j) != 0 && (pi == r || abs(m(i, j)) < abs(m(pi, pj)))) {
            pi = i;
            pj = j;
          }
      if (pi == r) return s;  // trailing submatrix is zero
      if (pi != t) {
        m.swap_rows(t, pi);
        s.p.swap_rows(t, pi);
      }
      if (pj != t) {
        m.swap_cols(t, pj);
        s.q.swap_cols(t, pj);
      }

      bool clean = true;
      for (std::size_t i = t + 1; i < r; ++i) {
        if (m(i, t) == 0) continue;
        Int q = floor_div(m(i, t), m(t, t));
        m.add_row_multiple(i, t, -q);
        s.p.add_row_multiple(i, t, -q);
        if (m(i, t) != 0) clean = false;
      }
      for (std::size_t j = t + 1; j < c; ++j) {
        if (m(t, j) == 0) continue;
        Int q = floor_div(m(t, j), m(t, t));
        m.add_col_multiple(j, t, -q);
        s.q.add_col_multiple(j, t, -q);
        if (m(t, j) != 0) clean = false;
      }
      if (!clean) continue;

      // Divisibility repair: pull a non-divisible entry into row t.
      bool divisible = true;
      for (std::size_t i = t + 1; i < r && divisible; ++i)
        for (std::size_t j = t + 1; j < c && divisible; ++j)
          if (m(i, j) % m(t, t) != 0) {
            m.add_row_multiple(t, i, 1);
            s.p.add_row_multiple(t, i, 1);
            divisible = false;
          }
      if (divisible) break;
    }
    if (m(t, t) < 0) {
      m.negate_row(t);
      s.p.negate_row(t);
    }
  }
  return s;
}

// gcd of all entries; 0 iff the matrix is zero.
inline Int gcd_entries(const IntMatrix& a) {
  Int g = 0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) g = int_gcd(g, a(i, j));
  return g;
}

// Columns form a basis of { x : a * x = 0 }.
inline IntMatrix kernel_basis(const IntMatrix& a) {
  SmithDecomposition s = smith_normal_form(a);
  std::size_t rank = s.rank();
  std::vector<std::size_t> all_rows(a.cols()), free_cols;
  for (std::size_t i = 0; i < a.cols(); ++i) all_rows[i] = i;
  for (std::size_t j = rank; j < a.cols(); ++j) free_cols.push_back(j);
  return s.q.submatrix(all_rows, free_cols);
}

struct LinearSolution {
  IntMatrix particular;   // cols(a) x cols(b); a * particular = b
  IntMatrix homogeneous;  // kernel basis of a
};

// Exact solve of a * x = b (multi right-hand side).  Absent iff some column
// of b has no integer solution.
inline std::optional<LinearSolution> solve_linear(const IntMatrix& a, const IntMatrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("solve_linear: dimension mismatch");
  SmithDecomposition s = smith_normal_form(a);
  std::size_t rank = s.rank();
  IntMatrix pb = s.p * b;
  IntMatrix y(a.cols(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      if (i < rank) {
        if (pb(i, j) % s.d(i, i) != 0) return std::nullopt;
        if (i < a.cols()) y(i, j) = pb(i, j) / s.d(i, i);
      } else if (pb(i, j) != 0) {
        return std::nullopt;
      }
    }
  }
  LinearSolution sol;
  sol.particular = s.q * y;
  std::vector<std::size_t> all_rows(a.cols()), free_cols;
  for (std::size_t i = 0; i < a.cols(); ++i) all_rows[i] = i;
  for (std::size_t j = rank; j < a.cols(); ++j) free_cols.push_back(j);
  sol.homogeneous = s.q.submatrix(all_rows, free_cols);
  return sol;
}

// Convenience: does a * x = b admit an integer solution?
inline bool solvable(const IntMatrix& a, const IntMatrix& b) {
  return solve_linear(a, b).has_value();
}

}  // namespace graphk
