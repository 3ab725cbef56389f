// Finitely generated abelian groups as presentations, homomorphisms between
// them, and the handful of lattice computations (kernel/image comparisons)
// that exactness and isomorphism checking reduce to.
//
// A presentation is Z^g / im(R) where R's columns are the relations.  Two
// presentations describe isomorphic groups iff their invariant factor
// multisets (1s dropped, 0s counted as free ranks) agree.

#pragma once

#include "graphk/smith.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

namespace graphk {

inline IntMatrix hstack(const IntMatrix& a, const IntMatrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("hstack row mismatch");
  IntMatrix r(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) r(i, a.cols() + j) = b(i, j);
  }
  return r;
}

struct FinAbPresentation {
  std::vector<std::string> generator_labels;
  IntMatrix relation_matrix;  // generators x relations
  SmithDecomposition snf;     // of relation_matrix
  std::vector<Int> invariant_factors;  // nonunit torsion ascending, one 0 per free rank

  std::size_t generators() const { return generator_labels.size(); }
  std::size_t free_rank() const { return generators() - snf.rank(); }
  bool is_trivial() const { return invariant_factors.empty(); }
  bool is_finite() const {
    for (const auto& f : invariant_factors)
      if (f == 0) return false;
    return true;
  }
  Int order() const {  // 0 encodes "infinite"
    Int n = 1;
    for (const auto& f : invariant_factors) {
      if (f == 0) return 0;
      n *= f;
    }
    return n;
  }

  // Canonical coordinates of a class: SNF basis, torsion reduced mod d_i.
  std::vector<Int> canonical_form(const std::vector<Int>& x) const {
    if (x.size() != generators()) throw std::invalid_argument("element size mismatch");
    IntMatrix y = snf.p * IntMatrix::column(x);
    std::vector<Int> out(generators());
    std::size_t rank = snf.rank();
    for (std::size_t i = 0; i < generators(); ++i) {
      if (i < rank)
        out[i] = snf.d(i, i) == 1 ? Int(0) : floor_mod(y(i, 0), snf.d(i, i));
      else
        out[i] = y(i, 0);
    }
    return out;
  }

  bool elements_equal(const std::vector<Int>& x, const std::vector<Int>& y) const {
    return canonical_form(x) == canonical_form(y);
  }
  bool is_zero_element(const std::vector<Int>& x) const {
    for (const auto& v : canonical_form(x))
      if (v != 0) return false;
    return true;
  }
};

inline FinAbPresentation make_presentation(std::vector<std::string> labels,
                                           const IntMatrix& relations) {
  if (labels.size() != relations.rows())
    throw std::invalid_argument("presentation: label/relation row mismatch");
  FinAbPresentation g;
  g.generator_labels = std::move(labels);
  g.relation_matrix = relations;
  g.snf = smith_normal_form(relations);
  std::size_t rank = g.snf.rank();
  for (std::size_t i = 0; i < rank; ++i)
    if (g.snf.d(i, i) != 1) g.invariant_factors.push_back(g.snf.d(i, i));
  for (std::size_t i = rank; i < g.generators(); ++i) g.invariant_factors.push_back(0);
  return g;
}

inline FinAbPresentation cokernel(const IntMatrix& a) {
  std::vector<std::string> labels(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) labels[i] = "g" + std::to_string(i);
  return make_presentation(std::move(labels), a);
}

inline bool invariant_factors_match(const FinAbPresentation& a, const FinAbPresentation& b) {
  return a.invariant_factors == b.invariant_factors;  // both stored sorted-by-construction
}

struct GroupHom {
  FinAbPresentation domain;
  FinAbPresentation codomain;
  IntMatrix matrix;  // codomain generators x domain generators

  bool well_defined() const {
    // matrix * (domain relations) must land in the codomain relation span.
    return solvable(codomain.relation_matrix, matrix * domain.relation_matrix);
  }
};

inline GroupHom identity_hom(const FinAbPresentation& g) {
  return GroupHom{g, g, IntMatrix::identity(g.generators())};
}

inline GroupHom zero_hom(const FinAbPresentation& dom, const FinAbPresentation& cod) {
  return GroupHom{dom, cod, IntMatrix::zero(cod.generators(), dom.generators())};
}

inline GroupHom compose(const GroupHom& second, const GroupHom& first) {
  GroupHom h{first.domain, second.codomain, second.matrix * first.matrix};
  if (!h.well_defined()) throw std::invalid_argument("composite hom not well-defined");
  return h;
}

// Equality as maps between the presented groups.
inline bool homs_equal(const GroupHom& f, const GroupHom& g) {
  if (f.matrix.rows() != g.matrix.rows() || f.matrix.cols() != g.matrix.cols()) return false;
  return solvable(f.codomain.relation_matrix, f.matrix - g.matrix);
}

inline bool is_zero_hom(const GroupHom& f) {
  return solvable(f.codomain.relation_matrix, f.matrix);
}

// Generators of the lattice { x in Z^dom : M x in im(R_cod) }, as columns.
inline IntMatrix hom_kernel_lattice(const IntMatrix& m, const IntMatrix& cod_relations) {
  IntMatrix stacked = hstack(m, cod_relations);
  IntMatrix k = kernel_basis(stacked);
  std::vector<std::size_t> top(m.cols()), all_cols(k.cols());
  for (std::size_t i = 0; i < m.cols(); ++i) top[i] = i;
  for (std::size_t j = 0; j < k.cols(); ++j) all_cols[j] = j;
  return k.submatrix(top, all_cols);
}

inline bool is_injective(const GroupHom& f) {
  IntMatrix lat = hom_kernel_lattice(f.matrix, f.codomain.relation_matrix);
  // Every lattice generator must already be a relation of the domain.
  return solvable(f.domain.relation_matrix, lat);
}

inline bool is_surjective(const GroupHom& f) {
  FinAbPresentation c = cokernel(hstack(f.matrix, f.codomain.relation_matrix));
  return c.is_trivial();
}

inline bool is_isomorphism(const GroupHom& f) {
  return f.well_defined() && is_injective(f) && is_surjective(f);
}

// Exactness at the middle group of  F --f--> G --g--> H.
inline bool exact_at(const GroupHom& f, const GroupHom& g) {
  // im f contained in ker g:
  if (!solvable(g.codomain.relation_matrix, g.matrix * f.matrix)) return false;
  // ker g contained in im f + relations:
  IntMatrix lat = hom_kernel_lattice(g.matrix, g.codomain.relation_matrix);
  IntMatrix span = hstack(f.matrix, f.codomain.relation_matrix);
  return solvable(span, lat);
}

// ---------------------------------------------------------------------------
// Bounded enumeration of isomorphisms between two presentations.
//
// Works in SNF coordinates: a hom is a matrix K with d2_i | K(i,j) * d1_j.
// Torsion entries range over their residue classes, free-to-free entries over
// [-free_bound, free_bound].  Candidates are emitted in a fixed odometer
// order; the callback returns true to stop.  Used by the invariant-iso search
// and by the lifting tests.
// ---------------------------------------------------------------------------

struct IsoEnumeration {
  long budget = 200000;  // candidate matrices examined
  long free_bound = 1;
};

inline bool enumerate_isos(const FinAbPresentation& g1, const FinAbPresentation& g2,
                           const IsoEnumeration& opts,
                           const std::function<bool(const GroupHom&)>& cb) {
  if (!invariant_factors_match(g1, g2)) return false;
  std::size_t n1 = g1.generators(), n2 = g2.generators();
  std::size_t r1 = g1.snf.rank(), r2 = g2.snf.rank();
  std::vector<Int> d1 = g1.snf.diagonal(), d2 = g2.snf.diagonal();

  // Candidate values per entry of K (n2 x n1), in canonical coordinates.
  std::vector<std::vector<Int>> choices(n2 * n1);
  for (std::size_t i = 0; i < n2; ++i) {
    for (std::size_t j = 0; j < n1; ++j) {
      std::vector<Int>& ch = choices[i * n1 + j];
      bool i_tors = i < r2, j_tors = j < r1;
      if (i_tors && d2[i] == 1) {
        ch = {0};  // unit coordinate, anything is congruent to 0
      } else if (i_tors && j_tors) {
        Int step = d2[i] / int_gcd(d2[i], d1[j]);
        for (Int v = 0; v < d2[i]; v += step) ch.push_back(v);
      } else if (i_tors && !j_tors) {
        for (Int v = 0; v < d2[i]; ++v) ch.push_back(v);
      } else if (!i_tors && j_tors) {
        ch = {0};  // no nonzero hom from torsion into a free coordinate
      } else {
        ch.push_back(0);
        for (long v = 1; v <= opts.free_bound; ++v) {
          ch.push_back(v);
          ch.push_back(-v);
        }
      }
    }
  }

  IntMatrix p1 = g1.snf.p;
  IntMatrix p2_inv = unimodular_inverse(g2.snf.p);

  std::vector<std::size_t> idx(n2 * n1, 0);
  long examined = 0;
  while (true) {
    if (examined++ >= opts.budget) return false;
    IntMatrix k(n2, n1);
    for (std::size_t i = 0; i < n2; ++i)
      for (std::size_t j = 0; j < n1; ++j) k(i, j) = choices[i * n1 + j][idx[i * n1 + j]];
    GroupHom h{g1, g2, p2_inv * k * p1};
    if (is_isomorphism(h) && cb(h)) return true;

    // odometer step
    std::size_t pos = 0;
    for (; pos < idx.size(); ++pos) {
      if (++idx[pos] < choices[pos].size()) break;
      idx[pos] = 0;
    }
    if (pos == idx.size()) return false;
  }
}

}  // namespace graphk
