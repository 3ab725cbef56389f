// Reduced filtered K-theory of a finite graph: the K0/K1 groups of the gauge
// simple subquotients, K0 of the canonical open sets, the connecting maps of
// the six-term sequences, the class of the unit, and isomorphisms between
// two such invariants (verification, matrix-induced construction, bounded
// search).
//
// Identifications: K0 of the ideal pair (H, H0) is cok(B<H\H0>^T) on the
// vertex generators, K1 is ker(B<H\H0>^T); with the ideal's vertices first,
// B<H>^T is block upper triangular, which yields the explicit inclusion,
// quotient and index maps below.  The exponential map K0 -> K1 vanishes in
// this setting (real rank zero); the exactness test suite pins that down.

#pragma once

#include "graphk/block.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace graphk {

struct FkError : std::runtime_error {
  explicit FkError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::vector<std::size_t> set_difference(const std::vector<std::size_t>& a,
                                               const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline bool subset_of(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// Free presentation with one generator per kernel basis column.
inline FinAbPresentation free_presentation(std::size_t rank) {
  std::vector<std::string> labels(rank);
  for (std::size_t i = 0; i < rank; ++i) labels[i] = "k" + std::to_string(i);
  return make_presentation(std::move(labels), IntMatrix(rank, 0));
}

}  // namespace detail

// K-theory of the gauge subquotient attached to nested hereditary saturated
// sets h0 within h: principal submatrix of B on h \ h0, rows of vertices
// singular in the ambient graph removed.
struct SubquotientK {
  std::vector<std::size_t> support;        // h \ h0, ascending vertex indices
  std::vector<std::size_t> regular;        // regular vertices of the support
  FinAbPresentation k0;                    // cok(Bsub^T), generators = support
  IntMatrix k1_basis;                      // ker(Bsub^T) basis, coords = regular
  FinAbPresentation k1;                    // free on the basis columns
};

inline SubquotientK subquotient_k(const Graph& g, const std::vector<std::size_t>& h,
                                  const std::vector<std::size_t>& h0) {
  if (!detail::subset_of(h0, h)) throw FkError("subquotient: h0 is not contained in h");
  if (!is_hereditary_saturated(g, h)) throw FkError("subquotient: h not hereditary saturated");
  if (!is_hereditary_saturated(g, h0))
    throw FkError("subquotient: h0 not hereditary saturated");
  SubquotientK s;
  s.support = detail::set_difference(h, h0);
  for (std::size_t v : s.support)
    if (g.is_regular(v)) s.regular.push_back(v);
  IntMatrix b = b_matrix(g);
  IntMatrix bsub = b.submatrix(s.regular, s.support);
  std::vector<std::string> labels;
  for (std::size_t v : s.support) labels.push_back(g.vertices[v]);
  s.k0 = make_presentation(labels, bsub.transpose());
  s.k1_basis = kernel_basis(bsub.transpose());
  s.k1 = detail::free_presentation(s.k1_basis.cols());
  return s;
}

// The maps of the cyclic sequence attached to h0 within h.
struct SixTerm {
  SubquotientK ideal, total, quotient;
  GroupHom incl;     // K0(ideal) -> K0(total)
  GroupHom quot;     // K0(total) -> K0(quotient)
  GroupHom index;    // K1(quotient) -> K0(ideal)
  GroupHom k1_incl;  // K1(ideal) -> K1(total)
  GroupHom k1_quot;  // K1(total) -> K1(quotient)
};

inline SixTerm six_term(const Graph& g, const std::vector<std::size_t>& h,
                        const std::vector<std::size_t>& h0) {
  SixTerm st;
  st.ideal = subquotient_k(g, h0, {});
  st.total = subquotient_k(g, h, {});
  st.quotient = subquotient_k(g, h, h0);

  auto pos_in = [](const std::vector<std::size_t>& where, std::size_t v) {
    return static_cast<std::size_t>(
        std::find(where.begin(), where.end(), v) - where.begin());
  };

  // incl: extend by zero on vertex generators.
  IntMatrix mi(st.total.support.size(), st.ideal.support.size());
  for (std::size_t j = 0; j < st.ideal.support.size(); ++j)
    mi(pos_in(st.total.support, st.ideal.support[j]), j) = 1;
  st.incl = GroupHom{st.ideal.k0, st.total.k0, mi};

  // quot: restrict coordinates to the quotient support.
  IntMatrix mq(st.quotient.support.size(), st.total.support.size());
  for (std::size_t j = 0; j < st.total.support.size(); ++j) {
    std::size_t v = st.total.support[j];
    auto it = std::find(st.quotient.support.begin(), st.quotient.support.end(), v);
    if (it != st.quotient.support.end())
      mq(static_cast<std::size_t>(it - st.quotient.support.begin()), j) = 1;
  }
  st.quot = GroupHom{st.total.k0, st.quotient.k0, mq};

  // index: x in ker(Bquot^T) maps to [C^T x], C = B restricted to rows
  // (regular quotient vertices), columns h0.
  IntMatrix b = b_matrix(g);
  IntMatrix c = b.submatrix(st.quotient.regular, st.ideal.support);
  st.index = GroupHom{st.quotient.k1, st.ideal.k0, c.transpose() * st.quotient.k1_basis};

  // k1_incl: extension by zero on regular coordinates, expressed in the basis.
  IntMatrix emb(st.total.regular.size(), st.ideal.k1_basis.cols());
  for (std::size_t j = 0; j < st.ideal.k1_basis.cols(); ++j)
    for (std::size_t i = 0; i < st.ideal.regular.size(); ++i)
      emb(pos_in(st.total.regular, st.ideal.regular[i]), j) = st.ideal.k1_basis(i, j);
  auto sol = solve_linear(st.total.k1_basis, emb);
  if (!sol) throw FkError("six_term: ideal kernel does not embed");
  st.k1_incl = GroupHom{st.ideal.k1, st.total.k1, sol->particular};

  // k1_quot: restriction of coordinates, expressed in the quotient basis.
  IntMatrix restr(st.quotient.regular.size(), st.total.k1_basis.cols());
  for (std::size_t j = 0; j < st.total.k1_basis.cols(); ++j)
    for (std::size_t i = 0; i < st.quotient.regular.size(); ++i)
      restr(i, j) = st.total.k1_basis(
          pos_in(st.total.regular, st.quotient.regular[i]), j);
  auto solq = solve_linear(st.quotient.k1_basis, restr);
  if (!solq) throw FkError("six_term: kernel restriction misses the quotient kernel");
  st.k1_quot = GroupHom{st.total.k1, st.quotient.k1, solq->particular};

  return st;
}

// Exactness of the assembled cyclic sequence at all six nodes; both
// exponential positions carry the zero map.
inline bool six_term_exact(const SixTerm& st) {
  GroupHom expo = zero_hom(st.quotient.k0, st.ideal.k1);
  return exact_at(st.k1_incl, st.k1_quot) && exact_at(st.k1_quot, st.index) &&
         exact_at(st.index, st.incl) && exact_at(st.incl, st.quot) &&
         exact_at(st.quot, expo) && exact_at(expo, st.k1_incl);
}

// ---------------------------------------------------------------------------
// The invariant.
// ---------------------------------------------------------------------------

struct FKInvariant {
  Graph graph;
  ComponentPoset poset;

  std::vector<unsigned> opens;                       // I_0 as component masks, sorted
  std::map<unsigned, FinAbPresentation> k0_open;     // per open
  std::vector<FinAbPresentation> k0_simple;          // per component
  std::vector<FinAbPresentation> k1_simple;          // per component (free)
  std::vector<IntMatrix> k1_basis;                   // per component

  struct Sequence {  // K1(p) -> K0(bd p) -> K0(tilde p) -> K0(simple p)
    GroupHom index, incl, quot;
  };
  std::vector<Sequence> seq;                         // per component

  std::vector<std::pair<std::size_t, std::size_t>> c_pairs;
  std::map<std::pair<std::size_t, std::size_t>, GroupHom> c_maps;

  UnitClass unit;

  unsigned tilde(std::size_t p) const { return poset.down_set(p); }
  unsigned boundary(std::size_t p) const { return poset.down_set(p) & ~(1u << p); }
};

inline FKInvariant fk_invariant(const Graph& g) {
  if (g.size() == 0) throw FkError("empty graph");
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (g.is_sink(v)) throw FkError("graph has a sink at vertex " + g.vertices[v]);
    if (g.is_source(v)) throw FkError("graph has a source at vertex " + g.vertices[v]);
  }
  FKInvariant inv;
  inv.graph = g;
  inv.poset = condensation(g);
  for (std::size_t c = 0; c < inv.poset.size(); ++c)
    if (inv.poset.kinds[c] == ComponentKind::Cyclic)
      throw FkError("Condition (K) fails: component of vertex " +
                    g.vertices[inv.poset.components[c][0]] + " is a simple cycle");

  std::size_t m = inv.poset.size();
  std::set<unsigned> open_set;
  for (std::size_t p = 0; p < m; ++p) {
    open_set.insert(inv.tilde(p));
    open_set.insert(inv.boundary(p));
  }
  inv.opens.assign(open_set.begin(), open_set.end());
  for (unsigned mask : inv.opens) {
    auto verts = inv.poset.vertices_of_mask(mask);
    inv.k0_open.emplace(mask, subquotient_k(g, verts, {}).k0);
  }

  for (std::size_t p = 0; p < m; ++p) {
    auto tilde_v = inv.poset.vertices_of_mask(inv.tilde(p));
    auto bd_v = inv.poset.vertices_of_mask(inv.boundary(p));
    SubquotientK sq = subquotient_k(g, tilde_v, bd_v);
    inv.k0_simple.push_back(sq.k0);
    inv.k1_simple.push_back(sq.k1);
    inv.k1_basis.push_back(sq.k1_basis);
    SixTerm st = six_term(g, tilde_v, bd_v);
    // Replace the presentations with the shared open-set copies so maps can
    // be compared across the structure.
    inv.seq.push_back(FKInvariant::Sequence{
        GroupHom{st.index.domain, inv.k0_open.at(inv.boundary(p)), st.index.matrix},
        GroupHom{inv.k0_open.at(inv.boundary(p)), inv.k0_open.at(inv.tilde(p)),
                 st.incl.matrix},
        GroupHom{inv.k0_open.at(inv.tilde(p)), inv.k0_simple[p], st.quot.matrix}});
  }

  for (std::size_t p = 0; p < m; ++p)
    for (std::size_t q = 0; q < m; ++q) {
      if (p == q) continue;
      unsigned tp = inv.tilde(p), bq = inv.boundary(q);
      if ((tp & bq) != tp || tp == bq) continue;  // need tilde p strictly inside bd q
      bool blocked = false;
      for (std::size_t r = 0; r < m && !blocked; ++r) {
        unsigned tr = inv.tilde(r);
        if (tr != tp && (tr & tp) == tp && (tr & bq) == tr) blocked = true;
      }
      if (blocked) continue;
      inv.c_pairs.emplace_back(p, q);
      // extension-by-zero on vertex generators
      auto from = inv.poset.vertices_of_mask(tp), to = inv.poset.vertices_of_mask(bq);
      IntMatrix cm(to.size(), from.size());
      for (std::size_t j = 0; j < from.size(); ++j) {
        auto it = std::find(to.begin(), to.end(), from[j]);
        cm(static_cast<std::size_t>(it - to.begin()), j) = 1;
      }
      inv.c_maps.emplace(std::make_pair(p, q),
                         GroupHom{inv.k0_open.at(tp), inv.k0_open.at(bq), cm});
    }

  inv.unit = unit_class(g);
  return inv;
}

// ---------------------------------------------------------------------------
// Isomorphisms of invariants.
// ---------------------------------------------------------------------------

struct FKIso {
  std::vector<std::size_t> rho;                 // component permutation
  std::map<unsigned, GroupHom> kappa0_open;     // keyed by source open mask
  std::vector<GroupHom> kappa0_simple;
  std::vector<GroupHom> kappa1_simple;
  std::optional<GroupHom> kappa0_total;         // present for matrix-backed isos

  unsigned map_mask(unsigned mask) const {
    unsigned out = 0;
    for (std::size_t i = 0; i < rho.size(); ++i)
      if (mask >> i & 1) out |= 1u << rho[i];
    return out;
  }
};

inline bool poset_isomorphism(const ComponentPoset& a, const ComponentPoset& b,
                              const std::vector<std::size_t>& rho) {
  if (a.size() != b.size() || rho.size() != a.size()) return false;
  std::vector<bool> seen(a.size(), false);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (rho[i] >= a.size() || seen[rho[i]]) return false;
    seen[rho[i]] = true;
  }
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if (a.leq[i][j] != b.leq[rho[i]][rho[j]]) return false;
  return true;
}

// Full check: rho a poset isomorphism, every kappa an isomorphism, every
// ladder square commutes.  On failure, `why` names the first failing square.
inline bool verify_fk_iso(const FKInvariant& a, const FKInvariant& b, const FKIso& iso,
                          std::string* why = nullptr) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (!poset_isomorphism(a.poset, b.poset, iso.rho)) return fail("rho is not a poset isomorphism");
  std::size_t m = a.poset.size();
  if (iso.kappa0_simple.size() != m || iso.kappa1_simple.size() != m)
    return fail("kappa family size mismatch");
  for (unsigned mask : a.opens) {
    auto it = iso.kappa0_open.find(mask);
    if (it == iso.kappa0_open.end()) return fail("missing kappa0 on an open set");
    if (!is_isomorphism(it->second)) return fail("kappa0 on an open set is not an isomorphism");
  }
  for (std::size_t p = 0; p < m; ++p) {
    if (!is_isomorphism(iso.kappa0_simple[p])) return fail("kappa0 simple not iso");
    if (!is_isomorphism(iso.kappa1_simple[p])) return fail("kappa1 simple not iso");
  }
  for (std::size_t p = 0; p < m; ++p) {
    std::size_t p2 = iso.rho[p];
    const GroupHom& k_bd = iso.kappa0_open.at(a.boundary(p));
    const GroupHom& k_t = iso.kappa0_open.at(a.tilde(p));
    // index square
    if (!homs_equal(compose(b.seq[p2].index, iso.kappa1_simple[p]),
                    compose(k_bd, a.seq[p].index)))
      return fail("index ladder fails at component " + std::to_string(p));
    // inclusion square
    if (!homs_equal(compose(b.seq[p2].incl, k_bd), compose(k_t, a.seq[p].incl)))
      return fail("inclusion ladder fails at component " + std::to_string(p));
    // quotient square
    if (!homs_equal(compose(b.seq[p2].quot, k_t),
                    compose(iso.kappa0_simple[p], a.seq[p].quot)))
      return fail("quotient ladder fails at component " + std::to_string(p));
  }
  for (const auto& pq : a.c_pairs) {
    auto pq2 = std::make_pair(iso.rho[pq.first], iso.rho[pq.second]);
    const GroupHom& c1 = a.c_maps.at(pq);
    const GroupHom& c2 = b.c_maps.at(pq2);
    if (!homs_equal(compose(c2, iso.kappa0_open.at(a.tilde(pq.first))),
                    compose(iso.kappa0_open.at(a.boundary(pq.second)), c1)))
      return fail("c-map ladder fails at pair (" + std::to_string(pq.first) + "," +
                  std::to_string(pq.second) + ")");
  }
  return true;
}

// ---------------------------------------------------------------------------
// The isomorphism induced by a GL_P-equivalence between (possibly padded)
// bullet matrices of two graphs: V^T acts on K0, (U^T)^{-1} on K1.
// ---------------------------------------------------------------------------

namespace detail {

struct PaddedSide {
  GraphBlockView view;
  MultiIndex pad_rows, pad_cols;
  // block coordinate -> vertex index, or npos for padding coordinates
  std::vector<std::size_t> col_vertex, row_vertex;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

inline PaddedSide align_padded(const BlockMatrix& padded, const Graph& g,
                               const char* side) {
  PaddedSide s;
  s.view = block_view(g);
  const BlockMatrix& base = s.view.b;
  if (padded.blocks() != base.blocks())
    throw FkError(std::string("induced_iso: block count mismatch on ") + side);
  if (padded.leq != base.leq)
    throw FkError(std::string("induced_iso: poset mismatch on ") + side);
  for (std::size_t j = 0; j < base.blocks(); ++j) {
    if (padded.col_blocks[j].size() < base.col_blocks[j].size() ||
        padded.row_blocks[j].size() < base.row_blocks[j].size())
      throw FkError(std::string("induced_iso: matrix smaller than graph on ") + side);
    s.pad_cols.sizes.push_back(padded.col_blocks[j].size() - base.col_blocks[j].size());
    s.pad_rows.sizes.push_back(padded.row_blocks[j].size() - base.row_blocks[j].size());
  }
  BlockMatrix expect = minus_iota_minus(base, s.pad_cols);
  if (s.pad_rows.sizes != s.pad_cols.sizes || expect.matrix != padded.matrix)
    throw FkError(std::string("induced_iso: matrix is not an iota-padded bullet matrix (") +
                  side + ")");
  MultiIndex prows = padded.row_index(), pcols = padded.col_index();
  s.col_vertex.assign(pcols.total(), PaddedSide::npos);
  s.row_vertex.assign(prows.total(), PaddedSide::npos);
  std::size_t bc = 0, br = 0;
  MultiIndex brows = base.row_index(), bcols = base.col_index();
  for (std::size_t j = 0; j < base.blocks(); ++j) {
    for (std::size_t k = 0; k < bcols.sizes[j]; ++k)
      s.col_vertex[pcols.offset(j) + k] = s.view.col_vertex[bc++];
    for (std::size_t k = 0; k < brows.sizes[j]; ++k)
      s.row_vertex[prows.offset(j) + k] = s.view.row_vertex[br++];
  }
  return s;
}

// kappa0 on the down-set mask: project(V^T)inject between vertex cokernels.
inline IntMatrix kappa0_matrix(const IntMatrix& v, const BlockMatrix& shape, unsigned mask,
                               const PaddedSide& src, const PaddedSide& tgt,
                               const std::vector<std::size_t>& src_support,
                               const std::vector<std::size_t>& tgt_support) {
  auto coords = shape.col_coords_of(mask);
  auto pos_of_vertex = [&](const PaddedSide& side, std::size_t vert) {
    for (std::size_t c : coords)
      if (side.col_vertex[c] == vert) return c;
    throw FkError("induced_iso: vertex missing from down-set coordinates");
  };
  IntMatrix k(tgt_support.size(), src_support.size());
  for (std::size_t j = 0; j < src_support.size(); ++j) {
    std::size_t pv = pos_of_vertex(src, src_support[j]);
    for (std::size_t i = 0; i < tgt_support.size(); ++i) {
      std::size_t pw = pos_of_vertex(tgt, tgt_support[i]);
      k(i, j) = v(pv, pw);  // (V^T)[w, v] = V[v, w]
    }
  }
  return k;
}

}  // namespace detail

// Build and verify the induced invariant isomorphism; throws FkError when the
// certificate is invalid (a non-commuting ladder is never silently accepted).
inline FKIso induced_iso(const Equivalence& e, const FKInvariant& inv1,
                         const FKInvariant& inv2) {
  if (!verify_equivalence(e)) throw FkError("induced_iso: equivalence does not verify");
  detail::PaddedSide src = detail::align_padded(e.source, inv1.graph, "source");
  detail::PaddedSide tgt = detail::align_padded(e.target, inv2.graph, "target");
  if (src.view.poset.leq != tgt.view.poset.leq)
    throw FkError("induced_iso: posets of the two graphs differ");

  std::size_t m = inv1.poset.size();
  FKIso iso;
  iso.rho.resize(m);
  for (std::size_t i = 0; i < m; ++i) iso.rho[i] = i;

  auto support_of = [](const FKInvariant& inv, unsigned mask) {
    return inv.poset.vertices_of_mask(mask);
  };

  for (unsigned mask : inv1.opens) {
    IntMatrix k = detail::kappa0_matrix(e.v.matrix, e.source, mask, src, tgt,
                                        support_of(inv1, mask), support_of(inv2, mask));
    iso.kappa0_open.emplace(mask, GroupHom{inv1.k0_open.at(mask),
                                           inv2.k0_open.at(mask), k});
  }
  // total K0 for the unit check
  unsigned full = (m >= 32) ? ~0u : ((1u << m) - 1);
  {
    std::vector<std::size_t> all1(inv1.graph.size()), all2(inv2.graph.size());
    std::iota(all1.begin(), all1.end(), 0);
    std::iota(all2.begin(), all2.end(), 0);
    IntMatrix k = detail::kappa0_matrix(e.v.matrix, e.source, full, src, tgt,
                                        all1, all2);
    // reorder to file order on both sides (vertices_of_mask is file-sorted,
    // all1/all2 already are)
    iso.kappa0_total = GroupHom{inv1.unit.group, inv2.unit.group, k};
  }

  for (std::size_t p = 0; p < m; ++p) {
    // kappa0 on the simple subquotient: V restricted to the diagonal block.
    IntMatrix k = detail::kappa0_matrix(e.v.matrix, e.source, 1u << p, src, tgt,
                                        inv1.poset.components[p],
                                        inv2.poset.components[p]);
    iso.kappa0_simple.push_back(GroupHom{inv1.k0_simple[p], inv2.k0_simple[p], k});

    // kappa1: ((U{p})^T)^{-1} between the kernels, in basis coordinates.
    auto rc = e.source.row_coords_of(1u << p);
    IntMatrix up = e.u.matrix.submatrix(rc, rc);
    IntMatrix ut_inv = unimodular_inverse(up.transpose());
    // embed source kernel into the padded coordinates of block p
    IntMatrix emb(rc.size(), inv1.k1_basis[p].cols());
    {
      std::size_t r = 0;
      for (std::size_t a = 0; a < rc.size(); ++a) {
        if (src.row_vertex[rc[a]] == detail::PaddedSide::npos) continue;
        for (std::size_t j = 0; j < inv1.k1_basis[p].cols(); ++j)
          emb(a, j) = inv1.k1_basis[p](r, j);
        ++r;
      }
    }
    IntMatrix moved = ut_inv * emb;
    // project onto the target's regular coordinates and express in its basis
    IntMatrix proj(inv2.k1_basis[p].rows(), moved.cols());
    {
      std::size_t r = 0;
      for (std::size_t a = 0; a < rc.size(); ++a) {
        if (tgt.row_vertex[rc[a]] == detail::PaddedSide::npos) {
          for (std::size_t j = 0; j < moved.cols(); ++j)
            if (moved(a, j) != 0)
              throw FkError("induced_iso: moved kernel hits padding coordinates");
          continue;
        }
        for (std::size_t j = 0; j < moved.cols(); ++j) proj(r, j) = moved(a, j);
        ++r;
      }
    }
    auto sol = solve_linear(inv2.k1_basis[p], proj);
    if (!sol) throw FkError("induced_iso: moved kernel is not in the target kernel");
    iso.kappa1_simple.push_back(GroupHom{inv1.k1_simple[p], inv2.k1_simple[p],
                                         sol->particular});
  }

  std::string why;
  if (!verify_fk_iso(inv1, inv2, iso, &why))
    throw FkError("induced_iso: invalid certificate: " + why);
  return iso;
}

// Does a matrix-backed isomorphism carry the unit class to the unit class?
inline bool preserves_unit(const FKIso& iso, const FKInvariant& inv1,
                           const FKInvariant& inv2) {
  if (!iso.kappa0_total) throw FkError("preserves_unit: iso is not matrix-backed");
  IntMatrix image = iso.kappa0_total->matrix * IntMatrix::column(inv1.unit.coordinates);
  std::vector<Int> img(image.rows());
  for (std::size_t i = 0; i < image.rows(); ++i) img[i] = image(i, 0);
  return inv2.unit.group.elements_equal(img, inv2.unit.coordinates);
}

// ---------------------------------------------------------------------------
// Necessary conditions and bounded search.
// ---------------------------------------------------------------------------

struct CompareNecessary {
  bool isomorphic_possible = false;
  std::optional<std::vector<std::size_t>> witness_rho;
};

inline bool rho_compatible(const FKInvariant& a, const FKInvariant& b,
                           const std::vector<std::size_t>& rho) {
  if (!poset_isomorphism(a.poset, b.poset, rho)) return false;
  FKIso probe;
  probe.rho = rho;
  for (std::size_t p = 0; p < a.poset.size(); ++p) {
    if (!invariant_factors_match(a.k0_simple[p], b.k0_simple[probe.rho[p]])) return false;
    if (a.k1_basis[p].cols() != b.k1_basis[probe.rho[p]].cols()) return false;
  }
  for (unsigned mask : a.opens)
    if (!invariant_factors_match(a.k0_open.at(mask),
                                 b.k0_open.at(probe.map_mask(mask))))
      return false;
  return true;
}

inline CompareNecessary compare_necessary(const FKInvariant& a, const FKInvariant& b) {
  CompareNecessary out;
  if (a.poset.size() != b.poset.size()) return out;
  std::vector<std::size_t> rho(a.poset.size());
  std::iota(rho.begin(), rho.end(), 0);
  do {
    if (rho_compatible(a, b, rho)) {
      out.isomorphic_possible = true;
      out.witness_rho = rho;
      return out;
    }
  } while (std::next_permutation(rho.begin(), rho.end()));
  return out;
}

enum class SearchStatus { Found, NoDefinitive, Inconclusive };

struct FKIsoSearch {
  SearchStatus status = SearchStatus::Inconclusive;
  std::optional<FKIso> iso;
};

// Bounded search for a verified invariant isomorphism.  Definitive "no" only
// comes from the necessary-condition screen; budget exhaustion reports as
// inconclusive.  Deterministic: fixed enumeration order, first found wins.
FKIsoSearch find_fk_iso(const FKInvariant& a, const FKInvariant& b, long budget = 200000);

namespace detail {

struct IsoDfs {
  const FKInvariant& a;
  const FKInvariant& b;
  std::vector<std::size_t> rho;
  long budget;
  long spent = 0;
  bool out_of_budget = false;

  std::map<unsigned, GroupHom> kappa_open;
  std::vector<std::optional<GroupHom>> kappa1;

  unsigned map_mask(unsigned mask) const {
    unsigned out = 0;
    for (std::size_t i = 0; i < rho.size(); ++i)
      if (mask >> i & 1) out |= 1u << rho[i];
    return out;
  }

  bool charge(long n = 1) {
    spent += n;
    if (spent > budget) {
      out_of_budget = true;
      return false;
    }
    return true;
  }

  // Square checks available once kappa_open is assigned on `mask`.
  bool consistent_after_assign(unsigned mask) {
    std::size_t m = a.poset.size();
    for (std::size_t p = 0; p < m; ++p) {
      unsigned tp = a.tilde(p), bp = a.boundary(p);
      std::size_t p2 = rho[p];
      if ((mask == tp || mask == bp) && kappa_open.count(tp) && kappa_open.count(bp)) {
        if (!homs_equal(compose(b.seq[p2].incl, kappa_open.at(bp)),
                        compose(kappa_open.at(tp), a.seq[p].incl)))
          return false;
        // derived simple map must be an isomorphism
        GroupHom ks{a.k0_simple[p], b.k0_simple[p2],
                    b.seq[p2].quot.matrix * kappa_open.at(tp).matrix *
                        lift_section(p)};
        if (!ks.well_defined() || !is_isomorphism(ks)) return false;
      }
    }
    for (const auto& pq : a.c_pairs) {
      unsigned tp = a.tilde(pq.first), bq = a.boundary(pq.second);
      if ((mask == tp || mask == bq) && kappa_open.count(tp) && kappa_open.count(bq)) {
        auto pq2 = std::make_pair(rho[pq.first], rho[pq.second]);
        if (!homs_equal(compose(b.c_maps.at(pq2), kappa_open.at(tp)),
                        compose(kappa_open.at(bq), a.c_maps.at(pq))))
          return false;
      }
    }
    return true;
  }

  // section of quot: vertex generators of the simple quotient included into
  // the open tilde(p) coordinates
  IntMatrix lift_section(std::size_t p) {
    auto sup = a.poset.vertices_of_mask(a.tilde(p));
    const auto& comp = a.poset.components[p];
    IntMatrix s(sup.size(), comp.size());
    for (std::size_t j = 0; j < comp.size(); ++j) {
      auto it = std::find(sup.begin(), sup.end(), comp[j]);
      s(static_cast<std::size_t>(it - sup.begin()), j) = 1;
    }
    return s;
  }

  bool assign_opens(std::size_t idx, FKIso& result) {
    if (spent >= budget) {
      out_of_budget = true;
      return false;
    }
    if (idx == a.opens.size()) return assign_kernels(0, result);
    unsigned mask = a.opens[idx];
    const FinAbPresentation& g1 = a.k0_open.at(mask);
    const FinAbPresentation& g2 = b.k0_open.at(map_mask(mask));
    bool found = false;
    IsoEnumeration opts;
    opts.budget = budget - spent;
    enumerate_isos(g1, g2, opts, [&](const GroupHom& h) {
      if (!charge()) return true;
      kappa_open.emplace(mask, h);
      bool ok = consistent_after_assign(mask) && assign_opens(idx + 1, result);
      if (!ok) kappa_open.erase(mask);
      found = ok;
      return ok || out_of_budget;
    });
    return found;
  }

  bool assign_kernels(std::size_t p, FKIso& result) {
    if (spent >= budget) {
      out_of_budget = true;
      return false;
    }
    if (p == a.poset.size()) return finish(result);
    std::size_t p2 = rho[p];
    const FinAbPresentation& g1 = a.k1_simple[p];
    const FinAbPresentation& g2 = b.k1_simple[p2];
    bool found = false;
    IsoEnumeration opts;
    opts.budget = budget - spent;
    opts.free_bound = 1;
    enumerate_isos(g1, g2, opts, [&](const GroupHom& h) {
      if (!charge()) return true;
      // index ladder must commute
      if (!homs_equal(compose(b.seq[p2].index, h),
                      compose(kappa_open.at(a.boundary(p)), a.seq[p].index)))
        return false;
      kappa1[p] = h;
      bool ok = assign_kernels(p + 1, result);
      if (!ok) kappa1[p].reset();
      found = ok;
      return ok || out_of_budget;
    });
    return found;
  }

  bool finish(FKIso& result) {
    result.rho = rho;
    result.kappa0_open = kappa_open;
    result.kappa0_simple.clear();
    result.kappa1_simple.clear();
    for (std::size_t p = 0; p < a.poset.size(); ++p) {
      std::size_t p2 = rho[p];
      result.kappa0_simple.push_back(
          GroupHom{a.k0_simple[p], b.k0_simple[p2],
                   b.seq[p2].quot.matrix * kappa_open.at(a.tilde(p)).matrix *
                       lift_section(p)});
      result.kappa1_simple.push_back(*kappa1[p]);
    }
    return verify_fk_iso(a, b, result);
  }
};

}  // namespace detail

inline FKIsoSearch find_fk_iso(const FKInvariant& a, const FKInvariant& b, long budget) {
  FKIsoSearch out;
  CompareNecessary nec = compare_necessary(a, b);
  if (!nec.isomorphic_possible) {
    out.status = SearchStatus::NoDefinitive;
    return out;
  }
  bool any_budget_out = false;
  std::vector<std::size_t> rho(a.poset.size());
  std::iota(rho.begin(), rho.end(), 0);
  do {
    if (!rho_compatible(a, b, rho)) continue;
    detail::IsoDfs dfs{a, b, rho, budget};
    dfs.kappa1.resize(a.poset.size());
    FKIso iso;
    if (dfs.assign_opens(0, iso)) {
      out.status = SearchStatus::Found;
      out.iso = iso;
      return out;
    }
    any_budget_out = any_budget_out || dfs.out_of_budget;
  } while (std::next_permutation(rho.begin(), rho.end()));
  out.status = SearchStatus::Inconclusive;
  (void)any_budget_out;
  return out;
}

}  // namespace graphk
