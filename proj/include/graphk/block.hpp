// Integer matrices carrying a component poset and row/column multiindices:
// membership classes M_P / M_P^+, the groups GL_P and SL_P, iota-padding,
// and verified equivalences (U, V): B -> B'.
//
// Triangularity convention: block (i, j) (rows in component i, columns in
// component j) may be nonzero only when j <= i.  With the linear extension
// used everywhere (down-sets first) such matrices are block lower triangular.

#pragma once

#include "graphk/graph.hpp"

#include <numeric>
#include <string>
#include <vector>

namespace graphk {

struct MultiIndex {
  std::vector<std::size_t> sizes;

  std::size_t total() const {
    return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  }
  std::size_t offset(std::size_t block) const {
    std::size_t o = 0;
    for (std::size_t i = 0; i < block; ++i) o += sizes[i];
    return o;
  }
  bool operator==(const MultiIndex& o) const { return sizes == o.sizes; }
  bool operator!=(const MultiIndex& o) const { return !(*this == o); }

  MultiIndex plus(const MultiIndex& r) const {
    MultiIndex m = *this;
    for (std::size_t i = 0; i < sizes.size() && i < r.sizes.size(); ++i)
      m.sizes[i] += r.sizes[i];
    return m;
  }
  static MultiIndex unit(std::size_t blocks, std::size_t j, std::size_t count = 1) {
    MultiIndex m;
    m.sizes.assign(blocks, 0);
    m.sizes[j] = count;
    return m;
  }
};

struct BlockMatrix {
  std::vector<std::vector<bool>> leq;                 // component poset, linear extension order
  std::vector<std::vector<std::string>> row_blocks;   // coordinate labels per component
  std::vector<std::vector<std::string>> col_blocks;
  IntMatrix matrix;

  std::size_t blocks() const { return leq.size(); }
  MultiIndex row_index() const {
    MultiIndex m;
    for (const auto& b : row_blocks) m.sizes.push_back(b.size());
    return m;
  }
  MultiIndex col_index() const {
    MultiIndex m;
    for (const auto& b : col_blocks) m.sizes.push_back(b.size());
    return m;
  }

  IntMatrix block(std::size_t i, std::size_t j) const {
    MultiIndex r = row_index(), c = col_index();
    std::vector<std::size_t> ri(r.sizes[i]), ci(c.sizes[j]);
    std::iota(ri.begin(), ri.end(), r.offset(i));
    std::iota(ci.begin(), ci.end(), c.offset(j));
    return matrix.submatrix(ri, ci);
  }
  IntMatrix diagonal_block(std::size_t i) const { return block(i, i); }

  bool structure_equal(const BlockMatrix& o) const {
    return leq == o.leq && row_blocks == o.row_blocks && col_blocks == o.col_blocks;
  }

  bool poset_leq(std::size_t i, std::size_t j) const { return leq[i][j]; }

  // Coordinate indices (row side / col side) of a down-set of components.
  std::vector<std::size_t> row_coords_of(unsigned mask) const {
    return coords_of(mask, row_index());
  }
  std::vector<std::size_t> col_coords_of(unsigned mask) const {
    return coords_of(mask, col_index());
  }
  BlockMatrix restrict_to(unsigned mask) const {
    BlockMatrix r;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < blocks(); ++i)
      if (mask >> i & 1) keep.push_back(i);
    r.leq.assign(keep.size(), std::vector<bool>(keep.size(), false));
    for (std::size_t a = 0; a < keep.size(); ++a) {
      for (std::size_t b = 0; b < keep.size(); ++b) r.leq[a][b] = leq[keep[a]][keep[b]];
      r.row_blocks.push_back(row_blocks[keep[a]]);
      r.col_blocks.push_back(col_blocks[keep[a]]);
    }
    r.matrix = matrix.submatrix(row_coords_of(mask), col_coords_of(mask));
    return r;
  }

 private:
  std::vector<std::size_t> coords_of(unsigned mask, const MultiIndex& idx) const {
    std::vector<std::size_t> v;
    for (std::size_t i = 0; i < blocks(); ++i)
      if (mask >> i & 1)
        for (std::size_t k = 0; k < idx.sizes[i]; ++k) v.push_back(idx.offset(i) + k);
    return v;
  }
};

inline bool valid_linear_extension(const std::vector<std::vector<bool>>& leq) {
  for (std::size_t i = 0; i < leq.size(); ++i)
    for (std::size_t j = 0; j < leq.size(); ++j)
      if (leq[i][j] && i > j) return false;
  return true;
}

struct Classification {
  bool in_mp = false;
  bool in_mp_plus = false;
};

inline bool in_mp(const BlockMatrix& b) {
  for (std::size_t i = 0; i < b.blocks(); ++i)
    for (std::size_t j = 0; j < b.blocks(); ++j) {
      if (b.poset_leq(j, i)) continue;  // allowed block
      if (!b.block(i, j).is_zero()) return false;
    }
  return true;
}

inline Classification classify(const BlockMatrix& b) {
  Classification c;
  c.in_mp = in_mp(b);
  if (!c.in_mp) return c;
  if (b.row_index() != b.col_index()) return c;
  c.in_mp_plus = true;
  for (std::size_t i = 0; i < b.blocks() && c.in_mp_plus; ++i) {
    if (b.row_index().sizes[i] < 3) {
      c.in_mp_plus = false;
      break;
    }
    // every allowed block strictly positive
    for (std::size_t j = 0; j < b.blocks() && c.in_mp_plus; ++j) {
      if (!b.poset_leq(j, i)) continue;
      IntMatrix blk = b.block(i, j);
      for (std::size_t r = 0; r < blk.rows() && c.in_mp_plus; ++r)
        for (std::size_t s = 0; s < blk.cols(); ++s)
          if (blk(r, s) <= 0) {
            c.in_mp_plus = false;
            break;
          }
    }
    if (!c.in_mp_plus) break;
    // diagonal SNF with at least two unit entries
    SmithDecomposition s = smith_normal_form(b.diagonal_block(i));
    std::size_t ones = 0;
    for (const auto& d : s.diagonal())
      if (d == 1) ++ones;
    if (ones < 2) c.in_mp_plus = false;
  }
  return c;
}

inline bool is_glp(const BlockMatrix& u) {
  if (u.row_blocks != u.col_blocks) return false;
  if (!in_mp(u)) return false;
  for (std::size_t i = 0; i < u.blocks(); ++i)
    if (!is_unimodular(u.diagonal_block(i))) return false;
  return true;
}

inline bool is_slp(const BlockMatrix& u) {
  if (!is_glp(u)) return false;
  for (std::size_t i = 0; i < u.blocks(); ++i)
    if (determinant(u.diagonal_block(i)) != 1) return false;
  return true;
}

// iota-padding: r_j fresh coordinates appended at the end of block j, with +1
// on the new diagonal entries.  -iota_r(-b) is then b extended by -1 entries.
inline BlockMatrix iota_embed(const BlockMatrix& b, const MultiIndex& r,
                              const std::string& label_prefix = "~") {
  if (r.sizes.size() != b.blocks())
    throw std::invalid_argument("iota: multiindex size mismatch");
  BlockMatrix out;
  out.leq = b.leq;
  out.row_blocks = b.row_blocks;
  out.col_blocks = b.col_blocks;
  MultiIndex old_rows = b.row_index(), old_cols = b.col_index();
  for (std::size_t j = 0; j < b.blocks(); ++j)
    for (std::size_t k = 0; k < r.sizes[j]; ++k) {
      std::string name = label_prefix + std::to_string(j) + "_" + std::to_string(k);
      out.row_blocks[j].push_back(name);
      out.col_blocks[j].push_back(name);
    }
  MultiIndex new_rows = out.row_index(), new_cols = out.col_index();
  out.matrix = IntMatrix(new_rows.total(), new_cols.total());

  // coordinate maps old -> new
  auto embed = [&](const MultiIndex& oldi, const MultiIndex& newi) {
    std::vector<std::size_t> map(oldi.total());
    for (std::size_t blk = 0; blk < oldi.sizes.size(); ++blk)
      for (std::size_t k = 0; k < oldi.sizes[blk]; ++k)
        map[oldi.offset(blk) + k] = newi.offset(blk) + k;
    return map;
  };
  auto rmap = embed(old_rows, new_rows), cmap = embed(old_cols, new_cols);
  for (std::size_t i = 0; i < old_rows.total(); ++i)
    for (std::size_t j = 0; j < old_cols.total(); ++j)
      out.matrix(rmap[i], cmap[j]) = b.matrix(i, j);
  for (std::size_t blk = 0; blk < b.blocks(); ++blk)
    for (std::size_t k = 0; k < r.sizes[blk]; ++k) {
      std::size_t ri = new_rows.offset(blk) + old_rows.sizes[blk] + k;
      std::size_t ci = new_cols.offset(blk) + old_cols.sizes[blk] + k;
      out.matrix(ri, ci) = 1;
    }
  return out;
}

inline BlockMatrix minus_iota_minus(const BlockMatrix& b, const MultiIndex& r,
                                    const std::string& label_prefix = "~") {
  BlockMatrix neg = b;
  neg.matrix = -neg.matrix;
  BlockMatrix e = iota_embed(neg, r, label_prefix);
  e.matrix = -e.matrix;
  return e;
}

struct Equivalence {
  BlockMatrix u;
  BlockMatrix v;
  BlockMatrix source;
  BlockMatrix target;
};

inline bool verify_equivalence(const Equivalence& e, bool require_sl = false) {
  if (!e.source.structure_equal(e.target)) return false;
  if (e.u.row_blocks != e.source.row_blocks || e.u.col_blocks != e.source.row_blocks)
    return false;
  if (e.v.row_blocks != e.source.col_blocks || e.v.col_blocks != e.source.col_blocks)
    return false;
  if (e.u.leq != e.source.leq || e.v.leq != e.source.leq) return false;
  if (!in_mp(e.source) || !in_mp(e.target)) return false;
  if (!is_glp(e.u) || !is_glp(e.v)) return false;
  if (require_sl && (!is_slp(e.u) || !is_slp(e.v))) return false;
  return e.u.matrix * e.source.matrix * e.v.matrix == e.target.matrix;
}

inline Equivalence compose(const Equivalence& e1, const Equivalence& e2) {
  if (!e1.target.structure_equal(e2.source) || e1.target.matrix != e2.source.matrix)
    throw std::invalid_argument("compose: middle matrices differ");
  Equivalence e;
  e.u = e2.u;
  e.u.matrix = e2.u.matrix * e1.u.matrix;
  e.v = e1.v;
  e.v.matrix = e1.v.matrix * e2.v.matrix;
  e.source = e1.source;
  e.target = e2.target;
  return e;
}

inline Equivalence inverse(const Equivalence& e) {
  Equivalence r;
  r.u = e.u;
  r.u.matrix = unimodular_inverse(e.u.matrix);
  r.v = e.v;
  r.v.matrix = unimodular_inverse(e.v.matrix);
  r.source = e.target;
  r.target = e.source;
  return r;
}

inline Equivalence identity_equivalence(const BlockMatrix& b) {
  Equivalence e;
  e.source = e.target = b;
  e.u = b;
  e.u.col_blocks = b.row_blocks;
  e.u.matrix = IntMatrix::identity(b.row_index().total());
  e.v = b;
  e.v.row_blocks = b.col_blocks;
  e.v.matrix = IntMatrix::identity(b.col_index().total());
  return e;
}

// ---------------------------------------------------------------------------
// Graph -> block matrix conversions.  Coordinates are laid out component by
// component in the poset's linear extension, vertices in file order inside a
// component; rows of singular vertices are dropped (the bullet matrix).
// ---------------------------------------------------------------------------

struct GraphBlockView {
  ComponentPoset poset;
  BlockMatrix b;                          // B^bullet as a block matrix
  std::vector<std::size_t> col_vertex;    // block column coordinate -> vertex index
  std::vector<std::size_t> row_vertex;    // block row coordinate -> vertex index
};

inline GraphBlockView block_view(const Graph& g) {
  GraphBlockView view;
  view.poset = condensation(g);
  const ComponentPoset& poset = view.poset;
  BlockMatrix& b = view.b;
  b.leq = poset.leq;
  for (std::size_t c = 0; c < poset.size(); ++c) {
    std::vector<std::string> cols, rows;
    for (std::size_t v : poset.components[c]) {
      cols.push_back(g.vertices[v]);
      view.col_vertex.push_back(v);
      if (g.is_regular(v)) {
        rows.push_back(g.vertices[v]);
        view.row_vertex.push_back(v);
      }
    }
    b.col_blocks.push_back(cols);
    b.row_blocks.push_back(rows);
  }
  IntMatrix bm = b_matrix(g);
  b.matrix = bm.submatrix(view.row_vertex, view.col_vertex);
  return view;
}

// Rebuild a graph from a square block matrix B (adjacency = B + I); entries
// of B + I must be nonnegative.  Coordinate labels become vertex names.
inline Graph graph_from_block(const BlockMatrix& b) {
  if (b.row_blocks != b.col_blocks)
    throw std::invalid_argument("graph_from_block: matrix is not square over vertices");
  IntMatrix a = b.matrix;
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += 1;
  std::vector<std::string> names;
  for (const auto& blk : b.col_blocks) names.insert(names.end(), blk.begin(), blk.end());
  return make_graph(std::move(names), std::move(a));
}

}  // namespace graphk
