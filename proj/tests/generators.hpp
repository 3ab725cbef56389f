// Deterministic random generators shared by the test suites.  Everything is
// seeded explicitly by the caller; no global state.

#pragma once

#include "graphk/block.hpp"
#include "graphk/graph.hpp"

#include <random>
#include <string>
#include <vector>

namespace testgen {

using namespace graphk;

inline std::string vertex_name(std::size_t i) {
  std::string s;
  s += static_cast<char>('a' + i % 26);
  if (i >= 26) s += std::to_string(i / 26);
  return s;
}

// Arbitrary small digraph; may have sinks, sources, trivial components.
inline Graph random_graph(std::mt19937_64& rng, std::size_t max_n = 8, int max_mult = 2) {
  std::uniform_int_distribution<std::size_t> nd(1, max_n);
  std::size_t n = nd(rng);
  std::uniform_int_distribution<int> md(0, max_mult);
  std::uniform_int_distribution<int> coin(0, 3);
  IntMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (coin(rng) == 0) a(i, j) = md(rng);
  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i) names[i] = vertex_name(i);
  return make_graph(names, a);
}

// Condition (K) graph with no sinks and no sources: components are proper
// SCCs (cycle plus at least one extra edge), cross edges point only from
// later components to earlier ones in the generated order.
inline Graph random_k_graph(std::mt19937_64& rng, std::size_t max_n = 8) {
  std::uniform_int_distribution<std::size_t> mcount(1, 3);
  std::size_t m = mcount(rng);
  std::vector<std::size_t> sizes(m);
  std::size_t total = 0;
  for (std::size_t c = 0; c < m; ++c) {
    std::uniform_int_distribution<std::size_t> sd(1, std::max<std::size_t>(1, (max_n - total) / (m - c)));
    sizes[c] = std::min<std::size_t>(sd(rng), max_n - total);
    if (sizes[c] == 0) sizes[c] = 1;
    total += sizes[c];
  }
  IntMatrix a(total, total);
  std::vector<std::size_t> offset(m);
  {
    std::size_t o = 0;
    for (std::size_t c = 0; c < m; ++c) {
      offset[c] = o;
      o += sizes[c];
    }
  }
  std::uniform_int_distribution<int> coin(0, 2);
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t o = offset[c], s = sizes[c];
    if (s == 1) {
      a(o, o) = 2;  // proper: two loops
    } else {
      for (std::size_t k = 0; k < s; ++k) a(o + k, o + (k + 1) % s) += 1;  // cycle
      std::uniform_int_distribution<std::size_t> pick(0, s - 1);
      a(o + pick(rng), o + pick(rng)) += 1;  // extra edge: not a simple cycle
      for (std::size_t u = 0; u < s; ++u)
        for (std::size_t v = 0; v < s; ++v)
          if (coin(rng) == 0) a(o + u, o + v) += 1;
    }
  }
  // cross edges later -> earlier (downstream)
  for (std::size_t ci = 1; ci < m; ++ci)
    for (std::size_t cj = 0; cj < ci; ++cj)
      for (std::size_t u = 0; u < sizes[ci]; ++u)
        for (std::size_t v = 0; v < sizes[cj]; ++v)
          if (coin(rng) == 0) a(offset[ci] + u, offset[cj] + v) += 1;
  std::vector<std::string> names(total);
  for (std::size_t i = 0; i < total; ++i) names[i] = vertex_name(i);
  return make_graph(names, a);
}

// Random poset on m components given as a reflexive-transitive relation
// compatible with the index order (i <= j only if i comes first).
inline std::vector<std::vector<bool>> random_poset(std::mt19937_64& rng, std::size_t m) {
  std::vector<std::vector<bool>> rel(m, std::vector<bool>(m, false));
  for (std::size_t i = 0; i < m; ++i) rel[i][i] = true;
  std::uniform_int_distribution<int> coin(0, 1);
  for (std::size_t j = 1; j < m; ++j)
    for (std::size_t i = 0; i < j; ++i)
      if (coin(rng)) rel[i][j] = true;
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t i = 0; i < m; ++i)
      if (rel[i][k])
        for (std::size_t j = 0; j < m; ++j)
          if (rel[k][j]) rel[i][j] = true;
  return rel;
}

// Graph with every allowed block of B strictly positive (entries in [lo, hi]).
inline Graph layered_positive_graph(std::mt19937_64& rng,
                                    const std::vector<std::size_t>& sizes,
                                    const std::vector<std::vector<bool>>& rel, int lo,
                                    int hi) {
  std::size_t m = sizes.size(), total = 0;
  std::vector<std::size_t> offset(m);
  for (std::size_t c = 0; c < m; ++c) {
    offset[c] = total;
    total += sizes[c];
  }
  std::uniform_int_distribution<int> pos(lo, hi);
  IntMatrix b(total, total);
  for (std::size_t ci = 0; ci < m; ++ci)
    for (std::size_t cj = 0; cj < m; ++cj) {
      if (!rel[cj][ci]) continue;  // block (ci, cj) allowed iff cj <= ci
      for (std::size_t u = 0; u < sizes[ci]; ++u)
        for (std::size_t v = 0; v < sizes[cj]; ++v)
          b(offset[ci] + u, offset[cj] + v) = pos(rng);
    }
  IntMatrix a = b;
  for (std::size_t i = 0; i < total; ++i) a(i, i) += 1;
  std::vector<std::string> names(total);
  for (std::size_t i = 0; i < total; ++i) names[i] = vertex_name(i);
  return make_graph(names, a);
}

// Graph whose bullet matrix lies in M_P^+: all blocks of size >= 3, allowed
// blocks strictly positive, diagonal Smith forms with at least two 1s.
inline Graph random_mp_plus_graph(std::mt19937_64& rng, std::size_t max_components = 2) {
  std::uniform_int_distribution<std::size_t> mcount(1, max_components);
  std::size_t m = mcount(rng);
  std::vector<std::size_t> sizes(m, 3);
  std::uniform_int_distribution<int> extra(0, 1);
  for (auto& s : sizes) s += extra(rng);
  auto rel = random_poset(rng, m);
  Graph g = layered_positive_graph(rng, sizes, rel, 1, 3);
  // force two unit invariant factors per diagonal block
  std::size_t total = g.size();
  std::vector<std::size_t> offset(m);
  {
    std::size_t o = 0;
    for (std::size_t c = 0; c < m; ++c) {
      offset[c] = o;
      o += sizes[c];
    }
  }
  IntMatrix b = b_matrix(g);
  std::uniform_int_distribution<int> pos(1, 3);
  for (std::size_t c = 0; c < m; ++c) {
    while (true) {
      std::vector<std::size_t> idx(sizes[c]);
      std::iota(idx.begin(), idx.end(), offset[c]);
      SmithDecomposition s = smith_normal_form(b.submatrix(idx, idx));
      std::size_t ones = 0;
      for (const auto& d : s.diagonal())
        if (d == 1) ++ones;
      if (ones >= 2) break;
      std::uniform_int_distribution<std::size_t> pick(0, sizes[c] - 1);
      b(offset[c] + pick(rng), offset[c] + pick(rng)) = pos(rng);
    }
  }
  IntMatrix a = b;
  for (std::size_t i = 0; i < total; ++i) a(i, i) += 1;
  return make_graph(g.vertices, a);
}

// Condition (K) graph with fat positive blocks; used where random
// equivalences must keep the target inside graph-land.
inline Graph random_fat_k_graph(std::mt19937_64& rng, std::size_t max_n = 7) {
  std::uniform_int_distribution<std::size_t> mcount(1, 3);
  std::size_t m = mcount(rng);
  std::vector<std::size_t> sizes(m);
  std::size_t total = 0;
  for (std::size_t c = 0; c < m; ++c) {
    std::uniform_int_distribution<std::size_t> sd(1, std::max<std::size_t>(1, (max_n - total) / (m - c)));
    sizes[c] = std::max<std::size_t>(1, sd(rng));
    total += sizes[c];
  }
  return layered_positive_graph(rng, sizes, random_poset(rng, m), 5, 8);
}

inline IntMatrix random_gl_block(std::mt19937_64& rng, const BlockMatrix& shape, bool rows,
                                 bool allow_det_flip, int ops = 10) {
  MultiIndex idx = rows ? shape.row_index() : shape.col_index();
  std::size_t n = idx.total(), m = shape.blocks();
  IntMatrix u = IntMatrix::identity(n);
  std::uniform_int_distribution<std::size_t> cpick(0, m - 1);
  std::uniform_int_distribution<int> coeff(-2, 2);
  for (int k = 0; k < ops; ++k) {
    std::size_t ci = cpick(rng), cj = cpick(rng);
    if (!shape.poset_leq(cj, ci)) continue;
    if (idx.sizes[ci] == 0 || idx.sizes[cj] == 0) continue;
    std::uniform_int_distribution<std::size_t> ri(0, idx.sizes[ci] - 1), rj(0, idx.sizes[cj] - 1);
    std::size_t s = idx.offset(ci) + ri(rng), t = idx.offset(cj) + rj(rng);
    if (s == t) continue;
    u.add_row_multiple(s, t, coeff(rng));
  }
  if (allow_det_flip) {
    std::uniform_int_distribution<int> coin(0, 1);
    for (std::size_t c = 0; c < m; ++c)
      if (idx.sizes[c] >= 2 && coin(rng)) {
        std::size_t o = idx.offset(c);
        u.swap_rows(o, o + 1);
      }
  }
  return u;
}

inline BlockMatrix as_block(const BlockMatrix& shape, bool rows, IntMatrix m) {
  BlockMatrix u;
  u.leq = shape.leq;
  u.row_blocks = rows ? shape.row_blocks : shape.col_blocks;
  u.col_blocks = u.row_blocks;
  u.matrix = std::move(m);
  return u;
}

inline Equivalence random_equivalence(std::mt19937_64& rng, const BlockMatrix& b,
                                      bool sl_only) {
  Equivalence e;
  e.source = b;
  e.u = as_block(b, true, random_gl_block(rng, b, true, !sl_only));
  e.v = as_block(b, false, random_gl_block(rng, b, false, !sl_only));
  e.target = b;
  e.target.matrix = e.u.matrix * b.matrix * e.v.matrix;
  return e;
}

// Random GL_P equivalence whose target is again a graph over the same poset
// (all allowed blocks of the target stay strictly positive).  Returns the
// equivalence together with the rebuilt target graph, or nullopt if no
// attempt landed inside graph-land.
inline std::optional<std::pair<Equivalence, Graph>> random_graph_equivalence(
    std::mt19937_64& rng, const Graph& g, const BlockMatrix& bm, bool sl_only = false,
    int attempts = 40) {
  for (int t = 0; t < attempts; ++t) {
    Equivalence e;
    e.source = bm;
    e.u = as_block(bm, true, random_gl_block(rng, bm, true, !sl_only, 4));
    e.v = as_block(bm, false, random_gl_block(rng, bm, false, !sl_only, 4));
    e.target = bm;
    e.target.matrix = e.u.matrix * bm.matrix * e.v.matrix;
    bool positive = true;
    for (std::size_t ci = 0; ci < bm.blocks() && positive; ++ci)
      for (std::size_t cj = 0; cj < bm.blocks() && positive; ++cj) {
        if (!bm.poset_leq(cj, ci)) continue;
        IntMatrix blk = e.target.block(ci, cj);
        for (std::size_t u = 0; u < blk.rows() && positive; ++u)
          for (std::size_t v = 0; v < blk.cols(); ++v)
            if (blk(u, v) < 1) {
              positive = false;
              break;
            }
      }
    if (!positive) continue;
    Graph g2 = graph_from_block(e.target);
    BlockMatrix check = block_view(g2).b;
    if (check.matrix != e.target.matrix || check.leq != e.target.leq ||
        check.col_blocks != e.target.col_blocks)
      continue;
    return std::make_pair(e, g2);
  }
  return std::nullopt;
}

// Random GL_P pair (U, V) over the block structure of `b`, as products of
// poset-legal transvections; with `allow_det_flip`, some diagonal blocks pick
// up a determinant -1 row swap.
}  // namespace testgen
