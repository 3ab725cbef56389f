// Finite directed multigraphs, their B-matrices, strongly connected component
// posets, Condition (K), hereditary saturated vertex sets and the class of
// the unit.
//
// Convention used throughout: for components i, j of the condensation,
// i <= j ("i is downstream of j") iff some vertex of i is reachable from some
// vertex of j.  Hereditary saturated sets are then down-closed, and ordering
// components down-sets-first makes B block lower triangular.

#pragma once

#include "graphk/abelian.hpp"

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphk {

struct Graph {
  std::vector<std::string> vertices;
  IntMatrix adjacency;                // entry (u,v) = number of edges u -> v
  std::vector<bool> singular_flags;   // sinks (no infinite emitters at finite scale)

  std::size_t size() const { return vertices.size(); }

  std::size_t vertex_index(const std::string& label) const {
    for (std::size_t i = 0; i < vertices.size(); ++i)
      if (vertices[i] == label) return i;
    throw std::invalid_argument("unknown vertex: " + label);
  }

  Int out_degree(std::size_t v) const {
    Int d = 0;
    for (std::size_t j = 0; j < size(); ++j) d += adjacency(v, j);
    return d;
  }
  Int in_degree(std::size_t v) const {
    Int d = 0;
    for (std::size_t i = 0; i < size(); ++i) d += adjacency(i, v);
    return d;
  }
  bool is_sink(std::size_t v) const { return out_degree(v) == 0; }
  bool is_source(std::size_t v) const { return in_degree(v) == 0; }
  bool is_regular(std::size_t v) const { return !singular_flags[v]; }
  bool has_sinks() const {
    for (std::size_t v = 0; v < size(); ++v)
      if (is_sink(v)) return true;
    return false;
  }
  bool has_sources() const {
    for (std::size_t v = 0; v < size(); ++v)
      if (is_source(v)) return true;
    return false;
  }
  bool nondegenerate() const { return !has_sinks() && !has_sources(); }

  std::vector<std::size_t> regular_vertices() const {
    std::vector<std::size_t> r;
    for (std::size_t v = 0; v < size(); ++v)
      if (is_regular(v)) r.push_back(v);
    return r;
  }
};

inline Graph make_graph(std::vector<std::string> vertices, IntMatrix adjacency) {
  if (adjacency.rows() != vertices.size() || adjacency.cols() != vertices.size())
    throw std::invalid_argument("adjacency must be square over the vertex list");
  for (std::size_t i = 0; i < adjacency.rows(); ++i)
    for (std::size_t j = 0; j < adjacency.cols(); ++j)
      if (adjacency(i, j) < 0) throw std::invalid_argument("negative edge multiplicity");
  {
    std::set<std::string> seen(vertices.begin(), vertices.end());
    if (seen.size() != vertices.size())
      throw std::invalid_argument("duplicate vertex labels");
  }
  Graph g;
  g.vertices = std::move(vertices);
  g.adjacency = std::move(adjacency);
  g.singular_flags.resize(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) g.singular_flags[v] = g.is_sink(v);
  return g;
}

inline IntMatrix b_matrix(const Graph& g) {
  IntMatrix b = g.adjacency;
  for (std::size_t i = 0; i < g.size(); ++i) b(i, i) -= 1;
  return b;
}

// B with rows of singular vertices removed (rows: regular, cols: all).
inline IntMatrix b_bullet(const Graph& g) {
  IntMatrix b = b_matrix(g);
  std::vector<std::size_t> reg = g.regular_vertices(), all(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) all[i] = i;
  return b.submatrix(reg, all);
}

enum class ComponentKind { Trivial, Cyclic, Proper };

struct ComponentPoset {
  // components in a fixed linear extension: j <= i implies index(j) <= index(i)
  std::vector<std::vector<std::size_t>> components;  // vertex indices, ascending
  std::vector<std::vector<bool>> leq;                // leq[i][j]: i <= j
  std::vector<ComponentKind> kinds;

  std::size_t size() const { return components.size(); }

  bool same_order(const ComponentPoset& o) const {
    if (size() != o.size()) return false;
    return leq == o.leq;
  }

  // Down-set of a single component as a bitmask over component indices.
  unsigned down_set(std::size_t p) const {
    unsigned m = 0;
    for (std::size_t j = 0; j < size(); ++j)
      if (leq[j][p]) m |= 1u << j;
    return m;
  }
  bool is_down_set(unsigned mask) const {
    for (std::size_t i = 0; i < size(); ++i)
      if (mask >> i & 1)
        for (std::size_t j = 0; j < size(); ++j)
          if (leq[j][i] && !(mask >> j & 1)) return false;
    return true;
  }
  std::vector<std::size_t> vertices_of_mask(unsigned mask) const {
    std::vector<std::size_t> v;
    for (std::size_t i = 0; i < size(); ++i)
      if (mask >> i & 1) v.insert(v.end(), components[i].begin(), components[i].end());
    std::sort(v.begin(), v.end());
    return v;
  }
  bool is_minimal(std::size_t p) const {
    for (std::size_t j = 0; j < size(); ++j)
      if (j != p && leq[j][p]) return false;
    return true;
  }
};

inline std::vector<std::vector<bool>> reachability(const IntMatrix& adj) {
  std::size_t n = adj.rows();
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    r[i][i] = true;
    for (std::size_t j = 0; j < n; ++j)
      if (adj(i, j) > 0) r[i][j] = true;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (r[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (r[k][j]) r[i][j] = true;
  return r;
}

inline ComponentPoset condensation(const Graph& g) {
  std::size_t n = g.size();
  auto reach = reachability(g.adjacency);

  // SCCs: mutual reachability classes.
  std::vector<long> comp_of(n, -1);
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t v = 0; v < n; ++v) {
    if (comp_of[v] >= 0) continue;
    std::vector<std::size_t> c;
    for (std::size_t w = v; w < n; ++w)
      if (comp_of[w] < 0 && reach[v][w] && reach[w][v]) {
        comp_of[w] = static_cast<long>(comps.size());
        c.push_back(w);
      }
    comps.push_back(std::move(c));
  }

  std::size_t m = comps.size();
  // raw order: i <= j iff i reachable from j
  std::vector<std::vector<bool>> raw(m, std::vector<bool>(m, false));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) raw[i][j] = reach[comps[j][0]][comps[i][0]];

  // Linear extension, down-sets first; ties by smallest vertex label.
  std::vector<std::size_t> order;
  std::vector<bool> placed(m, false);
  auto min_label = [&](std::size_t c) {
    std::string best = g.vertices[comps[c][0]];
    for (std::size_t v : comps[c]) best = std::min(best, g.vertices[v]);
    return best;
  };
  for (std::size_t step = 0; step < m; ++step) {
    std::size_t pick = m;
    for (std::size_t c = 0; c < m; ++c) {
      if (placed[c]) continue;
      bool ready = true;
      for (std::size_t j = 0; j < m; ++j)
        if (j != c && !placed[j] && raw[j][c]) ready = false;
      if (!ready) continue;
      if (pick == m || min_label(c) < min_label(pick)) pick = c;
    }
    placed[pick] = true;
    order.push_back(pick);
  }

  ComponentPoset poset;
  poset.components.resize(m);
  poset.leq.assign(m, std::vector<bool>(m, false));
  poset.kinds.resize(m);
  for (std::size_t a = 0; a < m; ++a) {
    poset.components[a] = comps[order[a]];
    std::sort(poset.components[a].begin(), poset.components[a].end());
  }
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) poset.leq[a][b] = raw[order[a]][order[b]];

  for (std::size_t a = 0; a < m; ++a) {
    const auto& c = poset.components[a];
    Int internal_edges = 0;
    for (std::size_t u : c)
      for (std::size_t v : c) internal_edges += g.adjacency(u, v);
    if (internal_edges == 0)
      poset.kinds[a] = ComponentKind::Trivial;
    else if (internal_edges == Int(c.size()))
      poset.kinds[a] = ComponentKind::Cyclic;
    else
      poset.kinds[a] = ComponentKind::Proper;
  }
  return poset;
}

// Condition (K): no nontrivial SCC is a single simple cycle.
inline bool satisfies_condition_k(const Graph& g) {
  ComponentPoset poset = condensation(g);
  for (auto k : poset.kinds)
    if (k == ComponentKind::Cyclic) return false;
  return true;
}

// Smallest hereditary saturated superset.
inline std::vector<std::size_t> hereditary_saturated_closure(const Graph& g,
                                                             std::vector<bool> in) {
  std::size_t n = g.size();
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t v = 0; v < n; ++v) {
      if (!in[v]) continue;
      for (std::size_t w = 0; w < n; ++w)
        if (g.adjacency(v, w) > 0 && !in[w]) {
          in[w] = true;
          changed = true;
        }
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (in[v] || !g.is_regular(v)) continue;
      bool all_in = true;
      for (std::size_t w = 0; w < n && all_in; ++w)
        if (g.adjacency(v, w) > 0 && !in[w]) all_in = false;
      if (all_in) {
        in[v] = true;
        changed = true;
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < n; ++v)
    if (in[v]) out.push_back(v);
  return out;
}

inline bool is_hereditary_saturated(const Graph& g, const std::vector<std::size_t>& h) {
  std::vector<bool> in(g.size(), false);
  for (std::size_t v : h) in[v] = true;
  return hereditary_saturated_closure(g, in) == h;
}

// The full lattice, sorted by size then lexicographically.
inline std::vector<std::vector<std::size_t>> hereditary_saturated_sets(const Graph& g) {
  ComponentPoset poset = condensation(g);
  std::size_t m = poset.size();
  if (m > 24) throw std::invalid_argument("too many components for lattice enumeration");
  std::set<std::vector<std::size_t>> out;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    if (!poset.is_down_set(mask)) continue;
    std::vector<bool> in(g.size(), false);
    for (std::size_t v : poset.vertices_of_mask(mask)) in[v] = true;
    out.insert(hereditary_saturated_closure(g, in));
  }
  std::vector<std::vector<std::size_t>> sets(out.begin(), out.end());
  std::sort(sets.begin(), sets.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return sets;
}

struct UnitClass {
  FinAbPresentation group;        // cok(b_bullet(g)^T)
  std::vector<Int> coordinates;   // generator coordinates (all ones)
  std::vector<Int> canonical;     // SNF-reduced form
};

// Class of the unit: sum of all vertex generators in cok(b_bullet^T).
inline UnitClass unit_class(const Graph& g) {
  UnitClass u;
  IntMatrix rel = b_bullet(g).transpose();
  u.group = make_presentation(g.vertices, rel);
  u.coordinates.assign(g.size(), Int(1));
  u.canonical = u.group.canonical_form(u.coordinates);
  return u;
}

}  // namespace graphk
