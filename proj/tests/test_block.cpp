#include <catch2/catch_amalgamated.hpp>

#include "graphk/block.hpp"
#include "generators.hpp"

#include <random>

using namespace graphk;

namespace {

BlockMatrix single_block(const IntMatrix& m) {
  BlockMatrix b;
  b.leq = {{true}};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < m.rows(); ++i) names.push_back(testgen::vertex_name(i));
  b.row_blocks = {names};
  b.col_blocks = {names};
  b.matrix = m;
  return b;
}

BlockMatrix two_incomparable(const IntMatrix& d0, const IntMatrix& d1) {
  BlockMatrix b;
  b.leq = {{true, false}, {false, true}};
  b.row_blocks = {{"a"}, {"b"}};
  b.col_blocks = {{"a"}, {"b"}};
  b.matrix = IntMatrix(2, 2);
  b.matrix(0, 0) = d0(0, 0);
  b.matrix(1, 1) = d1(0, 0);
  return b;
}

}  // namespace

TEST_CASE("classification of block matrices") {
  BlockMatrix b = two_incomparable(IntMatrix{{1}}, IntMatrix{{1}});
  Classification c = classify(b);
  REQUIRE(c.in_mp);
  REQUIRE(!c.in_mp_plus);  // block sizes below 3

  IntMatrix all2(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) all2(i, j) = 2;
  Classification c2 = classify(single_block(all2));
  REQUIRE(c2.in_mp);
  REQUIRE(!c2.in_mp_plus);  // SNF diag(2,0,0): fewer than two unit entries

  IntMatrix good{{2, 1, 1}, {1, 2, 1}, {1, 1, 2}};
  REQUIRE(smith_normal_form(good).diagonal() == std::vector<Int>{1, 1, 4});
  Classification c3 = classify(single_block(good));
  REQUIRE(c3.in_mp_plus);

  // triangularity violation
  BlockMatrix bad = two_incomparable(IntMatrix{{1}}, IntMatrix{{1}});
  bad.matrix(0, 1) = 1;
  REQUIRE(!classify(bad).in_mp);
}

TEST_CASE("GL_P and SL_P membership") {
  BlockMatrix id = single_block(IntMatrix::identity(3));
  REQUIRE(is_glp(id));
  REQUIRE(is_slp(id));

  BlockMatrix swap2 = single_block(IntMatrix{{0, 1}, {1, 0}});
  REQUIRE(is_glp(swap2));
  REQUIRE(!is_slp(swap2));

  BlockMatrix v0 = single_block(
      IntMatrix{{1, 0, 0, 0}, {0, 1, 0, 0}, {-1, 0, 0, -1}, {0, 0, -1, 0}});
  REQUIRE(determinant(v0.matrix) == -1);
  REQUIRE(is_glp(v0));
  REQUIRE(!is_slp(v0));
}

TEST_CASE("iota embedding") {
  BlockMatrix b = single_block(IntMatrix{{1}});
  BlockMatrix padded = minus_iota_minus(b, MultiIndex::unit(1, 0, 4));
  IntMatrix expect(5, 5);
  expect(0, 0) = 1;
  for (std::size_t i = 1; i < 5; ++i) expect(i, i) = -1;
  REQUIRE(padded.matrix == expect);

  // r = 0 is the identity operation
  MultiIndex zero;
  zero.sizes = {0};
  REQUIRE(iota_embed(b, zero).matrix == b.matrix);

  // cokernel / kernel of the transpose invariant under -iota(-)
  std::mt19937_64 rng(77);
  for (int iter = 0; iter < 40; ++iter) {
    std::uniform_int_distribution<std::size_t> dim(1, 4);
    std::uniform_int_distribution<int> val(-3, 3);
    std::size_t n = dim(rng);
    IntMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = val(rng);
    BlockMatrix blk = single_block(m);
    BlockMatrix pad = minus_iota_minus(blk, MultiIndex::unit(1, 0, 2));
    REQUIRE(cokernel(m.transpose()).invariant_factors ==
            cokernel(pad.matrix.transpose()).invariant_factors);
    REQUIRE(kernel_basis(m.transpose()).cols() ==
            kernel_basis(pad.matrix.transpose()).cols());
  }

  // embed then delete the new coordinates: identity on matrices
  BlockMatrix wide = single_block(IntMatrix{{3, 1}, {0, 2}});
  BlockMatrix p2 = iota_embed(wide, MultiIndex::unit(1, 0, 2));
  std::vector<std::size_t> keep{0, 1};
  REQUIRE(p2.matrix.submatrix(keep, keep) == wide.matrix);
}

TEST_CASE("verify and compose equivalences") {
  BlockMatrix b = single_block(IntMatrix{{1, 1}, {1, 1}});
  Equivalence id = identity_equivalence(b);
  REQUIRE(verify_equivalence(id, true));

  // perturbing one entry of U breaks exactness of the identity
  Equivalence broken = id;
  broken.u.matrix(0, 1) = 5;
  REQUIRE(!verify_equivalence(broken));

  std::mt19937_64 rng(123);
  for (int iter = 0; iter < 60; ++iter) {
    Graph g = testgen::random_k_graph(rng, 7);
    BlockMatrix bm = block_view(g).b;
    Equivalence e1 = testgen::random_equivalence(rng, bm, false);
    REQUIRE(verify_equivalence(e1));
    Equivalence e2 = testgen::random_equivalence(rng, e1.target, false);
    Equivalence c = compose(e1, e2);
    REQUIRE(verify_equivalence(c));

    // SL composed with SL stays SL
    Equivalence s1 = testgen::random_equivalence(rng, bm, true);
    Equivalence s2 = testgen::random_equivalence(rng, s1.target, true);
    REQUIRE(verify_equivalence(compose(s1, s2), true));

    // triangularity preserved under products and inverses
    REQUIRE(in_mp(c.u));
    Equivalence inv = inverse(e1);
    REQUIRE(verify_equivalence(inv));
    REQUIRE(in_mp(inv.u));
    REQUIRE(in_mp(inv.v));
  }
}

TEST_CASE("K-web necessary condition on verified equivalences") {
  // cokernel/kernel data of source and target agree on every down-set
  std::mt19937_64 rng(321);
  for (int iter = 0; iter < 40; ++iter) {
    Graph g = testgen::random_k_graph(rng, 7);
    BlockMatrix bm = block_view(g).b;
    Equivalence e = testgen::random_equivalence(rng, bm, false);
    REQUIRE(verify_equivalence(e));
    for (unsigned mask = 0; mask < (1u << bm.blocks()); ++mask) {
      bool down = true;
      for (std::size_t i = 0; i < bm.blocks() && down; ++i)
        if (mask >> i & 1)
          for (std::size_t j = 0; j < bm.blocks(); ++j)
            if (bm.poset_leq(j, i) && !(mask >> j & 1)) down = false;
      if (!down) continue;
      IntMatrix s = e.source.restrict_to(mask).matrix.transpose();
      IntMatrix t = e.target.restrict_to(mask).matrix.transpose();
      REQUIRE(cokernel(s).invariant_factors == cokernel(t).invariant_factors);
      REQUIRE(kernel_basis(s).cols() == kernel_basis(t).cols());
    }
  }
}
