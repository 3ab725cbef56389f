#include <catch2/catch_amalgamated.hpp>

#include "graphk/abelian.hpp"
#include "graphk/smith.hpp"

#include <random>

using namespace graphk;

namespace {

IntMatrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, int bound) {
  std::uniform_int_distribution<int> dist(-bound, bound);
  IntMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = dist(rng);
  return m;
}

IntMatrix random_unimodular(std::mt19937_64& rng, std::size_t n, int ops = 12) {
  IntMatrix u = IntMatrix::identity(n);
  if (n < 2) return u;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_int_distribution<int> coeff(-2, 2);
  for (int k = 0; k < ops; ++k) {
    std::size_t i = pick(rng), j = pick(rng);
    if (i == j) continue;
    u.add_row_multiple(i, j, coeff(rng));
  }
  return u;
}

void check_snf_contract(const IntMatrix& a) {
  SmithDecomposition s = smith_normal_form(a);
  REQUIRE(s.p * a * s.q == s.d);
  REQUIRE(is_unimodular(s.p));
  REQUIRE(is_unimodular(s.q));
  auto diag = s.diagonal();
  for (std::size_t i = 0; i < diag.size(); ++i) {
    REQUIRE(diag[i] >= 0);
    if (i + 1 < diag.size()) {
      if (diag[i] == 0) REQUIRE(diag[i + 1] == 0);
      else REQUIRE(diag[i + 1] % diag[i] == 0);
    }
  }
  // off-diagonal of d is zero
  for (std::size_t i = 0; i < s.d.rows(); ++i)
    for (std::size_t j = 0; j < s.d.cols(); ++j)
      if (i != j) REQUIRE(s.d(i, j) == 0);
}

}  // namespace

TEST_CASE("smith normal form of diag(2,3)") {
  IntMatrix a{{2, 0}, {0, 3}};
  SmithDecomposition s = smith_normal_form(a);
  check_snf_contract(a);
  REQUIRE(s.d(0, 0) == 1);
  REQUIRE(s.d(1, 1) == 6);
}

TEST_CASE("smith normal form of identity and zero") {
  check_snf_contract(IntMatrix::identity(4));
  REQUIRE(smith_normal_form(IntMatrix::identity(4)).d == IntMatrix::identity(4));
  IntMatrix z(2, 3);
  SmithDecomposition s = smith_normal_form(z);
  check_snf_contract(z);
  REQUIRE(s.d == z);
}

TEST_CASE("smith normal form randomized contract") {
  std::mt19937_64 rng(20240811);
  for (int iter = 0; iter < 120; ++iter) {
    std::uniform_int_distribution<std::size_t> dim(0, 5);
    check_snf_contract(random_matrix(rng, dim(rng), dim(rng), 6));
  }
}

TEST_CASE("kernel basis basics") {
  IntMatrix zero1{{0}};
  IntMatrix k = kernel_basis(zero1);
  REQUIRE(k.rows() == 1);
  REQUIRE(k.cols() == 1);
  REQUIRE((k(0, 0) == 1 || k(0, 0) == -1));

  REQUIRE(kernel_basis(IntMatrix{{1}}).cols() == 0);

  IntMatrix a{{2, 0}, {1, 0}};
  IntMatrix basis = kernel_basis(a);
  REQUIRE(basis.cols() == 1);
  REQUIRE(basis(0, 0) == 0);
  REQUIRE((basis(1, 0) == 1 || basis(1, 0) == -1));
}

TEST_CASE("kernel basis randomized: columns independent, a*basis = 0") {
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 100; ++iter) {
    std::uniform_int_distribution<std::size_t> dim(1, 5);
    IntMatrix a = random_matrix(rng, dim(rng), dim(rng), 4);
    IntMatrix basis = kernel_basis(a);
    REQUIRE((a * basis).is_zero());
    // rank check: basis columns are part of a unimodular matrix, hence
    // independent; verify dimension count against the rank-nullity split.
    REQUIRE(basis.cols() == a.cols() - smith_normal_form(a).rank());
    if (basis.cols() > 0) {
      SmithDecomposition s = smith_normal_form(basis);
      REQUIRE(s.rank() == basis.cols());
    }
  }
}

TEST_CASE("cokernel presentations") {
  REQUIRE(cokernel(IntMatrix{{1}}).is_trivial());
  FinAbPresentation z2 = cokernel(IntMatrix{{2}});
  REQUIRE(z2.invariant_factors == std::vector<Int>{2});
  FinAbPresentation z4 = cokernel(IntMatrix{{2, 1}, {0, 2}});
  REQUIRE(z4.invariant_factors == std::vector<Int>{4});
}

TEST_CASE("cokernel invariant factors stable under unimodular multiplication") {
  std::mt19937_64 rng(99);
  for (int iter = 0; iter < 60; ++iter) {
    std::uniform_int_distribution<std::size_t> dim(1, 4);
    std::size_t n = dim(rng);
    IntMatrix a = random_matrix(rng, n, n, 4);
    IntMatrix u = random_unimodular(rng, n), v = random_unimodular(rng, n);
    REQUIRE(cokernel(a).invariant_factors == cokernel(u * a * v).invariant_factors);
  }
}

TEST_CASE("solve_linear examples") {
  auto s1 = solve_linear(IntMatrix{{2}}, IntMatrix{{4}});
  REQUIRE(s1.has_value());
  REQUIRE(s1->particular(0, 0) == 2);

  REQUIRE(!solve_linear(IntMatrix{{2}}, IntMatrix{{3}}).has_value());

  auto s3 = solve_linear(IntMatrix{{1, 0}, {0, 2}}, IntMatrix{{1}, {2}});
  REQUIRE(s3.has_value());
  REQUIRE(s3->particular(0, 0) == 1);
  REQUIRE(s3->particular(1, 0) == 1);
  REQUIRE(s3->homogeneous.cols() == 0);

  REQUIRE_THROWS_AS(solve_linear(IntMatrix{{1, 2}}, IntMatrix{{1}, {2}}),
                    std::invalid_argument);
}

TEST_CASE("solve_linear agrees with brute force on a box") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<std::size_t> dim(1, 3);
  std::uniform_int_distribution<int> val(-3, 3);
  for (int iter = 0; iter < 200; ++iter) {
    std::size_t r = dim(rng), c = dim(rng);
    IntMatrix a = random_matrix(rng, r, c, 3);
    IntMatrix b(r, 1);
    for (std::size_t i = 0; i < r; ++i) b(i, 0) = val(rng);

    // brute force over x in [-6, 6]^c
    bool brute_found = false;
    std::vector<long> x(c, -6);
    while (true) {
      IntMatrix xv(c, 1);
      for (std::size_t i = 0; i < c; ++i) xv(i, 0) = x[i];
      if (a * xv == b) {
        brute_found = true;
        break;
      }
      std::size_t pos = 0;
      for (; pos < c; ++pos) {
        if (++x[pos] <= 6) break;
        x[pos] = -6;
      }
      if (pos == c) break;
    }

    auto sol = solve_linear(a, b);
    if (sol.has_value()) REQUIRE(a * sol->particular == b);
    if (brute_found) REQUIRE(sol.has_value());
    if (!sol.has_value()) REQUIRE(!brute_found);
  }
}

TEST_CASE("gcd of matrix entries") {
  REQUIRE(gcd_entries(IntMatrix{{2, 4}, {6, 0}}) == 2);
  REQUIRE(gcd_entries(IntMatrix::zero(2, 2)) == 0);
  REQUIRE(gcd_entries(IntMatrix{{3, 5}}) == 1);
}

TEST_CASE("unimodular inverse") {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 50; ++iter) {
    std::uniform_int_distribution<std::size_t> dim(1, 5);
    std::size_t n = dim(rng);
    IntMatrix u = random_unimodular(rng, n);
    REQUIRE(u * unimodular_inverse(u) == IntMatrix::identity(n));
  }
}

TEST_CASE("group hom well-definedness and isomorphism checks") {
  FinAbPresentation z4 = cokernel(IntMatrix{{4}});
  FinAbPresentation z2z2 = cokernel(IntMatrix{{2, 0}, {0, 2}});
  REQUIRE(!invariant_factors_match(z4, z2z2));

  GroupHom triple{z4, z4, IntMatrix{{3}}};
  REQUIRE(triple.well_defined());
  REQUIRE(is_isomorphism(triple));
  GroupHom twice{z4, z4, IntMatrix{{2}}};
  REQUIRE(twice.well_defined());
  REQUIRE(!is_isomorphism(twice));

  // exactness of 0 -> Z/2 --x2--> Z/4 --quot--> Z/2 -> 0 at the middle
  FinAbPresentation z2 = cokernel(IntMatrix{{2}});
  GroupHom incl{z2, z4, IntMatrix{{2}}};
  GroupHom quot{z4, z2, IntMatrix{{1}}};
  REQUIRE(incl.well_defined());
  REQUIRE(quot.well_defined());
  REQUIRE(exact_at(incl, quot));
  REQUIRE(is_injective(incl));
  REQUIRE(is_surjective(quot));
  REQUIRE(!is_surjective(incl));

  // non-exact: replace the inclusion by the zero map
  REQUIRE(!exact_at(zero_hom(z2, z4), quot));
}

TEST_CASE("iso enumeration finds all automorphisms of Z/4") {
  FinAbPresentation z4 = cokernel(IntMatrix{{4}});
  std::vector<IntMatrix> found;
  enumerate_isos(z4, z4, IsoEnumeration{}, [&](const GroupHom& h) {
    found.push_back(h.matrix);
    return false;  // keep enumerating
  });
  REQUIRE(found.size() == 2);  // multiplication by 1 and by 3
}
