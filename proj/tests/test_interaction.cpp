#include <doctest.h>

#include <cmath>
#include <random>

#include "blockrg/interaction.hpp"

using namespace blockrg;

namespace {

Interaction nn_chain(int nsites, double k) {
  Interaction j;
  for (int i = 0; i + 1 < nsites; ++i) j.add(SiteSet{i, i + 1}, k);
  return j;
}

Interaction random_sparse(std::mt19937& rng, int nsites, int nterms) {
  std::uniform_int_distribution<std::int32_t> site(0, nsites - 1);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  Interaction j;
  for (int t = 0; t < nterms; ++t) {
    std::vector<std::int32_t> ids;
    const int sz = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < sz; ++i) ids.push_back(site(rng));
    j.add(SiteSet(std::move(ids)), val(rng));
  }
  return j;
}

}  // namespace

TEST_CASE("norm_r examples") {
  CHECK(norm_r(Interaction{}, 1.0) == 0.0);
  Interaction j;
  j.add(SiteSet{1, 2}, 0.1);
  CHECK(norm_r(j, 1.0) == doctest::Approx(0.73890560989306504).epsilon(1e-14));
  // interior site of a nearest-neighbor chain belongs to two bonds
  CHECK(norm_r(nn_chain(8, 0.1), 1.0) ==
        doctest::Approx(1.47781121978613).epsilon(1e-14));
  CHECK_THROWS_AS(norm_r(j, 0.0), std::domain_error);
  CHECK_THROWS_AS(norm_r(j, -1.0), std::domain_error);
}

TEST_CASE("norm_r is a monotone norm") {
  std::mt19937 rng(4242);
  for (int iter = 0; iter < 50; ++iter) {
    Interaction a = random_sparse(rng, 10, 5);
    Interaction b = random_sparse(rng, 10, 5);
    const double r = 0.5 + (iter % 3) * 0.5;
    // absolute homogeneity
    Interaction a2;
    for (const auto& [X, v] : a.couplings()) a2.add(X, -2.5 * v);
    CHECK(norm_r(a2, r) == doctest::Approx(2.5 * norm_r(a, r)).epsilon(1e-12));
    // triangle inequality
    Interaction sum = a;
    for (const auto& [X, v] : b.couplings()) sum.add(X, v);
    CHECK(norm_r(sum, r) <= norm_r(a, r) + norm_r(b, r) + 1e-12);
    // monotone in r
    CHECK(norm_r(a, r) <= norm_r(a, r + 0.7) + 1e-15);
  }
}

TEST_CASE("per-site fixed-cardinality coupling mass is controlled by the norm") {
  std::mt19937 rng(555);
  const double r = 1.0;
  for (int iter = 0; iter < 30; ++iter) {
    Interaction j = random_sparse(rng, 8, 6);
    const double norm = norm_r(j, r);
    for (std::int32_t x = 0; x < 8; ++x)
      for (int m = 1; m <= 3; ++m) {
        double mass = 0.0;
        for (const auto& [X, v] : j.couplings())
          if (X.contains(x) && X.size() == m) mass += std::abs(v);
        CHECK(mass <= norm * std::exp(-r * m) + 1e-12);
      }
  }
}

TEST_CASE("spin products and exponent") {
  CHECK(spin_product(0b0000, SiteSet{}) == 1);
  CHECK(spin_product(0b0000, SiteSet{0, 1, 2}) == 1);
  CHECK(spin_product(0b0010, SiteSet{0, 1}) == -1);
  Interaction j;
  CHECK(exponent(j, 0b1011) == 0.0);
  j.add(SiteSet{0, 1}, 0.3);
  CHECK(exponent(j, 0b0000) == doctest::Approx(0.3));
  CHECK(exponent(j, 0b0010) == doctest::Approx(-0.3));
}

TEST_CASE("interaction ingestion rules") {
  Interaction j;
  CHECK_THROWS_AS(j.add(SiteSet{}, 1.0), std::domain_error);
  j.add(SiteSet{0}, 1e-16);  // dropped
  CHECK(j.empty());
  j.add(SiteSet{0}, 0.5);
  j.add(SiteSet{0}, -0.5);  // cancels out, entry removed
  CHECK(j.empty());
  j.add(SiteSet{0, 1}, 0.25);
  j.add(SiteSet{1, 0}, 0.25);  // same canonical support
  CHECK(j.size() == 1);
  CHECK(j.value(SiteSet{0, 1}) == doctest::Approx(0.5));
}

TEST_CASE("generate_translation_invariant examples") {
  Blocking b({4}, {2});
  Generator nn{{{0}, {1}}, 0.1};
  Interaction j = generate_translation_invariant(std::vector<Generator>{nn}, b);
  CHECK(j.size() == 3);
  CHECK(j.value(SiteSet{0, 1}) == doctest::Approx(0.1));
  CHECK(j.value(SiteSet{2, 3}) == doctest::Approx(0.1));

  CHECK(generate_translation_invariant(std::vector<Generator>{}, b).empty());

  Blocking b2({2, 2}, {2, 2});
  Generator plaquette{{{0, 0}, {0, 1}, {1, 0}, {1, 1}}, 0.2};
  Interaction j2 = generate_translation_invariant(std::vector<Generator>{plaquette}, b2);
  CHECK(j2.size() == 1);

  // periodic wrapping adds the bond across the boundary
  Interaction jp = generate_translation_invariant(std::vector<Generator>{nn}, b, true);
  CHECK(jp.size() == 4);
  CHECK(jp.value(SiteSet{0, 3}) == doctest::Approx(0.1));

  CHECK_THROWS_AS(
      generate_translation_invariant(std::vector<Generator>{Generator{{{0}, {3}}, 0.1}},
                                     b, false, 2.0),
      ValidationError);
}

TEST_CASE("translation invariance of generated couplings in the interior") {
  Blocking b({8}, {2});
  Generator pair{{{0}, {2}}, 0.3};
  Interaction j = generate_translation_invariant(std::vector<Generator>{pair}, b);
  for (int i = 0; i + 2 < 8; ++i)
    CHECK(j.value(SiteSet{i, i + 2}) == doctest::Approx(0.3));
  CHECK(j.size() == 6);
}

TEST_CASE("finite_body_constant closed form and enumeration oracle") {
  CHECK(finite_body_constant(0, 1) == 1);
  CHECK(finite_body_constant(1, 1) == 2);
  CHECK(finite_body_constant(1, 2) == 4);
  CHECK(finite_body_constant(2, 2) == 9);
  CHECK_THROWS_AS(finite_body_constant(-1, 1), std::domain_error);

  // oracle: max cardinality over subsets of a padded box with diameter <= S
  for (int d = 1; d <= 2; ++d)
    for (int S = 0; S <= 2; ++S) {
      const int side = S + 2;
      const int nsites = d == 1 ? side : side * side;
      Blocking box(d == 1 ? std::vector<int>{side} : std::vector<int>{side, side},
                   d == 1 ? std::vector<int>{1} : std::vector<int>{1, 1});
      int best = 0;
      for (std::uint32_t sub = 1; sub < (1u << nsites); ++sub) {
        std::vector<std::int32_t> ids;
        for (int i = 0; i < nsites; ++i)
          if ((sub >> i) & 1u) ids.push_back(i);
        SiteSet x(std::move(ids));
        if (diameter(x, box) <= S) best = std::max(best, x.size());
      }
      CHECK(best == finite_body_constant(S, d));
    }
}

TEST_CASE("generated interactions respect the body bound D") {
  Blocking b({6, 6}, {2, 2});
  std::vector<Generator> gens{{{{0, 0}, {0, 1}}, 0.1},
                              {{{0, 0}, {1, 0}, {1, 1}}, 0.05}};
  Interaction j = generate_translation_invariant(gens, b);
  const double S = j.range(b);
  CHECK(j.max_body() <= finite_body_constant(static_cast<int>(S), b.dim()));
}
