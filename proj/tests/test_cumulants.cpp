#include <doctest.h>

#include <random>
#include <bit>

#include "fsm/cumulants.hpp"
#include "fsm/errors.hpp"
#include "oracles.hpp"

using namespace fsm;

namespace {

CumulantFunctional random_cumulants(int k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> num(-9, 9), den(1, 7);
  CumulantFunctional r(k);
  for (SubsetMask mask = 1; mask <= r.full_mask(); ++mask) r[mask] = Rational(num(rng), den(rng));
  return r;
}

std::vector<Rational> single_variable_moments(std::vector<Rational> r, int order) {
  std::vector<Rational> out;
  for (int n = 1; n <= order; ++n) out.push_back(moments_from_cumulants(CumulantFunctional::from_sequence(n, r)));
  return out;
}

using Matrix = std::vector<std::vector<Rational>>;

Matrix multiply(const Matrix& a, const Matrix& b) {
  const std::size_t d = a.size();
  Matrix c(d, std::vector<Rational>(d, Rational(0)));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t l = 0; l < d; ++l) {
      if (a[i][l] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) c[i][j] += a[i][l] * b[l][j];
    }
  }
  return c;
}

// max(row-sum norm, column-sum norm) dominates the operator norm
Rational norm_bound(const Matrix& a) {
  Rational best = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    Rational row = 0, col = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      row += abs(a[i][j]);
      col += abs(a[j][i]);
    }
    best = std::max({best, row, col});
  }
  return best;
}

}  // namespace

TEST_CASE("free Poisson and semicircular moments") {
  const auto poisson = single_variable_moments(std::vector<Rational>(5, Rational(1)), 5);
  CHECK(poisson == std::vector<Rational>{1, 2, 5, 14, 42});
  const auto semi = single_variable_moments({0, 1}, 5);
  CHECK(semi == std::vector<Rational>{0, 1, 0, 2, 0});
}

TEST_CASE("free Poisson moments are Catalan numbers") {
  std::vector<Rational> ones(6, Rational(1));
  for (int n = 1; n <= 6; ++n) {
    CHECK(moments_from_cumulants(CumulantFunctional::from_sequence(n, ones)) == oracle::catalan(n));
  }
  CHECK(moments_from_cumulants(CumulantFunctional::from_sequence(1, std::vector<Rational>{Rational(3, 7)})) ==
        Rational(3, 7));
}

TEST_CASE("inversion of known moment sequences") {
  for (int n = 1; n <= 6; ++n) {
    MomentFunctional m(n);
    for (SubsetMask mask = 1; mask <= m.full_mask(); ++mask) m[mask] = oracle::catalan(std::popcount(mask));
    CHECK(cumulants_from_moments(m) == 1);
  }
  const std::vector<Rational> semi{0, 1, 0, 2};
  for (int n = 1; n <= 4; ++n) {
    MomentFunctional m(n);
    for (SubsetMask mask = 1; mask <= m.full_mask(); ++mask) m[mask] = semi[std::popcount(mask) - 1];
    CHECK(cumulants_from_moments(m) == (n == 2 ? 1 : 0));
  }
}

TEST_CASE("roundtrip on random rational functionals") {
  std::mt19937_64 rng(20261017);
  for (int trial = 0; trial < 40; ++trial) {
    const int k = 1 + trial % 6;
    const auto r = random_cumulants(k, rng);
    const auto m = moment_table(r);
    CHECK(cumulant_table(m) == r);
    CHECK(m[m.full_mask()] == moments_from_cumulants(r));
    CHECK(cumulants_from_moments(m) == r[r.full_mask()]);
    for (const auto& p : noncrossing_partitions(k)) {
      CHECK(cumulants_from_moments(m, p) == r.product(p));
      CHECK(moments_from_cumulants(r, p) == m.product(p));
    }
  }
}

TEST_CASE("mixed cumulants under a declared freeness structure") {
  CumulantFunctional two_semis(2);
  two_semis[0b01] = 0;
  two_semis[0b10] = 0;
  two_semis[0b11] = 0;
  two_semis.declare_freeness({0, 1});
  CHECK(mixed_cumulant_vanishing_check(two_semis));

  auto copies = CumulantFunctional::from_sequence(3, std::vector<Rational>{0, 1});
  CHECK(mixed_cumulant_vanishing_check(copies));

  auto bad = copies;
  bad.declare_freeness({0, 0, 1});
  bad[0b101] = Rational(1, 2);
  CHECK_FALSE(mixed_cumulant_vanishing_check(bad));
  CHECK_THROWS_AS(bad.declare_freeness({0, 1}), DimensionError);
}

TEST_CASE("cumulant bound for bounded arguments") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> entry(-3, 3);
  for (int trial = 0; trial < 6; ++trial) {
    const int k = 3 + trial % 3;
    const std::size_t d = 3;
    std::vector<Matrix> a(k, Matrix(d, std::vector<Rational>(d)));
    std::vector<Rational> c(k);
    for (int i = 0; i < k; ++i) {
      for (auto& row : a[i]) {
        for (auto& x : row) x = Rational(entry(rng), 2);
      }
      c[i] = norm_bound(a[i]);
    }
    MomentFunctional m(k);
    for (SubsetMask mask = 1; mask <= m.full_mask(); ++mask) {
      const auto elements = elements_of(mask);
      Matrix prod = a[elements.front()];
      for (std::size_t e = 1; e < elements.size(); ++e) prod = multiply(prod, a[elements[e]]);
      Rational trace = 0;
      for (std::size_t i = 0; i < d; ++i) trace += prod[i][i];
      m[mask] = trace / d;
    }
    const auto r = cumulant_table(m);
    for (const auto& p : noncrossing_partitions(k)) {
      Rational bound = 1;
      for (int i = 0; i < k; ++i) bound *= 16 * c[i];
      CHECK(abs(r.product(p)) <= bound);
    }
  }
}

TEST_CASE("arity checks") {
  CumulantFunctional r(3);
  CHECK_THROWS_AS(moments_from_cumulants(r, Partition::finest(2)), DimensionError);
  MomentFunctional m(4);
  CHECK_THROWS_AS(cumulants_from_moments(m, Partition::parse("((1,3)(2,4))")), DomainError);
  CHECK_THROWS_AS(CumulantFunctional(0), SizeGuardError);
  CHECK_THROWS_AS(CumulantFunctional(17), SizeGuardError);
}

TEST_CASE("json encoding") {
  CumulantFunctional r(3);
  r[0b001] = Rational(1, 2);
  r[0b101] = Rational(-3, 4);
  const auto j = to_json(r);
  CHECK(j.dump() == R"({"k":3,"values":{"1":"1/2","1,3":"-3/4"}})");
  CHECK(cumulants_from_json(j) == r);
  const auto parsed = cumulants_from_json(nlohmann::json::parse(R"({"k":2,"values":{"2":"0.25"},"freeness":[0,1]})"));
  CHECK(parsed[0b10] == Rational(1, 4));
  CHECK(parsed.freeness() == std::vector<int>{0, 1});
  CHECK_THROWS_AS(cumulants_from_json(nlohmann::json::parse(R"({"k":2,"values":{"2,1":"1"}})")), ParseError);
  CHECK_THROWS_AS(cumulants_from_json(nlohmann::json::parse(R"({"k":2,"values":{"3":"1"}})")), ParseError);
  CHECK_THROWS_AS(moments_from_json(nlohmann::json::parse(R"({"values":{}})")), ParseError);
}
