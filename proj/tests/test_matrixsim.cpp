#include <doctest.h>

#include <cmath>

#include "fsm/errors.hpp"
#include "fsm/matrixsim.hpp"
#include "fsm/measures.hpp"

using namespace fsm;

namespace {

MatrixEnsembleConfig config(int dim, int trials, MatrixModel model = MatrixModel::PoissonSps, std::uint64_t seed = 7) {
  MatrixEnsembleConfig cfg;
  cfg.dim = dim;
  cfg.trials = trials;
  cfg.model = model;
  cfg.seed = seed;
  return cfg;
}

double rel_diff(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1.0, a.norm()); }

// Σ over v̄ ∈ [N]^k with kernel exactly p (or at least p) of the dense product.
Matrix index_sum(const Partition& p, const IncrementSet& inc, IndexSet set) {
  Matrix sum = Matrix::Zero(inc.dim, inc.dim);
  for_each_index(p, inc.intervals(), set, [&](std::span<const int> v) {
    Matrix term = inc.matrix(0, v[0]);
    for (int i = 1; i < p.size(); ++i) term = term * inc.matrix(i, v[i]);
    sum += term;
  });
  return sum;
}

const Subdivision uneven = Subdivision::from_lengths({Rational(1, 4), Rational(1, 8), Rational(3, 8), Rational(1, 4)});

}  // namespace

TEST_CASE("largest remainder ranks sum to d and track the lengths") {
  for (const auto& s : {uneven, Subdivision::uniform(1, 7), Subdivision::uniform(Rational(3, 2), 5),
                        Subdivision::from_lengths({Rational(1, 3), Rational(1, 3), Rational(1, 3)})}) {
    for (int d : {2, 10, 37, 100}) {
      const auto ranks = largest_remainder_ranks(s, d);
      int total = 0;
      for (int j = 0; j < s.size(); ++j) {
        total += ranks[j];
        const double target = (s.length(j) / s.total()).convert_to<double>();
        CHECK(std::abs(static_cast<double>(ranks[j]) / d - target) <= 1.0 / d + 1e-15);
      }
      CHECK(total == d);
    }
  }
}

TEST_CASE("sampled increments are Hermitian and deterministic") {
  const auto poisson = make_identical_copies(make_free_poisson(1), 2);
  for (auto model : {MatrixModel::PoissonSps, MatrixModel::GaussianIncrements}) {
    const auto spec = model == MatrixModel::PoissonSps ? poisson : make_identical_copies(make_semicircular(), 2);
    const auto cfg = config(24, 1, model);
    const auto a = sample_increments(spec, uneven, cfg, 3);
    const auto b = sample_increments(spec, uneven, cfg, 3);
    const auto c = sample_increments(spec, uneven, cfg, 4);
    CHECK(a.slots.size() == 1);
    for (int j = 0; j < uneven.size(); ++j) {
      const Matrix x = a.matrix(0, j);
      CHECK((x - x.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(x == b.matrix(1, j));
      CHECK(x != c.matrix(0, j));
    }
  }
}

TEST_CASE("free components get independent matrices") {
  const auto family = make_free_family({make_semicircular(), make_semicircular()});
  const auto inc = sample_increments(family, uneven, config(8, 1, MatrixModel::GaussianIncrements), 0);
  CHECK(inc.slots.size() == 2);
  CHECK(inc.matrix(0, 0) != inc.matrix(1, 0));
}

TEST_CASE("incompatible model and process are rejected") {
  const auto s = Subdivision::uniform(1, 4);
  CHECK_THROWS_AS(sample_increments(make_semicircular(), s, config(8, 1), 0), DomainError);
  CHECK_THROWS_AS(sample_increments(make_free_poisson(2), s, config(8, 1), 0), DomainError);
  CHECK_THROWS_AS(sample_increments(make_free_poisson(1), s, config(8, 1, MatrixModel::GaussianIncrements), 0),
                  DomainError);
  CHECK_THROWS_AS(sample_increments(make_cumulant_sequence({Rational(1, 2), Rational(1, 3)}), s, config(8, 1), 0),
                  DomainError);
  CHECK_THROWS_AS(config(1, 1).validate(), DomainError);
  CHECK_THROWS_AS(config(4, 0).validate(), DomainError);
  CHECK_THROWS_AS(parse_matrix_model("wigner"), ParseError);
  CHECK(parse_matrix_model(to_string(MatrixModel::GaussianIncrements)) == MatrixModel::GaussianIncrements);
}

TEST_CASE("projection ranks give normalized trace ℓ_i/t") {
  const auto cfg = config(40, 1);
  const auto inc = sample_increments(make_free_poisson(1), uneven, cfg, 0);
  for (int j = 0; j < uneven.size(); ++j) {
    const auto& x = inc.at(0, j);
    CHECK(x.factored);
    CHECK(x.left.cols() == inc.ranks[j]);
    CHECK(std::abs(static_cast<double>(inc.ranks[j]) / cfg.dim - uneven.length(j).convert_to<double>()) <= 1.0 / 40);
  }
}

TEST_CASE("pr_matrix of the finest partition telescopes to a power of X(t)") {
  for (auto model : {MatrixModel::PoissonSps, MatrixModel::GaussianIncrements}) {
    const auto base = model == MatrixModel::PoissonSps ? make_free_poisson(1) : make_semicircular();
    for (int k = 1; k <= 4; ++k) {
      const auto inc = sample_increments(make_identical_copies(base, k), uneven, config(16, 1, model), 1);
      const Matrix xt = inc.total(0);
      Matrix power = xt;
      for (int i = 1; i < k; ++i) power = power * xt;
      CHECK(rel_diff(pr_matrix(Partition::finest(k), inc), power) < 1e-12);
    }
  }
}

TEST_CASE("pr_matrix of the two-point block is the sum of squares") {
  const auto inc = sample_increments(make_identical_copies(make_free_poisson(1), 2), uneven, config(16, 1), 2);
  Matrix squares = Matrix::Zero(16, 16);
  for (int j = 0; j < uneven.size(); ++j) squares += inc.matrix(0, j) * inc.matrix(0, j);
  CHECK(rel_diff(pr_matrix(Partition::coarsest(2), inc), squares) < 1e-12);
}

TEST_CASE("nested collapse and Möbius inversion agree with index sums") {
  const auto s = Subdivision::uniform(1, 5);
  for (auto model : {MatrixModel::PoissonSps, MatrixModel::GaussianIncrements}) {
    const auto base = model == MatrixModel::PoissonSps ? make_free_poisson(1) : make_semicircular();
    for (int k = 1; k <= 4; ++k) {
      const auto inc = sample_increments(make_identical_copies(base, k), s, config(6, 1, model), k);
      for (const auto& p : set_partitions(k)) {
        CAPTURE(p.to_string());
        CHECK(rel_diff(pr_matrix(p, inc), index_sum(p, inc, IndexSet::AtLeast)) < 1e-10);
        CHECK(rel_diff(st_matrix(p, inc), index_sum(p, inc, IndexSet::Exact)) < 1e-10);
      }
    }
  }
}

TEST_CASE("pr is the sum of st over coarsenings, per sample") {
  for (int n : {1, 3, 8}) {
    const auto s = Subdivision::uniform(1, n);
    for (int k = 1; k <= 3; ++k) {
      const auto inc = sample_increments(make_identical_copies(make_free_poisson(1), k), s, config(10, 1), n);
      for (const auto& p : set_partitions(k)) {
        Matrix sum = Matrix::Zero(10, 10);
        for (const auto& sigma : set_partitions(k)) {
          if (refines(p, sigma)) sum += st_matrix(sigma, inc);
        }
        CHECK(rel_diff(pr_matrix(p, inc), sum) < 1e-10);
      }
    }
  }
}

TEST_CASE("brute-force path is guarded") {
  const auto inc = sample_increments(make_identical_copies(make_semicircular(), 4), Subdivision::uniform(1, 2000),
                                     config(2, 1, MatrixModel::GaussianIncrements), 0);
  CHECK_THROWS_AS(pr_matrix(Partition::parse("((1,3)(2,4))"), inc), SizeGuardError);
  CHECK_THROWS_AS(pr_matrix(Partition::finest(3), inc), DimensionError);
}

TEST_CASE("derived increments multiply within each interval") {
  const auto inc = sample_increments(make_identical_copies(make_free_poisson(1), 3), uneven, config(12, 1), 5);
  const auto derived = derived_increments(inc, {{0, 2}, {1}});
  CHECK(derived.arity() == 2);
  for (int j = 0; j < uneven.size(); ++j) {
    CHECK(rel_diff(derived.matrix(0, j), inc.matrix(0, j) * inc.matrix(2, j)) < 1e-12);
    CHECK(rel_diff(derived.matrix(1, j), inc.matrix(1, j)) < 1e-12);
  }
}

TEST_CASE("calibration against the exact engine") {
  SUBCASE("free Poisson, total moments") {
    const auto rows = calibrate(make_free_poisson(1), Subdivision::uniform(1, 1), config(120, 40), 4);
    REQUIRE(rows.size() == 4);
    CHECK(rows[1].reference == doctest::Approx(2));
    CHECK(rows[2].reference == doctest::Approx(5));
    CHECK(rows[3].reference == doctest::Approx(14));
    for (const auto& r : rows) {
      CAPTURE(r.label);
      CHECK(r.pass);
    }
  }
  SUBCASE("semicircular, interval words") {
    const auto rows = calibrate(make_semicircular(), Subdivision::uniform(1, 2),
                                config(120, 40, MatrixModel::GaussianIncrements), 4);
    CHECK(rows.size() == 4 + 4 + 8 + 16);
    CHECK(rows[0].reference == doctest::Approx(0));
    CHECK(rows[1].reference == doctest::Approx(1));
    CHECK(rows[3].reference == doctest::Approx(2));
    for (const auto& r : rows) {
      CAPTURE(r.label);
      CHECK(r.pass);
    }
  }
}

TEST_CASE("main theorem residual vanishes for the one-block partition") {
  for (int k = 1; k <= 3; ++k) {
    const auto e = main_theorem_matrix_residual(Partition::coarsest(k), make_free_poisson(1), config(20, 2),
                                                Subdivision::uniform(1, 6));
    CHECK(e.mean < 1e-12);
  }
  CHECK_THROWS_AS(main_theorem_matrix_residual(Partition::parse("((1,3)(2,4))"), make_free_poisson(1),
                                               config(8, 1), Subdivision::uniform(1, 3)),
                  DomainError);
  CHECK_THROWS_AS(main_theorem_matrix_residual(Partition::coarsest(2), make_semicircular(),
                                               config(8, 1, MatrixModel::GaussianIncrements),
                                               Subdivision::uniform(1, 3)),
                  DomainError);
}

TEST_CASE("trace of St_π approaches the exact limit") {
  const auto p = Partition::parse("((1,3)(2))");
  const auto x = make_identical_copies(make_free_poisson(1), 3);
  const auto s = Subdivision::uniform(1, 40);
  const auto cfg = config(200, 12);
  std::vector<double> traces;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    traces.push_back(normalized_trace(st_matrix(p, sample_increments(x, s, cfg, trial))));
  }
  const auto e = summarize(traces);
  const double finite = expect_st(p, s, x).convert_to<double>();
  CHECK(limit_expect_st(p, x, 1) == 1);
  // finite-N mean within sampling error, the limit within the O(1/N) gap
  CHECK(std::abs(e.mean - finite) <= std::max(3 * e.std_error, 1e-3));
  CHECK(std::abs(e.mean - 1) <= std::abs(finite - 1) + 3 * e.std_error + 1e-3);
}

TEST_CASE("main theorem residual shrinks as d and N grow") {
  const auto rows = main_theorem_matrix_sweep(Partition::parse("((1,3)(2))"), make_free_poisson(1), config(0, 3),
                                              {{60, 8}, {120, 16}, {240, 32}}, 1.0);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(r.pass);
}

TEST_CASE("projection sums decay with the mesh") {
  const std::vector<Subdivision> meshes{Subdivision::uniform(1, 2), Subdivision::uniform(1, 4),
                                        Subdivision::uniform(1, 8), Subdivision::uniform(1, 16)};
  for (int k : {1, 2}) {
    for (auto z : {ZModel::CenteredGaussian, ZModel::ShiftedGaussian}) {
      const auto rows = lem_proj_decay(config(128, 8), meshes, k, z);
      for (const auto& r : rows) {
        CAPTURE(r.n);
        CHECK(r.pass);
        CHECK(r.estimate < r.reference);
      }
    }
  }
  CHECK_THROWS_AS(lem_proj_decay(config(16, 1), meshes, 1, ZModel::Identity), DomainError);
}

TEST_CASE("sandwich residual shrinks under refinement") {
  double previous = 1e9;
  for (auto [d, n] : {std::pair{60, 6}, std::pair{120, 12}, std::pair{240, 24}}) {
    const auto e = sandwich_matrix_residual(config(d, 3), Subdivision::uniform(1, n));
    CHECK(e.median < previous);
    previous = e.median;
  }
}

TEST_CASE("sweep rows serialize with their seed") {
  SweepRow row{"X(t)^2", 400, 1, 200, 2.01, 0.01, 2, true, 42};
  const auto j = to_json(row);
  CHECK(j.at("seed") == 42);
  CHECK(j.at("trial_count") == 200);
  CHECK(sweep_csv_header() == "label,d,N,trial_count,estimate,stderr,reference,pass,seed");
  CHECK(to_csv(row) == "\"X(t)^2\",400,1,200,2.01,0.01,2,true,42");
}

TEST_CASE("summaries use the sample standard error") {
  const auto e = summarize({1, 2, 3, 4});
  CHECK(e.mean == doctest::Approx(2.5));
  CHECK(e.median == doctest::Approx(2.5));
  CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3 / 4)));
}
