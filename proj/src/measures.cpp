#include "fsm/measures.hpp"

#include <algorithm>
#include <array>
#include <mutex>
#include <numeric>
#include <sstream>

#include "fsm/cumulants.hpp"
#include "fsm/errors.hpp"

namespace fsm {

std::string to_string(MeasureKind kind) { return kind == MeasureKind::St ? "St" : "Pr"; }
std::string to_string(Level level) { return level == Level::L1 ? "L1" : "L2"; }

ProcessSpec tuple_for(const ProcessSpec& spec, int k) {
  if (spec.arity() == k) return spec;
  if (spec.arity() == 1) return make_identical_copies(spec, k);
  throw DimensionError("a " + std::to_string(spec.arity()) + "-tuple cannot feed " + std::to_string(k) + " positions");
}

namespace {

// μ(0̂, θ) for every θ ∈ 𝒫(n), aligned with set_partitions(n).
const std::vector<Rational>& mobius_from_bottom(int n) {
  static std::array<std::once_flag, kMaxStBlocks + 1> flags;
  static std::array<std::vector<Rational>, kMaxStBlocks + 1> cache;
  std::call_once(flags.at(n), [n] {
    for (const auto& theta : set_partitions(n)) {
      Rational mu = 1;
      for (const auto& g : theta.blocks()) {
        for (std::size_t j = 1; j < g.size(); ++j) mu *= -static_cast<long>(j);
      }
      cache[n].push_back(mu);
    }
  });
  return cache[n];
}

std::vector<Rational> power_sums(const Subdivision& s, int max_m) {
  std::vector<Rational> out;
  for (int m = 0; m <= max_m; ++m) out.push_back(s.power_sum(m));
  return out;
}

// ρ-blocks per block of `coarse` (ρ refines coarse).
std::vector<int> blocks_inside(const Partition& rho, const Partition& coarse) {
  std::vector<int> n(coarse.block_count(), 0);
  for (const auto& b : rho.blocks()) ++n[coarse.block_of(b.front())];
  return n;
}

}  // namespace

Rational expect_st(const Partition& p, const Subdivision& s, const ProcessSpec& spec) {
  const auto x = tuple_for(spec, p.size());
  if (p.block_count() > kMaxStBlocks) throw SizeGuardError("expect_st: more than 10 blocks");
  const auto unit = x.unit_cumulants();
  const auto sums = power_sums(s, p.size());
  const auto& thetas = set_partitions(p.block_count());
  const auto& mu = mobius_from_bottom(p.block_count());

  // Σ over injective block labellings, by inclusion-exclusion over which labels coincide
  Rational total = 0;
  for (const auto& rho : noncrossing_partitions(p.size())) {
    if (!refines(rho, p)) continue;
    const Rational r = unit.product(rho);
    if (r == 0) continue;
    const auto n = blocks_inside(rho, p);
    Rational w = 0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      Rational term = mu[i];
      for (const auto& g : thetas[i].blocks()) {
        int m = 0;
        for (int b : g) m += n[b];
        term *= sums[m];
      }
      w += term;
    }
    total += r * w;
  }
  return total;
}

Rational expect_pr(const Partition& p, const Subdivision& s, const ProcessSpec& spec) {
  const auto x = tuple_for(spec, p.size());
  const auto unit = x.unit_cumulants();
  const auto sums = power_sums(s, p.size());
  Rational total = 0;
  for (const auto& rho : noncrossing_partitions(p.size())) {
    const Rational r = unit.product(rho);
    if (r == 0) continue;
    const auto joined = join(rho, p);
    Rational term = r;
    for (int m : blocks_inside(rho, joined)) term *= sums[m];
    total += term;
  }
  return total;
}

Rational expect(const Partition& p, MeasureKind kind, const Subdivision& s, const ProcessSpec& spec) {
  return kind == MeasureKind::St ? expect_st(p, s, spec) : expect_pr(p, s, spec);
}

// ---------------------------------------------------------------------------
// Uniform subdivisions

Rational UniformFormula::evaluate(long n) const {
  if (n < 1) throw DomainError("uniform formula needs N ≥ 1");
  Rational total = 0;
  for (const auto& [e, c] : coefficients) total += c * power(Rational(n), e);
  return total;
}

Rational UniformFormula::limit() const {
  for (const auto& [e, c] : coefficients) {
    if (e > 0 && c != 0) throw DomainError("uniform formula grows with N");
  }
  auto it = coefficients.find(0);
  return it == coefficients.end() ? Rational(0) : it->second;
}

std::string UniformFormula::to_csv() const {
  std::ostringstream out;
  out << "exponent_of_N,coefficient\n";
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
    out << it->first << "," << fsm::to_string(it->second) << "\n";
  }
  return out.str();
}

namespace {

// Signed Stirling numbers of the first kind: N(N-1)⋯(N-m+1) = Σ_j s(m, j) N^j.
std::vector<Rational> falling_factorial_coefficients(int m) {
  std::vector<Rational> c{1};
  for (int i = 0; i < m; ++i) {
    std::vector<Rational> next(c.size() + 1, Rational(0));
    for (std::size_t j = 0; j < c.size(); ++j) {
      next[j + 1] += c[j];
      next[j] -= c[j] * i;
    }
    c = std::move(next);
  }
  return c;
}

void add(std::map<int, Rational>& coefficients, int e, const Rational& c) {
  if (c == 0) return;
  auto& slot = coefficients[e];
  slot += c;
  if (slot == 0) coefficients.erase(e);
}

}  // namespace

UniformFormula uniform_formula(const Partition& p, MeasureKind kind, const ProcessSpec& spec, const Rational& t) {
  const auto x = tuple_for(spec, p.size());
  const auto unit = x.unit_cumulants();
  UniformFormula f;
  if (kind == MeasureKind::St) {
    const auto ff = falling_factorial_coefficients(p.block_count());
    for (const auto& rho : noncrossing_partitions(p.size())) {
      if (!refines(rho, p)) continue;
      const Rational c = unit.product(rho) * power(t, rho.block_count());
      for (std::size_t j = 0; j < ff.size(); ++j) add(f.coefficients, static_cast<int>(j) - rho.block_count(), c * ff[j]);
    }
  } else {
    for (const auto& rho : noncrossing_partitions(p.size())) {
      const Rational c = unit.product(rho) * power(t, rho.block_count());
      add(f.coefficients, join(rho, p).block_count() - rho.block_count(), c);
    }
  }
  return f;
}

ExpectationReport expectation_report(const Partition& p, MeasureKind kind, const Subdivision& s,
                                     const ProcessSpec& spec) {
  ExpectationReport report;
  report.finite_value = expect(p, kind, s, spec);
  report.uniform_formula = uniform_formula(p, kind, spec, s.total());
  report.limit_value = report.uniform_formula.limit();
  return report;
}

// ---------------------------------------------------------------------------
// Limits

namespace {

Rational cumulant_product(const ProcessSpec& x, const Partition& p) {
  Rational r = 1;
  for (const auto& b : p.blocks()) {
    r *= x.cumulant(b);
    if (r == 0) break;
  }
  return r;
}

}  // namespace

Rational limit_expect_st(const Partition& p, const ProcessSpec& spec, const Rational& t) {
  const auto x = tuple_for(spec, p.size());
  if (!is_noncrossing(p)) return 0;
  return power(t, p.block_count()) * cumulant_product(x, p);
}

Rational limit_expect_pr(const Partition& p, const ProcessSpec& spec, const Rational& t) {
  const auto x = tuple_for(spec, p.size());
  Rational total = 0;
  for (const auto& s : noncrossing_partitions(p.size())) {
    if (refines(p, s)) total += power(t, s.block_count()) * cumulant_product(x, s);
  }
  return total;
}

namespace {

struct ProductShape {
  int total = 0;
  std::vector<std::vector<int>> positions;
  Partition tau = Partition::finest(1);
};

ProductShape shape_of(const std::vector<Factor>& factors) {
  if (factors.empty()) throw DomainError("empty product");
  ProductShape shape;
  std::vector<int> sizes;
  for (const auto& f : factors) {
    std::vector<int> pos(f.partition.size());
    std::iota(pos.begin(), pos.end(), shape.total);
    shape.positions.push_back(pos);
    sizes.push_back(f.partition.size());
    shape.total += f.partition.size();
  }
  if (shape.total > kMaxProductArity) {
    throw SizeGuardError("product of total arity " + std::to_string(shape.total) + " exceeds " +
                         std::to_string(kMaxProductArity));
  }
  shape.tau = Partition::intervals(sizes);
  return shape;
}

// σ contributes to the product iff σ ∧ τ restricts to p_i (St) or to a coarsening of p_i (Pr) on C_i.
bool contributes(const Partition& sigma, const std::vector<Factor>& factors, const ProductShape& shape) {
  const Partition m = meet(sigma, shape.tau);
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const Partition piece = restrict(m, shape.positions[i]);
    const bool ok = factors[i].kind == MeasureKind::St ? piece == factors[i].partition
                                                       : refines(factors[i].partition, piece);
    if (!ok) return false;
  }
  return true;
}

}  // namespace

Rational expect_product(const std::vector<Factor>& factors, const Subdivision& s, const ProcessSpec& spec) {
  const auto shape = shape_of(factors);
  const auto x = tuple_for(spec, shape.total);
  Rational total = 0;
  for (const auto& sigma : set_partitions(shape.total)) {
    if (contributes(sigma, factors, shape)) total += expect_st(sigma, s, x);
  }
  return total;
}

Rational limit_expect_product(const std::vector<Factor>& factors, const ProcessSpec& spec, const Rational& t) {
  const auto shape = shape_of(factors);
  const auto x = tuple_for(spec, shape.total);
  const auto unit = x.unit_cumulants();
  Rational total = 0;
  for (const auto& sigma : noncrossing_partitions(shape.total)) {
    if (!contributes(sigma, factors, shape)) continue;
    const Rational r = unit.product(sigma);
    if (r != 0) total += power(t, sigma.block_count()) * r;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Extended tuples and measure polynomials

int ExtendedTuple::component(const std::vector<int>& word) const {
  auto it = std::find(words.begin(), words.end(), word);
  if (it == words.end()) throw DomainError("word is not a component of the extended tuple");
  return static_cast<int>(it - words.begin());
}

ExtendedTuple diagonal_extension(const ProcessSpec& base, const std::vector<std::vector<int>>& words) {
  std::vector<std::vector<int>> all;
  auto push = [&](const std::vector<int>& w) {
    if (std::find(all.begin(), all.end(), w) == all.end()) all.push_back(w);
  };
  for (int i = 0; i < base.arity(); ++i) push({i});
  for (const auto& w : words) {
    push(w);
    push({w.rbegin(), w.rend()});
  }
  std::vector<int> adjoint_of;
  for (const auto& w : all) {
    const std::vector<int> rev(w.rbegin(), w.rend());
    adjoint_of.push_back(static_cast<int>(std::find(all.begin(), all.end(), rev) - all.begin()));
  }
  auto spec = derived_diagonal_tuple(base, all);
  return ExtendedTuple{base, std::move(spec), std::move(all), std::move(adjoint_of)};
}

MeasurePolynomial MeasurePolynomial::constant(const Rational& c) {
  MeasurePolynomial p;
  p.monomials_.push_back({c, {}});
  return p;
}

MeasurePolynomial MeasurePolynomial::term(MeasureTerm t, const Rational& c) {
  if (static_cast<int>(t.word.size()) != t.partition.size()) {
    throw DimensionError("measure term: word length differs from partition size");
  }
  MeasurePolynomial p;
  p.monomials_.push_back({c, {std::move(t)}});
  return p;
}

MeasurePolynomial MeasurePolynomial::adjoint(const std::vector<int>& adjoint_of) const {
  MeasurePolynomial out;
  for (const auto& m : monomials_) {
    MeasureMonomial a{m.coefficient, {}};
    for (auto it = m.factors.rbegin(); it != m.factors.rend(); ++it) {
      MeasureTerm t{opposite(it->partition), it->kind, {}};
      for (auto w = it->word.rbegin(); w != it->word.rend(); ++w) t.word.push_back(adjoint_of.at(*w));
      a.factors.push_back(std::move(t));
    }
    out.monomials_.push_back(std::move(a));
  }
  return out;
}

MeasurePolynomial operator+(MeasurePolynomial a, const MeasurePolynomial& b) {
  a.monomials_.insert(a.monomials_.end(), b.monomials_.begin(), b.monomials_.end());
  return a;
}

MeasurePolynomial operator-(MeasurePolynomial a, const MeasurePolynomial& b) { return std::move(a) + Rational(-1) * b; }

MeasurePolynomial operator*(const MeasurePolynomial& a, const MeasurePolynomial& b) {
  MeasurePolynomial out;
  for (const auto& x : a.monomials_) {
    for (const auto& y : b.monomials_) {
      MeasureMonomial m{x.coefficient * y.coefficient, x.factors};
      m.factors.insert(m.factors.end(), y.factors.begin(), y.factors.end());
      out.monomials_.push_back(std::move(m));
    }
  }
  return out;
}

MeasurePolynomial operator*(const Rational& c, MeasurePolynomial a) {
  for (auto& m : a.monomials_) m.coefficient *= c;
  return a;
}

const DiagonalRuleCheck& diagonal_rule_gate(const ProcessSpec& spec) {
  ProcessSpec root = spec;
  while (auto src = root.selection_source()) root = src->first;
  if (root.arity() > 3) throw SizeGuardError("diagonal rule gate: underlying tuple has more than 3 components");

  static std::mutex mutex;
  static std::map<std::string, DiagonalRuleCheck> cache;
  const auto key = root.descriptor().dump();
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  constexpr int kMaxWord = 6;
  std::vector<std::vector<int>> words, frontier{{}};
  for (int len = 1; len <= kMaxWord; ++len) {
    std::vector<std::vector<int>> next;
    for (const auto& w : frontier) {
      for (int a = 0; a < root.arity(); ++a) {
        auto x = w;
        x.push_back(a);
        next.push_back(x);
        words.push_back(std::move(x));
      }
    }
    frontier = std::move(next);
  }
  auto result = check_diagonal_rule(root, words, kMaxWord);
  std::lock_guard lock(mutex);
  return cache.emplace(key, std::move(result)).first->second;
}

Rational limit_expect(const MeasurePolynomial& a, const ExtendedTuple& ext, const Rational& t) {
  if (const auto& gate = diagonal_rule_gate(ext.base); !gate.passed) {
    throw DomainError("diagonal substitution rule failed its oracle check at " + gate.first_failure);
  }
  Rational total = 0;
  for (const auto& m : a.monomials()) {
    if (m.coefficient == 0) continue;
    if (m.factors.empty()) {
      total += m.coefficient;
      continue;
    }
    std::vector<Factor> factors;
    std::vector<int> word;
    for (const auto& f : m.factors) {
      factors.push_back({f.partition, f.kind});
      word.insert(word.end(), f.word.begin(), f.word.end());
    }
    total += m.coefficient * limit_expect_product(factors, ext.spec.select(word), t);
  }
  return total;
}

Rational l2_residual(const MeasurePolynomial& a, const ExtendedTuple& ext, const Rational& t) {
  return limit_expect(a * a.adjoint(ext.adjoint_of), ext, t);
}

// ---------------------------------------------------------------------------
// Residuals

namespace {

std::vector<int> iota_word(int k) {
  std::vector<int> w(k);
  std::iota(w.begin(), w.end(), 0);
  return w;
}

}  // namespace

Rational main_theorem_residual(const Partition& p, const ProcessSpec& spec, Level level, const Rational& t) {
  if (!is_noncrossing(p)) throw DomainError("main theorem needs a noncrossing partition, got " + p.to_string());
  const auto x = tuple_for(spec, p.size());
  const auto split = classify_classes(p);
  Rational c = 1;
  for (const auto& inner : split.inner) c *= t * x.cumulant(inner);
  const auto psi = Partition::finest(split.outer_count());

  if (level == Level::L1) {
    return limit_expect_st(p, x, t) - c * limit_expect_st(psi, derived_diagonal_tuple(x, split.outer), t);
  }
  const auto ext = diagonal_extension(x, split.outer);
  std::vector<int> outer_word;
  for (const auto& b : split.outer) outer_word.push_back(ext.component(b));
  const auto lhs = MeasurePolynomial::term({p, MeasureKind::St, iota_word(p.size())});
  const auto rhs = MeasurePolynomial::term({psi, MeasureKind::St, outer_word}, c);
  return l2_residual(lhs - rhs, ext, t);
}

Rational example_formula_residual(ExampleProcess which, const Partition& p, Level level, const Rational& t) {
  if (!is_noncrossing(p)) throw DomainError("example formulas need a noncrossing partition");
  const auto split = classify_classes(p);
  const auto x = which == ExampleProcess::FreePoisson ? make_free_poisson(1) : make_semicircular();
  const auto ext = diagonal_extension(x, {});

  MeasurePolynomial rhs;
  if (which == ExampleProcess::FreePoisson) {
    const int o = split.outer_count();
    rhs = MeasurePolynomial::term({Partition::finest(o), MeasureKind::St, std::vector<int>(o, 0)},
                                  power(t, split.inner_count()));
  } else {
    bool vanishes = false;
    int pairs = 0, outer_singletons = 0;
    for (const auto& b : p.blocks()) {
      vanishes = vanishes || b.size() > 2;
      if (b.size() == 2) ++pairs;
    }
    for (const auto& b : split.inner) vanishes = vanishes || b.size() == 1;
    for (const auto& b : split.outer) outer_singletons += b.size() == 1;
    if (!vanishes) {
      const Rational c = power(t, pairs);
      rhs = outer_singletons == 0
                ? MeasurePolynomial::constant(c)
                : MeasurePolynomial::term(
                      {Partition::finest(outer_singletons), MeasureKind::St, std::vector<int>(outer_singletons, 0)}, c);
    }
  }
  const auto lhs = MeasurePolynomial::term({p, MeasureKind::St, std::vector<int>(p.size(), 0)});
  const auto a = lhs - rhs;
  return level == Level::L1 ? limit_expect(a, ext, t) : l2_residual(a, ext, t);
}

}  // namespace fsm
