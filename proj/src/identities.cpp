#include "fsm/identities.hpp"

#include <algorithm>
#include <numeric>

#include "fsm/errors.hpp"

namespace fsm {

nlohmann::json to_json(const CheckRecord& record) {
  return {{"check", record.check},
          {"partition", record.partition},
          {"process", record.process},
          {"subdivision", record.subdivision},
          {"residual", to_string(record.residual)},
          {"pass", record.pass}};
}

bool CheckReport::passed() const {
  return std::all_of(records.begin(), records.end(), [](const CheckRecord& r) { return r.pass; });
}

int CheckReport::failures() const {
  return static_cast<int>(std::count_if(records.begin(), records.end(), [](const CheckRecord& r) { return !r.pass; }));
}

void CheckReport::append(const CheckReport& other) {
  records.insert(records.end(), other.records.begin(), other.records.end());
}

std::vector<Subdivision> standard_battery() {
  return {Subdivision::uniform(1, 1),
          Subdivision::uniform(1, 3),
          Subdivision::from_lengths({Rational(1, 2), Rational(1, 3), Rational(1, 6)}),
          Subdivision::from_lengths({Rational(1, 4), Rational(1, 4), Rational(1, 8), Rational(3, 8)}),
          Subdivision::from_lengths({Rational(2, 5), Rational(3, 5), Rational(1, 2)})};
}

ProcessSpec suite_tuple(const ProcessSpec& spec, int k) {
  if (spec.arity() == k) return spec;
  if (spec.arity() == 1) return make_identical_copies(spec, k);
  std::vector<int> word(k);
  for (int i = 0; i < k; ++i) word[i] = i % spec.arity();
  return spec.select(std::move(word));
}

namespace {

class Recorder {
 public:
  Recorder(CheckReport& report, std::string process) : report_(report), process_(std::move(process)) {}

  void add(std::string check, const std::string& partition, const std::string& subdivision, const Rational& residual) {
    report_.records.push_back({std::move(check), partition, process_, subdivision, residual, residual == 0});
  }

 private:
  CheckReport& report_;
  std::string process_;
};

std::vector<int> positions(int k) {
  std::vector<int> w(k);
  std::iota(w.begin(), w.end(), 0);
  return w;
}

// Every composition of k, as interval partitions.
std::vector<Partition> interval_partitions(int k) {
  std::vector<Partition> out;
  for (unsigned cuts = 0; cuts < (1u << (k - 1)); ++cuts) {
    std::vector<int> sizes{1};
    for (int i = 0; i < k - 1; ++i) {
      if (cuts >> i & 1u) {
        sizes.push_back(1);
      } else {
        ++sizes.back();
      }
    }
    out.push_back(Partition::intervals(sizes));
  }
  return out;
}

bool centered(const ProcessSpec& x) {
  for (int i = 0; i < x.arity(); ++i) {
    if (x.cumulant(std::vector<int>{i}) != 0) return false;
  }
  return true;
}

void finite_checks(Recorder& rec, const ProcessSpec& x, int k) {
  const auto& all = set_partitions(k);
  for (const auto& s : standard_battery()) {
    const auto label = s.to_string();
    std::vector<Rational> st, pr;
    for (const auto& p : all) {
      st.push_back(expect_st(p, s, x));
      pr.push_back(expect_pr(p, s, x));
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
      Rational up = 0, mob = 0;
      for (std::size_t j = 0; j < all.size(); ++j) {
        if (!refines(all[i], all[j])) continue;
        up += st[j];
        mob += mobius(all[i], all[j], Lattice::Full) * pr[j];
      }
      rec.add("st-pr-inversion", all[i].to_string(), label, pr[i] - up);
      rec.add("st-pr-mobius", all[i].to_string(), label, st[i] - mob);
    }
    // Pr_π factorizes over the outer components
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (!is_noncrossing(all[i])) continue;
      const auto split = classify_classes(all[i]);
      std::vector<Factor> factors;
      for (int c = 0; c < split.outer_count(); ++c) factors.push_back({outer_component(all[i], split, c), MeasureKind::Pr});
      rec.add("pr-outer-factorization", all[i].to_string(), label, pr[i] - expect_product(factors, s, x));
    }
  }
}

void inner_peeling(Recorder& rec, const ProcessSpec& x, int k, const Rational& t) {
  const bool l2 = 2 * k <= kMaxProductArity;
  const auto ext = diagonal_extension(x, {});
  for (const auto& p : noncrossing_partitions(k)) {
    const auto split = classify_classes(p);
    for (const auto& c : split.inner) {
      std::vector<int> rest;
      for (int i = 0; i < k; ++i) {
        if (std::find(c.begin(), c.end(), i) == c.end()) rest.push_back(i);
      }
      const auto reduced = restrict(p, rest);
      const Rational rc = t * x.cumulant(c);
      rec.add("inner-peeling-L1", p.to_string(), "limit",
              limit_expect_st(p, x, t) - rc * limit_expect_st(reduced, x.select(rest), t));
      if (l2) {
        const auto a = MeasurePolynomial::term({p, MeasureKind::St, positions(k)}) -
                       MeasurePolynomial::term({reduced, MeasureKind::St, rest}, rc);
        rec.add("inner-peeling-L2", p.to_string(), "limit", l2_residual(a, ext, t));
      }
    }
    if (centered(x)) {
      const bool inner_singleton =
          std::any_of(split.inner.begin(), split.inner.end(), [](const auto& b) { return b.size() == 1; });
      if (inner_singleton) {
        rec.add("inner-singleton-L1", p.to_string(), "limit", limit_expect_st(p, x, t));
        if (l2) {
          rec.add("inner-singleton-L2", p.to_string(), "limit",
                  l2_residual(MeasurePolynomial::term({p, MeasureKind::St, positions(k)}), ext, t));
        }
      }
    }
  }
}

void diagonal_nesting(Recorder& rec, const ProcessSpec& x, int k, const Rational& t) {
  const auto top = Partition::coarsest(k);
  for (const auto& sigma : interval_partitions(k)) {
    const auto& groups = sigma.blocks();
    const auto derived = derived_diagonal_tuple(x, groups);
    const auto outer = Partition::coarsest(sigma.block_count());
    rec.add("diagonal-nesting-L1", sigma.to_string(), "limit",
            limit_expect_st(outer, derived, t) - limit_expect_st(top, x, t));
    if (2 * k <= kMaxProductArity) {
      const auto ext = diagonal_extension(x, groups);
      std::vector<int> word;
      for (const auto& g : groups) word.push_back(ext.component(g));
      const auto a = MeasurePolynomial::term({outer, MeasureKind::St, word}) -
                     MeasurePolynomial::term({top, MeasureKind::St, positions(k)});
      rec.add("diagonal-nesting-L2", sigma.to_string(), "limit", l2_residual(a, ext, t));
    }
  }
}

// Σ_i X_i Z X_i → τ(Z) Δ_2 with Z = Y(t) for a free Poisson Y of rate 1/2.
void sandwich(Recorder& rec, const ProcessSpec& spec, const Rational& t) {
  const auto x = spec.arity() == 1 ? spec : spec.select({0});
  const Rational rate(1, 2);
  const auto family = make_free_family({x, make_free_poisson(rate)});
  const auto p = Partition::parse("((1,3)(2))");
  const auto two = Partition::coarsest(2);
  const Rational tau_z = t * rate;
  rec.add("sandwich-L1", p.to_string(), "limit",
          limit_expect_pr(p, family.select({0, 1, 0}), t) - tau_z * limit_expect_st(two, family.select({0, 0}), t));
  const auto ext = diagonal_extension(family, {});
  const auto a = MeasurePolynomial::term({p, MeasureKind::Pr, {0, 1, 0}}) -
                 MeasurePolynomial::term({two, MeasureKind::St, {0, 0}}, tau_z);
  rec.add("sandwich-L2", p.to_string(), "limit", l2_residual(a, ext, t));
}

}  // namespace

CheckReport identity_suite(const ProcessSpec& spec, int k_max, const Rational& t) {
  if (k_max < 1 || k_max > kMaxSuiteOrder) throw SizeGuardError("identity suite: k_max must lie in [1, 5]");
  CheckReport report;
  Recorder rec(report, spec.descriptor().dump());
  const auto& gate = diagonal_rule_gate(spec);
  rec.add("diagonal-rule-oracle", "", "patterns=" + std::to_string(gate.patterns), gate.passed ? 0 : 1);
  for (int k = 1; k <= k_max; ++k) {
    const auto x = suite_tuple(spec, k);
    finite_checks(rec, x, k);
    inner_peeling(rec, x, k, t);
    diagonal_nesting(rec, x, k, t);
  }
  sandwich(rec, spec, t);
  return report;
}

CheckReport main_theorem_sweep(const ProcessSpec& spec, int k_max, const Rational& t) {
  if (k_max < 1 || k_max > kMaxSuiteOrder) throw SizeGuardError("main theorem sweep: k_max must lie in [1, 5]");
  CheckReport report;
  Recorder rec(report, spec.descriptor().dump());
  for (int k = 1; k <= k_max; ++k) {
    const auto x = suite_tuple(spec, k);
    for (const auto& p : noncrossing_partitions(k)) {
      rec.add("main-theorem-L1", p.to_string(), "limit", main_theorem_residual(p, x, Level::L1, t));
      if (2 * k <= kMaxProductArity) {
        rec.add("main-theorem-L2", p.to_string(), "limit", main_theorem_residual(p, x, Level::L2, t));
      }
    }
  }
  return report;
}

CheckReport example_sweep(ExampleProcess which, int k_max, const Rational& t) {
  if (k_max < 1 || 2 * k_max > kMaxProductArity) throw SizeGuardError("example sweep: k_max must lie in [1, 4]");
  CheckReport report;
  const std::string name = which == ExampleProcess::FreePoisson ? "free_poisson" : "brownian";
  Recorder rec(report, name);
  for (int k = 1; k <= k_max; ++k) {
    for (const auto& p : noncrossing_partitions(k)) {
      rec.add("example-" + name + "-L1", p.to_string(), "limit", example_formula_residual(which, p, Level::L1, t));
      rec.add("example-" + name + "-L2", p.to_string(), "limit", example_formula_residual(which, p, Level::L2, t));
    }
  }
  return report;
}

}  // namespace fsm
