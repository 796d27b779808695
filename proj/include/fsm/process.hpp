#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fsm/cumulants.hpp"
#include "fsm/partition.hpp"
#include "fsm/rational.hpp"

namespace fsm {

/// Half-open interval [begin, end) with rational endpoints.
struct Interval {
  Rational begin;
  Rational end;

  Rational length() const { return end - begin; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// |∩ J_i|, zero when the intersection is empty.
Rational intersection_length(std::span<const Interval> intervals);

/// Ordered subdivision I_1, ..., I_N of [0, t).
class Subdivision {
 public:
  static Subdivision uniform(const Rational& t, int n);
  static Subdivision from_lengths(std::vector<Rational> lengths);

  const Rational& total() const { return total_; }
  int size() const { return static_cast<int>(lengths_.size()); }
  const std::vector<Rational>& lengths() const { return lengths_; }
  const Rational& length(int j) const { return lengths_.at(j); }
  Interval interval(int j) const;
  Rational mesh() const;
  bool is_uniform() const;

  /// Σ_j ℓ_j^m.
  Rational power_sum(int m) const;

  std::string to_string() const;

 private:
  Subdivision() = default;
  Rational total_;
  std::vector<Rational> lengths_;
  std::vector<Rational> starts_;
};

namespace detail {
struct ProcessNode;
}

/// A consistent k-tuple of free stochastic measures, specified by its joint
/// free cumulants per unit time.
///
/// `cumulant(word)` is R(X^{(w_1)}, ..., X^{(w_n)}) for X = X([0, 1)); by
/// stationarity and free increments the cumulant over an interval I is |I|
/// times this value. Words may repeat components.
class ProcessSpec {
 public:
  int arity() const;
  const std::vector<std::string>& labels() const;

  Rational cumulant(std::span<const int> word) const;

  /// R(B; X) for every nonempty B ⊆ [k]; carries a freeness structure when one is known.
  CumulantFunctional unit_cumulants() const;

  /// The tuple (X^{(w_1)}, ..., X^{(w_n)}).
  ProcessSpec select(std::vector<int> word) const;

  /// Free family index per component, when the tuple was built as a free family.
  std::optional<std::vector<int>> free_families() const;

  /// When this tuple is a selection of components of another tuple: that tuple and the letter map.
  std::optional<std::pair<ProcessSpec, std::vector<int>>> selection_source() const;

  nlohmann::json descriptor() const;

 private:
  friend ProcessSpec make_from_node(std::shared_ptr<const detail::ProcessNode> node);
  explicit ProcessSpec(std::shared_ptr<const detail::ProcessNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const detail::ProcessNode> node_;
};

/// Free Poisson process: every cumulant equals `rate`.
ProcessSpec make_free_poisson(const Rational& rate);
/// Free Brownian motion: r_2 = 1, all other cumulants 0.
ProcessSpec make_semicircular();
/// One process with cumulants r_1, r_2, ...; cumulants past the list are 0.
ProcessSpec make_cumulant_sequence(std::vector<Rational> sequence);
/// A k-tuple given by a subset table; only increasing words (subsets) are defined.
ProcessSpec make_custom(CumulantFunctional unit_cumulants);

/// k identical copies of a single-component process.
ProcessSpec make_identical_copies(const ProcessSpec& base, int k);
/// Freely independent family; mixed cumulants vanish.
ProcessSpec make_free_family(std::vector<ProcessSpec> members);

/// (Δ(X_{G_1}), ..., Δ(X_{G_m})): joint cumulants are cumulants of the
/// concatenated words, R(Δ(G_{i_1}), ..., Δ(G_{i_s})) = R(G_{i_1} ... G_{i_s}; X).
/// Groups are nonempty words over the components of `spec`.
ProcessSpec derived_diagonal_tuple(const ProcessSpec& spec, std::vector<std::vector<int>> groups);

/// R_π of the increments X^{(i)}(J_i), i.e. ∏_{B ∈ π} |∩_{i ∈ B} J_i| R(B; X).
/// Position i of the word uses component i of `spec`.
Rational increment_cumulant(const ProcessSpec& spec, const Partition& p, std::span<const Interval> intervals);

/// φ(X^{(1)}(J_1) ⋯ X^{(n)}(J_n)) through the moment-cumulant formula.
Rational increment_moment(const ProcessSpec& spec, std::span<const Interval> intervals);

/// Moment polynomial in t of Δ(X_{G_1}, t) ⋯ Δ(X_{G_m}, t): coefficient of t^j at index j.
std::vector<Rational> diagonal_moment_polynomial(const ProcessSpec& spec, std::span<const std::vector<int>> groups);

/// Outcome of checking the diagonal substitution rule against the moment polynomial.
struct DiagonalRuleCheck {
  int patterns = 0;  // group sequences compared
  bool passed = true;
  std::string first_failure;
};

/// For every sequence of groups with total word length ≤ max_word_length,
/// compares the moment polynomial above with the moments of the derived tuple
/// (via moments_from_cumulants) at deg + 1 distinct times.
DiagonalRuleCheck check_diagonal_rule(const ProcessSpec& spec, std::span<const std::vector<int>> groups,
                                      int max_word_length = 6);

ProcessSpec process_from_json(const nlohmann::json& j);

/// Accepts "free_poisson", "semicircular", "brownian" or a JSON descriptor.
ProcessSpec parse_process(const std::string& text);

}  // namespace fsm
