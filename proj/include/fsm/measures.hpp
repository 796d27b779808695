#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsm/partition.hpp"
#include "fsm/process.hpp"
#include "fsm/rational.hpp"

namespace fsm {

enum class MeasureKind { St, Pr };
enum class Level { L1, L2 };

std::string to_string(MeasureKind kind);
std::string to_string(Level level);

inline constexpr int kMaxStBlocks = 10;
inline constexpr int kMaxProductArity = 8;

/// The k-tuple used for a k-position expression: `spec` itself when it has k
/// components, k identical copies when it has one. Anything else is a DimensionError.
ProcessSpec tuple_for(const ProcessSpec& spec, int k);

/// τ(St_p(X, S)), exact for any subdivision. Crossing p allowed.
Rational expect_st(const Partition& p, const Subdivision& s, const ProcessSpec& spec);
/// τ(Pr_p(X, S)).
Rational expect_pr(const Partition& p, const Subdivision& s, const ProcessSpec& spec);
Rational expect(const Partition& p, MeasureKind kind, const Subdivision& s, const ProcessSpec& spec);

/// Σ_e c_e N^e: the expectation on the uniform subdivision of [0, t) into N pieces.
struct UniformFormula {
  std::map<int, Rational> coefficients;  // exponent of N → coefficient

  Rational evaluate(long n) const;
  /// N → ∞ value; DomainError if a positive power survives.
  Rational limit() const;
  std::string to_csv() const;
};

UniformFormula uniform_formula(const Partition& p, MeasureKind kind, const ProcessSpec& spec, const Rational& t);

struct ExpectationReport {
  Rational finite_value;
  UniformFormula uniform_formula;  // for N = |S| equal pieces of [0, total(S))
  Rational limit_value;
};

ExpectationReport expectation_report(const Partition& p, MeasureKind kind, const Subdivision& s,
                                     const ProcessSpec& spec);

/// t^{|p|} R_p(X) for noncrossing p, else 0.
Rational limit_expect_st(const Partition& p, const ProcessSpec& spec, const Rational& t);
/// Σ_{σ ∈ NC(k), σ ≥ p} t^{|σ|} R_σ(X).
Rational limit_expect_pr(const Partition& p, const ProcessSpec& spec, const Rational& t);

/// One factor St_p or Pr_p of a product; consecutive factors occupy consecutive positions.
struct Factor {
  Partition partition;
  MeasureKind kind = MeasureKind::St;
};

/// τ(∏_i F_i(C_i; X, S)) where `spec` covers the concatenated positions.
Rational expect_product(const std::vector<Factor>& factors, const Subdivision& s, const ProcessSpec& spec);
Rational limit_expect_product(const std::vector<Factor>& factors, const ProcessSpec& spec, const Rational& t);

// ---------------------------------------------------------------------------
// Polynomials in measures over an extended tuple

/// A base tuple together with diagonal components Δ(w); component c of `spec` is Δ(words[c]).
struct ExtendedTuple {
  ProcessSpec base;
  ProcessSpec spec;
  std::vector<std::vector<int>> words;
  std::vector<int> adjoint_of;  // Δ(w)* = Δ(reverse w) for self-adjoint components

  int component(const std::vector<int>& word) const;
};

/// Singletons of every base component, then every given word and its reverse (deduplicated).
ExtendedTuple diagonal_extension(const ProcessSpec& base, const std::vector<std::vector<int>>& words);

struct MeasureTerm {
  Partition partition;
  MeasureKind kind = MeasureKind::St;
  std::vector<int> word;  // extended components, one per position
};

struct MeasureMonomial {
  Rational coefficient;
  std::vector<MeasureTerm> factors;  // empty = the unit
};

class MeasurePolynomial {
 public:
  MeasurePolynomial() = default;
  static MeasurePolynomial constant(const Rational& c);
  static MeasurePolynomial term(MeasureTerm t, const Rational& c = 1);

  const std::vector<MeasureMonomial>& monomials() const { return monomials_; }

  MeasurePolynomial adjoint(const std::vector<int>& adjoint_of) const;

  friend MeasurePolynomial operator+(MeasurePolynomial a, const MeasurePolynomial& b);
  friend MeasurePolynomial operator-(MeasurePolynomial a, const MeasurePolynomial& b);
  friend MeasurePolynomial operator*(const MeasurePolynomial& a, const MeasurePolynomial& b);
  friend MeasurePolynomial operator*(const Rational& c, MeasurePolynomial a);

 private:
  std::vector<MeasureMonomial> monomials_;
};

Rational limit_expect(const MeasurePolynomial& a, const ExtendedTuple& ext, const Rational& t);
/// lim τ(A A*); zero iff A = 0 in the limit.
Rational l2_residual(const MeasurePolynomial& a, const ExtendedTuple& ext, const Rational& t);

/// Runs the diagonal substitution check on the tuple `spec` is selected from
/// (all compositions of all words of length ≤ 6), cached per process.
const DiagonalRuleCheck& diagonal_rule_gate(const ProcessSpec& spec);

// ---------------------------------------------------------------------------
// Residuals

/// St_π − ∏ R(C_i; X(t)) · ψ(Δ(B_1), ..., Δ(B_o)).
Rational main_theorem_residual(const Partition& p, const ProcessSpec& spec, Level level, const Rational& t);

enum class ExampleProcess { FreePoisson, Brownian };

/// St_π(t) against the closed forms for free Poisson(1) and free Brownian motion.
Rational example_formula_residual(ExampleProcess which, const Partition& p, Level level, const Rational& t);

}  // namespace fsm
