#include "fsm/process.hpp"

#include <algorithm>
#include <numeric>

#include "fsm/errors.hpp"

namespace fsm {

// ---------------------------------------------------------------------------
// Intervals and subdivisions

Rational intersection_length(std::span<const Interval> intervals) {
  if (intervals.empty()) return 0;
  Rational lo = intervals.front().begin, hi = intervals.front().end;
  for (const auto& iv : intervals) {
    lo = std::max(lo, iv.begin);
    hi = std::min(hi, iv.end);
  }
  return hi > lo ? Rational(hi - lo) : Rational(0);
}

Subdivision Subdivision::uniform(const Rational& t, int n) {
  if (n < 1) throw DomainError("subdivision needs at least one interval");
  if (t <= 0) throw DomainError("subdivision of an empty interval");
  return from_lengths(std::vector<Rational>(n, t / n));
}

Subdivision Subdivision::from_lengths(std::vector<Rational> lengths) {
  if (lengths.empty()) throw DomainError("subdivision needs at least one interval");
  Subdivision s;
  Rational start = 0;
  for (const auto& l : lengths) {
    if (l <= 0) throw DomainError("subdivision lengths must be positive, got " + fsm::to_string(l));
    s.starts_.push_back(start);
    start += l;
  }
  s.total_ = start;
  s.lengths_ = std::move(lengths);
  return s;
}

Interval Subdivision::interval(int j) const {
  return {starts_.at(j), starts_.at(j) + lengths_.at(j)};
}

Rational Subdivision::mesh() const { return *std::max_element(lengths_.begin(), lengths_.end()); }

bool Subdivision::is_uniform() const {
  return std::all_of(lengths_.begin(), lengths_.end(), [&](const Rational& l) { return l == lengths_.front(); });
}

Rational Subdivision::power_sum(int m) const {
  Rational sum = 0;
  for (const auto& l : lengths_) sum += power(l, m);
  return sum;
}

std::string Subdivision::to_string() const {
  if (is_uniform()) return "uniform(t=" + fsm::to_string(total_) + ",N=" + std::to_string(size()) + ")";
  std::string out = "[";
  for (std::size_t j = 0; j < lengths_.size(); ++j) {
    if (j) out += ",";
    out += fsm::to_string(lengths_[j]);
  }
  return out + "]";
}

// ---------------------------------------------------------------------------
// Process nodes

namespace detail {

struct ProcessNode {
  virtual ~ProcessNode() = default;
  virtual int arity() const = 0;
  virtual Rational cumulant(std::span<const int> word) const = 0;
  virtual nlohmann::json descriptor() const = 0;
  virtual std::optional<std::vector<int>> families() const { return std::nullopt; }
  virtual std::optional<std::pair<ProcessSpec, std::vector<int>>> source() const { return std::nullopt; }
  std::vector<std::string> labels;
};

}  // namespace detail

ProcessSpec make_from_node(std::shared_ptr<const detail::ProcessNode> node) { return ProcessSpec(std::move(node)); }

namespace {

using detail::ProcessNode;

std::vector<std::string> default_labels(int k, const std::string& stem) {
  std::vector<std::string> out;
  for (int i = 0; i < k; ++i) out.push_back(k == 1 ? stem : stem + std::to_string(i + 1));
  return out;
}

// One process given by r_1, r_2, ... followed by a constant tail.
struct SequenceNode final : ProcessNode {
  std::string kind;
  std::vector<Rational> head;
  Rational tail;

  int arity() const override { return 1; }
  Rational cumulant(std::span<const int> word) const override {
    const auto n = word.size();
    return n <= head.size() ? head[n - 1] : tail;
  }
  nlohmann::json descriptor() const override {
    if (kind == "free_poisson") return {{"type", "free_poisson"}, {"rate", to_string(tail)}};
    if (kind == "semicircular") return {{"type", "semicircular"}};
    nlohmann::json seq = nlohmann::json::array();
    for (const auto& r : head) seq.push_back(to_string(r));
    return {{"type", "custom"}, {"cumulants", seq}};
  }
};

struct TableNode final : ProcessNode {
  CumulantFunctional table{1};

  int arity() const override { return table.arity(); }
  Rational cumulant(std::span<const int> word) const override {
    for (std::size_t i = 1; i < word.size(); ++i) {
      if (word[i] <= word[i - 1]) {
        throw DomainError("custom subset table defines cumulants only on increasing words");
      }
    }
    return table.at(word);
  }
  nlohmann::json descriptor() const override { return {{"type", "custom"}, {"cumulants", to_json(table)}}; }
  std::optional<std::vector<int>> families() const override { return table.freeness(); }
};

struct SelectNode final : ProcessNode {
  ProcessSpec base;
  std::vector<int> map;
  bool identical = false;

  explicit SelectNode(ProcessSpec b) : base(std::move(b)) {}
  int arity() const override { return static_cast<int>(map.size()); }
  Rational cumulant(std::span<const int> word) const override {
    std::vector<int> mapped(word.size());
    for (std::size_t i = 0; i < word.size(); ++i) mapped[i] = map[word[i]];
    return base.cumulant(mapped);
  }
  nlohmann::json descriptor() const override {
    if (identical) {
      return {{"type", "tuple"}, {"mode", "identical"}, {"k", arity()}, {"base", base.descriptor()}};
    }
    std::vector<int> one_based(map);
    for (int& w : one_based) ++w;
    return {{"type", "select"}, {"base", base.descriptor()}, {"word", one_based}};
  }
  std::optional<std::vector<int>> families() const override {
    auto inner = base.free_families();
    if (!inner) return std::nullopt;
    std::vector<int> out;
    for (int c : map) out.push_back((*inner)[c]);
    return out;
  }
  std::optional<std::pair<ProcessSpec, std::vector<int>>> source() const override { return std::pair{base, map}; }
};

struct FreeFamilyNode final : ProcessNode {
  std::vector<ProcessSpec> members;
  std::vector<int> member_of;
  std::vector<int> local_index;

  int arity() const override { return static_cast<int>(member_of.size()); }
  Rational cumulant(std::span<const int> word) const override {
    const int m = member_of[word.front()];
    std::vector<int> local;
    local.reserve(word.size());
    for (int w : word) {
      if (member_of[w] != m) return 0;
      local.push_back(local_index[w]);
    }
    return members[m].cumulant(local);
  }
  nlohmann::json descriptor() const override {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& m : members) list.push_back(m.descriptor());
    return {{"type", "tuple"}, {"mode", "free"}, {"members", list}};
  }
  std::optional<std::vector<int>> families() const override { return member_of; }
};

struct DiagonalNode final : ProcessNode {
  ProcessSpec base;
  std::vector<std::vector<int>> groups;

  explicit DiagonalNode(ProcessSpec b) : base(std::move(b)) {}
  int arity() const override { return static_cast<int>(groups.size()); }
  Rational cumulant(std::span<const int> word) const override {
    std::vector<int> flat;
    for (int w : word) flat.insert(flat.end(), groups[w].begin(), groups[w].end());
    return base.cumulant(flat);
  }
  nlohmann::json descriptor() const override {
    auto one_based = groups;
    for (auto& g : one_based) {
      for (int& e : g) ++e;
    }
    return {{"type", "diagonal"}, {"base", base.descriptor()}, {"groups", one_based}};
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// ProcessSpec

int ProcessSpec::arity() const { return node_->arity(); }

const std::vector<std::string>& ProcessSpec::labels() const { return node_->labels; }

Rational ProcessSpec::cumulant(std::span<const int> word) const {
  if (word.empty()) throw DomainError("cumulant of an empty word");
  for (int w : word) {
    if (w < 0 || w >= arity()) {
      throw DimensionError("word letter " + std::to_string(w) + " outside a " + std::to_string(arity()) + "-tuple");
    }
  }
  return node_->cumulant(word);
}

CumulantFunctional ProcessSpec::unit_cumulants() const {
  CumulantFunctional r(arity());
  for (SubsetMask mask = 1; mask <= r.full_mask(); ++mask) r[mask] = cumulant(elements_of(mask));
  if (auto families = node_->families()) r.declare_freeness(std::move(*families));
  return r;
}

ProcessSpec ProcessSpec::select(std::vector<int> word) const {
  if (word.empty()) throw DomainError("select needs a nonempty word");
  for (int w : word) {
    if (w < 0 || w >= arity()) throw DimensionError("select: letter outside the tuple");
  }
  auto node = std::make_shared<SelectNode>(*this);
  for (int w : word) node->labels.push_back(labels()[w]);
  node->map = std::move(word);
  return make_from_node(std::move(node));
}

std::optional<std::vector<int>> ProcessSpec::free_families() const { return node_->families(); }

std::optional<std::pair<ProcessSpec, std::vector<int>>> ProcessSpec::selection_source() const {
  return node_->source();
}

nlohmann::json ProcessSpec::descriptor() const { return node_->descriptor(); }

// ---------------------------------------------------------------------------
// Constructors

ProcessSpec make_free_poisson(const Rational& rate) {
  if (rate <= 0) throw DomainError("free Poisson rate must be positive, got " + to_string(rate));
  auto node = std::make_shared<SequenceNode>();
  node->kind = "free_poisson";
  node->tail = rate;
  node->labels = {"X"};
  return make_from_node(std::move(node));
}

ProcessSpec make_semicircular() {
  auto node = std::make_shared<SequenceNode>();
  node->kind = "semicircular";
  node->head = {Rational(0), Rational(1)};
  node->tail = 0;
  node->labels = {"X"};
  return make_from_node(std::move(node));
}

ProcessSpec make_cumulant_sequence(std::vector<Rational> sequence) {
  if (sequence.empty()) throw DomainError("cumulant sequence must not be empty");
  auto node = std::make_shared<SequenceNode>();
  node->kind = "custom";
  node->head = std::move(sequence);
  node->tail = 0;
  node->labels = {"X"};
  return make_from_node(std::move(node));
}

ProcessSpec make_custom(CumulantFunctional unit_cumulants) {
  auto node = std::make_shared<TableNode>();
  node->labels = default_labels(unit_cumulants.arity(), "X");
  node->table = std::move(unit_cumulants);
  return make_from_node(std::move(node));
}

ProcessSpec make_identical_copies(const ProcessSpec& base, int k) {
  if (base.arity() != 1) throw DomainError("identical copies need a single-component base");
  if (k < 1) throw DomainError("identical copies: k must be positive");
  if (k == 1) return base;
  auto node = std::make_shared<SelectNode>(base);
  node->map.assign(k, 0);
  node->identical = true;
  node->labels = default_labels(k, base.labels().front());
  return make_from_node(std::move(node));
}

ProcessSpec make_free_family(std::vector<ProcessSpec> members) {
  if (members.empty()) throw DomainError("free family needs at least one member");
  auto node = std::make_shared<FreeFamilyNode>();
  for (std::size_t m = 0; m < members.size(); ++m) {
    for (int c = 0; c < members[m].arity(); ++c) {
      node->member_of.push_back(static_cast<int>(m));
      node->local_index.push_back(c);
      node->labels.push_back(members[m].labels()[c] + "[" + std::to_string(m + 1) + "]");
    }
  }
  node->members = std::move(members);
  return make_from_node(std::move(node));
}

ProcessSpec derived_diagonal_tuple(const ProcessSpec& spec, std::vector<std::vector<int>> groups) {
  if (groups.empty()) throw DomainError("derived tuple needs at least one group");
  auto node = std::make_shared<DiagonalNode>(spec);
  for (const auto& g : groups) {
    if (g.empty()) throw DomainError("derived tuple: empty group");
    std::string label = "Δ(";
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] < 0 || g[i] >= spec.arity()) throw DimensionError("derived tuple: group letter outside the tuple");
      label += (i ? "," : "") + spec.labels()[g[i]];
    }
    node->labels.push_back(label + ")");
  }
  node->groups = std::move(groups);
  return make_from_node(std::move(node));
}

// ---------------------------------------------------------------------------
// Increments

namespace {

void check_intervals(std::span<const Interval> intervals) {
  for (const auto& iv : intervals) {
    if (iv.begin < 0 || iv.end <= iv.begin) {
      throw DomainError("malformed interval [" + to_string(iv.begin) + ", " + to_string(iv.end) + ")");
    }
  }
}

CumulantFunctional scaled_cumulants(const ProcessSpec& spec, std::span<const Interval> intervals) {
  CumulantFunctional r(spec.arity());
  for (SubsetMask mask = 1; mask <= r.full_mask(); ++mask) {
    const auto elements = elements_of(mask);
    std::vector<Interval> chosen;
    for (int e : elements) chosen.push_back(intervals[e]);
    const Rational len = intersection_length(chosen);
    r[mask] = len == 0 ? Rational(0) : Rational(len * spec.cumulant(elements));
  }
  return r;
}

}  // namespace

Rational increment_cumulant(const ProcessSpec& spec, const Partition& p, std::span<const Interval> intervals) {
  if (p.size() != spec.arity() || static_cast<int>(intervals.size()) != spec.arity()) {
    throw DimensionError("increment_cumulant: partition, intervals and tuple must have equal size");
  }
  check_intervals(intervals);
  Rational result = 1;
  for (const auto& block : p.blocks()) {
    std::vector<Interval> chosen;
    for (int e : block) chosen.push_back(intervals[e]);
    const Rational len = intersection_length(chosen);
    if (len == 0) return 0;
    result *= len * spec.cumulant(block);
  }
  return result;
}

Rational increment_moment(const ProcessSpec& spec, std::span<const Interval> intervals) {
  if (static_cast<int>(intervals.size()) != spec.arity()) {
    throw DimensionError("increment_moment: one interval per tuple component");
  }
  check_intervals(intervals);
  return moments_from_cumulants(scaled_cumulants(spec, intervals));
}

// ---------------------------------------------------------------------------
// Diagonal substitution rule

std::vector<Rational> diagonal_moment_polynomial(const ProcessSpec& spec, std::span<const std::vector<int>> groups) {
  std::vector<int> word, sizes;
  for (const auto& g : groups) {
    word.insert(word.end(), g.begin(), g.end());
    sizes.push_back(static_cast<int>(g.size()));
  }
  const Partition sigma = Partition::intervals(sizes);
  std::vector<Rational> poly(groups.size() + 1, Rational(0));
  for (const auto& tau : noncrossing_partitions(static_cast<int>(word.size()))) {
    if (!refines(sigma, tau)) continue;
    Rational term = 1;
    for (const auto& block : tau.blocks()) {
      std::vector<int> sub;
      for (int e : block) sub.push_back(word[e]);
      term *= spec.cumulant(sub);
      if (term == 0) break;
    }
    poly[tau.block_count()] += term;
  }
  return poly;
}

DiagonalRuleCheck check_diagonal_rule(const ProcessSpec& spec, std::span<const std::vector<int>> groups,
                                      int max_word_length) {
  DiagonalRuleCheck result;
  const ProcessSpec derived = derived_diagonal_tuple(spec, {groups.begin(), groups.end()});
  std::vector<int> sequence;
  auto visit = [&](auto&& self, int length) -> void {
    if (!sequence.empty()) {
      ++result.patterns;
      std::vector<std::vector<int>> chosen;
      for (int g : sequence) chosen.push_back(groups[g]);
      const auto poly = diagonal_moment_polynomial(spec, chosen);
      const ProcessSpec word_tuple = derived.select(sequence);
      const auto unit = word_tuple.unit_cumulants();
      for (int t = 1; t <= static_cast<int>(sequence.size()) + 1; ++t) {
        CumulantFunctional at_t(unit.arity());
        for (SubsetMask mask = 1; mask <= at_t.full_mask(); ++mask) at_t[mask] = unit[mask] * t;
        Rational expected = 0;
        for (std::size_t j = 0; j < poly.size(); ++j) expected += poly[j] * power(Rational(t), static_cast<int>(j));
        if (moments_from_cumulants(at_t) != expected && result.passed) {
          result.passed = false;
          std::string pattern;
          for (int g : sequence) pattern += "G" + std::to_string(g + 1);
          result.first_failure = pattern + " at t=" + std::to_string(t);
        }
      }
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const int next = length + static_cast<int>(groups[g].size());
      if (next > max_word_length) continue;
      sequence.push_back(static_cast<int>(g));
      self(self, next);
      sequence.pop_back();
    }
  };
  visit(visit, 0);
  return result;
}

// ---------------------------------------------------------------------------
// Descriptors

namespace {

Rational rational_field(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  return parse_rational(v.is_string() ? v.get<std::string>() : v.dump());
}

std::vector<std::vector<int>> zero_based_groups(const nlohmann::json& j) {
  auto groups = j.get<std::vector<std::vector<int>>>();
  for (auto& g : groups) {
    for (int& e : g) --e;
  }
  return groups;
}

}  // namespace

ProcessSpec process_from_json(const nlohmann::json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "free_poisson") return make_free_poisson(j.contains("rate") ? rational_field(j, "rate") : Rational(1));
    if (type == "semicircular" || type == "brownian") return make_semicircular();
    if (type == "custom") {
      const auto& c = j.at("cumulants");
      if (c.is_array()) {
        std::vector<Rational> seq;
        for (const auto& v : c) seq.push_back(parse_rational(v.is_string() ? v.get<std::string>() : v.dump()));
        return make_cumulant_sequence(std::move(seq));
      }
      return make_custom(cumulants_from_json(c));
    }
    if (type == "tuple") {
      const auto mode = j.at("mode").get<std::string>();
      if (mode == "identical") return make_identical_copies(process_from_json(j.at("base")), j.at("k").get<int>());
      if (mode == "free") {
        std::vector<ProcessSpec> members;
        for (const auto& m : j.at("members")) members.push_back(process_from_json(m));
        return make_free_family(std::move(members));
      }
      throw ParseError("unknown tuple mode '" + mode + "'");
    }
    if (type == "select") {
      auto word = j.at("word").get<std::vector<int>>();
      for (int& w : word) --w;
      return process_from_json(j.at("base")).select(std::move(word));
    }
    if (type == "diagonal") return derived_diagonal_tuple(process_from_json(j.at("base")), zero_based_groups(j.at("groups")));
    throw ParseError("unknown process type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("process descriptor: ") + e.what());
  }
}

ProcessSpec parse_process(const std::string& text) {
  if (text == "free_poisson") return make_free_poisson(1);
  if (text == "semicircular" || text == "brownian") return make_semicircular();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("process must be a known name or a JSON descriptor: " + std::string(e.what()));
  }
  return process_from_json(j);
}

}  // namespace fsm
