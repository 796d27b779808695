#include "fsm/cli.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fsm/cumulants.hpp"
#include "fsm/errors.hpp"
#include "fsm/identities.hpp"
#include "fsm/matrixsim.hpp"
#include "fsm/measures.hpp"
#include "fsm/partition.hpp"
#include "fsm/process.hpp"

namespace fsm::cli {

namespace {

struct Report {
  nlohmann::json records = nlohmann::json::array();
  std::string csv_header;
  std::vector<std::string> csv_rows;
  bool pass = true;
};

struct Options {
  std::string format = "json";
  std::string out_path;
  std::uint64_t seed = 1;

  std::string partition;
  std::string lower, upper;
  std::string lattice = "full";
  std::string process = "free_poisson";
  std::string example = "both";
  std::string moments;
  std::string table;
  std::string t = "1";
  std::string model;
  std::string points = "150:20,300:40,600:80";
  std::string meshes = "2,4,8,16";
  std::string z = "centered";
  int k = 4;
  int k_max = 4;
  int order = 4;
  int n = 1;
  int dim = 400;
  int trials = 200;
  int max_order = 4;
  double threshold = 0.2;
};

std::string block_text(const std::vector<int>& block) {
  std::string s = "(";
  for (std::size_t i = 0; i < block.size(); ++i) s += (i ? "," : "") + std::to_string(block[i] + 1);
  return s + ")";
}

std::string csv_quote(const std::string& s) { return "\"" + s + "\""; }

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ProcessSpec process_arg(const std::string& text) {
  return parse_process(!text.empty() && text[0] == '@' ? read_file(text.substr(1)) : text);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int int_arg(const std::string& text) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used != text.size()) throw ParseError("");
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected an integer, got '" + text + "'");
  }
}

Lattice lattice_arg(const std::string& text) {
  if (text == "full") return Lattice::Full;
  if (text == "nc") return Lattice::Noncrossing;
  throw ParseError("lattice must be 'full' or 'nc'");
}

MatrixEnsembleConfig matrix_config(const Options& o, MatrixModel model) {
  MatrixEnsembleConfig cfg;
  cfg.dim = o.dim;
  cfg.trials = o.trials;
  cfg.seed = o.seed;
  cfg.model = model;
  cfg.validate();
  return cfg;
}

void add_sweep_rows(Report& r, const std::vector<SweepRow>& rows) {
  r.csv_header = sweep_csv_header();
  for (const auto& row : rows) {
    r.records.push_back(to_json(row));
    r.csv_rows.push_back(to_csv(row));
    r.pass = r.pass && row.pass;
  }
}

void add_checks(Report& r, const CheckReport& checks) {
  r.csv_header = "check,partition,process,subdivision,residual,pass";
  for (const auto& c : checks.records) {
    r.records.push_back(to_json(c));
    r.csv_rows.push_back(csv_quote(c.check) + "," + csv_quote(c.partition) + "," + csv_quote(c.process) + "," +
                         csv_quote(c.subdivision) + "," + to_string(c.residual) + "," + (c.pass ? "true" : "false"));
  }
  r.pass = checks.passed();
}

// partitions ------------------------------------------------------------------

Report partitions_enumerate(const Options& o) {
  Report r;
  r.csv_header = "partition,blocks,noncrossing";
  const auto list = lattice_arg(o.lattice) == Lattice::Noncrossing ? enumerate_noncrossing(o.k)
                                                                    : enumerate_set_partitions(o.k);
  for (const auto& p : list) {
    const bool nc = is_noncrossing(p);
    r.records.push_back({{"partition", p.to_string()}, {"blocks", p.block_count()}, {"noncrossing", nc}});
    r.csv_rows.push_back(csv_quote(p.to_string()) + "," + std::to_string(p.block_count()) + "," +
                         (nc ? "true" : "false"));
  }
  return r;
}

Report partitions_mobius(const Options& o) {
  Report r;
  const auto lower = Partition::parse(o.lower);
  const auto upper = Partition::parse(o.upper);
  const auto value = mobius(lower, upper, lattice_arg(o.lattice));
  r.csv_header = "lower,upper,lattice,mobius";
  r.records.push_back(
      {{"lower", lower.to_string()}, {"upper", upper.to_string()}, {"lattice", o.lattice}, {"mobius", to_string(value)}});
  r.csv_rows.push_back(csv_quote(lower.to_string()) + "," + csv_quote(upper.to_string()) + "," + o.lattice + "," +
                       to_string(value));
  return r;
}

Report partitions_kreweras(const Options& o) {
  Report r;
  const auto p = Partition::parse(o.partition);
  const auto k = kreweras(p);
  r.csv_header = "partition,kreweras";
  r.records.push_back({{"partition", p.to_string()}, {"kreweras", k.to_string()}});
  r.csv_rows.push_back(csv_quote(p.to_string()) + "," + csv_quote(k.to_string()));
  return r;
}

Report partitions_classify(const Options& o) {
  Report r;
  const auto p = Partition::parse(o.partition);
  const auto split = classify_classes(p);
  r.csv_header = "kind,block";
  for (const auto& [kind, blocks] : {std::pair{"outer", &split.outer}, std::pair{"inner", &split.inner}}) {
    for (const auto& b : *blocks) {
      r.records.push_back({{"kind", kind}, {"block", block_text(b)}});
      r.csv_rows.push_back(std::string(kind) + "," + csv_quote(block_text(b)));
    }
  }
  return r;
}

// cumulants -------------------------------------------------------------------

void add_table(Report& r, const SubsetTable& table, const std::string& column) {
  r.csv_header = "subset," + column;
  for (SubsetMask m = 1; m <= table.full_mask(); ++m) {
    std::string subset;
    for (int e : elements_of(m)) subset += (subset.empty() ? "" : ",") + std::to_string(e + 1);
    r.records.push_back({{"subset", subset}, {column, to_string(table[m])}});
    r.csv_rows.push_back(csv_quote(subset) + "," + to_string(table[m]));
  }
}

void add_sequence(Report& r, const std::vector<Rational>& values, const std::string& column) {
  r.csv_header = "order," + column;
  for (std::size_t i = 0; i < values.size(); ++i) {
    r.records.push_back({{"order", i + 1}, {column, to_string(values[i])}});
    r.csv_rows.push_back(std::to_string(i + 1) + "," + to_string(values[i]));
  }
}

Report cumulants_to_moments(const Options& o) {
  Report r;
  if (!o.table.empty()) {
    add_table(r, moment_table(cumulants_from_json(nlohmann::json::parse(read_file(o.table)))), "moment");
    return r;
  }
  if (o.order < 1 || o.order > kMaxFunctionalArity) throw DomainError("order must lie in [1, 16]");
  const auto x = process_arg(o.process);
  const auto base = x.arity() == 1 ? x : x.select({0});
  std::vector<Rational> moments;
  for (int n = 1; n <= o.order; ++n) {
    moments.push_back(moments_from_cumulants(base.select(std::vector<int>(n, 0)).unit_cumulants()));
  }
  add_sequence(r, moments, "moment");
  return r;
}

Report cumulants_from_moments(const Options& o) {
  Report r;
  if (!o.table.empty()) {
    add_table(r, cumulant_table(moments_from_json(nlohmann::json::parse(read_file(o.table)))), "cumulant");
    return r;
  }
  std::vector<Rational> m;
  for (const auto& item : split(o.moments, ',')) m.push_back(parse_rational(item));
  if (m.empty()) throw ParseError("--moments needs a comma-separated list or use --table");
  if (m.size() > static_cast<std::size_t>(kMaxFunctionalArity)) throw DomainError("at most 16 moments");
  std::vector<Rational> cumulants;
  for (std::size_t n = 1; n <= m.size(); ++n) {
    MomentFunctional table(static_cast<int>(n));
    for (SubsetMask mask = 1; mask <= table.full_mask(); ++mask) table[mask] = m[elements_of(mask).size() - 1];
    cumulants.push_back(cumulants_from_moments(table));
  }
  add_sequence(r, cumulants, "cumulant");
  return r;
}

// verify / simulate -------------------------------------------------------------

Report verify_suite(const Options& o) {
  Report r;
  add_checks(r, identity_suite(process_arg(o.process), o.k_max, parse_rational(o.t)));
  return r;
}

Report verify_main_theorem(const Options& o) {
  Report r;
  add_checks(r, main_theorem_sweep(process_arg(o.process), o.k_max, parse_rational(o.t)));
  return r;
}

Report verify_examples(const Options& o) {
  Report r;
  CheckReport all;
  const Rational t = parse_rational(o.t);
  if (o.example != "free_poisson" && o.example != "brownian" && o.example != "both") {
    throw ParseError("--example must be free_poisson, brownian or both");
  }
  if (o.example != "brownian") all.append(example_sweep(ExampleProcess::FreePoisson, o.k_max, t));
  if (o.example != "free_poisson") all.append(example_sweep(ExampleProcess::Brownian, o.k_max, t));
  add_checks(r, all);
  return r;
}

MatrixModel model_for(const Options& o, const ProcessSpec& x) {
  if (!o.model.empty()) return parse_matrix_model(o.model);
  return x.cumulant(std::vector<int>{0}) == 0 ? MatrixModel::GaussianIncrements : MatrixModel::PoissonSps;
}

Report simulate_calibrate(const Options& o) {
  Report r;
  const auto x = process_arg(o.process);
  const auto s = Subdivision::uniform(parse_rational(o.t), o.n);
  add_sweep_rows(r, calibrate(x, s, matrix_config(o, model_for(o, x)), o.max_order));
  return r;
}

Report simulate_main_theorem(const Options& o) {
  Report r;
  std::vector<DimMesh> points;
  for (const auto& item : split(o.points, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) throw ParseError("--points expects d:N pairs, got '" + item + "'");
    points.push_back({int_arg(parts[0]), int_arg(parts[1])});
  }
  if (points.empty()) throw ParseError("--points is empty");
  const auto p = Partition::parse(o.partition.empty() ? "((1,3)(2))" : o.partition);
  auto first = o;
  first.dim = points.front().dim;
  add_sweep_rows(r, main_theorem_matrix_sweep(p, process_arg(o.process), matrix_config(first, MatrixModel::PoissonSps),
                                              points, o.threshold));
  return r;
}

Report simulate_proj_decay(const Options& o) {
  Report r;
  std::vector<Subdivision> meshes;
  for (const auto& item : split(o.meshes, ',')) meshes.push_back(Subdivision::uniform(1, int_arg(item)));
  ZModel z;
  if (o.z == "centered") {
    z = ZModel::CenteredGaussian;
  } else if (o.z == "shifted") {
    z = ZModel::ShiftedGaussian;
  } else if (o.z == "identity") {
    z = ZModel::Identity;
  } else {
    throw ParseError("--z must be centered, shifted or identity");
  }
  add_sweep_rows(r, lem_proj_decay(matrix_config(o, MatrixModel::PoissonSps), meshes, o.k, z));
  return r;
}

constexpr const char* kCsvHelp = R"(CSV columns:
  partitions enumerate   partition,blocks,noncrossing
  partitions mobius      lower,upper,lattice,mobius
  partitions kreweras    partition,kreweras
  partitions classify    kind,block
  cumulants to-moments   order,moment       (subset,moment with --table)
  cumulants from-moments order,cumulant     (subset,cumulant with --table)
  verify *               check,partition,process,subdivision,residual,pass
  simulate *             label,d,N,trial_count,estimate,stderr,reference,pass,seed
Exit status: 0 all checks pass, 1 a check failed, 2 usage or input error.)";

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Partition-dependent free stochastic measures: exact engine and matrix simulator", "fsm"};
  app.footer(kCsvHelp);
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--out", o.out_path, "write the report here instead of stdout");
  app.add_option("--seed", o.seed, "master seed for the matrix engine");

  std::function<Report()> action;
  std::string command;
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help,
                  std::function<Report(const Options&)> fn) {
    auto* sub = parent->add_subcommand(name, help);
    sub->fallthrough();
    sub->callback([&o, &command, &action, fn, sub, parent] {
      command = parent->get_name() + " " + sub->get_name();
      action = [&o, fn] { return fn(o); };
    });
    return sub;
  };

  auto* partitions = app.add_subcommand("partitions", "lattice enumeration and transforms");
  partitions->require_subcommand(1);
  partitions->fallthrough();
  auto* enumerate = leaf(partitions, "enumerate", "list 𝒫(k) or NC(k)", partitions_enumerate);
  enumerate->add_option("--k", o.k, "ground set size")->required();
  enumerate->add_option("--lattice", o.lattice, "full or nc");
  auto* mob = leaf(partitions, "mobius", "Möbius function of an interval", partitions_mobius);
  mob->add_option("--lower", o.lower)->required();
  mob->add_option("--upper", o.upper)->required();
  mob->add_option("--lattice", o.lattice, "full or nc");
  leaf(partitions, "kreweras", "Kreweras complement", partitions_kreweras)
      ->add_option("--partition", o.partition)
      ->required();
  leaf(partitions, "classify", "outer and inner classes", partitions_classify)
      ->add_option("--partition", o.partition)
      ->required();

  auto* cumulants = app.add_subcommand("cumulants", "moment-cumulant transforms");
  cumulants->require_subcommand(1);
  cumulants->fallthrough();
  auto* to_m = leaf(cumulants, "to-moments", "moments of a process, or of a cumulant table", cumulants_to_moments);
  to_m->add_option("--process", o.process, "name, JSON descriptor or @file");
  to_m->add_option("--order", o.order);
  to_m->add_option("--table", o.table, "JSON subset table file");
  auto* from_m = leaf(cumulants, "from-moments", "cumulants of a moment sequence or table", cumulants_from_moments);
  from_m->add_option("--moments", o.moments, "comma-separated m_1,m_2,...");
  from_m->add_option("--table", o.table, "JSON subset table file");

  auto* verify = app.add_subcommand("verify", "exact identity checks");
  verify->require_subcommand(1);
  verify->fallthrough();
  auto* suite = leaf(verify, "suite", "identity suite", verify_suite);
  auto* theorem = leaf(verify, "main-theorem", "main theorem in L1 and L2", verify_main_theorem);
  auto* examples = leaf(verify, "examples", "closed-form examples", verify_examples);
  for (auto* sub : {suite, theorem, examples}) {
    sub->add_option("--k-max", o.k_max);
    sub->add_option("--t", o.t, "time horizon, rational");
  }
  suite->add_option("--process", o.process, "name, JSON descriptor or @file");
  theorem->add_option("--process", o.process, "name, JSON descriptor or @file");
  examples->add_option("--example", o.example, "free_poisson, brownian or both");

  auto* simulate = app.add_subcommand("simulate", "random-matrix checks");
  simulate->require_subcommand(1);
  simulate->fallthrough();
  auto* cal = leaf(simulate, "calibrate", "normalized traces against the exact engine", simulate_calibrate);
  cal->add_option("--process", o.process);
  cal->add_option("--model", o.model, "poisson_sps or gaussian_increments");
  cal->add_option("--N", o.n, "number of equal intervals");
  cal->add_option("--t", o.t);
  cal->add_option("--max-order", o.max_order);
  auto* mt = leaf(simulate, "main-theorem", "Frobenius residual along (d, N) points", simulate_main_theorem);
  mt->add_option("--partition", o.partition, "noncrossing partition, default ((1,3)(2))");
  mt->add_option("--process", o.process);
  mt->add_option("--points", o.points, "d:N pairs");
  mt->add_option("--threshold", o.threshold, "bound on the last residual");
  auto* decay = leaf(simulate, "proj-decay", "projection-sandwich norms along meshes", simulate_proj_decay);
  decay->add_option("--k", o.k);
  decay->add_option("--meshes", o.meshes, "comma-separated N values");
  decay->add_option("--z", o.z, "centered, shifted or identity");
  for (auto* sub : {cal, mt, decay}) sub->add_option("--trials", o.trials);
  for (auto* sub : {cal, decay}) sub->add_option("--dim", o.dim);
  mt->preparse_callback([&](std::size_t) { o.trials = 5; });
  decay->preparse_callback([&](std::size_t) { o.trials = 20; o.dim = 256; o.k = 1; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  Report report;
  try {
    report = action();
  } catch (const std::exception& e) {
    err << "fsm: " << e.what() << "\n";
    return 2;
  }

  std::ostringstream body;
  if (o.format == "csv") {
    body << report.csv_header << "\n";
    for (const auto& row : report.csv_rows) body << row << "\n";
  } else {
    nlohmann::json j{{"tool_version", kToolVersion}, {"command", command}, {"seed", o.seed}, {"records", report.records}};
    body << j.dump(2) << "\n";
  }
  if (o.out_path.empty()) {
    out << body.str();
  } else {
    std::ofstream file(o.out_path);
    if (!file) {
      err << "fsm: cannot write " << o.out_path << "\n";
      return 2;
    }
    file << body.str();
    out << command << ": " << report.records.size() << " records, " << (report.pass ? "pass" : "FAIL") << "\n";
  }
  return report.pass ? 0 : 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace fsm::cli
