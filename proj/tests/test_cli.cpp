#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fsm/cli.hpp"

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = fsm::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json records(const Result& r) { return nlohmann::json::parse(r.out).at("records"); }

}  // namespace

TEST_CASE("classify lists outer and inner classes") {
  const auto r = call({"partitions", "classify", "--partition", "((1,6,7)(2,5)(3)(4)(8)(9,10))"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("tool_version") == fsm::cli::kToolVersion);
  CHECK(j.at("command") == "partitions classify");
  std::vector<std::string> outer, inner;
  for (const auto& rec : j.at("records")) {
    (rec.at("kind") == "outer" ? outer : inner).push_back(rec.at("block"));
  }
  CHECK(outer == std::vector<std::string>{"(1,6,7)", "(8)", "(9,10)"});
  CHECK(inner == std::vector<std::string>{"(2,5)", "(3)", "(4)"});
}

TEST_CASE("identity suite passes with zero residuals") {
  const auto r = call({"verify", "suite", "--process", "free_poisson", "--k-max", "4"});
  CHECK(r.code == 0);
  const auto recs = records(r);
  CHECK(recs.size() > 100);
  for (const auto& rec : recs) CHECK(rec.at("residual") == "0/1");
}

TEST_CASE("free Poisson moments and their cumulants") {
  auto r = call({"cumulants", "to-moments", "--process", "free_poisson", "--order", "4"});
  REQUIRE(r.code == 0);
  std::vector<std::string> m;
  for (const auto& rec : records(r)) m.push_back(rec.at("moment"));
  CHECK(m == std::vector<std::string>{"1/1", "2/1", "5/1", "14/1"});

  r = call({"cumulants", "from-moments", "--moments", "0,1,0,2,0,5", "--format", "csv"});
  CHECK(r.code == 0);
  CHECK(r.out == "order,cumulant\n1,0/1\n2,1/1\n3,0/1\n4,0/1\n5,0/1\n6,0/1\n");
}

TEST_CASE("subset tables round-trip through files") {
  const std::string path = "cli_table_test.json";
  {
    std::ofstream f(path);
    f << R"({"k": 2, "values": {"1": "1/2", "2": "1/3", "1,2": "1/5"}})";
  }
  const auto r = call({"cumulants", "to-moments", "--table", path, "--format", "csv"});
  CHECK(r.code == 0);
  CHECK(r.out == "subset,moment\n\"1\",1/2\n\"2\",1/3\n\"1,2\",11/30\n");
  std::remove(path.c_str());
}

TEST_CASE("lattice commands") {
  auto r = call({"partitions", "enumerate", "--k", "4", "--lattice", "nc"});
  CHECK(records(r).size() == 14);
  r = call({"partitions", "enumerate", "--k", "4"});
  CHECK(records(r).size() == 15);
  r = call({"partitions", "kreweras", "--partition", "((1,3)(2))", "--format", "csv"});
  CHECK(r.out == "partition,kreweras\n\"((1,3)(2))\",\"((1,2)(3))\"\n");
  r = call({"partitions", "mobius", "--lower", "((1)(2)(3)(4))", "--upper", "((1,2,3,4))", "--lattice", "nc"});
  CHECK(records(r)[0].at("mobius") == "-5/1");
}

TEST_CASE("usage errors exit with 2") {
  CHECK(call({}).code == 2);
  CHECK(call({"partitions"}).code == 2);
  CHECK(call({"partitions", "classify", "--partition", "((1,2"}).code == 2);
  CHECK(call({"partitions", "kreweras", "--partition", "((1,3)(2,4))"}).code == 2);
  CHECK(call({"verify", "suite", "--process", "{\"type\": \"nope\"}"}).code == 2);
  CHECK(call({"verify", "suite", "--k-max", "9"}).code == 2);
  CHECK(call({"partitions", "enumerate", "--k", "3", "--format", "xml"}).code == 2);
  CHECK(call({"simulate", "proj-decay", "--z", "identity"}).code == 2);
  const auto r = call({"cumulants", "from-moments"});
  CHECK(r.code == 2);
  CHECK(r.err.find("--moments") != std::string::npos);
  CHECK(call({"--help"}).code == 0);
}

TEST_CASE("failing checks exit with 1 and keep the record") {
  const auto r = call({"simulate", "main-theorem", "--points", "20:4,40:8", "--trials", "2", "--threshold", "0"});
  CHECK(r.code == 1);
  const auto recs = records(r);
  REQUIRE(recs.size() == 2);
  CHECK(recs[1].at("pass") == false);
}

TEST_CASE("matrix reports are reproducible from the recorded seed") {
  const std::vector<std::string> args{"simulate", "calibrate", "--dim", "30", "--trials", "5", "--seed", "99"};
  const auto a = call(args);
  const auto b = call(args);
  CHECK(a.out == b.out);
  CHECK(nlohmann::json::parse(a.out).at("seed") == 99);
  CHECK(call({"simulate", "calibrate", "--dim", "30", "--trials", "5", "--seed", "98"}).out != a.out);
}

TEST_CASE("reports go to --out") {
  const std::string path = "cli_out_test.csv";
  const auto r = call({"simulate", "proj-decay", "--dim", "32", "--trials", "3", "--meshes", "2,4", "--format", "csv",
                       "--out", path});
  CHECK(r.code == 0);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "label,d,N,trial_count,estimate,stderr,reference,pass,seed");
  std::remove(path.c_str());
}
