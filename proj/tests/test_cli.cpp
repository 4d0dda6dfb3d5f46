#include "twodesign/cli.hpp"
#include "twodesign/errors.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace twodesign;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) v.push_back(l);
  return v;
}

}  // namespace

TEST(Range, Parse) {
  EXPECT_EQ(parse_range("5"), (std::vector<int>{5}));
  EXPECT_EQ(parse_range("2:5"), (std::vector<int>{2, 3, 4, 5}));
  EXPECT_EQ(parse_range("0:10:4"), (std::vector<int>{0, 4, 8}));
  for (const char* bad : {"", "a", "3:1", "1:2:0", "1:2:3:4", "1x"}) EXPECT_THROW(parse_range(bad), ConfigError) << bad;
}

TEST(Resolve, Names) {
  EXPECT_EQ(resolve_ensemble("brickwork-pbc", "", 6, LocalDim{2}).kind, EnsembleKind::brickwork_periodic);
  EXPECT_EQ(resolve_ensemble("pcg", "", 6, LocalDim{2}).kind, EnsembleKind::pcg);
  EXPECT_EQ(resolve_ensemble("star", "", 6, LocalDim{2}).graph.edges.size(), 5u);
  EXPECT_THROW(resolve_ensemble("nonsense", "", 6, LocalDim{2}), ConfigError);
}

TEST(ExitCodes, Map) {
  EXPECT_EQ(run({"error-curve", "--family", "nonsense", "--n", "4"}).code, exit_config);
  EXPECT_EQ(run({"error-curve", "--n", "4", "--format", "xml"}).code, exit_config);
  EXPECT_EQ(run({"depth", "--n", "8", "--family", "linear", "--max-steps", "5"}).code, exit_unreached);
  EXPECT_EQ(run({"oracle-check", "--n", "4"}).code, exit_config);
  EXPECT_EQ(run({"oracle-check", "--n", "3", "--family", "linear", "--steps", "1:2"}).code, exit_ok);
  EXPECT_EQ(run({"error-curve", "--n", "4", "--threads", "0"}).code, exit_config);
}

TEST(Output, CompleteGraphOneGateAtTwoSites) {
  const auto r = run({"error-curve", "--family", "complete", "--n", "2", "--steps", "1"});
  ASSERT_EQ(r.code, exit_ok) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0].rfind("# {", 0), 0u);
  EXPECT_EQ(l[1], "n,step,mult_error,coll_error,mult_stat_err,coll_stat_err,optimal_a,guaranteed");
  std::istringstream row(l[2]);
  std::string n, step, mult;
  std::getline(row, n, ',');
  std::getline(row, step, ',');
  std::getline(row, mult, ',');
  EXPECT_EQ(n, "2");
  EXPECT_EQ(step, "1");
  EXPECT_LT(std::abs(std::stod(mult)), 1e-14);
}

TEST(Output, DeterministicAcrossRunsAndThreads) {
  const std::vector<std::string> base{"error-curve", "--family", "pcg", "--n", "6", "--layers", "0:4",
                                      "--realizations", "20", "--seed", "7"};
  auto with_threads = base;
  with_threads.insert(with_threads.end(), {"--threads", "3"});
  const auto a = run(base), b = run(base), c = run(with_threads);
  ASSERT_EQ(a.code, exit_ok) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(lines(a.out).size(), lines(c.out).size());
  for (std::size_t k = 1; k < lines(a.out).size(); ++k) EXPECT_EQ(lines(a.out)[k], lines(c.out)[k]);
}

TEST(Output, JsonHasConfigAndRows) {
  const auto r = run({"depth", "--family", "linear", "--n", "5:6", "--format", "json"});
  ASSERT_EQ(r.code, exit_ok) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["config"]["command"], "depth");
  ASSERT_EQ(j["rows"].size(), 2u);
  EXPECT_GT(j["rows"][1]["depth"].get<double>(), j["rows"][0]["depth"].get<double>());
}

TEST(Output, FormulaAndBounds) {
  const auto f = run({"formula", "--n", "12", "--eps", "0.01"});
  ASSERT_EQ(f.code, exit_ok) << f.err;
  EXPECT_NE(f.out.find("12,2,0.01,entangled_boundaries,3.878"), std::string::npos);
  const auto b = run({"bounds", "--n", "12", "--format", "json"});
  ASSERT_EQ(b.code, exit_ok) << b.err;
  EXPECT_NEAR(nlohmann::json::parse(b.out)["rows"][0]["bridge_gates"].get<double>(), 138.155, 1e-3);
  EXPECT_EQ(run({"formula", "--n", "2"}).code, exit_config);
}

TEST(Output, GraphFileAndOutFile) {
  const std::string g = ::testing::TempDir() + "cli_graph.json";
  const std::string o = ::testing::TempDir() + "cli_out.csv";
  std::ofstream(g) << R"({"n": 4, "edges": [[0, 1], [1, 2], [2, 3], [3, 0]]})";
  const auto r = run({"error-curve", "--graph", g, "--steps", "0:3", "--out", o});
  ASSERT_EQ(r.code, exit_ok) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(o);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(lines(ss.str()).size(), 6u);
  std::remove(g.c_str());
  std::remove(o.c_str());
}

TEST(Output, Connections) {
  const auto r = run({"connections", "--family", "linear", "--n", "5", "--steps", "0:40:20", "--samples", "50"});
  ASSERT_EQ(r.code, exit_ok) << r.err;
  EXPECT_EQ(lines(r.out).size(), 5u);
}
