#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli.hpp"
#include "repeaterlab/rates.hpp"
#include "repeaterlab/sim.hpp"

using namespace repeaterlab;
using nlohmann::json;

namespace {

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<json> lines(const std::string& text) {
  std::vector<json> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) rows.push_back(json::parse(line));
  return rows;
}

std::vector<std::vector<std::string>> csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
}

double number(const std::string& s) {
  double x = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), x);
  return x;
}

}  // namespace

TEST(Cli, RatesDefaults) {
  const Invocation r = invoke({"rates", "--format", "jsonl"});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.err.empty());
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 1U);
  EXPECT_NEAR(rows[0]["t_total"].get<double>(), 4.38, 0.005);
  EXPECT_EQ(rows[0]["n"].get<int>(), 4);
}

TEST(Cli, RatesOverride) {
  const Invocation r = invoke({"rates", "--n", "6", "--format", "jsonl"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(lines(r.out)[0]["t_total"].get<double>(), 0.840, 5e-4);
}

TEST(Cli, RatesInvalidOverride) {
  const Invocation r = invoke({"rates", "--eta-d", "1.5"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("eta_d"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, ConfigFileAndPrecedence) {
  const auto path = std::filesystem::temp_directory_path() / "repeaterlab_cli_test.json";
  {
    std::ofstream out(path);
    out << R"({"n": 6, "eta_d": 0.8})";
  }
  const Invocation from_file = invoke({"rates", "--config", path.string(), "--format", "jsonl"});
  ASSERT_EQ(from_file.code, 0);
  EXPECT_EQ(lines(from_file.out)[0]["n"].get<int>(), 6);
  const Invocation overridden =
      invoke({"rates", "--config", path.string(), "--n", "5", "--format", "jsonl"});
  ASSERT_EQ(overridden.code, 0);
  ProtocolParams expected = paper_defaults();
  expected.n = 5;
  expected.eta_d = 0.8;
  EXPECT_DOUBLE_EQ(lines(overridden.out)[0]["t_total"].get<double>(),
                   rates::t_total(expected).t_total);
  {
    std::ofstream out(path);
    out << R"({"eta_q": 1})";
  }
  const Invocation bad = invoke({"rates", "--config", path.string()});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("eta_q"), std::string::npos);
  std::filesystem::remove(path);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"rates", "--format", "xml"}).code, 2);
  EXPECT_EQ(invoke({"rates", "--n", "2.5"}).code, 2);
  const Invocation help = invoke({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("precedence"), std::string::npos);
}

TEST(Cli, SimulateIsDeterministic) {
  const std::vector<std::string> args = {"simulate", "--trials", "1000", "--seed", "7",
                                         "--format", "jsonl"};
  const Invocation a = invoke(args);
  const Invocation b = invoke(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const json row = lines(a.out)[0];
  EXPECT_EQ(row["trials"].get<int>(), 1000);
  EXPECT_EQ(row["restart"].get<std::string>(), "parallel");
  EXPECT_GT(row["ratio"].get<double>(), 1.0);
  const sim::Estimate e = sim::estimate(paper_defaults(), {}, 1000, 7);
  EXPECT_EQ(row["mean"].get<double>(), e.mean);
}

TEST(Cli, SimulateSeedFromEnvironment) {
  ::setenv("REPEATERLAB_SEED", "7", 1);
  const Invocation env = invoke({"simulate", "--trials", "50", "--format", "jsonl"});
  ::unsetenv("REPEATERLAB_SEED");
  const Invocation flag = invoke({"simulate", "--trials", "50", "--seed", "7", "--format", "jsonl"});
  EXPECT_EQ(env.out, flag.out);
  ::setenv("REPEATERLAB_SEED", "8", 1);
  const Invocation wins = invoke({"simulate", "--trials", "50", "--seed", "7", "--format", "jsonl"});
  ::setenv("REPEATERLAB_SEED", "seven", 1);
  const Invocation bad = invoke({"simulate", "--trials", "5"});
  ::unsetenv("REPEATERLAB_SEED");
  EXPECT_EQ(wins.out, flag.out);
  EXPECT_EQ(bad.code, 2);
}

TEST(Cli, SimulateOracleAtSingleLink) {
  const Invocation r = invoke({"simulate", "--n", "0", "--trials", "100000", "--seed", "3",
                        "--format", "jsonl"});
  ASSERT_EQ(r.code, 0);
  const json row = lines(r.out)[0];
  EXPECT_LE(std::abs(row["mean"].get<double>() - row["oracle"].get<double>()),
            3.0 * row["std_error"].get<double>());
}

TEST(Cli, SimulateErrors) {
  EXPECT_EQ(invoke({"simulate", "--trials", "0"}).code, 2);
  EXPECT_EQ(invoke({"simulate", "--swap-comm", "maybe"}).code, 2);
  const Invocation guard = invoke({"simulate", "--eta-e2", "0", "--trials", "3"});
  EXPECT_EQ(guard.code, 3);
  EXPECT_FALSE(guard.err.empty());
  EXPECT_EQ(invoke({"rates", "--eta-d", "0"}).code, 3);
}

TEST(Cli, SimulateSwapCommOn) {
  const Invocation off = invoke({"simulate", "--trials", "200", "--seed", "1", "--format", "jsonl"});
  const Invocation on = invoke({"simulate", "--trials", "200", "--seed", "1", "--swap-comm", "on",
                         "--format", "jsonl"});
  ASSERT_EQ(on.code, 0);
  EXPECT_EQ(lines(on.out)[0]["swap_comm"].get<std::string>(), "on");
  EXPECT_NE(lines(on.out)[0]["mean"], lines(off.out)[0]["mean"]);
}

TEST(Cli, SweepMarksOptimalN) {
  const Invocation r = invoke({"sweep", "--param", "n", "--from", "1", "--to", "10", "--format", "csv"});
  ASSERT_EQ(r.code, 0);
  const auto rows = csv(r.out);
  ASSERT_EQ(rows.size(), 11U);
  const std::size_t value = column(rows[0], "value");
  const std::size_t argmin = column(rows[0], "argmin");
  int marked = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][argmin] == "true") {
      ++marked;
      EXPECT_EQ(rows[i][value], "6");
    }
  }
  EXPECT_EQ(marked, 1);
}

TEST(Cli, SweepEfficiencyDecreasesTime) {
  const Invocation r = invoke({"sweep", "--param", "eta_d", "--from", "0.5", "--to", "0.9", "--steps",
                        "5", "--format", "jsonl"});
  ASSERT_EQ(r.code, 0);
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 5U);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i]["t_total"].get<double>(), rows[i - 1]["t_total"].get<double>());
  }
  EXPECT_EQ(rows.back()["value"].get<double>(), 0.9);
}

TEST(Cli, SweepErrors) {
  EXPECT_EQ(invoke({"sweep", "--param", "bogus", "--from", "0", "--to", "1"}).code, 2);
  EXPECT_EQ(invoke({"sweep", "--param", "n", "--from", "5", "--to", "2"}).code, 2);
  EXPECT_EQ(invoke({"sweep", "--param", "eta_d", "--from", "0.1", "--to", "0.2"}).code, 2);
  EXPECT_EQ(invoke({"sweep", "--param", "eta_d", "--from", "0.5", "--to", "1.5", "--steps", "3"})
                .code,
            2);
  const Invocation dashed = invoke({"sweep", "--param", "l-km", "--from", "100", "--to", "200",
                             "--steps", "2"});
  EXPECT_EQ(dashed.code, 0);
}

TEST(Cli, BsmVerify) {
  const Invocation r = invoke({"bsm-verify", "--format", "jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.err.empty());
  const auto rows = lines(r.out);
  EXPECT_GE(rows.size(), 10U);
  for (const auto& row : rows) EXPECT_TRUE(row["pass"].get<bool>()) << row.dump();
  EXPECT_EQ(invoke({"bsm-verify", "--phases", "1"}).code, 0);
  const Invocation strict = invoke({"bsm-verify", "--tolerance", "1e-30"});
  EXPECT_EQ(strict.code, 1);
  EXPECT_NE(strict.err.find("check failed"), std::string::npos);
  EXPECT_EQ(invoke({"bsm-verify", "--phases", "0"}).code, 2);
}

TEST(Cli, ReproducePaper) {
  const Invocation r = invoke({"reproduce-paper", "--format", "jsonl"});
  ASSERT_EQ(r.code, 0);
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 6U);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_TRUE(rows[i]["pass"].get<bool>()) << rows[i].dump();
    EXPECT_FALSE(rows[i]["not_computed"].get<bool>());
  }
  EXPECT_TRUE(rows[5]["not_computed"].get<bool>());
  EXPECT_EQ(rows[5]["note"].get<std::string>(), "reference value, not computed");
  EXPECT_TRUE(rows[5]["computed"].is_null());
  EXPECT_EQ(rows[5]["reference"].get<double>(), 107.6);
}

TEST(Cli, VerboseWritesDiagnostics) {
  const Invocation r = invoke({"rates", "--verbose"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("eta_p="), std::string::npos);
}

TEST(Cli, CsvAndJsonRoundTrip) {
  const Invocation c = invoke({"rates", "--n", "5", "--format", "csv"});
  const Invocation j = invoke({"rates", "--n", "5", "--format", "jsonl"});
  const auto rows = csv(c.out);
  const json row = lines(j.out)[0];
  ASSERT_EQ(rows.size(), 2U);
  ProtocolParams p = paper_defaults();
  p.n = 5;
  const RateReport expected = rates::t_total(p);
  EXPECT_EQ(number(rows[1][column(rows[0], "t_total")]), expected.t_total);
  EXPECT_EQ(number(rows[1][column(rows[0], "p_0")]), expected.p_0);
  EXPECT_EQ(row["t_total"].get<double>(), expected.t_total);
  EXPECT_EQ(row["eta_t"].get<double>(), expected.eta_t);
}

TEST(Cli, EveryCommandHonorsFormats) {
  const std::vector<std::vector<std::string>> commands = {
      {"rates"},
      {"simulate", "--trials", "20", "--seed", "1"},
      {"sweep", "--param", "n", "--from", "2", "--to", "4"},
      {"bsm-verify", "--phases", "1"},
      {"reproduce-paper"}};
  for (auto args : commands) {
    for (const char* format : {"table", "csv", "jsonl"}) {
      auto with = args;
      with.push_back("--format");
      with.push_back(format);
      const Invocation r = invoke(with);
      EXPECT_EQ(r.code, 0) << args[0] << ' ' << format << r.err;
      EXPECT_FALSE(r.out.empty());
      if (std::string(format) == "jsonl") {
        EXPECT_NO_THROW(lines(r.out));
      }
    }
  }
}

TEST(Report, NumberFormatting) {
  EXPECT_EQ(cli::format_number(0.5), "0.5");
  EXPECT_EQ(cli::format_number(1.0 / 3.0), "0.33333333333333331");
  EXPECT_EQ(cli::format_number(std::numeric_limits<double>::infinity()), "inf");
  std::ostringstream out;
  cli::emit(out, {{{"a", std::string("x,y")}, {"b", std::monostate{}}}}, cli::Format::csv);
  EXPECT_EQ(out.str(), "a,b\n\"x,y\",\n");
  EXPECT_THROW(cli::parse_format("xml"), std::invalid_argument);
}
