#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tic/cli.hpp"
#include "tic/io.hpp"

namespace fs = std::filesystem;
using namespace tic;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run call(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = run(args, o, e);
  return {code, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("tic_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(call({}).code == kExitConfig);
  CHECK(call({"stackelberg", "--nope"}).code == kExitConfig);
  CHECK(call({"frobnicate"}).code == kExitConfig);
  CHECK(call({"--paths", "abc", "stackelberg"}).code == kExitConfig);
  CHECK(call({"--help"}).code == kExitOk);
}

TEST_CASE("config errors exit 2") {
  const auto dir = scratch("cfg");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << "{not json";
  std::ofstream(dir / "unknown.json") << R"({"family":"nope"})";
  CHECK(call({"--config", (dir / "bad.json").string(), "--out", (dir / "o").string(), "pde-solve"}).code == kExitConfig);
  CHECK(call({"--config", (dir / "unknown.json").string(), "--out", (dir / "o").string(), "pde-solve"}).code ==
        kExitConfig);
  CHECK(call({"--config", (dir / "missing.json").string(), "--out", (dir / "o").string(), "lq-riccati"}).code ==
        kExitConfig);
  CHECK(call({"--example", "nope", "--out", (dir / "o").string(), "inconsistency"}).code == kExitConfig);
}

TEST_CASE("stackelberg summary and manifest") {
  const auto dir = scratch("st");
  const auto r = call({"--out", dir.string(), "stackelberg"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("-0.5") != std::string::npos);
  CHECK(r.out.find("0.1438410362") != std::string::npos);

  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m.at("subcommand") == "stackelberg");
  CHECK(m.at("version") == library_version());
  for (const auto& [name, hash] : m.at("files").items()) CHECK(hash == sha256_file(dir / name));
  CHECK_FALSE(m.at("files").empty());
}

TEST_CASE("meanvar summary") {
  const auto dir = scratch("mv");
  const auto r = call({"--out", dir.string(), "--paths", "2000", "--t-list", "0", "--r", "0.03", "--mu", "0.08",
                       "--sigma", "0.2", "--gamma", "2", "--T", "1", "meanvar"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("v(0) = 0.60652") != std::string::npos);
}

TEST_CASE("verification verdicts map to exit codes") {
  const auto dir = scratch("verdict");
  const std::vector<std::string> common{"--paths", "4000", "--mu", "0.15", "--gamma", "1", "--t-list", "0"};
  auto args = common;
  args.insert(args.end(), {"--out", (dir / "zero").string(), "--strategy", "zero", "mc-verify"});
  CHECK(call(args).code == kExitVerdict);
  args = common;
  args.insert(args.end(), {"--out", (dir / "eq").string(), "--strategy", "equilibrium", "mc-verify"});
  CHECK(call(args).code == kExitOk);
}

TEST_CASE("replay reproduces every output byte for byte") {
  const auto dir = scratch("replay");
  const auto first = dir / "a";
  REQUIRE(call({"--out", first.string(), "--paths", "3000", "--t-list", "0,0.5", "mc-verify"}).code == kExitOk);
  const auto second = dir / "b";
  REQUIRE(call({"--replay", (first / "manifest.json").string(), "--out", second.string()}).code == kExitOk);
  const auto m1 = nlohmann::json::parse(slurp(first / "manifest.json"));
  const auto m2 = nlohmann::json::parse(slurp(second / "manifest.json"));
  CHECK(m1.at("files") == m2.at("files"));
  CHECK(m1.at("args") == m2.at("args"));
  for (const auto& [name, hash] : m1.at("files").items()) CHECK(slurp(first / name) == slurp(second / name));
}

TEST_CASE("ODE subcommands write their tables") {
  const auto dir = scratch("ode");
  CHECK(call({"--out", (dir / "lq").string(), "lq-riccati"}).code == kExitOk);
  CHECK(fs::exists(dir / "lq" / "lq_riccati.csv"));
  CHECK(call({"--out", (dir / "mf").string(), "meanfield-lq"}).code == kExitOk);
  CHECK(call({"--out", (dir / "pl").string(), "planner"}).code == kExitOk);
  const auto header = slurp(dir / "lq" / "lq_riccati.csv").substr(0, 2);
  CHECK(header == "t,");
}

TEST_CASE("csv writer round-trips doubles") {
  const auto dir = scratch("csv");
  fs::create_directories(dir);
  {
    CsvWriter w(dir / "x.csv", {"a", "b"});
    w.row({0.1, 1.0 / 3.0});
    CHECK_THROWS(w.row({1.0}));
  }
  std::istringstream in(slurp(dir / "x.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "a,b");
  std::getline(in, line);
  const auto comma = line.find(',');
  CHECK(std::stod(line.substr(0, comma)) == 0.1);
  CHECK(std::stod(line.substr(comma + 1)) == 1.0 / 3.0);
  CHECK(fmt17(0.1) == "0.10000000000000001");
}
