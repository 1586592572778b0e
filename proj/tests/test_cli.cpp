#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

// End-to-end checks against the installed binary, driven through popen.

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr interleaved
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(PGG_CLI_PATH) + " " + args + " 2>&1";
  CliResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (size_t got = fread(buf, 1, sizeof buf, pipe))
    result.output.append(buf, got);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("payoff prints the closed-form value") {
  const auto r = run_cli(
      "payoff --n 10 --b 10 --c 5 --delta 0.9 --epsilon 0.05 "
      "--incumbent-k 9 --focal-k 9");
  CHECK(r.exit_code == 0);
  CHECK(std::stod(r.output) == doctest::Approx(10.300631974651358).epsilon(1e-9));
}

TEST_CASE("payoff with an oracle cross-check") {
  const auto r = run_cli(
      "payoff --delta 0.9 --epsilon 0.05 --incumbent-k 9 --focal-k 10 "
      "--oracle 5000 --seed 4");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("oracle mean=") != std::string::npos);
  CHECK(r.output.find("z=") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("payoff --focal-k 11").exit_code == 2);
  const auto r = run_cli("payoff --focal-k -1");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("out of range") != std::string::npos);
  CHECK(run_cli("").exit_code == 2);           // subcommand required
  CHECK(run_cli("payoff --c 20").exit_code == 2);  // c > b
  CHECK(run_cli("nonsense").exit_code == 2);
  CHECK(run_cli("payoff --mode bogus").exit_code == 2);
}

TEST_CASE("stability emits a json verdict") {
  const auto r = run_cli("stability --k 9 --delta 0.9 --epsilon 0.05");
  CHECK(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.output);
  CHECK(j.at("verdict") == "EvolutionarilyStable");
  CHECK(j.at("witnesses").size() == 10);
}

TEST_CASE("band emits the epsilon interval") {
  const auto r = run_cli("band --k 9 --delta 0.9");
  CHECK(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.output);
  CHECK(j.at("empty") == false);
  CHECK(j.at("eps_lower") == 0.0);
  CHECK(double(j.at("eps_upper")) ==
        doctest::Approx(0.06812535093727123).epsilon(1e-8));
}

TEST_CASE("sweep emits the pinned csv header and is byte-stable") {
  const auto r = run_cli("sweep --ks 9,5 --deltas 1,0.9 --eps-points 32");
  CHECK(r.exit_code == 0);
  CHECK(r.output.rfind("delta,k,epsilon,Delta,threshold\n", 0) == 0);
  int lines = 0;
  for (char ch : r.output) lines += ch == '\n';
  CHECK(lines == 1 + 2 * 2 * 32);
  const auto again = run_cli("sweep --ks 9,5 --deltas 1,0.9 --eps-points 32");
  CHECK(again.output == r.output);
}

TEST_CASE("config file fills gaps, flags win") {
  const auto path = temp_file("pgg_cli_cfg.json");
  std::ofstream(path) << nlohmann::json{{"n", 10}, {"b", 10.0}, {"c", 5.0},
                                        {"delta", 0.9}, {"epsilon", 0.05}};
  const auto from_file = run_cli("payoff --config " + path.string() +
                                 " --incumbent-k 9 --focal-k 9");
  CHECK(from_file.exit_code == 0);
  CHECK(std::stod(from_file.output) == doctest::Approx(10.3006319746).epsilon(1e-9));

  const auto overridden = run_cli("payoff --config " + path.string() +
                                  " --epsilon 0 --incumbent-k 9 --focal-k 9");
  CHECK(overridden.exit_code == 0);
  CHECK(std::stod(overridden.output) == doctest::Approx(50.0).epsilon(1e-9));

  std::ofstream(path) << nlohmann::json{{"n", 10}, {"gamma", 1.0}};
  CHECK(run_cli("payoff --config " + path.string()).exit_code == 2);
}

TEST_CASE("simulate writes a report and trace") {
  const auto cfg_path = temp_file("pgg_cli_sim.json");
  const auto trace_path = temp_file("pgg_cli_trace.csv");
  std::ofstream(cfg_path) << nlohmann::json{
      {"population", 50}, {"n", 10},        {"b", 10.0},
      {"c", 5.0},         {"delta", 0.9},   {"epsilon", 0.05},
      {"generations", 5}, {"seed", 12},
      {"initial", {{"9", 0.8}, {"10", 0.2}}}};
  const auto r = run_cli("simulate --config " + cfg_path.string() +
                         " --trace " + trace_path.string());
  CHECK(r.exit_code == 0);
  const auto report = nlohmann::json::parse(r.output);
  CHECK(report.at("generations") == 5);
  CHECK(report.at("config").at("seed") == 12);
  CHECK(report.at("config").at("epsilon") == 0.05);
  int total = 0;
  for (const auto& [_, count] : report.at("final_counts").items())
    total += int(count);
  CHECK(total == 50);

  std::ifstream trace(trace_path);
  std::string header;
  std::getline(trace, header);
  CHECK(header == "generation,k,frequency,mean_payoff");
  int rows = 0;
  for (std::string line; std::getline(trace, line);) ++rows;
  CHECK(rows == 5 * 11);

  // --seed overrides the config seed in the embedded report
  const auto reseeded = run_cli("simulate --config " + cfg_path.string() +
                                " --seed 99");
  CHECK(nlohmann::json::parse(reseeded.output).at("config").at("seed") == 99);

  std::ofstream(cfg_path) << nlohmann::json{{"population", 50}};
  CHECK(run_cli("simulate --config " + cfg_path.string()).exit_code != 0);
}

TEST_CASE("quick validation suite passes") {
  const auto r = run_cli("validate --quick --replications 5000 --seed 2");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("FAIL") == std::string::npos);
  CHECK(r.output.find("PASS") != std::string::npos);
}
