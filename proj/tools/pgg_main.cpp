// Command-line surface for the public goods game analytics: closed-form
// payoffs, stability verdicts, epsilon bands, Delta sweeps, population
// simulation and the Monte Carlo validation suite.
//
// Exit codes: 0 success, 1 numeric failure, 2 usage error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pgg/analytic.hpp"
#include "pgg/game.hpp"
#include "pgg/sim.hpp"
#include "pgg/stability.hpp"

namespace {

struct ParamArgs {
  int n = 10;
  double b = 10.0;
  double c = 5.0;
  double delta = 0.9;
  double epsilon = 0.0;
  std::string config_path;

  void add_game_flags(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file");
    app->add_option("--n", n, "group size");
    app->add_option("--b", b, "public good benefit scale");
    app->add_option("--c", c, "contribution cost");
  }
  void add_env_flags(CLI::App* app) {
    app->add_option("--delta", delta, "continuation probability");
    app->add_option("--epsilon", epsilon, "mistake probability");
  }

  // Config file values apply only where the flag was not given.
  void load_config(const CLI::App* app) {
    if (config_path.empty()) return;
    std::ifstream in(config_path);
    if (!in) throw std::domain_error("cannot open config: " + config_path);
    const auto j = nlohmann::json::parse(in);
    for (const auto& [key, _] : j.items())
      if (key != "n" && key != "b" && key != "c" && key != "delta" &&
          key != "epsilon")
        throw std::domain_error("config: unknown field '" + key + "'");
    if (app->count("--n") == 0 && j.contains("n")) j.at("n").get_to(n);
    if (app->count("--b") == 0 && j.contains("b")) j.at("b").get_to(b);
    if (app->count("--c") == 0 && j.contains("c")) j.at("c").get_to(c);
    if (app->count("--delta") == 0 && j.contains("delta"))
      j.at("delta").get_to(delta);
    if (app->count("--epsilon") == 0 && j.contains("epsilon"))
      j.at("epsilon").get_to(epsilon);
  }

  pgg::GameParams game() const { return {n, b, c}; }
  pgg::EnvParams env() const { return {delta, epsilon}; }
};

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error("cannot open output: " + path);
  return file;
}

// The (incumbent, focal) pairs exercised by the validation suite, one
// per analytic dispatch case, for a given group size.
std::vector<std::pair<int, int>> oracle_cases(int n) {
  const int mid = n / 2;
  return {
      {n - 1, n - 1},  // hardest incumbent, same mutant
      {n - 1, n},      // defector vs hardest
      {n - 1, mid},    // softer mutant vs hardest
      {mid, mid},      // tolerant incumbent, same mutant
      {mid, n},        // defector vs tolerant
      {mid, mid + 1},  // harder mutant vs tolerant
      {mid, mid - 1},  // softer mutant vs tolerant
  };
}

int run_validate(const ParamArgs& args, int replications, std::uint64_t seed,
                 bool quick) {
  const std::vector<double> deltas = quick ? std::vector<double>{0.9}
                                           : std::vector<double>{0.8, 0.95};
  const std::vector<double> epsilons =
      quick ? std::vector<double>{0.05} : std::vector<double>{0.02, 0.05, 0.1};
  const std::vector<int> sizes = quick ? std::vector<int>{10}
                                       : std::vector<int>{4, 10};
  bool ok = true;
  for (int n : sizes) {
    const pgg::GameParams params{n, args.b, args.c};
    for (double delta : deltas) {
      for (double eps : epsilons) {
        const pgg::EnvParams env{delta, eps};
        for (auto [inc, foc] : oracle_cases(n)) {
          const double closed = pgg::v_err({inc, foc}, params, env);
          const auto est = pgg::estimate_v(inc, foc, params, env, replications,
                                           pgg::Semantics::paper_absorbing,
                                           seed);
          const double z = est.std_error > 0.0
                               ? (est.mean - closed) / est.std_error
                               : 0.0;
          const bool pass = std::abs(est.mean - closed) <=
                            3.0 * est.std_error + 1e-12;
          ok = ok && pass;
          std::printf(
              "%s n=%2d delta=%.2f eps=%.2f incumbent=%2d focal=%2d "
              "closed=%.6f mc=%.6f se=%.6f z=%+.2f\n",
              pass ? "PASS" : "FAIL", n, delta, eps, inc, foc, closed,
              est.mean, est.std_error, z);
        }
      }
    }
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"n-person repeated public goods game with behavioral mistakes"};
  app.require_subcommand(1);

  ParamArgs args;

  // payoff
  auto* payoff = app.add_subcommand("payoff", "closed-form repeated-game value");
  int incumbent_k = 9, focal_k = 9;
  std::string mode = "paper";
  int oracle_reps = 0;
  std::uint64_t seed = 1;
  args.add_game_flags(payoff);
  args.add_env_flags(payoff);
  payoff->add_option("--incumbent-k", incumbent_k, "incumbent tolerance index");
  payoff->add_option("--focal-k", focal_k, "focal tolerance index");
  payoff->add_option("--mode", mode, "paper|exact")
      ->check(CLI::IsMember({"paper", "exact"}));
  payoff->add_option("--oracle", oracle_reps,
                     "Monte Carlo replications for a cross-check");
  payoff->add_option("--seed", seed, "oracle seed");

  // stability
  auto* stability = app.add_subcommand("stability", "classify a monomorphic state");
  int k_arg = 9;
  std::string output_path;
  args.add_game_flags(stability);
  args.add_env_flags(stability);
  stability->add_option("--k", k_arg, "incumbent tolerance index");
  stability->add_option("--output,-o", output_path, "output path (default stdout)");

  // band
  auto* band = app.add_subcommand("band", "epsilon band supporting ESS of T_k");
  args.add_game_flags(band);
  band->add_option("--delta", args.delta, "continuation probability");
  band->add_option("--k", k_arg, "incumbent tolerance index");
  band->add_option("--output,-o", output_path, "output path (default stdout)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Delta(eps; k) table as CSV");
  std::vector<double> sweep_deltas = {1.0, 0.9, 0.8};
  std::vector<int> sweep_ks;
  int eps_points = 512;
  args.add_game_flags(sweep);
  sweep->add_option("--deltas", sweep_deltas, "delta values")->delimiter(',');
  sweep->add_option("--ks", sweep_ks, "tolerance indices (default 1..n-1)")
      ->delimiter(',');
  sweep->add_option("--eps-points", eps_points, "epsilon grid size");
  sweep->add_option("--output,-o", output_path, "output path (default stdout)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "generational dynamics");
  std::string sim_config_path, trace_path;
  std::optional<std::uint64_t> sim_seed;
  simulate->add_option("--config", sim_config_path, "SimConfig JSON file")
      ->required();
  simulate->add_option("--trace,-t", trace_path, "per-generation CSV path");
  simulate->add_option("--seed", sim_seed, "override config seed");
  simulate->add_option("--output,-o", output_path, "JSON report path");

  // validate
  auto* validate = app.add_subcommand("validate", "Monte Carlo oracle suite");
  bool quick = false;
  int validate_reps = 100000;
  args.add_game_flags(validate);
  validate->add_flag("--quick", quick, "reduced grid and replications");
  validate->add_option("--replications", validate_reps, "episodes per case");
  validate->add_option("--seed", seed, "base seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (payoff->parsed()) {
      args.load_config(payoff);
      const pgg::FocalContext ctx{incumbent_k, focal_k,
                                  mode == "exact" ? pgg::PayoffMode::exact
                                                  : pgg::PayoffMode::paper};
      const double value = pgg::v_err(ctx, args.game(), args.env());
      std::printf("%.10g\n", value);
      if (oracle_reps > 0) {
        const auto est = pgg::estimate_v(
            incumbent_k, focal_k, args.game(), args.env(), oracle_reps,
            mode == "exact" ? pgg::Semantics::literal
                            : pgg::Semantics::paper_absorbing,
            seed);
        const double z =
            est.std_error > 0.0 ? (est.mean - value) / est.std_error : 0.0;
        std::printf("oracle mean=%.10g se=%.3g z=%+.3f (%d reps)\n", est.mean,
                    est.std_error, z, est.replications);
      }
    } else if (stability->parsed()) {
      args.load_config(stability);
      const auto verdict = pgg::classify(k_arg, args.game(), args.env());
      std::ofstream file;
      open_output(output_path, file) << nlohmann::json(verdict).dump(2) << "\n";
    } else if (band->parsed()) {
      args.load_config(band);
      const auto result = pgg::ess_epsilon_band(k_arg, args.game(), args.delta);
      std::ofstream file;
      open_output(output_path, file) << nlohmann::json(result).dump(2) << "\n";
    } else if (sweep->parsed()) {
      args.load_config(sweep);
      if (sweep_ks.empty())
        for (int k = 1; k <= args.n - 1; ++k) sweep_ks.push_back(k);
      std::vector<double> grid(eps_points);
      for (int i = 0; i < eps_points; ++i)
        grid[i] = 1e-4 + (1.0 - 2e-4) * i / (eps_points - 1);
      const auto table = pgg::sweep_delta_curves(args.n, sweep_deltas, sweep_ks,
                                                 grid, args.game());
      std::ofstream file;
      pgg::write_csv(table, open_output(output_path, file));
    } else if (simulate->parsed()) {
      std::ifstream in(sim_config_path);
      if (!in) throw std::domain_error("cannot open config: " + sim_config_path);
      pgg::SimConfig cfg = nlohmann::json::parse(in).get<pgg::SimConfig>();
      if (sim_seed) cfg.seed = *sim_seed;
      const auto trace = pgg::evolve(cfg);
      if (!trace_path.empty()) {
        std::ofstream traceFile(trace_path);
        if (!traceFile)
          throw std::runtime_error("cannot open trace path: " + trace_path);
        pgg::write_csv(trace, traceFile);
      }
      nlohmann::json report;
      report["config"] = cfg;  // resolved config embedded verbatim
      report["generations"] = trace.generations.size();
      report["events"] = trace.events;
      nlohmann::json final_counts = nlohmann::json::object();
      const auto& last = trace.generations.back();
      for (int k = 0; k <= trace.n; ++k)
        final_counts[std::to_string(k)] = last.counts[k];
      report["final_counts"] = final_counts;
      std::ofstream file;
      open_output(output_path, file) << report.dump(2) << "\n";
    } else if (validate->parsed()) {
      args.load_config(validate);
      if (quick) validate_reps = std::min(validate_reps, 20000);
      return run_validate(args, validate_reps, seed, quick);
    }
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
