#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "pgg/analytic.hpp"
#include "pgg/sim.hpp"

using namespace pgg;

namespace {
const GameParams kRef{10, 10.0, 5.0};
}

TEST_CASE("run_episode validates its inputs") {
  EpisodeConfig cfg;
  cfg.params = kRef;
  cfg.env = {0.9, 0.05};
  cfg.members.assign(9, 9);
  CHECK_THROWS_AS(run_episode(cfg), std::domain_error);
  cfg.members.assign(10, 9);
  cfg.members[0] = 11;
  CHECK_THROWS_AS(run_episode(cfg), std::domain_error);
  cfg.members[0] = 9;
  cfg.env = {1.0, 0.05};
  CHECK_THROWS_AS(run_episode(cfg), std::domain_error);
}

TEST_CASE("episodes are seed-deterministic") {
  EpisodeConfig cfg;
  cfg.params = kRef;
  cfg.env = {0.9, 0.05};
  cfg.members = {9, 9, 9, 9, 9, 10, 8, 0, 9, 9};
  cfg.seed = 42;
  const auto a = run_episode(cfg);
  const auto b = run_episode(cfg);
  CHECK(a.rounds == b.rounds);
  CHECK(a.payoffs == b.payoffs);  // bit-identical
  cfg.seed = 43;
  const auto c = run_episode(cfg);
  CHECK((c.rounds != a.rounds || c.payoffs != a.payoffs));
}

TEST_CASE("error-free full cooperation pays 5 per member per round") {
  EpisodeConfig cfg;
  cfg.params = kRef;
  cfg.env = {0.9, 0.0};
  cfg.members.assign(10, 9);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    cfg.seed = seed;
    const auto result = run_episode(cfg);
    CHECK(result.rounds >= 1);
    for (double p : result.payoffs)
      CHECK(p == doctest::Approx(5.0 * result.rounds).epsilon(1e-12));
  }
}

TEST_CASE("all defectors earn nothing") {
  EpisodeConfig cfg;
  cfg.params = kRef;
  cfg.env = {0.9, 0.3};
  cfg.members.assign(10, 10);
  cfg.seed = 7;
  const auto result = run_episode(cfg);
  for (double p : result.payoffs) CHECK(p == 0.0);
}

TEST_CASE("total payoff equals (b - c) times realized cooperations") {
  EpisodeConfig cfg;
  cfg.params = kRef;
  cfg.env = {0.9, 0.1};
  cfg.members = {9, 9, 10, 5, 0, 9, 9, 3, 9, 10};
  for (auto semantics : {Semantics::literal, Semantics::paper_absorbing}) {
    cfg.semantics = semantics;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
      cfg.seed = seed;
      const auto result = run_episode(cfg);
      double total = 0.0;
      for (double p : result.payoffs) total += p;
      const double coops = total / (kRef.b - kRef.c);
      CHECK(coops >= -1e-9);
      CHECK(std::abs(coops - std::round(coops)) < 1e-9);
    }
  }
}

TEST_CASE("episode length is geometric with mean 1/(1 - delta)") {
  EpisodeConfig cfg;
  cfg.params = kRef;
  cfg.env = {0.9, 0.05};
  cfg.members.assign(10, 9);
  const int episodes = 100000;
  double sum = 0.0;
  for (int i = 0; i < episodes; ++i) {
    cfg.seed = 1000 + i;
    sum += run_episode(cfg).rounds;
  }
  const double mean = sum / episodes;
  // Geom(1 - delta) on {1, 2, ...}: mean 10, sd sqrt(delta)/(1 - delta)
  const double se = std::sqrt(0.9) / 0.1 / std::sqrt(double(episodes));
  CHECK(std::abs(mean - 10.0) <= 3.0 * se);
}

TEST_CASE("estimate_v guards its preconditions") {
  CHECK_THROWS_AS(estimate_v(9, 9, kRef, {0.9, 0.05}, 999,
                             Semantics::paper_absorbing, 1),
                  std::domain_error);
  CHECK_THROWS_AS(estimate_v(10, 9, kRef, {0.9, 0.05}, 10000,
                             Semantics::paper_absorbing, 1),
                  std::domain_error);
  CHECK_THROWS_AS(estimate_v(9, 9, kRef, {1.0, 0.05}, 10000,
                             Semantics::paper_absorbing, 1),
                  std::domain_error);
}

TEST_CASE("Monte Carlo episodes reproduce the closed forms") {
  const EnvParams env{0.9, 0.05};
  for (int focal : {9, 10, 8, 5, 0}) {
    const double closed = v_err({9, focal}, kRef, env);
    const auto est = estimate_v(9, focal, kRef, env, 50000,
                                Semantics::paper_absorbing, 7);
    CHECK(est.replications == 50000);
    CHECK(est.std_error > 0.0);
    CHECK(std::abs(est.mean - closed) <= 3.0 * est.std_error);
  }
  // tolerant incumbent, all dispatch cases
  for (int focal : {5, 6, 4, 10}) {
    const double closed = v_err({5, focal}, kRef, env);
    const auto est = estimate_v(5, focal, kRef, env, 50000,
                                Semantics::paper_absorbing, 11);
    CHECK(std::abs(est.mean - closed) <= 3.0 * est.std_error);
  }
}

TEST_CASE("estimate_v is deterministic and nearly thread-count invariant") {
  const EnvParams env{0.9, 0.05};
  const auto a = estimate_v(9, 9, kRef, env, 20000, Semantics::paper_absorbing, 3);
  const auto b = estimate_v(9, 9, kRef, env, 20000, Semantics::paper_absorbing, 3);
  CHECK(a.mean == b.mean);  // bit-identical on repeat
  setenv("PGG_EVO_THREADS", "1", 1);
  const auto serial =
      estimate_v(9, 9, kRef, env, 20000, Semantics::paper_absorbing, 3);
  unsetenv("PGG_EVO_THREADS");
  // identical per-replication draws; only the reduction grouping differs
  CHECK(serial.mean == doctest::Approx(a.mean).epsilon(1e-13));
}

TEST_CASE("literal episodes reproduce the exact-mode chain for small n") {
  const GameParams small{4, 4.0, 1.5};
  const EnvParams env{0.8, 0.1};
  for (auto [inc, foc] : {std::pair{3, 3}, {3, 4}, {3, 2}, {2, 3}}) {
    const double closed = v_err({inc, foc, PayoffMode::exact}, small, env);
    const auto est =
        estimate_v(inc, foc, small, env, 100000, Semantics::literal, 13);
    CHECK(std::abs(est.mean - closed) <= 3.0 * est.std_error);
  }
}

TEST_CASE("sim config validation") {
  SimConfig cfg;
  cfg.params = kRef;
  cfg.env = {0.9, 0.05};
  cfg.population = 100;
  cfg.generations = 10;
  cfg.initial.weights = {{9, 1.0}};
  CHECK_NOTHROW(cfg.validate());
  cfg.population = 95;  // not a multiple of n
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
  cfg.population = 100;
  cfg.mutation_rate = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
  cfg.mutation_rate = 0.01;
  cfg.generations = 0;
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
}

TEST_CASE("evolve is deterministic and conserves the population") {
  SimConfig cfg;
  cfg.params = kRef;
  cfg.env = {0.9, 0.05};
  cfg.population = 100;
  cfg.generations = 50;
  cfg.mutation_rate = 0.01;
  cfg.selection_intensity = 0.5;
  cfg.seed = 99;
  cfg.initial.weights = {{9, 0.8}, {10, 0.2}};
  const auto a = evolve(cfg);
  const auto b = evolve(cfg);
  REQUIRE(a.generations.size() == 50);
  CHECK(a.events == b.events);
  for (size_t g = 0; g < a.generations.size(); ++g) {
    CHECK(a.generations[g].counts == b.generations[g].counts);
    CHECK(a.generations[g].mean_payoff.size() == 11);
    int total = 0;
    for (int c : a.generations[g].counts) total += c;
    CHECK(total == 100);
  }
  // largest-remainder seeding of the first generation
  CHECK(a.generations[0].counts[9] == 80);
  CHECK(a.generations[0].counts[10] == 20);
}

TEST_CASE("moran updating also runs and conserves counts") {
  SimConfig cfg;
  cfg.params = kRef;
  cfg.env = {0.9, 0.05};
  cfg.population = 50;
  cfg.generations = 20;
  cfg.update = UpdateRule::moran;
  cfg.selection_intensity = 0.1;
  cfg.seed = 5;
  cfg.initial.weights = {{9, 0.5}, {5, 0.5}};
  const auto trace = evolve(cfg);
  for (const auto& rec : trace.generations) {
    int total = 0;
    for (int c : rec.counts) total += c;
    CHECK(total == 50);
  }
}

TEST_CASE("error-free mixed start drifts to defector takeover") {
  SimConfig cfg;
  cfg.params = kRef;
  cfg.env = {0.9, 0.0};
  cfg.population = 100;
  cfg.generations = 200;
  cfg.selection_intensity = 1.0;
  cfg.seed = 2024;
  cfg.initial.weights = {{9, 0.5}, {10, 0.5}};
  const auto trace = evolve(cfg);
  bool takeover = false;
  for (const auto& event : trace.events)
    if (event.find("defector takeover") != std::string::npos) takeover = true;
  CHECK(takeover);
  CHECK(2 * trace.generations.back().counts[10] >= 100);
}

TEST_CASE("trace CSV shape") {
  SimConfig cfg;
  cfg.params = kRef;
  cfg.env = {0.9, 0.05};
  cfg.population = 20;
  cfg.generations = 3;
  cfg.seed = 1;
  cfg.initial.weights = {{9, 1.0}};
  const auto trace = evolve(cfg);
  std::ostringstream csv;
  write_csv(trace, csv);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "generation,k,frequency,mean_payoff");
  int rows = 0;
  double freq_sum = 0.0;
  for (std::string line; std::getline(lines, line); ++rows) {
    const auto first = line.find(',');
    const auto second = line.find(',', first + 1);
    const auto third = line.find(',', second + 1);
    freq_sum += std::stod(line.substr(second + 1, third - second - 1));
  }
  CHECK(rows == 3 * 11);
  CHECK(freq_sum == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("sim config json round trip") {
  SimConfig cfg;
  cfg.params = kRef;
  cfg.env = {0.9, 0.05};
  cfg.population = 100;
  cfg.generations = 10;
  cfg.update = UpdateRule::moran;
  cfg.kernel = MutationKernel::cooperators_only;
  cfg.mutation_rate = 0.02;
  cfg.selection_intensity = 0.7;
  cfg.episodes_per_generation = 2;
  cfg.seed = 77;
  cfg.semantics = Semantics::paper_absorbing;
  cfg.initial.weights = {{9, 0.9}, {10, 0.1}};
  const nlohmann::json j = cfg;
  const auto back = j.get<SimConfig>();
  CHECK(back.population == cfg.population);
  CHECK(back.update == cfg.update);
  CHECK(back.kernel == cfg.kernel);
  CHECK(back.semantics == cfg.semantics);
  CHECK(back.seed == cfg.seed);
  CHECK(back.initial.weights == cfg.initial.weights);

  nlohmann::json bad = j;
  bad["surprise"] = 1;
  CHECK_THROWS_AS(bad.get<SimConfig>(), std::domain_error);

  nlohmann::json minimal = {{"population", 20}, {"n", 10},   {"b", 10.0},
                            {"c", 5.0},         {"delta", 0.9}, {"epsilon", 0.0},
                            {"generations", 5}};
  const auto min_cfg = minimal.get<SimConfig>();
  CHECK(min_cfg.initial.weights.at(9) == 1.0);  // default: all T_{n-1}
}

TEST_CASE("drift experiment demands enough trials and a positive epsilon") {
  SimConfig cfg;
  cfg.params = kRef;
  cfg.env = {0.9, 0.03};
  cfg.population = 100;
  cfg.generations = 10;
  cfg.initial.weights = {{9, 1.0}};
  CHECK_THROWS_AS(drift_experiment(cfg, 29), std::domain_error);
  cfg.env.epsilon = 0.0;
  CHECK_THROWS_AS(drift_experiment(cfg, 30), std::domain_error);
}

TEST_CASE("drift experiment smoke run reports coherent fields") {
  SimConfig cfg;
  cfg.params = {4, 4.0, 1.5};
  cfg.env = {0.8, 0.05};
  cfg.population = 20;
  cfg.generations = 50;
  cfg.mutation_rate = 0.02;
  cfg.selection_intensity = 1.0;
  cfg.seed = 31;
  cfg.initial.weights = {{3, 1.0}};
  const auto summary = drift_experiment(cfg, 30);
  CHECK(summary.trials == 30);
  CHECK(summary.takeover_fraction_error_free >= 0.0);
  CHECK(summary.takeover_fraction_error_free <= 1.0);
  CHECK(summary.takeover_fraction_with_errors >= 0.0);
  CHECK(summary.takeover_fraction_with_errors <= 1.0);
  CHECK(summary.sign_test_p_value > 0.0);
  CHECK(summary.sign_test_p_value <= 1.0);
  // paired design is reproducible
  const auto again = drift_experiment(cfg, 30);
  CHECK(again.takeover_fraction_error_free ==
        summary.takeover_fraction_error_free);
  CHECK(again.sign_test_p_value == summary.sign_test_p_value);
}
