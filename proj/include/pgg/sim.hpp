#ifndef PGG_SIM_HPP
#define PGG_SIM_HPP

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "pgg/game.hpp"

// Stochastic oracle for the closed forms (episode Monte Carlo) and
// generational population dynamics.
namespace pgg {

// paper_absorbing follows the case analysis behind the closed forms: breakdown is
// absorbing and players react to the group-wide cooperation count.
// literal simulates per-player observation of the other n-1 realized
// actions; a player that misplayed sees one cooperator more among the
// others than its co-members do.
enum class Semantics { paper_absorbing, literal };

struct EpisodeConfig {
  std::vector<int> members;  // strategy index per seat, length n
  GameParams params;
  EnvParams env;
  Semantics semantics = Semantics::literal;
  std::uint64_t seed = 0;
};

struct EpisodeResult {
  std::vector<double> payoffs;  // realized undiscounted totals per seat
  int rounds = 0;
};

// One repeated-game episode with geometric continuation. The seed
// fully determines the outcome.
EpisodeResult run_episode(const EpisodeConfig& cfg);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  int replications = 0;
};

// Sample mean of the focal payoff over independent episodes with n-1
// T_incumbent_k co-members. With paper_absorbing semantics the episode
// law is exactly the case analysis behind the closed forms, so the
// estimate is an unbiased oracle for v_err in paper mode.
Estimate estimate_v(int incumbent_k, int focal_k, const GameParams& params,
                    const EnvParams& env, int replications, Semantics semantics,
                    std::uint64_t seed);

enum class UpdateRule { imitation, moran };
enum class MutationKernel { uniform_all, cooperators_only };

struct SimConfig {
  int population = 0;  // N, divisible by n
  GameParams params;
  EnvParams env;
  UpdateRule update = UpdateRule::imitation;
  double selection_intensity = 1.0;
  double mutation_rate = 0.0;
  MutationKernel kernel = MutationKernel::uniform_all;
  int generations = 0;
  int episodes_per_generation = 1;
  std::uint64_t seed = 0;
  Semantics semantics = Semantics::literal;
  PopulationProfile initial;

  void validate() const;
};

struct GenerationRecord {
  std::vector<int> counts;        // agents per strategy k = 0..n, sums to N
  std::vector<double> mean_payoff;  // NaN where the strategy is absent
};

struct SimTrace {
  int n = 0;
  int population = 0;
  std::vector<GenerationRecord> generations;
  std::vector<std::string> events;  // fixation / takeover notes
};

SimTrace evolve(const SimConfig& cfg);

// CSV with header: generation,k,frequency,mean_payoff
void write_csv(const SimTrace& trace, std::ostream& os);

struct DriftSummary {
  int trials = 0;
  double takeover_fraction_error_free = 0.0;
  double takeover_fraction_with_errors = 0.0;
  double mean_takeover_generation_error_free = 0.0;  // NaN when none
  double mean_takeover_generation_with_errors = 0.0;
  int pairs_error_free_only = 0;   // takeover at eps=0 but not at band eps
  int pairs_with_errors_only = 0;  // the reverse
  double sign_test_p_value = 1.0;  // one-sided, H1: eps=0 takes over more
};

// Paired evolve runs contrasting the configured epsilon against an
// error-free twin with identical seeds. Takeover = the defector share
// reaching 1/2 in any generation.
DriftSummary drift_experiment(const SimConfig& cfg, int trials);

void to_json(nlohmann::json& j, const SimConfig& cfg);
void from_json(const nlohmann::json& j, SimConfig& cfg);
void to_json(nlohmann::json& j, const DriftSummary& s);

// Worker cap for parallel estimators; respects PGG_EVO_THREADS.
int max_threads();

}  // namespace pgg

#endif  // PGG_SIM_HPP
