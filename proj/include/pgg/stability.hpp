#ifndef PGG_STABILITY_HPP
#define PGG_STABILITY_HPP

#include <optional>
#include <ostream>
#include <vector>

#include "pgg/analytic.hpp"
#include "pgg/game.hpp"

// Stability classification of monomorphic states, epsilon-threshold
// bands, equilibrium-selection ordering and parameter sweeps.
namespace pgg {

enum class Verdict { EvolutionarilyStable, NeutrallyStable, Unstable };

const char* to_string(Verdict v);

struct InvaderGap {
  int invader_k = 0;
  double gap = 0.0;  // W_incumbent - W_invader
};

struct StabilityVerdict {
  int k = 0;
  Verdict verdict = Verdict::Unstable;
  std::vector<InvaderGap> witnesses;
};

// Interval of mistake rates supporting evolutionary stability of T_k
// at a given delta. For k = n-1 the lower edge is 0.
struct ThresholdBand {
  int k = 0;
  double eps_lower = 0.0;
  double eps_upper = 0.0;
  double delta = 0.0;
  bool empty = true;
};

struct BandOrderingReport {
  std::vector<ThresholdBand> bands;  // k = n-1 down to 1
  bool upper_edges_ordered = false;  // eps_upper strictly increases as k drops
  bool lower_edges_ordered = false;  // eps_lower likewise, with lower(n-1)=0
  bool single_crossing_ok = false;   // consecutive Delta curves cross once,
                                     // on the descending branch (delta < 1)
};

// Grid of Delta(eps; k) values per (delta, k), plot-ready.
struct SweepTable {
  int n = 0;
  std::vector<double> deltas;
  std::vector<int> ks;
  std::vector<double> epsilons;
  // values[di][ki][ei], indices following the vectors above.
  std::vector<std::vector<std::vector<double>>> values;
  std::optional<double> threshold;  // 1 - coop_defect_ratio when params given
};

// Classifies the monomorphic T_k state against all n candidate
// invaders k' in [0, n] \ {k}. At epsilon = 0 error-free values are
// used and ties against other conditional cooperators are exact.
StabilityVerdict classify(int k, const GameParams& params, const EnvParams& env);

// delta* = (c - b/n)/(b - b/n): above it the hardest strategy repels
// the defector in the error-free game.
double min_delta_for_stability(const GameParams& params);

// Roots of g(eps) = Delta(eps; k) - (1 - coop_defect_ratio), bracketing
// the region where T_k repels the defector. Brackets are located by a
// 1024-point scan and bisected to 1e-10.
ThresholdBand ess_epsilon_band(int k, const GameParams& params, double delta);

// Unique interior minimizer of D1 + D2 for k < n-1; nullopt for
// k = n-1 whose infimum sits at eps = 0.
std::optional<double> epsilon_star(int k, double delta, int n);

// Bands for k = n-1 .. 1 plus the ordering and single-crossing checks
// behind the equilibrium-selection result.
BandOrderingReport band_ordering_report(const GameParams& params, double delta);

// Delta(eps; k) over the requested grids. When params are given, the
// table carries the horizontal threshold 1 - coop_defect_ratio.
SweepTable sweep_delta_curves(int n, const std::vector<double>& deltas,
                              const std::vector<int>& ks,
                              const std::vector<double>& epsilons,
                              const std::optional<GameParams>& params = {});

// CSV with header: delta,k,epsilon,Delta,threshold
void write_csv(const SweepTable& table, std::ostream& os);

void to_json(nlohmann::json& j, const StabilityVerdict& v);
void to_json(nlohmann::json& j, const ThresholdBand& b);

}  // namespace pgg

#endif  // PGG_STABILITY_HPP
