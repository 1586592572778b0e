#ifndef PGG_GAME_HPP
#define PGG_GAME_HPP

#include <map>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

// Stage-game primitives for the n-person public goods game with
// trembling-hand mistakes: one-shot payoffs with and without errors,
// the mistake-count distribution psi and the group-composition
// distribution m. All functions are pure and thread-safe.
namespace pgg {

inline constexpr int kMaxGroupSize = 64;

enum class Action { Cooperate, Defect };

// Group size and payoff constants. Requires 0 < b/n < c < b so that
// defection dominates the one-shot game while full cooperation is
// efficient. Construction fails loudly on violation.
struct GameParams {
  int n = 0;
  double b = 0.0;
  double c = 0.0;

  GameParams() = default;
  GameParams(int n_, double b_, double c_) : n(n_), b(b_), c(c_) { validate(); }

  void validate() const {
    if (n < 2 || n > kMaxGroupSize)
      throw std::domain_error("GameParams: n must be in [2, " +
                              std::to_string(kMaxGroupSize) + "]");
    if (!(0.0 < b / n && b / n < c && c < b))
      throw std::domain_error("GameParams: requires 0 < b/n < c < b");
  }
};

// Continuation probability delta and per-action mistake probability
// epsilon. A mistake turns an intended cooperation into defection;
// defection is never misplayed. delta = 1 is admitted only by
// operations documented as limit-safe.
struct EnvParams {
  double delta = 0.0;
  double epsilon = 0.0;

  EnvParams() = default;
  EnvParams(double delta_, double epsilon_) : delta(delta_), epsilon(epsilon_) {
    validate();
  }

  void validate() const {
    if (!(delta > 0.0 && delta <= 1.0))
      throw std::domain_error("EnvParams: delta must be in (0, 1]");
    if (!(epsilon >= 0.0 && epsilon < 1.0))
      throw std::domain_error("EnvParams: epsilon must be in [0, 1)");
  }
};

// Tolerance index of a T_k strategy: cooperate next round iff at least
// k of the other n-1 members cooperated last round. k = n is the
// unconditional defector, k = 0 the unconditional cooperator.
inline void check_strategy(int k, int n) {
  if (k < 0 || k > n)
    throw std::domain_error("StrategyId: k out of range [0, n]");
}

// Frequencies over strategy indices; nonnegative, summing to 1.
struct PopulationProfile {
  std::map<int, double> weights;

  void validate(int n) const {
    double sum = 0.0;
    for (const auto& [k, w] : weights) {
      check_strategy(k, n);
      if (w < 0.0) throw std::domain_error("PopulationProfile: negative frequency");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::domain_error("PopulationProfile: frequencies must sum to 1");
  }
};

void to_json(nlohmann::json& j, const GameParams& p);
void from_json(const nlohmann::json& j, GameParams& p);
void to_json(nlohmann::json& j, const EnvParams& e);
void from_json(const nlohmann::json& j, EnvParams& e);

// Binomial coefficient via the multiplicative recurrence; exact in
// double for n <= 64.
double binomial(int n, int k);

// One-shot payoff with j cooperators among the other n-1 members:
// b(j+1)/n - c for cooperation, b j/n for defection.
double oneshot_payoff(Action a, int j, const GameParams& params);

// psi(j, q, eps) = C(j,q) eps^q (1-eps)^(j-q): probability that q of j
// intending cooperators misplay.
double mistake_pmf(int j, int q, double epsilon);

// m(j, p) = C(n-1,j) p^j (1-p)^(n-1-j): probability of finding j
// incumbent-type co-members in a randomly drawn group.
double group_comp_pmf(int j, double p, int n);

// Expected one-shot payoff when intending cooperators (including the
// focal player, for action C) misplay with probability eps.
double oneshot_payoff_err(Action a, int j, const GameParams& params,
                          double epsilon);

// F^eps(C|n-1) / F^eps(D|n-1) = (n/(n-1))(1 - c/b); independent of eps.
double coop_defect_ratio(const GameParams& params);

}  // namespace pgg

#endif  // PGG_GAME_HPP
