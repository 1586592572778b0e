#include "pgg/game.hpp"

#include <cmath>

namespace pgg {

void to_json(nlohmann::json& j, const GameParams& p) {
  j = nlohmann::json{{"n", p.n}, {"b", p.b}, {"c", p.c}};
}

void from_json(const nlohmann::json& j, GameParams& p) {
  j.at("n").get_to(p.n);
  j.at("b").get_to(p.b);
  j.at("c").get_to(p.c);
  p.validate();
}

void to_json(nlohmann::json& j, const EnvParams& e) {
  j = nlohmann::json{{"delta", e.delta}, {"epsilon", e.epsilon}};
}

void from_json(const nlohmann::json& j, EnvParams& e) {
  j.at("delta").get_to(e.delta);
  j.at("epsilon").get_to(e.epsilon);
  e.validate();
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (k > n - k) k = n - k;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

double oneshot_payoff(Action a, int j, const GameParams& params) {
  params.validate();
  if (j < 0 || j > params.n - 1)
    throw std::domain_error("oneshot_payoff: j out of [0, n-1]");
  if (a == Action::Cooperate) return params.b * (j + 1) / params.n - params.c;
  return params.b * j / params.n;
}

double mistake_pmf(int j, int q, double epsilon) {
  if (j < 0 || q < 0 || q > j)
    throw std::domain_error("mistake_pmf: requires 0 <= q <= j");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::domain_error("mistake_pmf: epsilon out of [0, 1]");
  if (epsilon == 0.0) return q == 0 ? 1.0 : 0.0;
  if (epsilon == 1.0) return q == j ? 1.0 : 0.0;
  // Log-space path when the direct product underflows the binomial tail.
  if (epsilon < 1e-6 && j > 30) {
    double lg = std::lgamma(j + 1.0) - std::lgamma(q + 1.0) -
                std::lgamma(j - q + 1.0) + q * std::log(epsilon) +
                (j - q) * std::log1p(-epsilon);
    return std::exp(lg);
  }
  return binomial(j, q) * std::pow(epsilon, q) * std::pow(1.0 - epsilon, j - q);
}

double group_comp_pmf(int j, double p, int n) {
  if (n < 2 || j < 0 || j > n - 1)
    throw std::domain_error("group_comp_pmf: requires 0 <= j <= n-1");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("group_comp_pmf: p out of [0, 1]");
  return mistake_pmf(n - 1, j, p);
}

double oneshot_payoff_err(Action a, int j, const GameParams& params,
                          double epsilon) {
  params.validate();
  if (j < 0 || j > params.n - 1)
    throw std::domain_error("oneshot_payoff_err: j out of [0, n-1]");
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw std::domain_error("oneshot_payoff_err: epsilon out of [0, 1)");
  // Reduced forms of the expectation over the mistake distribution:
  // E[realized co-cooperators] = j(1-eps).
  double realized = params.b * j * (1.0 - epsilon) / params.n;
  if (a == Action::Defect) return realized;
  return realized + (1.0 - epsilon) * (params.b / params.n - params.c);
}

double coop_defect_ratio(const GameParams& params) {
  params.validate();
  return (double(params.n) / (params.n - 1)) * (1.0 - params.c / params.b);
}

}  // namespace pgg
