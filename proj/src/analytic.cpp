#include "pgg/analytic.hpp"

#include <bit>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace pgg {

namespace {

// Probability that full cooperation among n-1 incumbents of hardness k
// (plus a cooperating focal) survives one round: mistakes among the
// others stay within tolerance, with the focal's own mistake counted
// only at the boundary q = n-k-1.
// complement is 1 - stay, summed directly over the breakdown events so
// the geometric-series denominators below stay accurate when stay -> 1.
double stay_complement(int n, int k, double eps) {
  double s = eps * mistake_pmf(n - 1, n - k - 1, eps);
  for (int q = n - k; q <= n - 1; ++q) s += mistake_pmf(n - 1, q, eps);
  return s;
}

// Tolerance sum for an overt defector in a T_k group: the group keeps
// cooperating while mistakes plus the defection stay within tolerance.
// Returned as the complement 1 - tolerate, again a direct tail sum.
double tolerate_complement(int n, int k, double eps) {
  double s = 0.0;
  for (int q = n - k - 1; q <= n - 1; ++q) s += mistake_pmf(n - 1, q, eps);
  return s;
}

// 1 - delta * S for S given via its complement 1 - S.
double series_denominator(double delta, double complement) {
  return (1.0 - delta) + delta * complement;
}

double check_denominator(double den) {
  if (den <= 0.0)
    throw std::runtime_error("v_err: divergent denominator (<= 0)");
  return den;
}

// Literal per-player observation semantics evaluated on the full
// intention-state Markov chain (2^n states); n <= 6 only.
double v_exact(const FocalContext& ctx, const GameParams& params,
               const EnvParams& env) {
  const int n = params.n;
  if (n > 6)
    throw std::domain_error("v_err: exact mode supports n <= 6 only");
  if (env.delta >= 1.0)
    throw std::runtime_error("v_err: exact mode requires delta < 1");
  const double eps = env.epsilon;
  std::vector<int> ks(n, ctx.incumbent_k);
  ks[0] = ctx.focal_k;

  const int num_states = 1 << n;
  Eigen::MatrixXd transition = Eigen::MatrixXd::Zero(num_states, num_states);
  Eigen::VectorXd reward = Eigen::VectorXd::Zero(num_states);

  for (int s = 0; s < num_states; ++s) {
    // Realized action profiles are submasks r of the intention mask s.
    int r = s;
    while (true) {
      const int flips = std::popcount(unsigned(s)) - std::popcount(unsigned(r));
      const double p =
          std::pow(eps, flips) * std::pow(1.0 - eps, std::popcount(unsigned(r)));
      const int coop_total = std::popcount(unsigned(r));
      reward(s) += p * (params.b * coop_total / n - params.c * ((r >> 0) & 1));
      int next = 0;
      for (int i = 0; i < n; ++i) {
        if (ks[i] >= n) continue;
        const int others = coop_total - ((r >> i) & 1);
        if (others >= ks[i]) next |= 1 << i;
      }
      transition(s, next) += p;
      if (r == 0) break;
      r = (r - 1) & s;
    }
  }

  Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(num_states, num_states) - env.delta * transition;
  Eigen::VectorXd value = system.partialPivLu().solve(reward);

  int initial = 0;
  for (int i = 0; i < n; ++i)
    if (ks[i] < n) initial |= 1 << i;
  return value(initial);
}

}  // namespace

double v_errorfree(int focal_k, int incumbent_k, int j,
                   const GameParams& params, double delta) {
  params.validate();
  check_strategy(focal_k, params.n);
  check_strategy(incumbent_k, params.n);
  if (j < 0 || j > params.n - 1)
    throw std::domain_error("v_errorfree: j out of [0, n-1]");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::runtime_error("v_errorfree: requires delta in (0, 1)");
  // F(D|0) = 0, so the post-retaliation continuation vanishes.
  if (focal_k < params.n) {
    const double fc = oneshot_payoff(Action::Cooperate, j, params);
    if (j >= focal_k) return fc / (1.0 - delta);
    return fc;
  }
  const double fd = oneshot_payoff(Action::Defect, j, params);
  if (j > incumbent_k) return fd / (1.0 - delta);
  return fd;
}

double w_errorfree(int focal_k, int incumbent_k, double mu,
                   const GameParams& params, double delta) {
  if (!(mu >= 0.0 && mu < 1.0))
    throw std::domain_error("w_errorfree: mu out of [0, 1)");
  const double p = 1.0 - mu;
  double w = 0.0;
  for (int j = 0; j <= params.n - 1; ++j) {
    const double m = group_comp_pmf(j, p, params.n);
    if (m == 0.0) continue;
    w += v_errorfree(focal_k, incumbent_k, j, params, delta) * m;
  }
  return w;
}

double v_err(const FocalContext& ctx, const GameParams& params,
             const EnvParams& env) {
  params.validate();
  env.validate();
  const int n = params.n;
  const int k = ctx.incumbent_k;
  const int f = ctx.focal_k;
  check_strategy(f, n);
  if (k < 0 || k > n - 1)
    throw std::domain_error("v_err: incumbents must be conditional cooperators");

  if (ctx.mode == PayoffMode::exact) return v_exact(ctx, params, env);

  const double eps = env.epsilon;
  const double delta = env.delta;
  if (eps == 0.0) return v_errorfree(f, k, n - 1, params, delta);

  const double fc = oneshot_payoff_err(Action::Cooperate, n - 1, params, eps);
  const double fd = oneshot_payoff_err(Action::Defect, n - 1, params, eps);

  if (f == n) {
    const double den = check_denominator(
        series_denominator(delta, tolerate_complement(n, k, eps)));
    return fd / den;
  }
  if (f == k) {
    const double den = check_denominator(
        series_denominator(delta, stay_complement(n, k, eps)));
    return fc / den;
  }
  if (f < k) {
    // The softer mutant outlasts the incumbents' withdrawal by exactly
    // one solitary-cooperation round worth delta(1-eps)(b/n - c).
    double p_solo = 0.0;
    if (k < n - 1) p_solo += eps * mistake_pmf(n - 1, n - k - 1, eps);
    for (int q = n - k; q <= n - f - 1; ++q) p_solo += mistake_pmf(n - 1, q, eps);
    const double num =
        fc + delta * p_solo * (1.0 - eps) * (params.b / n - params.c);
    const double den = check_denominator(
        series_denominator(delta, stay_complement(n, k, eps)));
    return num / den;
  }
  // k < f < n: the harder mutant withdraws first and thereafter earns
  // the overt defector's value against the still-tolerant incumbents.
  const double v_def = fd / check_denominator(series_denominator(
                                delta, tolerate_complement(n, k, eps)));
  double leave_f = 0.0;  // complement of the mutant's stay sum
  for (int q = n - f; q <= n - 1; ++q) leave_f += mistake_pmf(n - 1, q, eps);
  double mid = 0.0;
  for (int q = n - f; q <= n - k - 2; ++q) mid += mistake_pmf(n - 1, q, eps);
  const double den = check_denominator(series_denominator(delta, leave_f));
  return (fc + delta * mid * v_def) / den;
}

double delta_ratio(const DiscriminantInputs& inp) {
  inp.validate();
  const double eps = inp.epsilon;
  const double den =
      series_denominator(inp.delta, tolerate_complement(inp.n, inp.k, eps));
  if (den <= 0.0)
    throw std::runtime_error("delta_ratio: divergent denominator");
  return inp.delta * (1.0 - eps) *
         mistake_pmf(inp.n - 1, inp.n - inp.k - 1, eps) / den;
}

double delta_ratio_limit(double epsilon, int k, int n) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::domain_error("delta_ratio_limit: epsilon must be in (0, 1)");
  if (k <= 0 || k >= n)
    throw std::domain_error("delta_ratio_limit: requires 0 < k < n");
  const double odds = epsilon / (1.0 - epsilon);
  double den = 0.0;
  double pow_odds = 1.0;
  for (int q = 0; q <= k; ++q) {
    den += binomial(n - 1, n - k - 1 + q) * pow_odds;
    pow_odds *= odds;
  }
  return (1.0 - epsilon) * binomial(n - 1, n - k - 1) / den;
}

std::pair<double, double> d_decomposition(const DiscriminantInputs& inp) {
  inp.validate();
  const double eps = inp.epsilon;
  const double base = binomial(inp.n - 1, inp.n - inp.k - 1);
  const double d1 = (1.0 - inp.delta) / base *
                    std::pow(eps, -(inp.n - inp.k - 1)) *
                    std::pow(1.0 - eps, -(inp.k + 1));
  double d2 = 0.0;
  for (int q = 0; q <= inp.k; ++q) {
    d2 += binomial(inp.n - 1, inp.n - inp.k - 1 + q) / base *
          std::pow(eps, q) * std::pow(1.0 - eps, -(q + 1));
  }
  d2 *= inp.delta;
  return {d1, d2};
}

}  // namespace pgg
