#ifndef PGG_ANALYTIC_HPP
#define PGG_ANALYTIC_HPP

#include <utility>

#include "pgg/game.hpp"

// Closed-form repeated-game values for a focal player inside an
// (almost) homogeneous group, the stability discriminant Delta(eps; k)
// and its D1 + D2 decomposition. All functions are pure.
namespace pgg {

// `paper` evaluates the reduced closed forms (group breakdown is
// absorbing, the focal player's own mistake enters only where the
// formulas include it). `exact` evaluates literal per-player
// observation semantics on the full intention-state chain; it is
// available for n <= 6 only.
enum class PayoffMode { paper, exact };

// A focal player with strategy focal_k inside a group whose n-1
// co-members all play T_incumbent_k.
struct FocalContext {
  int incumbent_k = 0;
  int focal_k = 0;
  PayoffMode mode = PayoffMode::paper;
};

struct DiscriminantInputs {
  double epsilon = 0.0;
  int k = 0;
  double delta = 0.0;
  int n = 0;

  void validate() const {
    if (n < 2 || n > kMaxGroupSize)
      throw std::domain_error("DiscriminantInputs: n out of range");
    if (k <= 0 || k >= n)
      throw std::domain_error("DiscriminantInputs: requires 0 < k < n");
    if (!(epsilon > 0.0 && epsilon < 1.0))
      throw std::domain_error("DiscriminantInputs: epsilon must be in (0, 1)");
    if (!(delta > 0.0 && delta <= 1.0))
      throw std::domain_error("DiscriminantInputs: delta must be in (0, 1]");
  }
};

// Error-free repeated-game value V(T_focal | j) with j incumbent-type
// co-members. For focal_k < n the branch is taken on j vs focal_k; for
// the unconditional defector it is taken on j vs incumbent_k. The
// retaliation continuation value is F(D|0) = 0. Requires delta < 1.
double v_errorfree(int focal_k, int incumbent_k, int j,
                   const GameParams& params, double delta);

// Error-free expected payoff at mutant share mu: sum over j of
// V(focal | j) m(j, 1 - mu), j counting incumbent-type co-members.
double w_errorfree(int focal_k, int incumbent_k, double mu,
                   const GameParams& params, double delta);

// Repeated-game value with mistakes, dispatching on (incumbent_k,
// focal_k). Limit-safe: delta = 1 is accepted when epsilon > 0 keeps
// the closed form finite. epsilon = 0 degenerates to the error-free
// value (delta < 1 required there).
double v_err(const FocalContext& ctx, const GameParams& params,
             const EnvParams& env);

// Delta(eps; k) = delta(1-eps)psi(n-1,n-k-1,eps)
//                 / (1 - delta sum_{q=0}^{n-k-2} psi(n-1,q,eps)).
// For k = n-1 the empty sum gives delta(1-eps)^n.
double delta_ratio(const DiscriminantInputs& inp);

// Closed form of Delta at the delta -> 1 limit:
// (1-eps) C(n-1,n-k-1) / sum_{q=0}^{k} C(n-1,n-k-1+q) (eps/(1-eps))^q.
// Strictly decreasing on (0, 1).
double delta_ratio_limit(double epsilon, int k, int n);

// Delta = delta / (D1 + D2) with
//   D1 = (1-delta)/C(n-1,n-k-1) eps^(-n+k+1) (1-eps)^(-k-1)
//   D2 = delta sum_{q=0}^{k} [C(n-1,n-k-1+q)/C(n-1,n-k-1)]
//        eps^q (1-eps)^(-q-1).
std::pair<double, double> d_decomposition(const DiscriminantInputs& inp);

}  // namespace pgg

#endif  // PGG_ANALYTIC_HPP
