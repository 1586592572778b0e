#include "pgg/stability.hpp"

#include <algorithm>
#include <cmath>

namespace pgg {

namespace {

constexpr int kScanPoints = 1024;
constexpr double kGridLo = 1e-4;
constexpr double kGridHi = 1.0 - 1e-4;
constexpr double kRootTol = 1e-12;
constexpr int kMaxBisect = 200;

double discriminant_gap(double eps, int k, double delta, int n,
                        double threshold) {
  return delta_ratio({eps, k, delta, n}) - threshold;
}

double bisect_root(double lo, double hi, double g_lo, int k, double delta,
                   int n, double threshold) {
  for (int it = 0; it < kMaxBisect && hi - lo > kRootTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g_mid = discriminant_gap(mid, k, delta, n, threshold);
    if ((g_mid > 0.0) == (g_lo > 0.0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
  }
  if (hi - lo > 1e-9)
    throw std::runtime_error("ess_epsilon_band: bisection did not converge");
  return 0.5 * (lo + hi);
}

double d_sum(double eps, int k, double delta, int n) {
  auto [d1, d2] = d_decomposition({eps, k, delta, n});
  return d1 + d2;
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::EvolutionarilyStable: return "EvolutionarilyStable";
    case Verdict::NeutrallyStable: return "NeutrallyStable";
    case Verdict::Unstable: return "Unstable";
  }
  return "?";
}

StabilityVerdict classify(int k, const GameParams& params,
                          const EnvParams& env) {
  params.validate();
  env.validate();
  if (k < 1 || k > params.n - 1)
    throw std::domain_error("classify: requires 1 <= k <= n-1");

  StabilityVerdict result;
  result.k = k;

  double w_incumbent;
  if (env.epsilon == 0.0) {
    w_incumbent = w_errorfree(k, k, 0.0, params, env.delta);
  } else {
    w_incumbent = v_err({k, k}, params, env);
  }

  bool any_negative = false;
  bool any_tie = false;
  for (int inv = 0; inv <= params.n; ++inv) {
    if (inv == k) continue;
    double w_invader;
    if (env.epsilon == 0.0) {
      w_invader = w_errorfree(inv, k, 0.0, params, env.delta);
    } else {
      w_invader = v_err({k, inv}, params, env);
    }
    const double gap = w_incumbent - w_invader;
    result.witnesses.push_back({inv, gap});
    if (gap < 0.0) any_negative = true;
    if (gap == 0.0) any_tie = true;
  }
  result.verdict = any_negative ? Verdict::Unstable
                 : any_tie      ? Verdict::NeutrallyStable
                                : Verdict::EvolutionarilyStable;
  return result;
}

double min_delta_for_stability(const GameParams& params) {
  params.validate();
  const double share = params.b / params.n;
  return (params.c - share) / (params.b - share);
}

ThresholdBand ess_epsilon_band(int k, const GameParams& params, double delta) {
  params.validate();
  if (k < 1 || k > params.n - 1)
    throw std::domain_error("ess_epsilon_band: requires 1 <= k <= n-1");
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::domain_error("ess_epsilon_band: delta out of (0, 1]");

  const int n = params.n;
  const double threshold = 1.0 - coop_defect_ratio(params);
  ThresholdBand band;
  band.k = k;
  band.delta = delta;

  std::vector<double> grid(kScanPoints), g(kScanPoints);
  for (int i = 0; i < kScanPoints; ++i) {
    grid[i] = kGridLo + (kGridHi - kGridLo) * i / (kScanPoints - 1);
    g[i] = discriminant_gap(grid[i], k, delta, n, threshold);
  }

  int first_pos = -1, last_pos = -1;
  for (int i = 0; i < kScanPoints; ++i) {
    if (g[i] > 0.0) {
      if (first_pos < 0) first_pos = i;
      last_pos = i;
    }
  }
  if (first_pos < 0) return band;  // empty: Delta never clears the threshold

  band.empty = false;
  if (first_pos == 0) {
    // Positive already at the left grid edge; the edge is 0 iff the
    // sign holds down to the open endpoint.
    band.eps_lower =
        discriminant_gap(1e-12, k, delta, n, threshold) > 0.0
            ? 0.0
            : bisect_root(1e-12, grid[0], -1.0, k, delta, n, threshold);
  } else {
    band.eps_lower = bisect_root(grid[first_pos - 1], grid[first_pos],
                                 g[first_pos - 1], k, delta, n, threshold);
  }
  if (last_pos == kScanPoints - 1) {
    band.eps_upper = kGridHi;  // cannot happen for delta <= 1; kept defensive
  } else {
    band.eps_upper = bisect_root(grid[last_pos], grid[last_pos + 1],
                                 g[last_pos], k, delta, n, threshold);
  }
  return band;
}

std::optional<double> epsilon_star(int k, double delta, int n) {
  if (k < 1 || k > n - 1)
    throw std::domain_error("epsilon_star: requires 1 <= k <= n-1");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::domain_error("epsilon_star: delta out of (0, 1)");
  if (k == n - 1) return std::nullopt;  // infimum at eps = 0, no interior min

  // Golden-section on the strictly convex D1 + D2.
  constexpr double kInvPhi = 0.6180339887498949;
  double a = 1e-6, b = 1.0 - 1e-6;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = d_sum(x1, k, delta, n);
  double f2 = d_sum(x2, k, delta, n);
  for (int it = 0; it < 300 && b - a > 1e-11; ++it) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = d_sum(x1, k, delta, n);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = d_sum(x2, k, delta, n);
    }
  }
  if (b - a > 1e-8)
    throw std::runtime_error("epsilon_star: golden section did not converge");
  return 0.5 * (a + b);
}

BandOrderingReport band_ordering_report(const GameParams& params,
                                        double delta) {
  const int n = params.n;
  BandOrderingReport report;
  for (int k = n - 1; k >= 1; --k)
    report.bands.push_back(ess_epsilon_band(k, params, delta));

  report.upper_edges_ordered = true;
  report.lower_edges_ordered = true;
  const ThresholdBand* prev = nullptr;
  for (const auto& band : report.bands) {  // hardness decreasing
    if (band.empty) continue;
    if (prev) {
      if (!(band.eps_upper > prev->eps_upper))
        report.upper_edges_ordered = false;
      if (!(band.eps_lower > prev->eps_lower))
        report.lower_edges_ordered = false;
    }
    prev = &band;
  }
  if (prev == nullptr) {
    report.upper_edges_ordered = false;
    report.lower_edges_ordered = false;
  }

  // Consecutive Delta curves: pointwise dominance at delta = 1, a
  // single crossing on the descending branch of the harder curve below.
  report.single_crossing_ok = true;
  const int grid_points = 2048;
  for (int k = 1; k <= n - 2; ++k) {
    std::vector<double> lower(grid_points), upper(grid_points);
    for (int i = 0; i < grid_points; ++i) {
      const double eps =
          kGridLo + (kGridHi - kGridLo) * i / (grid_points - 1);
      lower[i] = delta_ratio({eps, k, delta, n});
      upper[i] = delta_ratio({eps, k + 1, delta, n});
    }
    int crossings = 0, cross_at = -1;
    for (int i = 1; i < grid_points; ++i) {
      const double d_prev = lower[i - 1] - upper[i - 1];
      const double d_here = lower[i] - upper[i];
      if ((d_prev > 0.0) != (d_here > 0.0)) {
        ++crossings;
        cross_at = i;
      }
    }
    if (delta == 1.0) {
      bool dominated = true;
      for (int i = 0; i < grid_points; ++i)
        if (!(lower[i] > upper[i])) dominated = false;
      if (!dominated || crossings != 0) report.single_crossing_ok = false;
    } else {
      const int peak = int(std::max_element(upper.begin(), upper.end()) -
                           upper.begin());
      if (crossings != 1 || cross_at <= peak)
        report.single_crossing_ok = false;
    }
  }
  return report;
}

SweepTable sweep_delta_curves(int n, const std::vector<double>& deltas,
                              const std::vector<int>& ks,
                              const std::vector<double>& epsilons,
                              const std::optional<GameParams>& params) {
  if (n < 2) throw std::domain_error("sweep_delta_curves: n out of range");
  for (size_t i = 1; i < epsilons.size(); ++i)
    if (!(epsilons[i] > epsilons[i - 1]))
      throw std::domain_error("sweep_delta_curves: epsilon grid not increasing");
  SweepTable table;
  table.n = n;
  table.deltas = deltas;
  table.ks = ks;
  table.epsilons = epsilons;
  if (params) table.threshold = 1.0 - coop_defect_ratio(*params);
  table.values.resize(deltas.size());
  for (size_t di = 0; di < deltas.size(); ++di) {
    table.values[di].resize(ks.size());
    for (size_t ki = 0; ki < ks.size(); ++ki) {
      table.values[di][ki].resize(epsilons.size());
      for (size_t ei = 0; ei < epsilons.size(); ++ei) {
        table.values[di][ki][ei] =
            delta_ratio({epsilons[ei], ks[ki], deltas[di], n});
      }
    }
  }
  return table;
}

void write_csv(const SweepTable& table, std::ostream& os) {
  os << "delta,k,epsilon,Delta,threshold\n";
  char buf[160];
  for (size_t di = 0; di < table.deltas.size(); ++di) {
    for (size_t ki = 0; ki < table.ks.size(); ++ki) {
      for (size_t ei = 0; ei < table.epsilons.size(); ++ei) {
        if (table.threshold) {
          std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%.17g,%.17g\n",
                        table.deltas[di], table.ks[ki], table.epsilons[ei],
                        table.values[di][ki][ei], *table.threshold);
        } else {
          std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%.17g,\n",
                        table.deltas[di], table.ks[ki], table.epsilons[ei],
                        table.values[di][ki][ei]);
        }
        os << buf;
      }
    }
  }
}

void to_json(nlohmann::json& j, const StabilityVerdict& v) {
  nlohmann::json witnesses = nlohmann::json::array();
  for (const auto& w : v.witnesses)
    witnesses.push_back({{"invader_k", w.invader_k}, {"gap", w.gap}});
  j = nlohmann::json{
      {"k", v.k}, {"verdict", to_string(v.verdict)}, {"witnesses", witnesses}};
}

void to_json(nlohmann::json& j, const ThresholdBand& b) {
  j = nlohmann::json{{"k", b.k},
                     {"eps_lower", b.eps_lower},
                     {"eps_upper", b.eps_upper},
                     {"delta", b.delta},
                     {"empty", b.empty}};
}

}  // namespace pgg
