#include "pgg/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <future>
#include <limits>
#include <numeric>
#include <thread>

#include "pgg/rng.hpp"

namespace pgg {

namespace {

bool coin(Rng& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

int binomial_draw(Rng& rng, int trials, double p) {
  if (p <= 0.0 || trials == 0) return 0;
  return std::binomial_distribution<int>(trials, p)(rng);
}

// One episode among arbitrary strategies; shared by run_episode and
// the evolve loop. Appends per-seat totals into `payoffs`.
int play_episode(const std::vector<int>& members, const int* index,
                 const GameParams& params, const EnvParams& env,
                 Semantics semantics, Rng& rng, std::vector<double>& payoffs) {
  const int n = params.n;
  const double eps = env.epsilon;
  std::vector<char> intend(n), realized(n);
  for (int i = 0; i < n; ++i) intend[i] = members[index ? index[i] : i] < n;

  int rounds = 0;
  while (true) {
    ++rounds;
    int coop_total = 0;
    bool anyone_cooperates = false;
    for (int i = 0; i < n; ++i) {
      realized[i] = intend[i] && !(eps > 0.0 && coin(rng, eps));
      coop_total += realized[i];
    }
    if (coop_total > 0) {
      const double share = params.b * coop_total / n;
      for (int i = 0; i < n; ++i)
        payoffs[index ? index[i] : i] += share - (realized[i] ? params.c : 0.0);
    }
    for (int i = 0; i < n; ++i) {
      const int k = members[index ? index[i] : i];
      if (k >= n) {
        intend[i] = false;
        continue;
      }
      const int observed = semantics == Semantics::literal
                               ? coop_total - realized[i]
                               : coop_total - 1;  // shared signal vs own k
      // Shared-signal rule: cooperate iff the group-wide count reaches
      // k+1, i.e. coop_total - 1 >= k.
      intend[i] = observed >= k;
      anyone_cooperates |= intend[i];
    }
    if (!coin(rng, env.delta)) break;
    if (!anyone_cooperates) {
      // All-defection is absorbing here (every k >= 1); only the
      // episode length remains random.
      while (coin(rng, env.delta)) ++rounds;
      ++rounds;
      break;
    }
  }
  return rounds;
}

// Episode law matching the closed-form case analysis exactly: a focal
// T_f against n-1 T_k incumbents, with the focal's own mistake
// entering transitions only where the closed forms include it.
double sample_paper_value(int incumbent_k, int focal_k,
                          const GameParams& params, const EnvParams& env,
                          Rng& rng) {
  const int n = params.n;
  const int k = incumbent_k;
  const int f = focal_k;
  const double eps = env.epsilon;
  enum class State { Coop, Defect, Solo, Dead };
  State state = f == n ? State::Defect : State::Coop;
  double total = 0.0;

  while (true) {
    if (state == State::Coop) {
      const int q = binomial_draw(rng, n - 1, eps);
      const bool own_mistake = eps > 0.0 && coin(rng, eps);
      const int coop_total = (n - 1 - q) + (own_mistake ? 0 : 1);
      total += params.b * coop_total / n - (own_mistake ? 0.0 : params.c);
      const bool group_stays =
          q <= n - k - 2 || (q == n - k - 1 && !own_mistake);
      if (f >= k && f < n) {
        if (f == k) {
          state = group_stays ? State::Coop : State::Dead;
        } else if (q <= n - f - 1) {
          state = State::Coop;
        } else if (q <= n - k - 2) {
          state = State::Defect;
        } else {
          state = State::Dead;
        }
      } else {  // f < k: softer mutant, may cooperate once alone
        if (group_stays) state = State::Coop;
        else if (q >= 1 && q <= n - f - 1) state = State::Solo;
        else state = State::Dead;
      }
    } else if (state == State::Defect) {
      const int q = binomial_draw(rng, n - 1, eps);
      total += params.b * (n - 1 - q) / n;
      state = q <= n - k - 2 ? State::Defect : State::Dead;
    } else {  // Solo
      if (!(eps > 0.0 && coin(rng, eps))) total += params.b / n - params.c;
      state = State::Dead;
    }
    if (state == State::Dead) break;
    if (!coin(rng, env.delta)) break;
  }
  return total;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

int max_threads() {
  int cap = int(std::thread::hardware_concurrency());
  if (cap < 1) cap = 1;
  if (const char* env = std::getenv("PGG_EVO_THREADS")) {
    const int requested = std::atoi(env);
    if (requested >= 1) cap = std::min(cap, requested);
  }
  return cap;
}

EpisodeResult run_episode(const EpisodeConfig& cfg) {
  cfg.params.validate();
  cfg.env.validate();
  if (int(cfg.members.size()) != cfg.params.n)
    throw std::domain_error("run_episode: members.size() must equal n");
  for (int k : cfg.members) check_strategy(k, cfg.params.n);
  if (cfg.env.delta >= 1.0)
    throw std::domain_error("run_episode: requires delta < 1");

  Rng rng(derive_seed(cfg.seed, 0));
  EpisodeResult result;
  result.payoffs.assign(cfg.members.size(), 0.0);
  result.rounds = play_episode(cfg.members, nullptr, cfg.params, cfg.env,
                               cfg.semantics, rng, result.payoffs);
  return result;
}

Estimate estimate_v(int incumbent_k, int focal_k, const GameParams& params,
                    const EnvParams& env, int replications, Semantics semantics,
                    std::uint64_t seed) {
  params.validate();
  env.validate();
  check_strategy(focal_k, params.n);
  if (incumbent_k < 0 || incumbent_k > params.n - 1)
    throw std::domain_error("estimate_v: incumbent must be a conditional cooperator");
  if (replications < 1000)
    throw std::domain_error("estimate_v: requires replications >= 1000");
  if (env.delta >= 1.0)
    throw std::domain_error("estimate_v: requires delta < 1");

  std::vector<int> members(params.n, incumbent_k);
  members[0] = focal_k;

  const int workers = std::min(max_threads(), 8);
  const int block = (replications + workers - 1) / workers;
  std::vector<std::future<std::pair<double, double>>> futures;
  for (int w = 0; w < workers; ++w) {
    const int lo = w * block;
    const int hi = std::min(replications, lo + block);
    if (lo >= hi) break;
    futures.push_back(std::async(std::launch::async, [&, lo, hi] {
      double sum = 0.0, sum_sq = 0.0;
      std::vector<double> payoffs(params.n);
      for (int rep = lo; rep < hi; ++rep) {
        Rng rng(derive_seed(seed, std::uint64_t(rep) + 1));
        double v;
        if (semantics == Semantics::paper_absorbing) {
          v = sample_paper_value(incumbent_k, focal_k, params, env, rng);
        } else {
          std::fill(payoffs.begin(), payoffs.end(), 0.0);
          play_episode(members, nullptr, params, env, semantics, rng, payoffs);
          v = payoffs[0];
        }
        sum += v;
        sum_sq += v * v;
      }
      return std::make_pair(sum, sum_sq);
    }));
  }
  double sum = 0.0, sum_sq = 0.0;
  for (auto& f : futures) {  // fixed-order reduction
    auto [s, s2] = f.get();
    sum += s;
    sum_sq += s2;
  }
  Estimate est;
  est.replications = replications;
  est.mean = sum / replications;
  const double var =
      std::max(0.0, (sum_sq - sum * sum / replications) / (replications - 1));
  est.std_error = std::sqrt(var / replications);
  return est;
}

void SimConfig::validate() const {
  params.validate();
  env.validate();
  if (population < params.n || population % params.n != 0)
    throw std::domain_error("SimConfig: population must be a positive multiple of n");
  if (env.delta >= 1.0)
    throw std::domain_error("SimConfig: requires delta < 1");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0))
    throw std::domain_error("SimConfig: mutation_rate out of [0, 1]");
  if (selection_intensity < 0.0)
    throw std::domain_error("SimConfig: selection_intensity must be >= 0");
  if (generations < 1)
    throw std::domain_error("SimConfig: generations must be >= 1");
  if (episodes_per_generation < 1)
    throw std::domain_error("SimConfig: episodes_per_generation must be >= 1");
  initial.validate(params.n);
  if (initial.weights.empty())
    throw std::domain_error("SimConfig: initial profile is empty");
}

SimTrace evolve(const SimConfig& cfg) {
  cfg.validate();
  const int n = cfg.params.n;
  const int N = cfg.population;
  Rng rng(derive_seed(cfg.seed, 0x5151));

  // Largest-remainder seeding of the initial population.
  std::vector<int> strategies;
  strategies.reserve(N);
  {
    std::vector<std::pair<double, int>> remainders;
    int assigned = 0;
    for (const auto& [k, w] : cfg.initial.weights) {
      const int whole = int(w * N);
      for (int i = 0; i < whole; ++i) strategies.push_back(k);
      assigned += whole;
      remainders.push_back({w * N - whole, k});
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int i = 0; assigned < N; ++i, ++assigned)
      strategies.push_back(remainders[i % remainders.size()].second);
  }

  SimTrace trace;
  trace.n = n;
  trace.population = N;
  trace.generations.reserve(cfg.generations);

  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> payoffs(N);
  std::vector<int> fixated_before(n + 1, 0);
  bool takeover_noted = false;

  for (int gen = 0; gen < cfg.generations; ++gen) {
    std::fill(payoffs.begin(), payoffs.end(), 0.0);
    for (int e = 0; e < cfg.episodes_per_generation; ++e) {
      std::shuffle(order.begin(), order.end(), rng);  // exhaustive partition
      for (int g = 0; g < N / n; ++g)
        play_episode(strategies, order.data() + g * n, cfg.params, cfg.env,
                     cfg.semantics, rng, payoffs);
    }
    if (cfg.episodes_per_generation > 1)
      for (double& p : payoffs) p /= cfg.episodes_per_generation;

    GenerationRecord rec;
    rec.counts.assign(n + 1, 0);
    rec.mean_payoff.assign(n + 1,
                           std::numeric_limits<double>::quiet_NaN());
    std::vector<double> payoff_sum(n + 1, 0.0);
    for (int i = 0; i < N; ++i) {
      rec.counts[strategies[i]]++;
      payoff_sum[strategies[i]] += payoffs[i];
    }
    for (int k = 0; k <= n; ++k)
      if (rec.counts[k] > 0) rec.mean_payoff[k] = payoff_sum[k] / rec.counts[k];

    for (int k = 0; k <= n; ++k) {
      if (rec.counts[k] == N && !fixated_before[k]) {
        trace.events.push_back("generation " + std::to_string(gen) +
                               ": fixation of T_" + std::to_string(k));
      }
      fixated_before[k] = rec.counts[k] == N;
    }
    if (!takeover_noted && 2 * rec.counts[n] >= N) {
      trace.events.push_back("generation " + std::to_string(gen) +
                             ": defector takeover");
      takeover_noted = true;
    }
    trace.generations.push_back(std::move(rec));

    if (gen + 1 == cfg.generations) break;

    // Strategy updating, synchronous from the pre-update state.
    if (cfg.update == UpdateRule::imitation) {
      std::vector<int> next = strategies;
      std::uniform_int_distribution<int> pick(0, N - 1);
      for (int i = 0; i < N; ++i) {
        const int j = pick(rng);
        const double p =
            logistic(cfg.selection_intensity * (payoffs[j] - payoffs[i]));
        if (coin(rng, p)) next[i] = strategies[j];
      }
      strategies.swap(next);
    } else {  // moran: N birth-death steps per generation
      std::uniform_int_distribution<int> pick(0, N - 1);
      // Selection probabilities are held fixed at this generation's payoffs.
      std::vector<double> fitness(N);
      double fit_sum = 0.0;
      for (int i = 0; i < N; ++i) {
        fitness[i] = std::exp(cfg.selection_intensity * payoffs[i]);
        fit_sum += fitness[i];
      }
      for (int step = 0; step < N; ++step) {
        double target =
            std::uniform_real_distribution<double>(0.0, fit_sum)(rng);
        int parent = 0;
        for (; parent < N - 1; ++parent) {
          target -= fitness[parent];
          if (target <= 0.0) break;
        }
        strategies[pick(rng)] = strategies[parent];
      }
    }

    if (cfg.mutation_rate > 0.0) {
      const int hi = cfg.kernel == MutationKernel::uniform_all ? n : n - 1;
      std::uniform_int_distribution<int> pick_strategy(0, hi);
      for (int i = 0; i < N; ++i)
        if (coin(rng, cfg.mutation_rate)) strategies[i] = pick_strategy(rng);
    }
  }
  return trace;
}

void write_csv(const SimTrace& trace, std::ostream& os) {
  os << "generation,k,frequency,mean_payoff\n";
  char buf[96];
  for (size_t gen = 0; gen < trace.generations.size(); ++gen) {
    const auto& rec = trace.generations[gen];
    for (int k = 0; k <= trace.n; ++k) {
      const double freq = double(rec.counts[k]) / trace.population;
      std::snprintf(buf, sizeof buf, "%zu,%d,%.17g,%.17g\n", gen, k, freq,
                    rec.mean_payoff[k]);
      os << buf;
    }
  }
}

DriftSummary drift_experiment(const SimConfig& cfg, int trials) {
  if (trials < 30)
    throw std::domain_error("drift_experiment: requires trials >= 30");
  cfg.validate();
  if (cfg.env.epsilon <= 0.0)
    throw std::domain_error("drift_experiment: config epsilon must be > 0");

  struct Outcome {
    bool takeover_free = false, takeover_err = false;
    int gen_free = 0, gen_err = 0;
  };

  auto takeover_generation = [](const SimTrace& trace) -> int {
    for (size_t g = 0; g < trace.generations.size(); ++g)
      if (2 * trace.generations[g].counts[trace.n] >= trace.population)
        return int(g);
    return -1;
  };

  std::vector<Outcome> outcomes(trials);
  const int workers = std::min(max_threads(), 8);
  std::vector<std::future<void>> futures;
  std::atomic<int> next_trial{0};
  for (int w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, [&] {
      for (int t = next_trial.fetch_add(1); t < trials;
           t = next_trial.fetch_add(1)) {
        SimConfig arm = cfg;
        arm.seed = derive_seed(cfg.seed, std::uint64_t(t));
        SimConfig arm_free = arm;
        arm_free.env.epsilon = 0.0;
        const int g_err = takeover_generation(evolve(arm));
        const int g_free = takeover_generation(evolve(arm_free));
        outcomes[t] = {g_free >= 0, g_err >= 0, g_free, g_err};
      }
    }));
  }
  for (auto& f : futures) f.get();

  DriftSummary summary;
  summary.trials = trials;
  int free_count = 0, err_count = 0;
  double free_gen_sum = 0.0, err_gen_sum = 0.0;
  for (const auto& o : outcomes) {
    if (o.takeover_free) {
      ++free_count;
      free_gen_sum += o.gen_free;
    }
    if (o.takeover_err) {
      ++err_count;
      err_gen_sum += o.gen_err;
    }
    if (o.takeover_free && !o.takeover_err) ++summary.pairs_error_free_only;
    if (!o.takeover_free && o.takeover_err) ++summary.pairs_with_errors_only;
  }
  summary.takeover_fraction_error_free = double(free_count) / trials;
  summary.takeover_fraction_with_errors = double(err_count) / trials;
  summary.mean_takeover_generation_error_free =
      free_count ? free_gen_sum / free_count
                 : std::numeric_limits<double>::quiet_NaN();
  summary.mean_takeover_generation_with_errors =
      err_count ? err_gen_sum / err_count
                : std::numeric_limits<double>::quiet_NaN();

  // One-sided sign test on discordant pairs.
  const int m = summary.pairs_error_free_only + summary.pairs_with_errors_only;
  double p = 0.0;
  for (int x = summary.pairs_error_free_only; x <= m; ++x)
    p += binomial(m, x) * std::pow(0.5, m);
  summary.sign_test_p_value = m == 0 ? 1.0 : std::min(1.0, p);
  return summary;
}

namespace {

const char* to_string(UpdateRule r) {
  return r == UpdateRule::imitation ? "imitation" : "moran";
}
const char* to_string(MutationKernel k) {
  return k == MutationKernel::uniform_all ? "uniform" : "cooperators_only";
}
const char* to_string(Semantics s) {
  return s == Semantics::paper_absorbing ? "paper_absorbing" : "literal";
}

}  // namespace

void to_json(nlohmann::json& j, const SimConfig& cfg) {
  nlohmann::json initial = nlohmann::json::object();
  for (const auto& [k, w] : cfg.initial.weights)
    initial[std::to_string(k)] = w;
  j = nlohmann::json{{"population", cfg.population},
                     {"n", cfg.params.n},
                     {"b", cfg.params.b},
                     {"c", cfg.params.c},
                     {"delta", cfg.env.delta},
                     {"epsilon", cfg.env.epsilon},
                     {"update", to_string(cfg.update)},
                     {"selection_intensity", cfg.selection_intensity},
                     {"mutation_rate", cfg.mutation_rate},
                     {"mutation_kernel", to_string(cfg.kernel)},
                     {"generations", cfg.generations},
                     {"episodes_per_generation", cfg.episodes_per_generation},
                     {"seed", cfg.seed},
                     {"semantics", to_string(cfg.semantics)},
                     {"initial", initial}};
}

void from_json(const nlohmann::json& j, SimConfig& cfg) {
  static const std::vector<std::string> known = {
      "population", "n", "b", "c", "delta", "epsilon", "update",
      "selection_intensity", "mutation_rate", "mutation_kernel",
      "generations", "episodes_per_generation", "seed", "semantics",
      "initial"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::domain_error("SimConfig: unknown field '" + key + "'");

  j.at("population").get_to(cfg.population);
  j.at("n").get_to(cfg.params.n);
  j.at("b").get_to(cfg.params.b);
  j.at("c").get_to(cfg.params.c);
  j.at("delta").get_to(cfg.env.delta);
  j.at("epsilon").get_to(cfg.env.epsilon);
  j.at("generations").get_to(cfg.generations);
  if (j.contains("update")) {
    const std::string u = j.at("update");
    if (u == "imitation") cfg.update = UpdateRule::imitation;
    else if (u == "moran") cfg.update = UpdateRule::moran;
    else throw std::domain_error("SimConfig: unknown update rule '" + u + "'");
  }
  if (j.contains("selection_intensity"))
    j.at("selection_intensity").get_to(cfg.selection_intensity);
  if (j.contains("mutation_rate")) j.at("mutation_rate").get_to(cfg.mutation_rate);
  if (j.contains("mutation_kernel")) {
    const std::string k = j.at("mutation_kernel");
    if (k == "uniform") cfg.kernel = MutationKernel::uniform_all;
    else if (k == "cooperators_only") cfg.kernel = MutationKernel::cooperators_only;
    else throw std::domain_error("SimConfig: unknown mutation kernel '" + k + "'");
  }
  if (j.contains("episodes_per_generation"))
    j.at("episodes_per_generation").get_to(cfg.episodes_per_generation);
  if (j.contains("seed")) j.at("seed").get_to(cfg.seed);
  if (j.contains("semantics")) {
    const std::string s = j.at("semantics");
    if (s == "paper_absorbing") cfg.semantics = Semantics::paper_absorbing;
    else if (s == "literal") cfg.semantics = Semantics::literal;
    else throw std::domain_error("SimConfig: unknown semantics '" + s + "'");
  }
  cfg.initial.weights.clear();
  if (j.contains("initial")) {
    for (const auto& [key, value] : j.at("initial").items())
      cfg.initial.weights[std::stoi(key)] = value.get<double>();
  } else {
    cfg.initial.weights[cfg.params.n - 1] = 1.0;
  }
  cfg.validate();
}

void to_json(nlohmann::json& j, const DriftSummary& s) {
  j = nlohmann::json{
      {"trials", s.trials},
      {"takeover_fraction_error_free", s.takeover_fraction_error_free},
      {"takeover_fraction_with_errors", s.takeover_fraction_with_errors},
      {"mean_takeover_generation_error_free",
       s.mean_takeover_generation_error_free},
      {"mean_takeover_generation_with_errors",
       s.mean_takeover_generation_with_errors},
      {"pairs_error_free_only", s.pairs_error_free_only},
      {"pairs_with_errors_only", s.pairs_with_errors_only},
      {"sign_test_p_value", s.sign_test_p_value}};
}

}  // namespace pgg
