#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bidsim/equilibrium.hpp"
#include "bidsim/market.hpp"
#include "bidsim/policies.hpp"
#include "bidsim/rng.hpp"

namespace bidsim {

/// The eight studied line-ups. The last bidder is the focal one; the other
/// bidders share the rival role.
enum class CaseId { A, B, C, D, E, F, G, H };

inline char case_letter(CaseId id) {
  return static_cast<char>('a' + static_cast<int>(id));
}

inline CaseId case_from_letter(char letter) {
  if (letter < 'a' || letter > 'h')
    throw std::invalid_argument("case must be one of a..h");
  return static_cast<CaseId>(letter - 'a');
}

inline const char* case_name(CaseId id) {
  switch (id) {
    case CaseId::A: return "best_response";
    case CaseId::B: return "trustful";
    case CaseId::C: return "trustful_vs_hedge";
    case CaseId::D: return "trustful_vs_random";
    case CaseId::E: return "hedge_vs_hedge";
    case CaseId::F: return "hedge_vs_random";
    case CaseId::G: return "random_vs_hedge";
    case CaseId::H: return "random_vs_random";
  }
  return "?";
}

/// Per-bidder behavior within a case. BestResponse replays the equilibrium
/// action computed once up front; the other three act round by round.
enum class CasePolicy { BestResponse, Trustful, Random, Hedge };

inline const char* policy_name(CasePolicy p) {
  switch (p) {
    case CasePolicy::BestResponse: return "best_response";
    case CasePolicy::Trustful: return "trustful";
    case CasePolicy::Random: return "random";
    case CasePolicy::Hedge: return "hedge";
  }
  return "?";
}

struct CaseSpec {
  CaseId id = CaseId::B;
  std::vector<CasePolicy> policies;

  static CaseSpec make(CaseId id, int num_bidders) {
    CaseSpec spec;
    spec.id = id;
    CasePolicy rivals, focal;
    switch (id) {
      case CaseId::A: rivals = focal = CasePolicy::BestResponse; break;
      case CaseId::B: rivals = focal = CasePolicy::Trustful; break;
      case CaseId::C: rivals = CasePolicy::Trustful; focal = CasePolicy::Hedge; break;
      case CaseId::D: rivals = CasePolicy::Trustful; focal = CasePolicy::Random; break;
      case CaseId::E: rivals = focal = CasePolicy::Hedge; break;
      case CaseId::F: rivals = CasePolicy::Hedge; focal = CasePolicy::Random; break;
      case CaseId::G: rivals = CasePolicy::Random; focal = CasePolicy::Hedge; break;
      case CaseId::H: rivals = focal = CasePolicy::Random; break;
    }
    spec.policies.assign(num_bidders, rivals);
    spec.policies.back() = focal;
    return spec;
  }
};

struct ExperimentConfig {
  CaseId case_id = CaseId::B;
  int rounds = 200;
  int runs = 15;
  std::uint64_t base_seed = 0;
  std::optional<double> eta_override;            // applies to every Hedge bidder
  DiagonalizationOptions diagonalization;        // used by case a
  int jobs = 1;
  std::optional<std::vector<double>> bounds;     // reuse precomputed utility bounds
};

/// Everything observable about one auction round.
struct RoundRecord {
  int run = 0;
  int round = 0;
  BidProfile profile;
  double price = 0.0;
  double social_cost = 0.0;
  std::vector<double> allocations;
  std::vector<double> payments;
  std::vector<double> utilities;
  // One vector per bidder; empty unless the bidder learns (Hedge).
  std::vector<std::vector<double>> counterfactuals;
};

struct RunResult {
  std::uint64_t run_seed = 0;
  std::vector<RoundRecord> rounds;
  std::vector<HedgeState> final_states;  // weights empty for non-Hedge bidders
};

struct CaseResult {
  CaseId case_id = CaseId::B;
  std::vector<CasePolicy> policies;
  std::vector<double> bounds;  // utility normalization bound per bidder
  std::vector<double> etas;    // 0 for non-Hedge bidders
  std::optional<DiagonalizationReport> equilibrium;  // present for case a
  std::vector<RunResult> runs;
};

/// Case a needs a Nash profile to replay; raised when the diagonalization
/// does not reach one.
class EquilibriumNotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RegretSeries {
  std::vector<double> cumulative;  // R_t [EUR]
  std::vector<double> average;     // R_t / t
};

struct AggregateSeries {
  std::vector<double> mean;
  std::vector<double> stddev;  // sample standard deviation, 0 for one run
};

namespace detail {

template <typename Fn>
void parallel_runs(int runs, int jobs, Fn&& body) {
  jobs = std::min(std::max(jobs, 1), std::max(runs, 1));
  if (jobs <= 1) {
    for (int r = 0; r < runs; ++r) body(r);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= runs) return;
        try {
          body(r);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

inline RunResult simulate_run(const MarketInstance& instance,
                              const CaseSpec& spec,
                              const BidProfile& equilibrium_profile,
                              const std::vector<double>& bounds,
                              const std::vector<double>& etas, int rounds,
                              std::uint64_t base_seed, int run_index) {
  const int n = instance.size();
  RunResult result;
  result.run_seed = hash_combine(base_seed, static_cast<std::uint64_t>(run_index));
  result.rounds.reserve(rounds);

  std::vector<RngStream> streams;
  streams.reserve(n);
  std::vector<HedgeState> states(n);
  for (int b = 0; b < n; ++b) {
    streams.emplace_back(hash_combine(result.run_seed, static_cast<std::uint64_t>(b)));
    if (spec.policies[b] == CasePolicy::Hedge)
      states[b] = HedgeState::uniform(instance.bidders[b].num_actions(), etas[b]);
  }

  BidProfile profile(n, 0);
  for (int t = 0; t < rounds; ++t) {
    for (int b = 0; b < n; ++b) {
      switch (spec.policies[b]) {
        case CasePolicy::BestResponse:
          profile[b] = equilibrium_profile[b];
          break;
        case CasePolicy::Trustful:
          profile[b] = 0;
          break;
        case CasePolicy::Random:
          profile[b] = sample_uniform_action(instance.bidders[b].num_actions(),
                                             streams[b]);
          break;
        case CasePolicy::Hedge:
          profile[b] = sample_action(states[b], streams[b]);
          break;
      }
    }
    const ClearingResult outcome = clear_market(instance, profile);

    RoundRecord record;
    record.run = run_index;
    record.round = t;
    record.profile = profile;
    record.price = outcome.price;
    record.social_cost = outcome.social_cost;
    record.allocations = outcome.allocations;
    record.payments = outcome.payments;
    record.utilities = outcome.utilities;
    record.counterfactuals.resize(n);
    for (int b = 0; b < n; ++b) {
      if (spec.policies[b] != CasePolicy::Hedge) continue;
      record.counterfactuals[b] = counterfactual_utilities(instance, profile, b);
      const auto normalized =
          normalize_utilities(record.counterfactuals[b], bounds[b]);
      states[b] = hedge_update(std::move(states[b]), normalized);
    }
    result.rounds.push_back(std::move(record));
  }
  result.final_states = std::move(states);
  return result;
}

}  // namespace detail

/// Runs R independent seeded runs of T auction rounds under one case's
/// policy line-up. Runs may execute on parallel workers; results depend only
/// on (instance, case, T, R, seed).
inline CaseResult run_case(const MarketInstance& instance,
                           const ExperimentConfig& config) {
  instance.validate();
  if (config.rounds < 1 || config.runs < 1)
    throw std::invalid_argument("rounds and runs must both be >= 1");

  const int n = instance.size();
  const CaseSpec spec = CaseSpec::make(config.case_id, n);

  CaseResult result;
  result.case_id = config.case_id;
  result.policies = spec.policies;

  BidProfile equilibrium_profile(n, 0);
  if (config.case_id == CaseId::A) {
    DiagonalizationReport report = diagonalize(instance, config.diagonalization);
    if (!report.converged)
      throw EquilibriumNotConverged(
          "diagonalization did not converge within " +
          std::to_string(config.diagonalization.max_iterations) + " sweeps");
    equilibrium_profile = report.final_profile;
    result.equilibrium = std::move(report);
  }

  bool any_hedge = false;
  for (CasePolicy p : spec.policies) any_hedge |= (p == CasePolicy::Hedge);

  result.bounds = config.bounds.value_or(
      any_hedge ? utility_bounds(instance) : std::vector<double>(n, 0.0));
  result.etas.assign(n, 0.0);
  for (int b = 0; b < n; ++b)
    if (spec.policies[b] == CasePolicy::Hedge)
      result.etas[b] = config.eta_override.value_or(
          hedge_eta(instance.bidders[b].num_actions(), config.rounds));

  result.runs.resize(config.runs);
  detail::parallel_runs(config.runs, config.jobs, [&](int r) {
    result.runs[r] = detail::simulate_run(instance, spec, equilibrium_profile,
                                          result.bounds, result.etas,
                                          config.rounds, config.base_seed, r);
  });
  return result;
}

/// Hindsight regret against the best fixed action, recomputed at every
/// prefix. Counterfactual vectors missing from the records (non-learning
/// bidders) are rebuilt on demand from the stored profiles.
inline RegretSeries regret_of(const MarketInstance& instance,
                              const std::vector<RoundRecord>& rounds,
                              int bidder) {
  RegretSeries series;
  if (rounds.empty()) return series;
  const int k = instance.bidders[bidder].num_actions();
  std::vector<double> cumulative_by_action(k, 0.0);
  double realized = 0.0;
  series.cumulative.reserve(rounds.size());
  series.average.reserve(rounds.size());
  for (std::size_t t = 0; t < rounds.size(); ++t) {
    const auto& record = rounds[t];
    const std::vector<double>& counterfactual =
        record.counterfactuals[bidder].empty()
            ? counterfactual_utilities(instance, record.profile, bidder)
            : record.counterfactuals[bidder];
    for (int a = 0; a < k; ++a) cumulative_by_action[a] += counterfactual[a];
    realized += record.utilities[bidder];
    double best_fixed = cumulative_by_action[0];
    for (int a = 1; a < k; ++a)
      best_fixed = std::max(best_fixed, cumulative_by_action[a]);
    const double regret = best_fixed - realized;
    series.cumulative.push_back(regret);
    series.average.push_back(regret / static_cast<double>(t + 1));
  }
  return series;
}

/// Per-index sample mean and standard deviation across runs (denominator
/// R - 1; a single run aggregates to zero spread).
inline AggregateSeries aggregate(
    const std::vector<std::vector<double>>& series_per_run) {
  if (series_per_run.empty())
    throw std::invalid_argument("aggregate needs at least one run");
  const std::size_t length = series_per_run.front().size();
  for (const auto& s : series_per_run)
    if (s.size() != length)
      throw std::invalid_argument("aggregate needs equal-length series");
  const double runs = static_cast<double>(series_per_run.size());

  AggregateSeries out;
  out.mean.assign(length, 0.0);
  out.stddev.assign(length, 0.0);
  for (std::size_t t = 0; t < length; ++t) {
    bool identical = true;
    for (const auto& s : series_per_run)
      identical &= (s[t] == series_per_run.front()[t]);
    if (identical) {  // static cases aggregate to exactly zero spread
      out.mean[t] = series_per_run.front()[t];
      continue;
    }
    double sum = 0.0;
    for (const auto& s : series_per_run) sum += s[t];
    const double mean = sum / runs;
    out.mean[t] = mean;
    double squares = 0.0;
    for (const auto& s : series_per_run)
      squares += (s[t] - mean) * (s[t] - mean);
    out.stddev[t] = std::sqrt(squares / (runs - 1.0));
  }
  return out;
}

/// Convenience extraction of one scalar series per run.
template <typename Extract>
std::vector<std::vector<double>> collect_series(const CaseResult& result,
                                                Extract&& extract) {
  std::vector<std::vector<double>> series;
  series.reserve(result.runs.size());
  for (const auto& run : result.runs) {
    std::vector<double> s;
    s.reserve(run.rounds.size());
    for (const auto& record : run.rounds) s.push_back(extract(record));
    series.push_back(std::move(s));
  }
  return series;
}

/// One row of the cross-case comparison table.
struct CaseSummary {
  CaseId case_id = CaseId::B;
  double social_cost_mean = 0.0;      // final round, across runs
  double social_cost_stddev = 0.0;
  double price_mean = 0.0;            // final round, across runs
  double focal_payoff_mean = 0.0;     // focal bidder, final round
  double focal_average_regret = 0.0;  // focal bidder, final round
};

inline CaseSummary summarize_case(const MarketInstance& instance,
                                  const CaseResult& result) {
  const int focal = instance.size() - 1;
  CaseSummary summary;
  summary.case_id = result.case_id;

  const auto social = aggregate(collect_series(
      result, [](const RoundRecord& r) { return r.social_cost; }));
  const auto price = aggregate(
      collect_series(result, [](const RoundRecord& r) { return r.price; }));
  const auto payoff = aggregate(collect_series(
      result, [&](const RoundRecord& r) { return r.utilities[focal]; }));

  std::vector<std::vector<double>> regret_runs;
  regret_runs.reserve(result.runs.size());
  for (const auto& run : result.runs)
    regret_runs.push_back(regret_of(instance, run.rounds, focal).average);
  const auto regret = aggregate(regret_runs);

  summary.social_cost_mean = social.mean.back();
  summary.social_cost_stddev = social.stddev.back();
  summary.price_mean = price.mean.back();
  summary.focal_payoff_mean = payoff.mean.back();
  summary.focal_average_regret = regret.mean.back();
  return summary;
}

/// Runs all eight cases with a shared instance and seed scheme. Results come
/// back in case order a..h; the summary table helper sorts by social cost.
inline std::vector<CaseResult> run_all_cases(const MarketInstance& instance,
                                             ExperimentConfig config) {
  instance.validate();
  if (!config.bounds) config.bounds = utility_bounds(instance);
  std::vector<CaseResult> results;
  results.reserve(8);
  for (int c = 0; c < 8; ++c) {
    config.case_id = static_cast<CaseId>(c);
    results.push_back(run_case(instance, config));
  }
  return results;
}

inline std::vector<CaseSummary> summary_table(
    const MarketInstance& instance, const std::vector<CaseResult>& results) {
  std::vector<CaseSummary> table;
  table.reserve(results.size());
  for (const auto& result : results)
    table.push_back(summarize_case(instance, result));
  std::sort(table.begin(), table.end(),
            [](const CaseSummary& a, const CaseSummary& b) {
              return a.social_cost_mean < b.social_cost_mean;
            });
  return table;
}

}  // namespace bidsim
