#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "bidsim/market.hpp"
#include "bidsim/rng.hpp"

namespace bidsim {

enum class PolicyKind { Trustful, Random, Hedge };

/// Probability weights of one exponential-weights learner over its own
/// action menu. Weights stay non-negative and sum to one after every update.
struct HedgeState {
  std::vector<double> weights;
  double eta = 0.0;
  int round = 0;

  static HedgeState uniform(int num_actions, double eta) {
    HedgeState state;
    state.weights.assign(num_actions, 1.0 / num_actions);
    state.eta = eta;
    return state;
  }
};

/// Learning rate sqrt(8 ln K / T), the horizon-tuned rate for exponential
/// weights. A single-action learner degenerates to rate 0.
inline double hedge_eta(int num_actions, double horizon) {
  if (num_actions <= 1) return 0.0;
  return std::sqrt(8.0 * std::log(static_cast<double>(num_actions)) / horizon);
}

/// Inverse-CDF sample over the weight vector; consumes exactly one uniform
/// draw so streams stay aligned across policies.
inline int sample_action(const HedgeState& state, RngStream& rng) {
  const double u = rng.next_uniform();
  double cum = 0.0;
  const int k = static_cast<int>(state.weights.size());
  for (int i = 0; i < k; ++i) {
    cum += state.weights[i];
    if (u < cum) return i;
  }
  return k - 1;
}

inline int sample_uniform_action(int num_actions, RngStream& rng) {
  const int idx = static_cast<int>(rng.next_uniform() * num_actions);
  return std::min(idx, num_actions - 1);
}

/// Re-solves the auction once per action of `learner`, rivals held at the
/// realized profile, and returns the learner's true-cost utility for each.
/// The entry at the realized action reproduces the realized utility exactly
/// because the clearing is deterministic.
inline std::vector<double> counterfactual_utilities(
    const MarketInstance& instance, const BidProfile& profile, int learner) {
  check_profile(instance, profile);
  const int k = instance.bidders[learner].num_actions();
  std::vector<double> utilities(k);
  BidProfile probe = profile;
  for (int action = 0; action < k; ++action) {
    probe[learner] = action;
    utilities[action] = clear_market(instance, probe).utilities[learner];
  }
  return utilities;
}

/// Maps utilities into [0, 1] losses' domain: u -> clamp(u / bound, 0, 1).
inline std::vector<double> normalize_utilities(std::span<const double> raw,
                                               double bound) {
  if (!(bound > 0.0))
    throw std::invalid_argument("utility normalization bound must be > 0");
  std::vector<double> scaled(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    scaled[i] = std::clamp(raw[i] / bound, 0.0, 1.0);
  return scaled;
}

/// Exponential-weights update w_i <- w_i exp(-eta (1 - u_i)), renormalized.
/// Utilities must already be normalized into [0, 1].
inline HedgeState hedge_update(HedgeState state,
                               std::span<const double> normalized) {
  if (normalized.size() != state.weights.size())
    throw std::invalid_argument("utility vector length does not match weights");
  double total = 0.0;
  for (std::size_t i = 0; i < state.weights.size(); ++i) {
    state.weights[i] *= std::exp(-state.eta * (1.0 - normalized[i]));
    total += state.weights[i];
  }
  for (double& w : state.weights) w /= total;
  ++state.round;
  return state;
}

/// One decision of a policy. Trustful plays the true cost (index 0); Random
/// draws uniformly; Hedge samples from its weights. Trustful consumes no
/// randomness.
inline int policy_step(PolicyKind kind, const HedgeState* state,
                       int num_actions, RngStream& rng) {
  switch (kind) {
    case PolicyKind::Trustful:
      return 0;
    case PolicyKind::Random:
      return sample_uniform_action(num_actions, rng);
    case PolicyKind::Hedge:
      return sample_action(*state, rng);
  }
  return 0;
}

/// A-priori utility ceiling from the coefficient ranges alone: the price can
/// never exceed the steepest marginal curve evaluated at total demand.
/// Sound but very loose; used only when exact enumeration is out of reach.
inline double closed_form_utility_bound(const MarketInstance& instance,
                                        int bidder) {
  double c_max = 0.0, d_max = 0.0;
  for (const auto& b : instance.bidders)
    for (const auto& a : b.actions) {
      c_max = std::max(c_max, a.c);
      d_max = std::max(d_max, a.d);
    }
  const double price_cap = c_max * instance.demand + d_max;
  return price_cap * std::min(instance.bidders[bidder].capacity,
                              instance.demand);
}

/// Per-bidder maximum achievable utility over every joint action profile,
/// found by exhaustive enumeration. Depends only on the public action menus,
/// so it is fixed before any play is observed. Falls back to the closed-form
/// ceiling when the joint grid exceeds `enumeration_limit` profiles.
inline std::vector<double> utility_bounds(
    const MarketInstance& instance,
    std::uint64_t enumeration_limit = (1ull << 22)) {
  const int n = instance.size();
  std::vector<double> bounds(n, 0.0);

  std::uint64_t grid = 1;
  bool overflow = false;
  for (const auto& b : instance.bidders) {
    grid *= static_cast<std::uint64_t>(b.num_actions());
    if (grid > enumeration_limit) {
      overflow = true;
      break;
    }
  }
  if (overflow) {
    for (int i = 0; i < n; ++i)
      bounds[i] = closed_form_utility_bound(instance, i);
    return bounds;
  }

  BidProfile profile(n, 0);
  while (true) {
    const ClearingResult round = clear_market(instance, profile);
    for (int i = 0; i < n; ++i)
      bounds[i] = std::max(bounds[i], round.utilities[i]);
    int pos = n - 1;
    while (pos >= 0 &&
           ++profile[pos] == instance.bidders[pos].num_actions()) {
      profile[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  // A bidder that can never profit keeps a positive bound so that
  // normalization stays well defined; its weights then never move.
  for (double& b : bounds) b = std::max(b, 1e-9);
  return bounds;
}

}  // namespace bidsim
