#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "bidsim/market.hpp"
#include "bidsim/policies.hpp"

namespace bidsim {

/// Utility-maximizing action of one bidder against fixed rivals, with the
/// full deviation-utility vector it was chosen from.
struct BestResponseResult {
  int action = 0;
  double utility = 0.0;
  std::vector<double> utilities;
};

/// Enumerates every action of `bidder`, clearing the market once per action
/// with rivals fixed. Ties break toward the lowest index, which favors the
/// true-cost bid.
inline BestResponseResult best_response(const MarketInstance& instance,
                                        const BidProfile& profile, int bidder) {
  BestResponseResult result;
  result.utilities = counterfactual_utilities(instance, profile, bidder);
  result.action = 0;
  result.utility = result.utilities[0];
  for (int k = 1; k < static_cast<int>(result.utilities.size()); ++k) {
    if (result.utilities[k] > result.utility) {
      result.utility = result.utilities[k];
      result.action = k;
    }
  }
  return result;
}

enum class SweepSchedule {
  GaussSeidel,  // each best response is applied immediately
  Jacobi,       // all best responses are computed against the frozen profile
};

struct DiagonalizationOptions {
  double tolerance = 0.0004;  // max-norm on every bidder's (c, d) change
  int max_iterations = 50;
  SweepSchedule schedule = SweepSchedule::GaussSeidel;
  std::optional<BidProfile> initial;  // defaults to the all-true-cost profile
};

struct DiagonalizationReport {
  BidProfile final_profile;
  int iterations = 0;
  bool converged = false;
  bool cycle_detected = false;
  std::vector<BidProfile> history;  // profile after each full sweep
};

/// Cycles bidders in id order, replacing each bidder's bid with its best
/// response, until no bidder's submitted coefficients move by more than the
/// tolerance across one full sweep. Cycling is reported, not thrown.
inline DiagonalizationReport diagonalize(
    const MarketInstance& instance, const DiagonalizationOptions& options = {}) {
  const int n = instance.size();
  BidProfile profile = options.initial.value_or(BidProfile(n, 0));
  check_profile(instance, profile);

  DiagonalizationReport report;
  report.history.push_back(profile);

  const auto coefficients = [&](const BidProfile& p) {
    std::vector<BidFunction> cd(n);
    for (int i = 0; i < n; ++i) cd[i] = instance.bidders[i].actions[p[i]];
    return cd;
  };

  for (int iteration = 1; iteration <= options.max_iterations; ++iteration) {
    const auto before = coefficients(profile);
    if (options.schedule == SweepSchedule::GaussSeidel) {
      for (int bidder = 0; bidder < n; ++bidder)
        profile[bidder] = best_response(instance, profile, bidder).action;
    } else {
      BidProfile next = profile;
      for (int bidder = 0; bidder < n; ++bidder)
        next[bidder] = best_response(instance, profile, bidder).action;
      profile = next;
    }
    report.iterations = iteration;

    const auto after = coefficients(profile);
    double delta = 0.0;
    for (int i = 0; i < n; ++i) {
      delta = std::max(delta, std::abs(after[i].c - before[i].c));
      delta = std::max(delta, std::abs(after[i].d - before[i].d));
    }
    const bool seen_before =
        std::find(report.history.begin(), report.history.end(), profile) !=
        report.history.end();
    report.history.push_back(profile);
    if (delta <= options.tolerance) {
      report.converged = true;
      break;
    }
    if (seen_before) {
      report.cycle_detected = true;
      break;
    }
  }
  report.final_profile = profile;
  return report;
}

/// Exhaustive unilateral-deviation check of a profile.
struct NashCertificate {
  bool is_nash = false;
  double worst_gain = 0.0;  // EUR; largest improvement any deviation offers
  int worst_bidder = -1;
  int worst_action = -1;
};

inline NashCertificate verify_nash(const MarketInstance& instance,
                                   const BidProfile& profile,
                                   double gain_tolerance = 1e-6) {
  check_profile(instance, profile);
  NashCertificate certificate;
  for (int bidder = 0; bidder < instance.size(); ++bidder) {
    const auto deviations = counterfactual_utilities(instance, profile, bidder);
    const double held = deviations[profile[bidder]];
    for (int k = 0; k < static_cast<int>(deviations.size()); ++k) {
      const double gain = deviations[k] - held;
      if (gain > certificate.worst_gain) {
        certificate.worst_gain = gain;
        certificate.worst_bidder = bidder;
        certificate.worst_action = k;
      }
    }
  }
  certificate.is_nash = certificate.worst_gain <= gain_tolerance;
  return certificate;
}

}  // namespace bidsim
