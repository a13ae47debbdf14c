#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bidsim {

/// A quadratic price curve, used both as a true cost and as a submitted bid.
/// value(x) = 1/2 c x^2 + d x, marginal(x) = c x + d.
struct BidFunction {
  double c = 0.0;  // quadratic coefficient [EUR/MW^2], >= 0
  double d = 0.0;  // linear coefficient [EUR/MW], >= 0

  double value(double x) const { return 0.5 * c * x * x + d * x; }
  double marginal(double x) const { return c * x + d; }
  bool valid() const {
    return std::isfinite(c) && std::isfinite(d) && c >= 0.0 && d >= 0.0;
  }
  friend bool operator==(const BidFunction&, const BidFunction&) = default;
};

/// One market participant: a finite menu of bid curves whose first entry is
/// the true cost, plus a production capacity.
struct BidderSpec {
  int id = 0;
  std::vector<BidFunction> actions;  // actions[0] is the true cost
  double capacity = 0.0;             // MW, > 0

  const BidFunction& true_cost() const { return actions.front(); }
  int num_actions() const { return static_cast<int>(actions.size()); }
};

/// Thrown when demand exceeds the fleet's total capacity.
class InfeasibleDemand : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when the dual search fails its tolerance inside the iteration
/// budget. Unreachable for well-formed instances; signals a solver bug.
class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MarketInstance {
  std::vector<BidderSpec> bidders;
  double demand = 0.0;  // MW, price-inelastic

  int size() const { return static_cast<int>(bidders.size()); }

  double total_capacity() const {
    double total = 0.0;
    for (const auto& b : bidders) total += b.capacity;
    return total;
  }

  void validate() const {
    if (!(demand >= 0.0) || !std::isfinite(demand))
      throw std::invalid_argument("demand must be finite and non-negative");
    for (std::size_t i = 0; i < bidders.size(); ++i) {
      const auto& b = bidders[i];
      if (b.id != static_cast<int>(i))
        throw std::invalid_argument("bidder ids must be contiguous from 0");
      if (!(b.capacity > 0.0) || !std::isfinite(b.capacity))
        throw std::invalid_argument("bidder " + std::to_string(i) +
                                    ": capacity must be positive");
      if (b.actions.empty())
        throw std::invalid_argument("bidder " + std::to_string(i) +
                                    ": needs at least one action");
      for (const auto& a : b.actions)
        if (!a.valid())
          throw std::invalid_argument("bidder " + std::to_string(i) +
                                      ": bid coefficients must be >= 0");
    }
    if (demand > total_capacity() + 1e-9)
      throw InfeasibleDemand("demand " + std::to_string(demand) +
                             " MW exceeds total capacity " +
                             std::to_string(total_capacity()) + " MW");
  }
};

/// One submitted action index per bidder, each in [0, K_i).
using BidProfile = std::vector<int>;

/// Outcome of one auction round.
struct ClearingResult {
  std::vector<double> allocations;  // MW, x*
  double price = 0.0;               // EUR/MWh, multiplier of the balance constraint
  double social_cost = 0.0;         // EUR, dispatch objective at the submitted bids
  std::vector<double> payments;     // EUR, price * allocation
  std::vector<double> utilities;    // EUR, payment minus true cost
};

/// Optimal response of a single bidder to a given price: the box-clamped
/// stationary point of its term in the dispatch objective.
/// Requires bid.c > 0; c == 0 is handled only inside clear_market.
inline double allocation_at_price(const BidFunction& bid, double capacity,
                                  double price) {
  return std::clamp((price - bid.d) / bid.c, 0.0, capacity);
}

namespace detail {

// Aggregate response used by the dual search. Degenerate c == 0 curves step
// from 0 to capacity at price d; the step is resolved pro rata afterwards.
inline double aggregate_response(std::span<const BidFunction> bids,
                                 std::span<const double> caps, double price) {
  double total = 0.0;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (bids[i].c > 0.0)
      total += allocation_at_price(bids[i], caps[i], price);
    else if (price > bids[i].d)
      total += caps[i];
  }
  return total;
}

}  // namespace detail

inline void check_profile(const MarketInstance& instance,
                          const BidProfile& profile) {
  if (static_cast<int>(profile.size()) != instance.size())
    throw std::invalid_argument("profile length does not match bidder count");
  for (int i = 0; i < instance.size(); ++i)
    if (profile[i] < 0 || profile[i] >= instance.bidders[i].num_actions())
      throw std::invalid_argument("action index out of range for bidder " +
                                  std::to_string(i));
}

/// Solves the market-clearing program
///   min sum_i 1/2 c_i x_i^2 + d_i x_i   s.t.  sum_i x_i = Q, 0 <= x_i <= cap_i
/// by monotone bisection on the dual price, followed by an exact closed-form
/// polish on the identified active set. Payments are price * allocation and
/// utilities are settled against each bidder's true cost.
inline ClearingResult clear_market(const MarketInstance& instance,
                                   const BidProfile& profile) {
  check_profile(instance, profile);
  const int n = instance.size();
  const double q = instance.demand;

  std::vector<BidFunction> bids(n);
  std::vector<double> caps(n);
  for (int i = 0; i < n; ++i) {
    bids[i] = instance.bidders[i].actions[profile[i]];
    caps[i] = instance.bidders[i].capacity;
  }
  double total_cap = 0.0;
  for (double c : caps) total_cap += c;
  if (q > total_cap + 1e-9)
    throw InfeasibleDemand("demand exceeds total capacity");

  ClearingResult res;
  res.allocations.assign(n, 0.0);
  res.payments.assign(n, 0.0);
  res.utilities.assign(n, 0.0);

  double price_lo = bids[0].d, price_hi = bids[0].marginal(caps[0]);
  for (int i = 1; i < n; ++i) {
    price_lo = std::min(price_lo, bids[i].d);
    price_hi = std::max(price_hi, bids[i].marginal(caps[i]));
  }

  // The multiplier is non-unique at Q = 0; the first-unit marginal price
  // keeps it continuous as Q -> 0+.
  if (q <= 0.0) {
    res.price = price_lo;
    return res;
  }

  constexpr double kBalanceTol = 1e-9;
  constexpr int kMaxIterations = 200;

  double lo = price_lo, hi = price_hi;
  double lam = hi;
  for (int it = 0; it < kMaxIterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double s = detail::aggregate_response(bids, caps, mid);
    if (std::abs(s - q) <= kBalanceTol) {
      lam = mid;
      break;
    }
    if (s < q)
      lo = mid;
    else
      hi = mid;
    lam = hi;
  }

  // Step bidders (c == 0) whose entry price sits at the located multiplier
  // absorb the residual pro rata by capacity; otherwise the price is
  // recomputed exactly from the active set, re-classifying until stable.
  const double step_band = 1e-9 * std::max(1.0, std::abs(lam));
  double margin_d = 0.0;
  bool margin_found = false;
  double margin_nearest = 0.0;
  for (int i = 0; i < n; ++i) {
    if (bids[i].c != 0.0) continue;
    const double distance = std::abs(lam - bids[i].d);
    if (distance <= step_band && (!margin_found || distance < margin_nearest)) {
      margin_d = bids[i].d;
      margin_nearest = distance;
      margin_found = true;
    }
  }
  double margin_cap_total = 0.0;
  if (margin_found) {
    lam = margin_d;  // snap the price onto the step, then gather its members
    for (int i = 0; i < n; ++i)
      if (bids[i].c == 0.0 && std::abs(lam - bids[i].d) <= step_band)
        margin_cap_total += caps[i];
  }

  if (margin_cap_total == 0.0) {
    for (int pass = 0; pass < 16; ++pass) {
      double inv_sum = 0.0, ratio_sum = 0.0, fixed = 0.0;
      double capped_marginal = price_lo;
      bool has_interior = false, has_capped = false;
      for (int i = 0; i < n; ++i) {
        const double entry = bids[i].d;
        const double full = bids[i].marginal(caps[i]);
        if (bids[i].c > 0.0 ? lam >= full : lam > entry) {
          fixed += caps[i];
          has_capped = true;
          capped_marginal = std::max(capped_marginal, full);
        } else if (lam > entry && bids[i].c > 0.0) {
          has_interior = true;
          inv_sum += 1.0 / bids[i].c;
          ratio_sum += entry / bids[i].c;
        }
      }
      double polished;
      if (has_interior)
        polished = (q - fixed + ratio_sum) / inv_sum;
      else if (has_capped)
        polished = capped_marginal;  // flat segment; take its lower end
      else
        polished = price_lo;
      if (std::abs(polished - lam) <= 1e-12 * std::max(1.0, std::abs(lam))) {
        lam = polished;
        break;
      }
      lam = polished;
    }
  }

  double assigned = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = 0.0;
    if (bids[i].c > 0.0)
      x = allocation_at_price(bids[i], caps[i], lam);
    else if (margin_cap_total > 0.0 && std::abs(lam - bids[i].d) <= step_band)
      x = 0.0;  // filled pro rata below
    else if (lam > bids[i].d)
      x = caps[i];
    res.allocations[i] = x;
    assigned += x;
  }
  if (margin_cap_total > 0.0) {
    const double residual = std::clamp(q - assigned, 0.0, margin_cap_total);
    for (int i = 0; i < n; ++i)
      if (bids[i].c == 0.0 && std::abs(lam - bids[i].d) <= step_band)
        res.allocations[i] = residual * caps[i] / margin_cap_total;
    assigned += residual;
  }
  if (std::abs(assigned - q) > 1e-6)
    throw NonConvergence("dual bisection missed the balance tolerance: |" +
                         std::to_string(assigned) + " - " + std::to_string(q) +
                         "| > 1e-6");

  res.price = lam;
  for (int i = 0; i < n; ++i) {
    const double x = res.allocations[i];
    res.social_cost += bids[i].value(x);
    if (x > 0.0) {
      res.payments[i] = lam * x;
      res.utilities[i] = res.payments[i] - instance.bidders[i].true_cost().value(x);
    }
  }
  return res;
}

/// Dispatch objective evaluated at the submitted bids of `profile`.
inline double social_cost_as_bid(const MarketInstance& instance,
                                 const BidProfile& profile,
                                 std::span<const double> allocations) {
  check_profile(instance, profile);
  double total = 0.0;
  for (int i = 0; i < instance.size(); ++i)
    total += instance.bidders[i].actions[profile[i]].value(allocations[i]);
  return total;
}

/// Same objective under true costs; a diagnostic for welfare comparisons.
inline double social_cost_true(const MarketInstance& instance,
                               std::span<const double> allocations) {
  double total = 0.0;
  for (int i = 0; i < instance.size(); ++i)
    total += instance.bidders[i].true_cost().value(allocations[i]);
  return total;
}

}  // namespace bidsim
