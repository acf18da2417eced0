#ifndef EVODISPATCH_SEQUENCE_HPP
#define EVODISPATCH_SEQUENCE_HPP

// Second-level sequencing: one taxi serves its assigned passengers one at a
// time (pickup then dropoff), in the order minimizing total waiting time
//   sum_p (DP_pickup(p) - T^p),   DP_pickup = max(AR_pickup, T^p).
//
// The exact solver is a subset DP over (served set, last passenger). A single
// scalar per state is not enough: an order with less waiting so far may
// finish later and delay everyone after it. Each state therefore keeps the
// Pareto front of (finish time, accumulated wait); future waiting is
// monotone in the finish time, so dominated labels can be dropped.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "network.hpp"
#include "simulator.hpp"

namespace evodispatch {

struct StopTimes {
  PassengerId passenger = 0;
  Seconds ar_pickup = 0;
  Seconds dp_pickup = 0;
  Seconds ar_dropoff = 0;

  friend bool operator==(const StopTimes&, const StopTimes&) = default;
};

struct Route {
  TaxiId taxi = 0;
  std::vector<PassengerId> order;
  std::vector<StopTimes> schedule;
  Seconds total_wait = 0;

  friend bool operator==(const Route&, const Route&) = default;
};

inline constexpr std::size_t kSeqExactLimit = 10;
inline constexpr std::size_t kBruteForceLimit = 8;

class SequenceLimitExceeded : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Forward recurrence for a fixed visiting order: the taxi leaves its
/// next-free zone at its next-free time, and after each dropoff heads
/// straight to the next origin.
inline Route route_times(const VehicleState& taxi, std::span<const PassengerRequest> ordered,
                         const TravelTimeMatrix& tr) {
  Route r;
  r.taxi = taxi.id;
  Seconds t = taxi.free_at;
  ZoneId at = taxi.zone;
  for (const auto& p : ordered) {
    const Seconds ar = t + tr.at(at, p.origin);
    const Seconds dp = std::max(ar, p.request_time);
    const Seconds drop = dp + tr.at(p.origin, p.destination);
    r.order.push_back(p.id);
    r.schedule.push_back(StopTimes{p.id, ar, dp, drop});
    r.total_wait += dp - p.request_time;
    t = drop;
    at = p.destination;
  }
  return r;
}

/// Schedule for `order` (passenger ids, each present in `assigned`).
inline Route route_times(const VehicleState& taxi, std::span<const PassengerRequest> assigned,
                         std::span<const PassengerId> order, const TravelTimeMatrix& tr) {
  if (order.size() != assigned.size()) throw std::invalid_argument("order is not a permutation");
  std::vector<PassengerRequest> seq;
  seq.reserve(order.size());
  for (auto id : order) {
    const auto it = std::find_if(assigned.begin(), assigned.end(),
                                 [id](const PassengerRequest& p) { return p.id == id; });
    if (it == assigned.end()) throw std::invalid_argument("order names an unassigned passenger");
    seq.push_back(*it);
  }
  return route_times(taxi, seq, tr);
}

namespace detail {

struct SeqLabel {
  Seconds finish;
  Seconds wait;
};

inline void insert_label(std::vector<SeqLabel>& front, SeqLabel l) {
  for (const auto& e : front)
    if (e.finish <= l.finish && e.wait <= l.wait) return;
  std::erase_if(front, [&](const SeqLabel& e) { return l.finish <= e.finish && l.wait <= e.wait; });
  front.push_back(l);
}

/// Minimum additional waiting to serve every item of `items` starting at
/// zone `z0` at time `t0`.
inline Seconds min_wait(ZoneId z0, Seconds t0, std::span<const PassengerRequest> items,
                        const TravelTimeMatrix& tr) {
  const std::size_t n = items.size();
  if (n == 0) return 0;
  const std::size_t full = (std::size_t{1} << n) - 1;
  std::vector<std::vector<SeqLabel>> fronts((full + 1) * n);
  auto at = [&](std::size_t mask, std::size_t last) -> std::vector<SeqLabel>& {
    return fronts[mask * n + last];
  };
  for (std::size_t j = 0; j < n; ++j) {
    const auto& p = items[j];
    const Seconds dp = std::max(t0 + tr(z0, p.origin), p.request_time);
    insert_label(at(std::size_t{1} << j, j), {dp + tr(p.origin, p.destination), dp - p.request_time});
  }
  for (std::size_t mask = 1; mask <= full; ++mask) {
    for (std::size_t last = 0; last < n; ++last) {
      if (!(mask & (std::size_t{1} << last))) continue;
      const auto& src = at(mask, last);
      if (src.empty()) continue;
      const ZoneId from = items[last].destination;
      for (std::size_t j = 0; j < n; ++j) {
        if (mask & (std::size_t{1} << j)) continue;
        const auto& p = items[j];
        const Seconds leg = tr(from, p.origin);
        const Seconds trip = tr(p.origin, p.destination);
        auto& dst = at(mask | (std::size_t{1} << j), j);
        for (const auto& l : src) {
          const Seconds dp = std::max(l.finish + leg, p.request_time);
          insert_label(dst, {dp + trip, l.wait + dp - p.request_time});
        }
      }
    }
  }
  Seconds best = std::numeric_limits<Seconds>::max();
  for (std::size_t last = 0; last < n; ++last)
    for (const auto& l : at(full, last)) best = std::min(best, l.wait);
  return best;
}

inline std::vector<PassengerRequest> sorted_by_id(std::span<const PassengerRequest> assigned) {
  std::vector<PassengerRequest> v(assigned.begin(), assigned.end());
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return v;
}

}  // namespace detail

/// Exact optimum; among optimal orders the lexicographically smallest
/// sequence of passenger ids is returned.
inline Route solve_sequence(const VehicleState& taxi, std::span<const PassengerRequest> assigned,
                            const TravelTimeMatrix& tr, std::size_t limit = kSeqExactLimit) {
  if (assigned.size() > limit)
    throw SequenceLimitExceeded("exact sequencing limited to " + std::to_string(limit) +
                                " passengers, got " + std::to_string(assigned.size()));
  for (const auto& p : assigned)
    if (!tr.contains(p.origin) || !tr.contains(p.destination))
      throw std::out_of_range("passenger zone outside travel matrix");
  if (!tr.contains(taxi.zone)) throw std::out_of_range("taxi zone outside travel matrix");

  auto remaining = detail::sorted_by_id(assigned);
  const Seconds optimum = detail::min_wait(taxi.zone, taxi.free_at, remaining, tr);

  // Fix positions one at a time, taking the smallest id that still admits
  // an optimal completion.
  std::vector<PassengerRequest> ordered;
  ZoneId z = taxi.zone;
  Seconds t = taxi.free_at;
  Seconds waited = 0;
  while (!remaining.empty()) {
    bool placed = false;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      const auto& p = remaining[i];
      const Seconds dp = std::max(t + tr(z, p.origin), p.request_time);
      const Seconds w = waited + dp - p.request_time;
      std::vector<PassengerRequest> rest;
      rest.reserve(remaining.size() - 1);
      for (std::size_t k = 0; k < remaining.size(); ++k)
        if (k != i) rest.push_back(remaining[k]);
      const Seconds finish = dp + tr(p.origin, p.destination);
      if (w + detail::min_wait(p.destination, finish, rest, tr) == optimum) {
        ordered.push_back(p);
        z = p.destination;
        t = finish;
        waited = w;
        remaining = std::move(rest);
        placed = true;
        break;
      }
    }
    if (!placed) throw std::logic_error("sequence reconstruction lost the optimum");
  }
  return route_times(taxi, ordered, tr);
}

/// Test oracle: full permutation enumeration with the same tie-break.
inline Route brute_force_sequence(const VehicleState& taxi, std::span<const PassengerRequest> assigned,
                                  const TravelTimeMatrix& tr) {
  if (assigned.size() > kBruteForceLimit)
    throw SequenceLimitExceeded("brute force limited to 8 passengers");
  auto perm = detail::sorted_by_id(assigned);
  auto by_id = [](const PassengerRequest& a, const PassengerRequest& b) { return a.id < b.id; };
  Route best = route_times(taxi, perm, tr);
  while (std::next_permutation(perm.begin(), perm.end(), by_id)) {
    auto r = route_times(taxi, perm, tr);
    if (r.total_wait < best.total_wait) best = std::move(r);
  }
  return best;
}

/// Order for taxis holding more passengers than the exact limit: request
/// time order, then remove-and-reinsert descent.
inline Route sequence_heuristic(const VehicleState& taxi, std::span<const PassengerRequest> assigned,
                                const TravelTimeMatrix& tr) {
  std::vector<PassengerRequest> seq(assigned.begin(), assigned.end());
  std::stable_sort(seq.begin(), seq.end(), [](const auto& a, const auto& b) {
    return a.request_time != b.request_time ? a.request_time < b.request_time : a.id < b.id;
  });
  Route best = route_times(taxi, seq, tr);
  for (bool improved = true; improved;) {
    improved = false;
    for (std::size_t i = 0; i < seq.size() && !improved; ++i) {
      for (std::size_t j = 0; j < seq.size() && !improved; ++j) {
        if (i == j) continue;
        auto cand = seq;
        const auto p = cand[i];
        cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(i));
        cand.insert(cand.begin() + static_cast<std::ptrdiff_t>(j), p);
        auto r = route_times(taxi, cand, tr);
        if (r.total_wait < best.total_wait) {
          best = std::move(r);
          seq = std::move(cand);
          improved = true;
        }
      }
    }
  }
  return best;
}

}  // namespace evodispatch

#endif  // EVODISPATCH_SEQUENCE_HPP
