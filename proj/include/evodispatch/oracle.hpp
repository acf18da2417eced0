#ifndef EVODISPATCH_ORACLE_HPP
#define EVODISPATCH_ORACLE_HPP

// Holistic optimum for tiny instances: every assignment of passengers to
// taxis, each taxi sequenced exactly. Used to measure the gap left by the
// two-level decomposition.

#include <cstddef>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "network.hpp"
#include "objective.hpp"
#include "sequence.hpp"
#include "simulator.hpp"

namespace evodispatch {

struct OracleLimits {
  std::size_t max_passengers = 5;
  std::size_t max_vehicles = 3;
};

struct HolisticSolution {
  Assignment assignment;
  std::vector<Route> routes;  // one per vehicle, in snapshot order
  Seconds total_wait = 0;
};

class OracleLimitExceeded : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Assignments are visited in lexicographic order of taxi_of and only a
/// strictly better total replaces the incumbent.
inline HolisticSolution solve_holistic(const DynContext& snap, const TravelTimeMatrix& tr,
                                       OracleLimits limits = {}) {
  const std::size_t P = snap.passengers.size();
  const std::size_t C = snap.vehicles.size();
  if (P > limits.max_passengers || C > limits.max_vehicles)
    throw OracleLimitExceeded("oracle limited to " + std::to_string(limits.max_passengers) +
                              " passengers and " + std::to_string(limits.max_vehicles) + " taxis, got " +
                              std::to_string(P) + " and " + std::to_string(C));
  if (C == 0 && P > 0) throw OracleLimitExceeded("no taxis to serve pending passengers");

  // Exact route for each (taxi, passenger subset), computed on demand.
  std::vector<std::map<unsigned, Route>> memo(C);
  auto route_for = [&](std::size_t v, unsigned mask) -> const Route& {
    auto it = memo[v].find(mask);
    if (it != memo[v].end()) return it->second;
    std::vector<PassengerRequest> subset;
    for (std::size_t p = 0; p < P; ++p)
      if (mask & (1u << p)) subset.push_back(snap.passengers[p]);
    return memo[v].emplace(mask, solve_sequence(snap.vehicles[v], subset, tr)).first->second;
  };

  HolisticSolution best;
  best.total_wait = std::numeric_limits<Seconds>::max();
  std::vector<std::size_t> y(P, 0);
  for (;;) {
    std::vector<unsigned> masks(C, 0);
    for (std::size_t p = 0; p < P; ++p) masks[y[p]] |= 1u << p;
    Seconds total = 0;
    for (std::size_t v = 0; v < C; ++v) total += route_for(v, masks[v]).total_wait;
    if (total < best.total_wait) {
      best.total_wait = total;
      best.assignment.taxi_of = y;
      best.routes.clear();
      for (std::size_t v = 0; v < C; ++v) best.routes.push_back(route_for(v, masks[v]));
    }
    // next assignment, last passenger varying fastest
    std::size_t i = P;
    while (i > 0 && y[i - 1] + 1 == C) y[--i] = 0;
    if (i == 0) break;
    ++y[i - 1];
  }
  if (C == 0) best.total_wait = 0;
  return best;
}

}  // namespace evodispatch

#endif  // EVODISPATCH_ORACLE_HPP
