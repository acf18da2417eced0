#ifndef EVODISPATCH_TESTS_SUPPORT_HPP
#define EVODISPATCH_TESTS_SUPPORT_HPP

// Shared fixtures for the unit tests and the acceptance binary: seeded
// instance builders plus brute-force reference computations that do not go
// through the library's solvers.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <evodispatch.hpp>

namespace testsupport {

using namespace evodispatch;

inline TravelTimeMatrix uniform_matrix(std::size_t n, Seconds v) {
  std::vector<Seconds> t(n * n, v);
  for (std::size_t i = 0; i < n; ++i) t[i * n + i] = 0;
  return TravelTimeMatrix(n, std::move(t));
}

/// Asymmetric, integer entries on [1, max_tr] off the diagonal.
inline TravelTimeMatrix random_matrix(Rng& rng, std::size_t n, Seconds max_tr = 900) {
  std::vector<Seconds> t(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) t[i * n + j] = rng.uniform_int(1, max_tr);
  return TravelTimeMatrix(n, std::move(t));
}

inline PassengerRequest random_request(Rng& rng, PassengerId id, std::size_t zones, Seconds window) {
  const auto o = static_cast<std::uint32_t>(rng.below(zones));
  auto d = static_cast<std::uint32_t>(rng.below(zones - 1));
  if (d >= o) ++d;
  return PassengerRequest{id, ZoneId(o), ZoneId(d), rng.uniform_int(0, window)};
}

/// Snapshot with P passengers and C taxis; free times on [0, max_free].
inline DynContext random_snapshot(Rng& rng, std::size_t P, std::size_t C, std::size_t zones, Seconds window,
                                  Seconds max_free = 300) {
  DynContext s;
  for (std::size_t v = 0; v < C; ++v)
    s.vehicles.push_back(VehicleState{static_cast<TaxiId>(v), ZoneId(static_cast<std::uint32_t>(rng.below(zones))),
                                      rng.uniform_int(0, max_free)});
  for (std::size_t p = 0; p < P; ++p)
    s.passengers.push_back(random_request(rng, static_cast<PassengerId>(p), zones, window));
  return s;
}

/// Valid scenario: requests sorted by time and renumbered.
inline Scenario make_scenario(std::vector<PassengerRequest> requests, std::vector<TaxiInit> fleet, Seconds window) {
  std::stable_sort(requests.begin(), requests.end(),
                   [](const auto& a, const auto& b) { return a.request_time < b.request_time; });
  for (std::size_t i = 0; i < requests.size(); ++i) requests[i].id = static_cast<PassengerId>(i);
  Scenario s;
  s.spec = ScenarioSpec{static_cast<std::uint32_t>(requests.size()), static_cast<std::uint32_t>(fleet.size()),
                        window, 0};
  s.requests = std::move(requests);
  s.fleet = std::move(fleet);
  s.matrix_ref = "test";
  return s;
}

inline Scenario random_scenario(Rng& rng, std::size_t P, std::size_t C, std::size_t zones, Seconds window) {
  std::vector<PassengerRequest> req;
  for (std::size_t p = 0; p < P; ++p) req.push_back(random_request(rng, static_cast<PassengerId>(p), zones, window));
  std::vector<TaxiInit> fleet;
  for (std::size_t v = 0; v < C; ++v)
    fleet.push_back(TaxiInit{static_cast<TaxiId>(v), ZoneId(static_cast<std::uint32_t>(rng.below(zones))), 0});
  return make_scenario(std::move(req), std::move(fleet), window);
}

/// Calls f on every assignment of P passengers to C taxis.
inline void for_each_assignment(std::size_t P, std::size_t C, const std::function<void(const Assignment&)>& f) {
  Assignment y;
  y.taxi_of.assign(P, 0);
  if (C == 0) return;
  for (;;) {
    f(y);
    std::size_t i = P;
    while (i > 0 && y.taxi_of[i - 1] + 1 == C) y.taxi_of[--i] = 0;
    if (i == 0) return;
    ++y.taxi_of[i - 1];
  }
}

/// Exhaustive minimum of evaluate() over all assignments.
inline double brute_force_min(const ObjectiveSpec& spec, const DynContext& snap, const TravelTimeMatrix& tr) {
  double best = std::numeric_limits<double>::infinity();
  for_each_assignment(snap.passengers.size(), snap.vehicles.size(),
                      [&](const Assignment& y) { best = std::min(best, evaluate(spec, y, snap, tr)); });
  return best;
}

/// Total wait of serving `order` (indices into `pass`) one by one, written
/// independently of route_times.
inline Seconds naive_wait(const VehicleState& v, const std::vector<PassengerRequest>& pass,
                          const std::vector<std::size_t>& order, const TravelTimeMatrix& tr) {
  Seconds clock = v.free_at;
  ZoneId here = v.zone;
  Seconds wait = 0;
  for (auto i : order) {
    const auto& p = pass[i];
    clock += tr(here, p.origin);
    if (clock < p.request_time) clock = p.request_time;
    wait += clock - p.request_time;
    clock += tr(p.origin, p.destination);
    here = p.destination;
  }
  return wait;
}

/// Minimum over every permutation.
inline Seconds naive_best_wait(const VehicleState& v, const std::vector<PassengerRequest>& pass,
                               const TravelTimeMatrix& tr) {
  std::vector<std::size_t> order(pass.size());
  std::iota(order.begin(), order.end(), 0);
  Seconds best = std::numeric_limits<Seconds>::max();
  do best = std::min(best, naive_wait(v, pass, order, tr));
  while (std::next_permutation(order.begin(), order.end()));
  return best;
}

/// Joint optimum by enumerating assignments and permutations.
inline Seconds naive_holistic(const DynContext& snap, const TravelTimeMatrix& tr) {
  Seconds best = std::numeric_limits<Seconds>::max();
  for_each_assignment(snap.passengers.size(), snap.vehicles.size(), [&](const Assignment& y) {
    Seconds total = 0;
    for (std::size_t v = 0; v < snap.vehicles.size(); ++v) {
      std::vector<PassengerRequest> mine;
      for (std::size_t p = 0; p < y.taxi_of.size(); ++p)
        if (y.taxi_of[p] == v) mine.push_back(snap.passengers[p]);
      total += naive_best_wait(snap.vehicles[v], mine, tr);
    }
    best = std::min(best, total);
  });
  return best;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("evodispatch-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  f << content;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

/// A random objective in the language, exercising every component form.
inline ObjectiveSpec random_objective(Rng& rng, bool allow_chain = true, bool allow_load = true) {
  static const char* exprs[] = {"TR_origin_start",
                                "TR_origin_start + TR_dest_start",
                                "abs(time_gap)",
                                "relu(avail_time + TR_origin_start - request_time)",
                                "2 * TR_trip - 0.5 * TR_origin_start",
                                "relu(0 - time_gap) + 0.25 * request_time",
                                "abs(TR_dest_start - 300)"};
  ObjectiveSpec s;
  const auto n = 1 + rng.below(4);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = rng.below(10);
    if (r < 6 || (!allow_chain && !allow_load)) {
      s.components.push_back(CostComponent::pair_linear(parse_expr(exprs[rng.below(std::size(exprs))])));
    } else if (r < 8 && allow_load) {
      s.components.push_back(CostComponent::of(ComponentForm::load_quadratic));
    } else if (r < 9 && allow_load) {
      s.components.push_back(CostComponent::of(ComponentForm::load_deviation));
    } else if (allow_chain) {
      s.components.push_back(CostComponent::of(ComponentForm::chain_quadratic));
    } else {
      s.components.push_back(CostComponent::pair_linear(parse_expr("TR_trip")));
    }
    // Dyadic weights keep sums exact.
    static constexpr double w[] = {0.25, 0.5, 1, 2, 4, 8, 16, 64};
    s.weights.push_back(w[rng.below(std::size(w))]);
  }
  return s;
}

}  // namespace testsupport

#endif  // EVODISPATCH_TESTS_SUPPORT_HPP
