#ifndef EVODISPATCH_DISPATCH_HPP
#define EVODISPATCH_DISPATCH_HPP

// The closed dispatch loop: at each decision epoch take a snapshot, ask the
// provider for an objective, assign, sequence each taxi, merge, then step.
//
// Epoch e starts at e*dt and sees the pending requests with request time
// before (e+1)*dt; the last epoch sees everything still pending. Every
// revealed passenger is assigned at once, so nothing can be left behind.

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "assign.hpp"
#include "metrics.hpp"
#include "network.hpp"
#include "objective.hpp"
#include "sequence.hpp"
#include "simulator.hpp"

namespace evodispatch {

struct DispatchOptions {
  Seconds dt = 300;
  Seconds bin_seconds = 600;
  AssignOptions assign;
  std::size_t seq_exact_limit = kSeqExactLimit;
};

struct EpochRecord {
  std::size_t epoch = 0;
  Seconds clock = 0;
  std::size_t revealed = 0;
  ObjectiveSpec objective;
  bool heuristic_sequencing = false;  // some taxi exceeded the exact limit
};

struct DispatchResult {
  SimTrace trace;
  Metrics metrics;
  std::vector<EpochRecord> epochs;
};

/// Called once per epoch, whether or not anything is pending.
using ObjectiveProvider = std::function<ObjectiveSpec(std::size_t epoch, const DynContext&)>;

inline std::size_t epoch_count(Seconds window, Seconds dt) {
  if (dt < 1) throw std::invalid_argument("dt must be >= 1");
  if (window <= 0) return 1;
  return static_cast<std::size_t>((window + dt - 1) / dt);
}

inline std::vector<Task> tasks_for(const Route& r, std::span<const PassengerRequest> assigned) {
  std::vector<Task> out;
  out.reserve(r.schedule.size());
  for (const auto& s : r.schedule) {
    const auto it = std::find_if(assigned.begin(), assigned.end(),
                                 [&](const PassengerRequest& p) { return p.id == s.passenger; });
    if (it == assigned.end()) throw std::logic_error("route names a passenger it was not given");
    out.push_back(Task{it->origin, it->destination, s.ar_pickup, it->request_time, s.dp_pickup, it->id});
  }
  return out;
}

/// Sequences every taxi's share of an assignment and returns the routes and
/// the matching command plan. Returns true in `heuristic` if any taxi was
/// over the exact limit.
inline std::pair<std::vector<Route>, CommandPlan> plan_assignment(const DynContext& snap,
                                                                  const Assignment& y,
                                                                  const TravelTimeMatrix& tr,
                                                                  std::size_t seq_limit,
                                                                  bool* heuristic = nullptr) {
  std::vector<std::vector<PassengerRequest>> share(snap.vehicles.size());
  for (std::size_t p = 0; p < snap.passengers.size(); ++p) share.at(y.taxi_of.at(p)).push_back(snap.passengers[p]);
  std::vector<Route> routes;
  CommandPlan plan;
  for (std::size_t v = 0; v < snap.vehicles.size(); ++v) {
    if (share[v].empty()) continue;
    Route r;
    if (share[v].size() > seq_limit) {
      r = sequence_heuristic(snap.vehicles[v], share[v], tr);
      if (heuristic) *heuristic = true;
    } else {
      r = solve_sequence(snap.vehicles[v], share[v], tr, seq_limit);
    }
    plan[snap.vehicles[v].id] = tasks_for(r, share[v]);
    routes.push_back(std::move(r));
  }
  return {std::move(routes), std::move(plan)};
}

/// Total wait (seconds) of the two-level pipeline on one snapshot: assign
/// under `spec`, then sequence every taxi exactly.
inline Seconds hierarchical_wait(const ObjectiveSpec& spec, const DynContext& snap, const TravelTimeMatrix& tr,
                                 const AssignOptions& opts = {}) {
  const Assignment y = solve_assignment(spec, snap, tr, opts);
  Seconds total = 0;
  for (const auto& r : plan_assignment(snap, y, tr, kSeqExactLimit).first) total += r.total_wait;
  return total;
}

inline DispatchResult run_dispatch(const Scenario& scenario, const TravelTimeMatrix& tr,
                                   const ObjectiveProvider& provider, const DispatchOptions& opts = {}) {
  if (opts.dt < 1) throw std::invalid_argument("dt must be >= 1");
  Simulator sim(scenario, tr);
  const std::size_t epochs = epoch_count(scenario.spec.window, opts.dt);
  DispatchResult out;
  for (std::size_t e = 0; e < epochs; ++e) {
    const bool last = e + 1 == epochs;
    const auto reveal = last ? std::nullopt : std::optional<Seconds>(static_cast<Seconds>(e + 1) * opts.dt);
    const DynContext snap = sim.snapshot(reveal);
    EpochRecord rec;
    rec.epoch = e;
    rec.clock = snap.clock;
    rec.revealed = snap.passengers.size();
    rec.objective = provider(e, snap);
    if (!snap.passengers.empty()) {
      const Assignment y = solve_assignment(rec.objective, snap, tr, opts.assign);
      auto [routes, plan] = plan_assignment(snap, y, tr, opts.seq_exact_limit, &rec.heuristic_sequencing);
      sim.merge_commands(plan);
    }
    out.epochs.push_back(std::move(rec));
    if (!last) sim.step(opts.dt);
  }
  // Drain. Every passenger is queued on some taxi by now, so the bound is
  // generous rather than tight.
  Seconds bound = 1;
  for (const auto& r : scenario.requests) bound += r.request_time;
  bound += static_cast<Seconds>(scenario.requests.size() + 1) * 2 * (tr.max_entry() + 1);
  for (const auto& t : scenario.fleet) bound += t.available_at;
  sim.run_until_served(bound);
  out.trace = sim.trace();
  out.metrics = collect_metrics(out.trace, opts.bin_seconds, tr.zone_count());
  return out;
}

/// Same objective at every epoch.
inline DispatchResult run_fixed(const Scenario& scenario, const TravelTimeMatrix& tr, const ObjectiveSpec& spec,
                                const DispatchOptions& opts = {}) {
  return run_dispatch(scenario, tr, [&](std::size_t, const DynContext&) { return spec; }, opts);
}

}  // namespace evodispatch

#endif  // EVODISPATCH_DISPATCH_HPP
