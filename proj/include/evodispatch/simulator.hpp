#ifndef EVODISPATCH_SIMULATOR_HPP
#define EVODISPATCH_SIMULATOR_HPP

// Unit-tick discrete-event fleet simulator.
//
// Each taxi heads to a zone and arrives at `arrive_at`. On arrival at the head
// task's origin the passenger is picked up (waiting at the origin until the
// request time if early); on arrival at the destination the passenger is
// dropped off and the taxi departs straight away for the next task's origin.
// A taxi with no tasks stays where its last task ended. New commands are
// appended behind queued work; a task in progress is never replaced.

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "metrics.hpp"
#include "network.hpp"

namespace evodispatch {

struct Task {
  ZoneId origin;
  ZoneId destination;
  Seconds taxi_arrival = 0;     // planned arrival at origin
  Seconds passenger_ready = 0;  // request time
  Seconds depart = 0;           // planned departure from origin
  PassengerId passenger_id = 0;

  friend bool operator==(const Task&, const Task&) = default;
};

struct TaxiRuntime {
  TaxiId id = 0;
  ZoneId heading;
  Seconds arrive_at = 0;
  std::deque<Task> queue;
  bool idle = true;
  bool onboard = false;  // head task's passenger has been picked up
  Seconds pickup_time = 0;

  friend bool operator==(const TaxiRuntime&, const TaxiRuntime&) = default;
};

struct ServiceRecord {
  Seconds pickup = 0;
  Seconds dropoff = 0;

  friend bool operator==(const ServiceRecord&, const ServiceRecord&) = default;
};

struct SimState {
  Seconds clock = 0;
  std::vector<TaxiRuntime> taxis;
  std::map<PassengerId, PassengerRequest> pending;
  std::map<PassengerId, ServiceRecord> served;

  friend bool operator==(const SimState&, const SimState&) = default;
};

enum class EventKind { pickup, dropoff };

struct SimEvent {
  Seconds t = 0;
  TaxiId taxi = 0;
  PassengerId passenger = 0;
  EventKind kind = EventKind::pickup;

  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

struct SimTrace {
  std::string scenario_ref;
  std::vector<PassengerRequest> requests;
  std::vector<SimEvent> events;
  SimState final_state;
};

/// Where and when a taxi is next free, after its queued work.
struct VehicleState {
  TaxiId id = 0;
  ZoneId zone;
  Seconds free_at = 0;

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// Dynamic context handed to the dispatcher: vehicle states and pending demand.
struct DynContext {
  Seconds clock = 0;
  std::vector<VehicleState> vehicles;
  std::vector<PassengerRequest> passengers;

  friend bool operator==(const DynContext&, const DynContext&) = default;
};

/// Per-taxi ordered task lists to merge into the running commands.
using CommandPlan = std::map<TaxiId, std::vector<Task>>;

/// The automaton reached a state no valid command sequence can produce.
class SimulationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A plan that violates the merge preconditions.
class CommandError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Simulator {
 public:
  Simulator(const Scenario& scenario, const TravelTimeMatrix& matrix)
      : matrix_(&matrix), scenario_ref_(scenario.matrix_ref), requests_(scenario.requests) {
    validate_scenario(scenario, matrix.zone_count());
    state_.taxis.reserve(scenario.fleet.size());
    for (const auto& t : scenario.fleet) {
      TaxiRuntime rt;
      rt.id = t.id;
      rt.heading = t.start_zone;
      rt.arrive_at = t.available_at;
      state_.taxis.push_back(std::move(rt));
    }
    for (const auto& r : scenario.requests) state_.pending.emplace(r.id, r);
  }

  const SimState& state() const { return state_; }
  Seconds clock() const { return state_.clock; }
  const std::vector<SimEvent>& events() const { return events_; }
  const std::vector<PassengerRequest>& requests() const { return requests_; }
  bool all_served() const { return state_.served.size() == requests_.size(); }

  /// Advances the clock by `dt` unit ticks. Transitions due at tick k are
  /// processed before the clock moves past k.
  void step(Seconds dt) {
    if (dt < 1) throw std::invalid_argument("step: dt must be >= 1");
    for (Seconds i = 0; i < dt; ++i) {
      for (auto& taxi : state_.taxis) advance(taxi);
      ++state_.clock;
    }
  }

  /// Steps until every passenger is served or `max_ticks` elapse; returns
  /// whether everything was served.
  bool run_until_served(Seconds max_ticks) {
    for (Seconds i = 0; i < max_ticks && !all_served(); ++i) step(1);
    return all_served();
  }

  void merge_commands(const CommandPlan& plan) {
    std::set<PassengerId> seen;
    for (const auto& [taxi_id, tasks] : plan) {
      if (taxi_id >= state_.taxis.size())
        throw CommandError("plan references unknown taxi " + std::to_string(taxi_id));
      for (const auto& task : tasks) {
        const auto pid = task.passenger_id;
        if (!seen.insert(pid).second)
          throw CommandError("passenger " + std::to_string(pid) + " appears twice in the plan");
        const auto it = state_.pending.find(pid);
        if (it == state_.pending.end())
          throw CommandError("passenger " + std::to_string(pid) + " is not pending");
        const auto& req = it->second;
        if (task.origin != req.origin || task.destination != req.destination ||
            task.passenger_ready != req.request_time)
          throw CommandError("task for passenger " + std::to_string(pid) +
                             " does not match its request");
      }
    }
    for (const auto& [taxi_id, tasks] : plan) {
      if (tasks.empty()) continue;
      auto& taxi = state_.taxis[taxi_id];
      if (taxi.queue.empty()) {
        const Seconds leave = std::max(state_.clock, taxi.arrive_at);
        taxi.arrive_at = leave + (*matrix_)(taxi.heading, tasks.front().origin);
        taxi.heading = tasks.front().origin;
        taxi.onboard = false;
      }
      taxi.idle = false;
      for (const auto& task : tasks) {
        state_.pending.erase(task.passenger_id);
        taxi.queue.push_back(task);
      }
    }
  }

  /// Vehicle next-free states (queues simulated forward) and the pending
  /// requests, optionally only those with request_time < reveal_before.
  DynContext snapshot(std::optional<Seconds> reveal_before = std::nullopt) const {
    DynContext ctx;
    ctx.clock = state_.clock;
    ctx.vehicles.reserve(state_.taxis.size());
    for (const auto& taxi : state_.taxis) ctx.vehicles.push_back(next_free(taxi));
    for (const auto& [id, req] : state_.pending)
      if (!reveal_before || req.request_time < *reveal_before) ctx.passengers.push_back(req);
    return ctx;
  }

  SimTrace trace() const { return SimTrace{scenario_ref_, requests_, events_, state_}; }

 private:
  VehicleState next_free(const TaxiRuntime& taxi) const {
    if (taxi.queue.empty())
      return VehicleState{taxi.id, taxi.heading, std::max(state_.clock, taxi.arrive_at)};
    const auto& tr = *matrix_;
    const auto& head = taxi.queue.front();
    Seconds t = taxi.onboard ? taxi.arrive_at
                             : std::max(taxi.arrive_at, head.passenger_ready) + tr(head.origin, head.destination);
    ZoneId z = head.destination;
    for (std::size_t i = 1; i < taxi.queue.size(); ++i) {
      const auto& task = taxi.queue[i];
      const Seconds pickup = std::max(t + tr(z, task.origin), task.passenger_ready);
      t = pickup + tr(task.origin, task.destination);
      z = task.destination;
    }
    return VehicleState{taxi.id, z, t};
  }

  void advance(TaxiRuntime& taxi) {
    const Seconds k = state_.clock;
    const auto& tr = *matrix_;
    while (!taxi.queue.empty() && taxi.arrive_at <= k) {
      const Task& head = taxi.queue.front();
      if (!taxi.onboard) {
        if (taxi.heading != head.origin) {
          throw SimulationError("taxi " + std::to_string(taxi.id) + " heading to zone " +
                                std::to_string(taxi.heading.value) + " but task origin is " +
                                std::to_string(head.origin.value));
        }
        if (k < head.passenger_ready) {
          taxi.arrive_at = head.passenger_ready;
          return;
        }
        taxi.onboard = true;
        taxi.pickup_time = k;
        taxi.heading = head.destination;
        taxi.arrive_at = k + tr(head.origin, head.destination);
        events_.push_back(SimEvent{k, taxi.id, head.passenger_id, EventKind::pickup});
      } else {
        if (taxi.heading != head.destination) {
          throw SimulationError("taxi " + std::to_string(taxi.id) + " carrying passenger " +
                                std::to_string(head.passenger_id) + " is not heading to its destination");
        }
        events_.push_back(SimEvent{k, taxi.id, head.passenger_id, EventKind::dropoff});
        state_.served[head.passenger_id] = ServiceRecord{taxi.pickup_time, k};
        const ZoneId at = head.destination;
        taxi.queue.pop_front();
        taxi.onboard = false;
        if (!taxi.queue.empty()) {
          taxi.heading = taxi.queue.front().origin;
          taxi.arrive_at = k + tr(at, taxi.heading);
        } else {
          taxi.arrive_at = k;
        }
      }
    }
    taxi.idle = taxi.queue.empty();
  }

  const TravelTimeMatrix* matrix_;
  std::string scenario_ref_;
  std::vector<PassengerRequest> requests_;
  SimState state_;
  std::vector<SimEvent> events_;
};

/// Metrics of a finished run; throws UnservedPassengersError otherwise.
inline Metrics collect_metrics(const SimTrace& trace, Seconds bin_seconds, std::size_t zone_count) {
  std::vector<std::optional<Seconds>> pickups(trace.requests.size());
  for (std::size_t i = 0; i < trace.requests.size(); ++i) {
    const auto it = trace.final_state.served.find(trace.requests[i].id);
    if (it != trace.final_state.served.end()) pickups[i] = it->second.pickup;
  }
  return compute_metrics(trace.requests, pickups, bin_seconds, zone_count);
}

/// One JSON object per line: {"t":..,"taxi":..,"pass":..,"kind":"pickup"|"dropoff"}
inline std::string trace_to_jsonl(const SimTrace& trace) {
  std::string out;
  for (const auto& e : trace.events) {
    nlohmann::ordered_json j{{"t", e.t},
                             {"taxi", e.taxi},
                             {"pass", e.passenger},
                             {"kind", e.kind == EventKind::pickup ? "pickup" : "dropoff"}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace evodispatch

#endif  // EVODISPATCH_SIMULATOR_HPP
