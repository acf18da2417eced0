#ifndef EVODISPATCH_METRICS_HPP
#define EVODISPATCH_METRICS_HPP

// Single source for the waiting-time metric, its zone x time-slot heatmap,
// and the search-space size of the joint dispatch problem.

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "network.hpp"
#include "text.hpp"

namespace evodispatch {

/// Passenger delay: max(pickup - request, 0).
constexpr Seconds delay(Seconds pickup, Seconds request) {
  return pickup > request ? pickup - request : 0;
}

struct PassengerDelay {
  PassengerId id = 0;
  Seconds delay_s = 0;
  ZoneId origin;
  std::int64_t bin = 0;  // pickup_time / bin_seconds

  friend bool operator==(const PassengerDelay&, const PassengerDelay&) = default;
};

struct HeatCell {
  ZoneId zone;
  std::int64_t bin = 0;
  double mean_delay_min = 0.0;
  std::size_t count = 0;

  friend bool operator==(const HeatCell&, const HeatCell&) = default;
};

struct Metrics {
  double mean_wait_min = 0.0;
  std::vector<PassengerDelay> per_passenger;
  std::vector<HeatCell> heatmap;  // sorted by (zone, bin)
  double error_rate = 0.0;
  Seconds bin_seconds = 600;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

class UnservedPassengersError : public std::runtime_error {
 public:
  explicit UnservedPassengersError(std::vector<PassengerId> ids)
      : std::runtime_error(describe(ids)), ids_(std::move(ids)) {}
  const std::vector<PassengerId>& ids() const noexcept { return ids_; }

 private:
  static std::string describe(const std::vector<PassengerId>& ids) {
    std::string s = "unserved passengers:";
    for (auto id : ids) s += " " + std::to_string(id);
    return s;
  }
  std::vector<PassengerId> ids_;
};

/// Builds the metric set from request records and their pickup times.
/// `pickups[i]` belongs to `requests[i]`; a missing pickup is an error.
inline Metrics compute_metrics(std::span<const PassengerRequest> requests,
                               std::span<const std::optional<Seconds>> pickups,
                               Seconds bin_seconds, std::size_t zone_count) {
  if (bin_seconds < 1) throw std::invalid_argument("bin_seconds must be >= 1");
  if (requests.size() != pickups.size())
    throw std::invalid_argument("requests and pickups differ in length");
  std::vector<PassengerId> missing;
  for (std::size_t i = 0; i < requests.size(); ++i)
    if (!pickups[i]) missing.push_back(requests[i].id);
  if (!missing.empty()) throw UnservedPassengersError(std::move(missing));

  Metrics m;
  m.bin_seconds = bin_seconds;
  std::map<std::pair<std::uint32_t, std::int64_t>, std::pair<Seconds, std::size_t>> cells;
  Seconds total = 0;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto& r = requests[i];
    if (r.origin.index() >= zone_count) throw std::out_of_range("request origin outside zone set");
    const Seconds d = delay(*pickups[i], r.request_time);
    const std::int64_t bin = *pickups[i] / bin_seconds;
    m.per_passenger.push_back(PassengerDelay{r.id, d, r.origin, bin});
    auto& cell = cells[{r.origin.value, bin}];
    cell.first += d;
    cell.second += 1;
    total += d;
  }
  m.mean_wait_min =
      requests.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(requests.size()) / 60.0;
  for (const auto& [key, agg] : cells) {
    m.heatmap.push_back(HeatCell{ZoneId(key.first), key.second,
                                 static_cast<double>(agg.first) / static_cast<double>(agg.second) / 60.0,
                                 agg.second});
  }
  return m;
}

inline nlohmann::ordered_json metrics_to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["mean_wait_min"] = m.mean_wait_min;
  j["passengers"] = m.per_passenger.size();
  j["bin_seconds"] = m.bin_seconds;
  j["error_rate"] = m.error_rate;
  auto& pp = j["per_passenger"] = nlohmann::ordered_json::array();
  for (const auto& p : m.per_passenger)
    pp.push_back({{"id", p.id}, {"delay_s", p.delay_s}, {"origin", p.origin.value}, {"bin", p.bin}});
  auto& hm = j["heatmap"] = nlohmann::ordered_json::array();
  for (const auto& c : m.heatmap)
    hm.push_back({{"zone", c.zone.value},
                  {"bin", c.bin},
                  {"mean_delay_min", c.mean_delay_min},
                  {"count", c.count}});
  return j;
}

/// CSV columns: zone,bin,mean_delay_min,count
inline std::string heatmap_to_csv(const Metrics& m) {
  std::string out = "zone,bin,mean_delay_min,count\n";
  for (const auto& c : m.heatmap) {
    out += std::to_string(c.zone.value) + "," + std::to_string(c.bin) + "," +
           text::format_double(c.mean_delay_min) + "," + std::to_string(c.count) + "\n";
  }
  return out;
}

using BigInt = boost::multiprecision::cpp_int;

/// Size of the joint state-action space over T decision steps:
/// (V^P * (K!)^V)^T for P passengers, V taxis and K requests per taxi.
inline BigInt search_space_estimate(unsigned passengers, unsigned vehicles, unsigned per_taxi,
                                    unsigned steps) {
  BigInt factorial = 1;
  for (unsigned k = 2; k <= per_taxi; ++k) factorial *= k;
  const BigInt per_step = boost::multiprecision::pow(BigInt(vehicles), passengers) *
                          boost::multiprecision::pow(factorial, vehicles);
  return boost::multiprecision::pow(per_step, steps);
}

}  // namespace evodispatch

#endif  // EVODISPATCH_METRICS_HPP
