#ifndef EVODISPATCH_NETWORK_HPP
#define EVODISPATCH_NETWORK_HPP

// Zone graph, OD-frequency ingestion and seeded scenario generation.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <regex>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rng.hpp"
#include "text.hpp"

namespace evodispatch {

/// All durations and clock values are whole seconds.
using Seconds = std::int64_t;
using PassengerId = std::uint32_t;
using TaxiId = std::uint32_t;

struct ZoneId {
  std::uint32_t value = 0;

  constexpr ZoneId() = default;
  constexpr explicit ZoneId(std::uint32_t v) : value(v) {}
  constexpr std::size_t index() const { return value; }
  friend constexpr auto operator<=>(ZoneId, ZoneId) = default;
};

enum class ParseErrorKind {
  io,
  malformed,
  non_square,
  negative_entry,
  nonzero_diagonal,
  shape_mismatch,
  all_zero,
  bad_name,
  bad_scenario,
};

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ParseErrorKind kind() const noexcept { return kind_; }

 private:
  ParseErrorKind kind_;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(ParseErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Square numeric table from headerless CSV; returns (side, row-major values).
inline std::pair<std::size_t, std::vector<double>> parse_square_csv(std::string_view csv) {
  const auto rows = text::lines(csv);
  if (rows.empty()) throw ParseError(ParseErrorKind::malformed, "empty CSV");
  const std::size_t n = rows.size();
  std::vector<double> values;
  values.reserve(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto cells = text::split(rows[r], ',');
    if (cells.size() != n) {
      throw ParseError(ParseErrorKind::non_square,
                       "row " + std::to_string(r) + " has " + std::to_string(cells.size()) +
                           " columns, expected " + std::to_string(n));
    }
    for (std::size_t c = 0; c < n; ++c) {
      const auto v = text::parse_double(cells[c]);
      if (!v) {
        throw ParseError(ParseErrorKind::malformed, "cell (" + std::to_string(r) + "," +
                                                        std::to_string(c) + ") is not a number: '" +
                                                        std::string(text::trim(cells[c])) + "'");
      }
      if (*v < 0.0) {
        throw ParseError(ParseErrorKind::negative_entry,
                         "negative entry at (" + std::to_string(r) + "," + std::to_string(c) + ")");
      }
      values.push_back(*v);
    }
  }
  return {n, std::move(values)};
}

}  // namespace detail

/// Dense zone-to-zone travel durations. Zero diagonal, non-negative entries.
class TravelTimeMatrix {
 public:
  TravelTimeMatrix() = default;

  TravelTimeMatrix(std::size_t zone_count, std::vector<Seconds> row_major)
      : n_(zone_count), tr_(std::move(row_major)) {
    if (n_ == 0) throw ParseError(ParseErrorKind::malformed, "travel matrix has no zones");
    if (tr_.size() != n_ * n_)
      throw ParseError(ParseErrorKind::non_square, "travel matrix is not square");
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        const Seconds v = tr_[i * n_ + j];
        if (v < 0)
          throw ParseError(ParseErrorKind::negative_entry,
                           "negative travel time at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        if (i == j && v != 0)
          throw ParseError(ParseErrorKind::nonzero_diagonal,
                           "nonzero diagonal at zone " + std::to_string(i));
      }
    }
  }

  std::size_t zone_count() const { return n_; }
  bool contains(ZoneId z) const { return z.index() < n_; }

  Seconds operator()(ZoneId from, ZoneId to) const { return tr_[from.index() * n_ + to.index()]; }

  Seconds at(ZoneId from, ZoneId to) const {
    if (!contains(from) || !contains(to)) throw std::out_of_range("zone outside travel matrix");
    return (*this)(from, to);
  }

  std::span<const Seconds> row(ZoneId from) const {
    return std::span<const Seconds>(tr_).subspan(from.index() * n_, n_);
  }

  Seconds max_entry() const { return tr_.empty() ? 0 : *std::max_element(tr_.begin(), tr_.end()); }

  /// Stable identifier of the table contents, used as Scenario::matrix_ref.
  std::string fingerprint() const {
    std::uint64_t h = fnv1a64(std::to_string(n_));
    for (Seconds v : tr_) h = fnv1a64(std::to_string(v) + ",", h);
    std::ostringstream ss;
    ss << "tt-" << std::hex << std::setw(16) << std::setfill('0') << h;
    return ss.str();
  }

  friend bool operator==(const TravelTimeMatrix&, const TravelTimeMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<Seconds> tr_;
};

/// Non-integer cells are rounded to the nearest second.
inline TravelTimeMatrix parse_travel_matrix(std::string_view csv) {
  auto [n, values] = detail::parse_square_csv(csv);
  std::vector<Seconds> secs(values.size());
  std::transform(values.begin(), values.end(), secs.begin(),
                 [](double v) { return static_cast<Seconds>(std::llround(v)); });
  return TravelTimeMatrix(n, std::move(secs));
}

inline TravelTimeMatrix load_travel_matrix(const std::filesystem::path& path) {
  return parse_travel_matrix(detail::read_file(path));
}

/// Raw OD trip weights; normalized only when sampling.
class OdFrequency {
 public:
  OdFrequency() = default;

  OdFrequency(std::size_t zone_count, std::vector<double> row_major)
      : n_(zone_count), w_(std::move(row_major)) {
    if (w_.size() != n_ * n_ || n_ == 0)
      throw ParseError(ParseErrorKind::non_square, "OD table is not square");
    bool any_positive = false;
    for (double v : w_) {
      if (!std::isfinite(v)) throw ParseError(ParseErrorKind::malformed, "non-finite OD weight");
      if (v < 0.0) throw ParseError(ParseErrorKind::negative_entry, "negative OD weight");
      any_positive = any_positive || v > 0.0;
    }
    if (!any_positive) throw ParseError(ParseErrorKind::all_zero, "OD table has no positive entry");
  }

  std::size_t zone_count() const { return n_; }
  double operator()(ZoneId o, ZoneId d) const { return w_[o.index() * n_ + d.index()]; }
  std::span<const double> weights() const { return w_; }

  friend bool operator==(const OdFrequency&, const OdFrequency&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> w_;
};

inline OdFrequency parse_od_frequency(std::string_view csv) {
  auto [n, values] = detail::parse_square_csv(csv);
  return OdFrequency(n, std::move(values));
}

inline OdFrequency load_od_frequency(const std::filesystem::path& path) {
  return parse_od_frequency(detail::read_file(path));
}

inline OdFrequency load_od_frequency(const std::filesystem::path& path,
                                     const TravelTimeMatrix& matrix) {
  auto freq = load_od_frequency(path);
  if (freq.zone_count() != matrix.zone_count()) {
    throw ParseError(ParseErrorKind::shape_mismatch,
                     "OD table has " + std::to_string(freq.zone_count()) +
                         " zones but travel matrix has " + std::to_string(matrix.zone_count()));
  }
  return freq;
}

struct ScenarioSpec {
  std::uint32_t passengers = 1;
  std::uint32_t taxis = 1;
  Seconds window = 1;
  std::uint64_t seed = 0;

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

struct PassengerRequest {
  PassengerId id = 0;
  ZoneId origin;
  ZoneId destination;
  Seconds request_time = 0;

  friend bool operator==(const PassengerRequest&, const PassengerRequest&) = default;
};

struct TaxiInit {
  TaxiId id = 0;
  ZoneId start_zone;
  Seconds available_at = 0;

  friend bool operator==(const TaxiInit&, const TaxiInit&) = default;
};

struct Scenario {
  ScenarioSpec spec;
  std::vector<PassengerRequest> requests;
  std::vector<TaxiInit> fleet;
  std::string matrix_ref;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline std::string format_scenario_name(const ScenarioSpec& spec) {
  return "P" + std::to_string(spec.passengers) + "_C" + std::to_string(spec.taxis) + "_T" +
         std::to_string(spec.window);
}

/// "P200_C100_T1200" -> (200, 100, 1200); seed is left at 0.
inline ScenarioSpec parse_scenario_name(std::string_view name) {
  static const std::regex pattern(R"(^P([0-9]+)_C([0-9]+)_T([0-9]+)$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(name.begin(), name.end(), m, pattern)) {
    throw ParseError(ParseErrorKind::bad_name,
                     "scenario name '" + std::string(name) + "' does not match P<int>_C<int>_T<int>");
  }
  const auto p = text::parse_int<std::uint32_t>(std::string_view(&*m[1].first, m[1].length()));
  const auto c = text::parse_int<std::uint32_t>(std::string_view(&*m[2].first, m[2].length()));
  const auto t = text::parse_int<Seconds>(std::string_view(&*m[3].first, m[3].length()));
  if (!p || !c || !t || *p < 1 || *c < 1 || *t < 1) {
    throw ParseError(ParseErrorKind::bad_name,
                     "scenario name '" + std::string(name) + "' has out-of-range fields");
  }
  return ScenarioSpec{*p, *c, *t, 0};
}

/// Throws ParseError(bad_scenario) on the first violated invariant.
inline void validate_scenario(const Scenario& s, std::size_t zone_count) {
  auto fail = [](const std::string& msg) { throw ParseError(ParseErrorKind::bad_scenario, msg); };
  if (s.spec.passengers < 1 || s.spec.taxis < 1 || s.spec.window < 1)
    fail("scenario spec needs P >= 1, C >= 1, T >= 1");
  if (s.requests.size() != s.spec.passengers) fail("request count does not match spec");
  if (s.fleet.size() != s.spec.taxis) fail("fleet size does not match spec");
  for (std::size_t i = 0; i < s.requests.size(); ++i) {
    const auto& r = s.requests[i];
    if (r.id != i) fail("request ids must be 0..P-1 in order");
    if (r.origin.index() >= zone_count || r.destination.index() >= zone_count)
      fail("request " + std::to_string(i) + " references a zone outside the matrix");
    if (r.origin == r.destination) fail("request " + std::to_string(i) + " has origin == destination");
    if (r.request_time < 0 || r.request_time > s.spec.window)
      fail("request " + std::to_string(i) + " lies outside the request window");
    if (i > 0 && r.request_time < s.requests[i - 1].request_time)
      fail("request times must be sorted");
  }
  for (std::size_t i = 0; i < s.fleet.size(); ++i) {
    const auto& t = s.fleet[i];
    if (t.id != i) fail("taxi ids must be 0..C-1 in order");
    if (t.start_zone.index() >= zone_count) fail("taxi " + std::to_string(i) + " starts outside the matrix");
    if (t.available_at < 0) fail("taxi " + std::to_string(i) + " has negative availability");
  }
}

namespace detail {

/// Index into `cumulative` drawn proportionally to the increments.
inline std::size_t sample_cumulative(const std::vector<double>& cumulative, Rng& rng) {
  const double u = rng.uniform01() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return static_cast<std::size_t>(std::min<std::ptrdiff_t>(
      it - cumulative.begin(), static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
}

}  // namespace detail

/// Seeded synthetic demand. OD pairs are drawn proportionally to the
/// off-diagonal OD weights, request times uniformly on [0, T] then sorted,
/// taxi start zones proportionally to off-diagonal row sums.
inline Scenario generate_scenario(const ScenarioSpec& spec, const OdFrequency& freq,
                                  const TravelTimeMatrix& matrix) {
  if (freq.zone_count() != matrix.zone_count())
    throw std::invalid_argument("OD table and travel matrix disagree on zone count");
  if (spec.passengers < 1 || spec.taxis < 1 || spec.window < 1)
    throw std::invalid_argument("scenario spec needs P >= 1, C >= 1, T >= 1");
  const std::size_t n = freq.zone_count();

  std::vector<double> od_cum;
  std::vector<std::pair<ZoneId, ZoneId>> od_cells;
  std::vector<double> row_sum(n, 0.0);
  double acc = 0.0;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double w = freq(ZoneId(i), ZoneId(j));
      if (w <= 0.0) continue;
      acc += w;
      row_sum[i] += w;
      od_cum.push_back(acc);
      od_cells.emplace_back(ZoneId(i), ZoneId(j));
    }
  }
  if (od_cells.empty()) throw std::invalid_argument("OD table has no positive off-diagonal entry");

  Rng rng(spec.seed);
  Scenario out;
  out.spec = spec;
  out.matrix_ref = matrix.fingerprint();
  out.requests.reserve(spec.passengers);
  for (std::uint32_t p = 0; p < spec.passengers; ++p) {
    const Seconds t = rng.uniform_int(0, spec.window);
    const auto& [o, d] = od_cells[detail::sample_cumulative(od_cum, rng)];
    out.requests.push_back(PassengerRequest{p, o, d, t});
  }
  std::stable_sort(out.requests.begin(), out.requests.end(),
                   [](const auto& a, const auto& b) { return a.request_time < b.request_time; });
  for (std::uint32_t p = 0; p < spec.passengers; ++p) out.requests[p].id = p;

  std::vector<double> zone_cum;
  std::vector<ZoneId> zones;
  acc = 0.0;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (row_sum[i] <= 0.0) continue;
    acc += row_sum[i];
    zone_cum.push_back(acc);
    zones.emplace_back(i);
  }
  out.fleet.reserve(spec.taxis);
  for (std::uint32_t v = 0; v < spec.taxis; ++v)
    out.fleet.push_back(TaxiInit{v, zones[detail::sample_cumulative(zone_cum, rng)], 0});
  return out;
}

/// A small gridded city: zones on a near-square grid, travel time
/// 60 s + 180 s per Manhattan block, gravity-model OD weights with a few
/// seeded hot spots. Stands in for the aggregated taxi-trip tables.
struct SyntheticCity {
  TravelTimeMatrix matrix;
  OdFrequency freq;
};

inline SyntheticCity make_synthetic_city(std::size_t zones = 19, std::uint64_t seed = 0) {
  if (zones < 2) throw std::invalid_argument("a synthetic city needs at least 2 zones");
  const auto width = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(zones))));
  auto blocks = [&](std::size_t a, std::size_t b) {
    const auto dx = static_cast<Seconds>(a % width) - static_cast<Seconds>(b % width);
    const auto dy = static_cast<Seconds>(a / width) - static_cast<Seconds>(b / width);
    return std::abs(dx) + std::abs(dy);
  };
  Rng rng(seed ^ 0x5eedc17ULL);
  std::vector<double> attraction(zones);
  for (auto& a : attraction) a = 0.2 + 1.8 * rng.uniform01();
  for (int k = 0; k < 3; ++k) attraction[rng.below(zones)] *= 3.0;

  std::vector<Seconds> tr(zones * zones, 0);
  std::vector<double> w(zones * zones, 0.0);
  for (std::size_t i = 0; i < zones; ++i) {
    for (std::size_t j = 0; j < zones; ++j) {
      if (i == j) continue;
      const Seconds m = blocks(i, j);
      tr[i * zones + j] = 60 + 180 * m;
      // Rounded so CSV export and re-import reproduce the table exactly.
      const double g = attraction[i] * attraction[j] * std::exp(-static_cast<double>(m) / 3.0);
      w[i * zones + j] = std::round(g * 1e6) / 1e6;
    }
  }
  return SyntheticCity{TravelTimeMatrix(zones, std::move(tr)), OdFrequency(zones, std::move(w))};
}

inline std::string to_csv(const TravelTimeMatrix& m) {
  std::string out;
  for (std::uint32_t i = 0; i < m.zone_count(); ++i) {
    for (std::uint32_t j = 0; j < m.zone_count(); ++j) {
      if (j) out += ',';
      out += std::to_string(m(ZoneId(i), ZoneId(j)));
    }
    out += '\n';
  }
  return out;
}

inline std::string to_csv(const OdFrequency& f) {
  std::string out;
  for (std::uint32_t i = 0; i < f.zone_count(); ++i) {
    for (std::uint32_t j = 0; j < f.zone_count(); ++j) {
      if (j) out += ',';
      out += text::format_double(f(ZoneId(i), ZoneId(j)));
    }
    out += '\n';
  }
  return out;
}

// JSON replay format: {"spec":{...},"matrix_ref":"...","requests":[...],"fleet":[...]}

inline void to_json(nlohmann::ordered_json& j, const ScenarioSpec& s) {
  j = nlohmann::ordered_json{{"passengers", s.passengers},
                             {"taxis", s.taxis},
                             {"window", s.window},
                             {"seed", s.seed},
                             {"name", format_scenario_name(s)}};
}

inline void to_json(nlohmann::ordered_json& j, const PassengerRequest& r) {
  j = nlohmann::ordered_json{{"id", r.id},
                             {"origin", r.origin.value},
                             {"destination", r.destination.value},
                             {"request_time", r.request_time}};
}

inline void to_json(nlohmann::ordered_json& j, const TaxiInit& t) {
  j = nlohmann::ordered_json{
      {"id", t.id}, {"start_zone", t.start_zone.value}, {"available_at", t.available_at}};
}

inline nlohmann::ordered_json scenario_to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  j["spec"] = s.spec;
  j["matrix_ref"] = s.matrix_ref;
  j["requests"] = s.requests;
  j["fleet"] = s.fleet;
  return j;
}

/// Parses the replay format; structural problems surface as ParseError.
inline Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    Scenario s;
    const auto& spec = j.at("spec");
    s.spec.passengers = spec.at("passengers").get<std::uint32_t>();
    s.spec.taxis = spec.at("taxis").get<std::uint32_t>();
    s.spec.window = spec.at("window").get<Seconds>();
    s.spec.seed = spec.value("seed", std::uint64_t{0});
    s.matrix_ref = j.value("matrix_ref", std::string{});
    for (const auto& r : j.at("requests")) {
      s.requests.push_back(PassengerRequest{r.at("id").get<PassengerId>(),
                                            ZoneId(r.at("origin").get<std::uint32_t>()),
                                            ZoneId(r.at("destination").get<std::uint32_t>()),
                                            r.at("request_time").get<Seconds>()});
    }
    for (const auto& t : j.at("fleet")) {
      s.fleet.push_back(TaxiInit{t.at("id").get<TaxiId>(),
                                 ZoneId(t.at("start_zone").get<std::uint32_t>()),
                                 t.value("available_at", Seconds{0})});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseErrorKind::bad_scenario, std::string("scenario JSON: ") + e.what());
  }
}

inline Scenario load_scenario(const std::filesystem::path& path, std::size_t zone_count) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(ParseErrorKind::malformed, path.string() + ": " + e.what());
  }
  auto s = scenario_from_json(j);
  validate_scenario(s, zone_count);
  return s;
}

}  // namespace evodispatch

#endif  // EVODISPATCH_NETWORK_HPP
