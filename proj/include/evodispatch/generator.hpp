#ifndef EVODISPATCH_GENERATOR_HPP
#define EVODISPATCH_GENERATOR_HPP

// Objective generation: prompt assembly, the chat-completions client, a
// deterministic offline mock, and extraction of an ObjectiveSpec from free
// text.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "network.hpp"
#include "objective.hpp"
#include "rng.hpp"
#include "simulator.hpp"
#include "text.hpp"

namespace evodispatch {

enum class OperatorKind { w1_random, w2_heuristic, w3_innovative };

inline constexpr std::string_view operator_name(OperatorKind k) {
  switch (k) {
    case OperatorKind::w1_random: return "W1";
    case OperatorKind::w2_heuristic: return "W2";
    case OperatorKind::w3_innovative: return "W3";
  }
  return "?";
}

struct OperatorChoice {
  OperatorKind kind = OperatorKind::w1_random;
  std::optional<std::size_t> parent;  // rank in the population; W2/W3 only

  friend bool operator==(const OperatorChoice&, const OperatorChoice&) = default;
};

struct PromptBundle {
  std::string sys;
  std::string geo;
  std::string model;
  std::string restriction;
  std::string dyn;
  std::string op;
};

inline constexpr std::size_t kGeoZoneCap = 19;

inline constexpr std::string_view kW1Sentence = "Please generate a new objective for first-level assignment model.";
inline constexpr std::string_view kW2Sentence = "Develop an improved objective function by";
inline constexpr std::string_view kW3Sentence = "Reinvent the objective function from the previous run by";

namespace detail {

inline std::string sys_block() {
  return "## System\n"
         "A simulator streams taxi states and pending ride requests to a dispatcher. Dispatch is split in two "
         "levels: an assignment model chooses y[v,p] (taxi v serves passenger p, each passenger exactly once) "
         "by minimizing the objective you design, then a routing model orders each taxi's passengers to "
         "minimize total passenger waiting time.\n"
         "Your role: design the assignment objective only. Do not solve the problem and do not write code; "
         "answer with one JSON object in the format given at the end.";
}

inline std::string geo_block(const TravelTimeMatrix& tr) {
  const std::size_t n = tr.zone_count();
  const std::size_t shown = std::min(n, kGeoZoneCap);
  std::string out = "## Geography\nzones: " + std::to_string(n) + "\n";
  if (shown < n) out += "showing the first " + std::to_string(shown) + " zones\n";
  out += "travel time in seconds, row = from zone, column = to zone\n";
  for (std::size_t i = 0; i < shown; ++i) {
    for (std::size_t j = 0; j < shown; ++j) {
      if (j) out += ' ';
      out += std::to_string(tr(ZoneId(static_cast<std::uint32_t>(i)), ZoneId(static_cast<std::uint32_t>(j))));
    }
    out += '\n';
  }
  return out.substr(0, out.size() - 1);
}

inline std::string model_block() {
  return "## Assignment model\n"
         "objective = sum_i weights[i] * cost_i, with 1 to 5 cost components.\n"
         "Component forms:\n"
         "  PairLinear      sum over (v,p) of y[v,p] * expr(v,p)\n"
         "  LoadQuadratic   sum over v of (number of passengers on v)^2\n"
         "  LoadDeviation   sum over v of (load_v - P/C)^2\n"
         "  ChainQuadratic  sum over taxis and passenger pairs p<q on the same taxi of "
         "TR(dest p, origin q) + TR(dest q, origin p)\n"
         "Features usable in expr (all in seconds):\n"
         "  TR_origin_start  travel time between passenger origin and taxi start zone\n"
         "  TR_dest_start    travel time between passenger destination and taxi start zone\n"
         "  TR_trip          travel time from passenger origin to destination\n"
         "  time_gap         request_time - avail_time\n"
         "  request_time     passenger request time\n"
         "  avail_time       time the taxi becomes free\n"
         "  big_m            a large constant\n"
         "Operators: + - * (at least one side constant) abs(x) relu(x), numbers, parentheses.\n"
         "Default objective: distance TR_origin_start + TR_dest_start, temporal abs(time_gap), "
         "LoadQuadratic, weights [1, 1, 1].";
}

inline std::string restriction_block() {
  return "## Output format\n"
         "Answer with exactly one JSON object:\n"
         "{\"components\": [{\"form\": \"PairLinear\", \"expr\": \"<expression>\"}, {\"form\": \"LoadQuadratic\"}],\n"
         " \"weights\": [<weight 1>, <weight 2>]}\n"
         "Rules: 1-5 components; weights length equals components length; finite weights with magnitude at "
         "most 1e9; never multiply two features; expression depth at most 8; big_m only inside at most one "
         "abs or relu.";
}

}  // namespace detail

/// The static part of every prompt for a given city.
inline PromptBundle scenario_bundle(const TravelTimeMatrix& tr) {
  PromptBundle b;
  b.sys = detail::sys_block();
  b.geo = detail::geo_block(tr);
  b.model = detail::model_block();
  b.restriction = detail::restriction_block();
  return b;
}

/// Dynamic block. `history` carries a few lines about earlier epochs.
inline std::string render_dyn(const DynContext& snap, std::size_t epoch, std::string_view history = {}) {
  std::size_t busy = 0;
  for (const auto& v : snap.vehicles)
    if (v.free_at > snap.clock) ++busy;
  std::string out = "## Current state\n";
  out += "epoch: " + std::to_string(epoch) + "\n";
  out += "clock: " + std::to_string(snap.clock) + "\n";
  out += "pending_requests: " + std::to_string(snap.passengers.size()) + "\n";
  out += "vehicles: " + std::to_string(snap.vehicles.size()) + "\n";
  out += "busy_vehicles: " + std::to_string(busy) + "\n";
  if (!history.empty()) {
    out += "history:\n";
    out += history;
    if (history.back() != '\n') out += '\n';
  }
  for (const auto& v : snap.vehicles)
    out += "vehicle " + std::to_string(v.id) + " zone " + std::to_string(v.zone.value) + " free_at " +
           std::to_string(v.free_at) + "\n";
  for (const auto& p : snap.passengers)
    out += "request " + std::to_string(p.id) + " origin " + std::to_string(p.origin.value) + " destination " +
           std::to_string(p.destination.value) + " request_time " + std::to_string(p.request_time) + "\n";
  out.pop_back();
  return out;
}

inline std::string render_operator(const OperatorChoice& choice, const std::optional<std::string>& parent) {
  switch (choice.kind) {
    case OperatorKind::w1_random:
      return "## Task\n" + std::string(kW1Sentence);
    case OperatorKind::w2_heuristic:
      if (!parent) throw std::invalid_argument("W2 needs a parent");
      return "## Task\n" + std::string(kW2Sentence) +
             "\n(a) Temporal alignment: incorporate taxi-passenger arrival time coordination.\n"
             "(b) Resource weighting: adaptive taxi utilization coefficients.\n"
             "(c) Structural preservation: Maintain 50% legacy objective components.\n"
             "Previous objectives and their fitness (mean wait, minutes):\n" +
             *parent;
    case OperatorKind::w3_innovative:
      if (!parent) throw std::invalid_argument("W3 needs a parent");
      return "## Task\n" + std::string(kW3Sentence) +
             "\n(a) Emphasis on goals: choose first-level decisions y[v,p] to minimize the expected "
             "second-level waiting sum_p E[max(DP_p - request_time_p, 0) | y].\n"
             "(b) Multi-horizon optimization: joint current/future state consideration.\n"
             "(c) Dynamic weight adaptation: time-varying priority coefficients.\n"
             "Previous objectives and their fitness (mean wait, minutes):\n" +
             *parent;
  }
  return {};
}

/// Fixed order: sys, geo, model, dyn, operator, restriction.
inline std::string compose_prompt(const PromptBundle& base, const OperatorChoice& choice, const DynContext& snap,
                                  std::size_t epoch, const std::optional<std::string>& parent = std::nullopt,
                                  std::string_view history = {}) {
  if (base.sys.empty() || base.geo.empty() || base.model.empty())
    throw std::invalid_argument("prompt bundle is missing its scenario blocks");
  PromptBundle b = base;
  b.dyn = render_dyn(snap, epoch, history);
  b.op = render_operator(choice, choice.kind == OperatorKind::w1_random ? std::nullopt : parent);
  return b.sys + "\n\n" + b.geo + "\n\n" + b.model + "\n\n" + b.dyn + "\n\n" + b.op + "\n\n" + b.restriction + "\n";
}

// ---------------------------------------------------------------------------
// Extraction

struct Extraction {
  std::optional<ObjectiveSpec> spec;
  std::string error;

  bool ok() const { return spec.has_value(); }
};

namespace detail {

/// End of the balanced {...} starting at `open`, honouring JSON strings.
inline std::optional<std::size_t> balanced_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i;
  }
  return std::nullopt;
}

}  // namespace detail

/// The first balanced {...} span that is valid JSON is taken as the answer.
/// Never throws.
inline Extraction extract_objective(std::string_view response) noexcept {
  Extraction out;
  try {
    for (std::size_t pos = response.find('{'); pos != std::string_view::npos;
         pos = response.find('{', pos + 1)) {
      const auto end = detail::balanced_end(response, pos);
      if (!end) continue;
      const auto candidate = response.substr(pos, *end - pos + 1);
      auto j = nlohmann::json::parse(candidate, nullptr, false);
      if (j.is_discarded()) continue;
      auto spec = parse_objective(j);
      const auto violations = validate(spec);
      if (!violations.empty()) {
        out.error = "invalid objective:";
        for (const auto& v : violations) out.error += " " + v + ";";
        return out;
      }
      out.spec = std::move(spec);
      return out;
    }
    out.error = "no JSON object in response";
  } catch (const std::exception& e) {
    out.error = e.what();
  } catch (...) {
    out.error = "unknown extraction failure";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mock responses

namespace detail {

inline const std::vector<std::string>& mock_exprs() {
  static const std::vector<std::string> v{
      "TR_origin_start",
      "TR_origin_start + TR_dest_start",
      "abs(time_gap)",
      "relu(avail_time + TR_origin_start - request_time)",
      "relu(0 - time_gap)",
      "TR_origin_start + 0.5 * TR_trip",
      "abs(avail_time - request_time)",
      "relu(time_gap) + TR_origin_start",
  };
  return v;
}

inline double mock_weight(Rng& rng) {
  static constexpr double w[] = {0.25, 0.5, 1.0, 2.0, 4.0, 10.0, 50.0};
  return w[rng.below(std::size(w))];
}

inline CostComponent mock_component(Rng& rng) {
  const auto r = rng.below(10);
  if (r < 6) return CostComponent::pair_linear(parse_expr(mock_exprs()[rng.below(mock_exprs().size())]));
  if (r < 8) return CostComponent::of(ComponentForm::load_quadratic);
  if (r < 9) return CostComponent::of(ComponentForm::load_deviation);
  return CostComponent::of(ComponentForm::chain_quadratic);
}

inline ObjectiveSpec mock_random(Rng& rng) {
  ObjectiveSpec s;
  const auto n = 1 + rng.below(3);
  for (std::size_t i = 0; i < n; ++i) {
    s.components.push_back(mock_component(rng));
    s.weights.push_back(mock_weight(rng));
  }
  return s;
}

/// Value of "key: <int>" on its own line, if present.
inline std::optional<std::int64_t> find_field(std::string_view prompt, std::string_view key) {
  for (auto line : text::lines(prompt)) {
    line = text::trim(line);
    if (line.size() > key.size() + 1 && line.substr(0, key.size()) == key && line[key.size()] == ':')
      return text::parse_int<std::int64_t>(text::trim(line.substr(key.size() + 1)));
  }
  return std::nullopt;
}

/// Objective for `epoch` in a condensed parent embedded in the prompt.
inline std::optional<ObjectiveSpec> parent_objective(std::string_view prompt, std::int64_t epoch) {
  const std::string key = "step " + std::to_string(epoch) + ":";
  std::optional<ObjectiveSpec> fallback;
  for (auto line : text::lines(prompt)) {
    line = text::trim(line);
    if (line.substr(0, 5) != "step ") continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    try {
      auto spec = parse_objective(text::trim(line.substr(colon + 1)));
      if (line.substr(0, colon + 1) == key) return spec;
      if (!fallback) fallback = std::move(spec);
    } catch (const std::exception&) {
    }
  }
  return fallback;
}

inline std::string wrap(const ObjectiveSpec& s) {
  return "Here is an objective that should work well for this state.\n```json\n" + serialize(s) + "\n```\n";
}

inline std::string mock_invalid(Rng& rng) {
  switch (rng.below(3)) {
    case 0: return "I am unable to design an objective for this state without more information.";
    case 1: {
      std::string comps, weights;
      for (int i = 0; i < 6; ++i) {
        comps += std::string(i ? "," : "") + "{\"form\":\"PairLinear\",\"expr\":\"TR_origin_start\"}";
        weights += std::string(i ? "," : "") + "1";
      }
      return "Objective:\n{\"components\":[" + comps + "],\"weights\":[" + weights + "]}";
    }
    default:
      return "Objective:\n{\"components\":[{\"form\":\"PairLinear\",\"expr\":\"TR_origin_start + surge_factor\"}],"
             "\"weights\":[1]}";
  }
}

}  // namespace detail

/// Deterministic offline response: a function of (seed, prompt) only.
/// `nonce` separates repeated calls with the same prompt, the way sampling
/// does for a real model.
inline std::string mock_response(std::string_view prompt, std::uint64_t seed, double invalid_rate,
                                 std::uint64_t nonce = 0) {
  Rng rng(fnv1a64(prompt, 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL) ^ (nonce * 0xc2b2ae3d27d4eb4fULL)));
  if (rng.bernoulli(invalid_rate)) return detail::mock_invalid(rng);
  const auto epoch = detail::find_field(prompt, "epoch").value_or(0);
  const bool w2 = prompt.find(kW2Sentence) != std::string_view::npos;
  const bool w3 = prompt.find(kW3Sentence) != std::string_view::npos;
  auto parent = (w2 || w3) ? detail::parent_objective(prompt, epoch) : std::nullopt;
  if (w2 && parent) {
    static constexpr double f[] = {0.5, 0.8, 1.25, 2.0};
    for (auto& w : parent->weights) w *= f[rng.below(std::size(f))];
    if (parent->components.size() < kMaxComponents && rng.bernoulli(0.3)) {
      parent->components.push_back(detail::mock_component(rng));
      parent->weights.push_back(detail::mock_weight(rng));
    }
    return detail::wrap(*parent);
  }
  auto fresh = detail::mock_random(rng);
  if (w3 && parent) {
    const auto keep = rng.below(parent->components.size());
    fresh.components.insert(fresh.components.begin(), parent->components[keep]);
    fresh.weights.insert(fresh.weights.begin(), parent->weights[keep]);
  }
  return detail::wrap(fresh);
}

/// Scripted mock that reacts to demand pressure in the state block:
/// (pending + busy taxis) / taxis. Calm states get a distance objective,
/// pressured states a lateness-plus-balance objective.
inline std::string adaptive_mock_response(std::string_view prompt, double threshold = 0.5) {
  const auto pending = detail::find_field(prompt, "pending_requests").value_or(0);
  const auto vehicles = detail::find_field(prompt, "vehicles").value_or(1);
  const auto busy = detail::find_field(prompt, "busy_vehicles").value_or(0);
  const double pressure =
      static_cast<double>(pending + busy) / static_cast<double>(std::max<std::int64_t>(vehicles, 1));
  ObjectiveSpec s;
  if (pressure <= threshold) {
    s.components = {CostComponent::pair_linear(parse_expr("TR_origin_start + TR_dest_start"))};
    s.weights = {1.0};
  } else {
    s.components = {CostComponent::pair_linear(parse_expr("relu(avail_time + TR_origin_start - request_time)")),
                    CostComponent::of(ComponentForm::load_quadratic)};
    s.weights = {1.0, 60.0};
  }
  return detail::wrap(s);
}

// ---------------------------------------------------------------------------
// Client

enum class GeneratorMode { remote, mock, adaptive_mock };

struct GeneratorConfig {
  GeneratorMode mode = GeneratorMode::mock;
  std::string endpoint_url;  // e.g. https://host/v1/chat/completions
  std::string model_name;
  double temperature = 0.9;
  int max_retries = 3;
  std::chrono::milliseconds timeout{60'000};
  std::chrono::milliseconds backoff{500};
  std::string api_key_env = "EVODISPATCH_API_KEY";
  std::string audit_log;  // JSONL, empty = off
  double mock_invalid_rate = 0.0;
  std::uint64_t mock_seed = 0;
  double adaptive_threshold = 0.5;
};

inline std::vector<std::string> validate(const GeneratorConfig& cfg) {
  std::vector<std::string> out;
  if (!(cfg.temperature >= 0.0)) out.push_back("temperature must be >= 0");
  if (!(cfg.mock_invalid_rate >= 0.0 && cfg.mock_invalid_rate <= 1.0))
    out.push_back("mock invalid rate must lie in [0, 1]");
  if (cfg.max_retries < 0) out.push_back("max_retries must be >= 0");
  if (cfg.mode == GeneratorMode::remote && cfg.endpoint_url.empty())
    out.push_back("remote mode needs an endpoint");
  return out;
}

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint must start with http:// or https://");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace detail

/// Thread-safe: the counter is atomic, the audit log is locked and the mock
/// reads nothing but its inputs.
class Generator {
 public:
  explicit Generator(GeneratorConfig cfg) : cfg_(std::move(cfg)) {
    const auto problems = evodispatch::validate(cfg_);
    if (!problems.empty()) throw std::invalid_argument("generator config: " + problems.front());
  }

  const GeneratorConfig& config() const { return cfg_; }
  std::size_t query_count() const { return queries_.load(); }

  /// Raw response text. Throws TransportError when the remote endpoint
  /// cannot be reached after the configured retries.
  std::string query(const std::string& prompt, std::uint64_t nonce = 0) {
    ++queries_;
    std::string response;
    std::string error;
    try {
      switch (cfg_.mode) {
        case GeneratorMode::mock:
          response = mock_response(prompt, cfg_.mock_seed, cfg_.mock_invalid_rate, nonce);
          break;
        case GeneratorMode::adaptive_mock:
          response = adaptive_mock_response(prompt, cfg_.adaptive_threshold);
          break;
        case GeneratorMode::remote:
          response = remote(prompt);
          break;
      }
    } catch (const TransportError& e) {
      error = e.what();
      audit(prompt, response, error);
      throw;
    }
    audit(prompt, response, error);
    return response;
  }

 private:
  std::string remote(const std::string& prompt) {
    const auto url = detail::split_url(cfg_.endpoint_url);
    nlohmann::json body{{"model", cfg_.model_name},
                        {"temperature", cfg_.temperature},
                        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
    const std::string payload = body.dump();
    httplib::Headers headers;
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(cfg_.backoff * (1LL << (attempt - 1)));
      httplib::Client client(url.origin);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
      client.set_connection_timeout(secs.count(), usecs.count());
      client.set_read_timeout(secs.count(), usecs.count());
      client.set_write_timeout(secs.count(), usecs.count());
      auto res = client.Post(url.path, headers, payload, "application/json");
      if (!res) {
        last_error = "transport: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);
      auto j = nlohmann::json::parse(res->body, nullptr, false);
      if (j.is_discarded()) throw TransportError("endpoint returned non-JSON body");
      try {
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const std::exception&) {
        throw TransportError("endpoint response has no choices[0].message.content");
      }
    }
    throw TransportError(last_error + " after " + std::to_string(cfg_.max_retries + 1) + " attempts");
  }

  void audit(const std::string& prompt, const std::string& response, const std::string& error) {
    if (cfg_.audit_log.empty()) return;
    nlohmann::ordered_json j{{"prompt", prompt}, {"response", response}};
    if (!error.empty()) j["error"] = error;
    std::lock_guard lock(audit_mutex_);
    std::ofstream out(cfg_.audit_log, std::ios::app);
    out << j.dump() << '\n';
  }

  GeneratorConfig cfg_;
  std::atomic<std::size_t> queries_{0};
  std::mutex audit_mutex_;
};

/// Objective for one epoch: the generated one, or the default composite
/// when the query or the extraction fails.
struct GeneratedObjective {
  ObjectiveSpec spec;
  std::string raw;
  bool error = false;
  std::string detail;
};

inline GeneratedObjective generate_objective(Generator& gen, const std::string& prompt, std::uint64_t nonce = 0) {
  GeneratedObjective out;
  try {
    out.raw = gen.query(prompt, nonce);
  } catch (const TransportError& e) {
    out.spec = builtin_objective("default_composite");
    out.error = true;
    out.detail = e.what();
    return out;
  }
  auto ex = extract_objective(out.raw);
  if (ex.ok()) {
    out.spec = std::move(*ex.spec);
  } else {
    out.spec = builtin_objective("default_composite");
    out.error = true;
    out.detail = std::move(ex.error);
  }
  return out;
}

}  // namespace evodispatch

#endif  // EVODISPATCH_GENERATOR_HPP
