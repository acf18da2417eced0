#ifndef EVODISPATCH_EVOLVE_HPP
#define EVODISPATCH_EVOLVE_HPP

// Harmony search over objective-generating prompt plans. An individual is a
// sequence of per-epoch objectives; its fitness is the mean passenger wait
// (minutes) of the run they produced.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dispatch.hpp"
#include "generator.hpp"
#include "network.hpp"
#include "objective.hpp"
#include "rng.hpp"
#include "simulator.hpp"
#include "text.hpp"

namespace evodispatch {

struct HsParams {
  double hmcr = 0.9;
  double par = 0.2;
  std::size_t pop_size = 5;
  std::size_t iterations = 10;
  std::size_t steps = 4;
  std::uint64_t rng_seed = 0;
};

inline std::vector<std::string> validate(const HsParams& p) {
  std::vector<std::string> out;
  if (!(p.hmcr >= 0.0 && p.hmcr <= 1.0)) out.push_back("hmcr must lie in [0, 1]");
  if (!(p.par >= 0.0 && p.par <= 1.0)) out.push_back("par must lie in [0, 1]");
  if (p.pop_size < 1) out.push_back("population size must be >= 1");
  if (p.iterations < 1) out.push_back("iterations must be >= 1");
  if (p.steps < 1) out.push_back("steps must be >= 1");
  return out;
}

struct StepRecord {
  std::string snapshot_digest;
  ObjectiveSpec objective;
  std::string raw;
  bool error = false;
  bool queried = false;
};

struct Individual {
  std::size_t id = 0;
  std::vector<OperatorChoice> plan;
  std::vector<StepRecord> per_step;
  double fitness = 0.0;
  std::size_t queries = 0;
  std::size_t errors = 0;
};

/// Sorted ascending by fitness, at most N members.
using Population = std::vector<Individual>;

/// Rank-weighted choice: rank r (0 = best) has weight N - r.
inline std::size_t select_individual(const Population& pop, Rng& rng) {
  if (pop.empty()) throw std::invalid_argument("select_individual: empty population");
  const std::uint64_t n = pop.size();
  std::uint64_t x = rng.below(n * (n + 1) / 2);
  for (std::size_t r = 0; r < pop.size(); ++r) {
    const std::uint64_t w = n - r;
    if (x < w) return r;
    x -= w;
  }
  return pop.size() - 1;
}

/// One operator per step. `seed_round` forces W1 everywhere (first
/// iteration); an empty population also falls back to W1.
inline std::vector<OperatorChoice> generate_plan(const Population& pop, const HsParams& params, Rng& rng,
                                                 bool seed_round = false) {
  std::vector<OperatorChoice> plan;
  plan.reserve(params.steps);
  for (std::size_t t = 0; t < params.steps; ++t) {
    if (seed_round || pop.empty()) {
      plan.push_back({OperatorKind::w1_random, std::nullopt});
      continue;
    }
    const double alpha = rng.uniform01();
    if (alpha > params.hmcr) {
      plan.push_back({OperatorKind::w1_random, std::nullopt});
      continue;
    }
    const auto parent = select_individual(pop, rng);
    const bool lambda = rng.bernoulli(params.par);
    plan.push_back({lambda ? OperatorKind::w2_heuristic : OperatorKind::w3_innovative, parent});
  }
  return plan;
}

/// Only the objectives and the fitness survive.
inline std::string token_select(const Individual& ind) {
  std::string out;
  for (std::size_t t = 0; t < ind.per_step.size(); ++t)
    out += "step " + std::to_string(t) + ": " + serialize(ind.per_step[t].objective) + "\n";
  out += "fitness: " + text::format_double(ind.fitness) + "\n";
  return out;
}

struct CondensedIndividual {
  std::vector<ObjectiveSpec> objectives;
  double fitness = 0.0;
};

inline CondensedIndividual parse_condensed(std::string_view condensed) {
  CondensedIndividual out;
  bool have_fitness = false;
  for (auto line : text::lines(condensed)) {
    line = text::trim(line);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("condensed line without ':'");
    const auto head = line.substr(0, colon);
    const auto body = text::trim(line.substr(colon + 1));
    if (head == "fitness") {
      const auto f = text::parse_double(body);
      if (!f) throw std::invalid_argument("bad fitness value");
      out.fitness = *f;
      have_fitness = true;
    } else if (head.substr(0, 5) == "step ") {
      const auto idx = text::parse_int<std::size_t>(head.substr(5));
      if (!idx || *idx != out.objectives.size()) throw std::invalid_argument("steps out of order");
      out.objectives.push_back(parse_objective(body));
    } else {
      throw std::invalid_argument("unexpected condensed line");
    }
  }
  if (!have_fitness) throw std::invalid_argument("condensed text has no fitness line");
  return out;
}

/// Everything kept about an individual, for logs.
inline nlohmann::ordered_json individual_to_json(const Individual& ind) {
  nlohmann::ordered_json j;
  j["id"] = ind.id;
  j["fitness"] = ind.fitness;
  j["queries"] = ind.queries;
  j["errors"] = ind.errors;
  auto& plan = j["plan"] = nlohmann::ordered_json::array();
  for (const auto& c : ind.plan) {
    nlohmann::ordered_json cj{{"operator", operator_name(c.kind)}};
    if (c.parent) cj["parent_rank"] = *c.parent;
    plan.push_back(std::move(cj));
  }
  auto& steps = j["steps"] = nlohmann::ordered_json::array();
  for (const auto& s : ind.per_step)
    steps.push_back({{"snapshot", s.snapshot_digest},
                     {"objective", objective_to_json(s.objective)},
                     {"raw", s.raw},
                     {"error", s.error}});
  return j;
}

/// Merge, stable sort by fitness (incumbents first on ties), keep n.
inline Population update_population(const Population& pop, const std::vector<Individual>& fresh, std::size_t n) {
  Population all = pop;
  all.insert(all.end(), fresh.begin(), fresh.end());
  std::stable_sort(all.begin(), all.end(), [](const Individual& a, const Individual& b) { return a.fitness < b.fitness; });
  if (all.size() > n) all.resize(n);
  return all;
}

enum class LoopMode { closed_loop, open_loop };

struct EvolutionOptions {
  LoopMode mode = LoopMode::closed_loop;
  DispatchOptions dispatch;
  std::size_t workers = 1;
  bool keep_traces = false;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double best = 0.0;
  double mean = 0.0;
  double error_rate = 0.0;
  std::size_t queries = 0;
  std::size_t errors = 0;
  std::vector<Individual> evaluated;
  std::vector<SimTrace> traces;  // only with keep_traces
};

struct EvolutionReport {
  HsParams params;
  LoopMode mode = LoopMode::closed_loop;
  std::vector<IterationRecord> iterations;
  Population population;
  std::size_t queries = 0;
  std::size_t errors = 0;

  const Individual& best() const { return population.front(); }
  double error_rate() const { return queries ? static_cast<double>(errors) / static_cast<double>(queries) : 0.0; }
};

struct RoundResult {
  Individual individual;
  SimTrace trace;
};

/// One individual: a full dispatch run driven by `plan`.
inline RoundResult run_round(const Scenario& scenario, const TravelTimeMatrix& tr, const PromptBundle& bundle,
                             const std::vector<OperatorChoice>& plan, const Population& parents,
                             Generator& gen, const EvolutionOptions& opts, std::uint64_t id = 0) {
  if (plan.empty()) throw std::invalid_argument("empty plan");
  RoundResult out;
  Individual& ind = out.individual;
  ind.plan = plan;
  std::string history;
  std::optional<ObjectiveSpec> fixed;
  auto provider = [&](std::size_t epoch, const DynContext& snap) -> ObjectiveSpec {
    const auto& choice = plan[std::min(epoch, plan.size() - 1)];
    StepRecord rec;
    const std::string dyn = render_dyn(snap, epoch);
    rec.snapshot_digest = "snap-" + std::to_string(fnv1a64(dyn));
    if (opts.mode == LoopMode::open_loop && fixed) {
      rec.objective = *fixed;
    } else {
      std::optional<std::string> parent;
      if (choice.parent) parent = token_select(parents.at(*choice.parent));
      const auto prompt = compose_prompt(bundle, choice, snap, epoch, parent, history);
      auto g = generate_objective(gen, prompt, (id + 1) * 1024 + epoch);
      ++ind.queries;
      rec.queried = true;
      rec.raw = std::move(g.raw);
      rec.error = g.error;
      if (g.error) ++ind.errors;
      rec.objective = std::move(g.spec);
      if (opts.mode == LoopMode::open_loop) fixed = rec.objective;
    }
    std::size_t busy = 0;
    for (const auto& v : snap.vehicles)
      if (v.free_at > snap.clock) ++busy;
    history += "epoch " + std::to_string(epoch) + ": pending " + std::to_string(snap.passengers.size()) +
               ", busy " + std::to_string(busy) + ", objective " + serialize(rec.objective) + "\n";
    ind.per_step.push_back(std::move(rec));
    return ind.per_step.back().objective;
  };
  auto result = run_dispatch(scenario, tr, provider, opts.dispatch);
  ind.fitness = result.metrics.mean_wait_min;
  out.trace = std::move(result.trace);
  return out;
}

inline EvolutionReport run_evolution(const Scenario& scenario, const TravelTimeMatrix& tr, HsParams params,
                                     Generator& gen, const EvolutionOptions& opts = {}) {
  // The plan covers every decision epoch of the scenario.
  params.steps = epoch_count(scenario.spec.window, opts.dispatch.dt);
  const auto problems = validate(params);
  if (!problems.empty()) throw std::invalid_argument("harmony search parameters: " + problems.front());
  const PromptBundle bundle = scenario_bundle(tr);
  Rng rng(params.rng_seed);
  EvolutionReport report;
  report.params = params;
  report.mode = opts.mode;

  for (std::size_t it = 0; it < params.iterations; ++it) {
    const std::size_t n = params.pop_size;
    std::vector<std::vector<OperatorChoice>> plans;
    for (std::size_t k = 0; k < n; ++k) plans.push_back(generate_plan(report.population, params, rng, it == 0));

    std::vector<RoundResult> results(n);
    const Population& parents = report.population;
    auto work = [&](std::size_t k) {
      results[k] = run_round(scenario, tr, bundle, plans[k], parents, gen, opts, it * n + k);
      results[k].individual.id = it * n + k;
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(opts.workers, n));
    if (workers == 1) {
      for (std::size_t k = 0; k < n; ++k) work(k);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> failures(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t k = w; k < n; k += workers) work(k);
          } catch (...) {
            failures[w] = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
      for (auto& f : failures)
        if (f) std::rethrow_exception(f);
    }

    IterationRecord rec;
    rec.iteration = it;
    std::vector<Individual> fresh;
    for (auto& r : results) {
      rec.queries += r.individual.queries;
      rec.errors += r.individual.errors;
      fresh.push_back(r.individual);
      if (opts.keep_traces) rec.traces.push_back(std::move(r.trace));
    }
    report.population = update_population(report.population, fresh, n);
    rec.best = report.population.front().fitness;
    double sum = 0.0;
    for (const auto& m : report.population) sum += m.fitness;
    rec.mean = sum / static_cast<double>(report.population.size());
    rec.error_rate = rec.queries ? static_cast<double>(rec.errors) / static_cast<double>(rec.queries) : 0.0;
    rec.evaluated = std::move(fresh);
    report.queries += rec.queries;
    report.errors += rec.errors;
    report.iterations.push_back(std::move(rec));
  }
  return report;
}

inline nlohmann::ordered_json report_to_json(const EvolutionReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = r.mode == LoopMode::closed_loop ? "closed_loop" : "open_loop";
  j["params"] = {{"hmcr", r.params.hmcr},
                 {"par", r.params.par},
                 {"pop_size", r.params.pop_size},
                 {"iterations", r.params.iterations},
                 {"steps", r.params.steps},
                 {"seed", r.params.rng_seed}};
  auto& its = j["iterations"] = nlohmann::ordered_json::array();
  for (const auto& it : r.iterations)
    its.push_back({{"iteration", it.iteration},
                   {"best", it.best},
                   {"mean", it.mean},
                   {"error_rate", it.error_rate},
                   {"queries", it.queries},
                   {"errors", it.errors}});
  j["queries"] = r.queries;
  j["errors"] = r.errors;
  j["error_rate"] = r.error_rate();
  if (!r.population.empty()) {
    j["best"] = {{"id", r.best().id}, {"fitness", r.best().fitness}, {"condensed", token_select(r.best())}};
  }
  return j;
}

}  // namespace evodispatch

#endif  // EVODISPATCH_EVOLVE_HPP
