#include <gtest/gtest.h>

#include "support.hpp"

using namespace evodispatch;
using namespace testsupport;

namespace {

Individual member(double fitness, std::size_t id = 0) {
  Individual i;
  i.id = id;
  i.fitness = fitness;
  return i;
}

Population ranked(std::size_t n) {
  Population pop;
  for (std::size_t i = 0; i < n; ++i) pop.push_back(member(static_cast<double>(i + 1), i));
  return pop;
}

std::vector<double> fitnesses(const Population& pop) {
  std::vector<double> v;
  for (const auto& i : pop) v.push_back(i.fitness);
  return v;
}

struct Bench {
  SyntheticCity city = make_synthetic_city();
  Scenario scenario;
  explicit Bench(const std::string& name, std::uint64_t seed = 1) {
    auto spec = parse_scenario_name(name);
    spec.seed = seed;
    scenario = generate_scenario(spec, city.freq, city.matrix);
  }
};

GeneratorConfig mock(double invalid = 0.0, std::uint64_t seed = 0) {
  GeneratorConfig c;
  c.mock_invalid_rate = invalid;
  c.mock_seed = seed;
  return c;
}

}  // namespace

TEST(Plan, ExtremeParameters) {
  Rng rng(1);
  const auto pop = ranked(5);
  HsParams all_w2{1.0, 1.0, 5, 10, 50, 0};
  for (const auto& c : generate_plan(pop, all_w2, rng)) {
    EXPECT_EQ(c.kind, OperatorKind::w2_heuristic);
    ASSERT_TRUE(c.parent.has_value());
    EXPECT_LT(*c.parent, 5u);
  }
  HsParams all_w1{0.0, 0.5, 5, 10, 50, 0};
  for (const auto& c : generate_plan(pop, all_w1, rng)) EXPECT_EQ(c.kind, OperatorKind::w1_random);
  for (const auto& c : generate_plan(pop, all_w2, rng, true)) EXPECT_EQ(c.kind, OperatorKind::w1_random);
  for (const auto& c : generate_plan({}, all_w2, rng)) EXPECT_EQ(c.kind, OperatorKind::w1_random);
}

TEST(Plan, OperatorFrequencies) {
  Rng rng(2);
  const auto pop = ranked(5);
  HsParams p;
  p.steps = 100000;
  std::array<int, 3> n{};
  for (const auto& c : generate_plan(pop, p, rng)) ++n[static_cast<int>(c.kind)];
  EXPECT_NEAR(n[0] / 1e5, 0.10, 0.01);
  EXPECT_NEAR(n[1] / 1e5, 0.18, 0.01);
  EXPECT_NEAR(n[2] / 1e5, 0.72, 0.01);
}

TEST(Select, Weights) {
  Rng rng(3);
  EXPECT_EQ(select_individual(ranked(1), rng), 0u);
  const auto pop = ranked(5);
  std::array<int, 5> n{};
  for (int i = 0; i < 100000; ++i) ++n[select_individual(pop, rng)];
  for (std::size_t r = 0; r < 5; ++r) EXPECT_NEAR(n[r] / 1e5, (5.0 - static_cast<double>(r)) / 15.0, 0.01);
  Population flat(4, member(2.0));
  for (int i = 0; i < 100; ++i) EXPECT_LT(select_individual(flat, rng), 4u);
  EXPECT_THROW(select_individual({}, rng), std::invalid_argument);
}

TEST(Population, UpdateExamples) {
  auto pop = ranked(0);
  for (double f : {3, 5, 7, 9, 11}) pop.push_back(member(f));
  EXPECT_EQ(fitnesses(update_population(pop, {member(4)}, 5)), (std::vector<double>{3, 4, 5, 7, 9}));
  EXPECT_EQ(fitnesses(update_population(pop, {member(20), member(30)}, 5)), fitnesses(pop));
  EXPECT_EQ(fitnesses(update_population({}, {member(9), member(1), member(5)}, 3)), (std::vector<double>{1, 5, 9}));
}

TEST(Condensed, StructureAndRoundTrip) {
  Individual ind;
  ind.fitness = 3.25;
  for (int t = 0; t < 4; ++t) {
    StepRecord s;
    s.objective = builtin_objective(t % 2 ? "distance" : "default_composite");
    s.raw = std::string(500, 'x');
    s.snapshot_digest = "snap";
    ind.per_step.push_back(s);
    ind.plan.push_back({OperatorKind::w1_random, std::nullopt});
  }
  const auto c = token_select(ind);
  std::size_t steps = 0, fit = 0;
  for (auto l : text::lines(c)) {
    steps += l.starts_with("step ");
    fit += l.starts_with("fitness: ");
  }
  EXPECT_EQ(steps, 4u);
  EXPECT_EQ(fit, 1u);
  EXPECT_LT(c.size(), individual_to_json(ind).dump().size());
  const auto back = parse_condensed(c);
  ASSERT_EQ(back.objectives.size(), 4u);
  EXPECT_EQ(back.objectives[1], builtin_objective("distance"));
  EXPECT_DOUBLE_EQ(back.fitness, 3.25);
}

TEST(Evolution, QueryCounts) {
  Bench s("P20_C10_T1200");
  HsParams p;
  p.iterations = 2;
  p.pop_size = 3;
  Generator closed_gen(mock());
  const auto closed = run_evolution(s.scenario, s.city.matrix, p, closed_gen);
  for (const auto& it : closed.iterations)
    for (const auto& ind : it.evaluated) EXPECT_EQ(ind.queries, 4u);
  EXPECT_EQ(closed_gen.query_count(), 2u * 3u * 4u);

  Generator open_gen(mock());
  EvolutionOptions o;
  o.mode = LoopMode::open_loop;
  const auto open = run_evolution(s.scenario, s.city.matrix, p, open_gen, o);
  for (const auto& it : open.iterations)
    for (const auto& ind : it.evaluated) {
      EXPECT_EQ(ind.queries, 1u);
      ASSERT_EQ(ind.per_step.size(), 4u);
      for (const auto& st : ind.per_step) EXPECT_EQ(st.objective, ind.per_step[0].objective);
    }
  EXPECT_EQ(open_gen.query_count(), 6u);
}

TEST(Evolution, PaperConfigurationIsElitist) {
  Bench s("P15_C8_T600", 2);
  HsParams p;
  p.rng_seed = 11;
  Generator gen(mock(0.2, 4));
  const auto r = run_evolution(s.scenario, s.city.matrix, p, gen);
  ASSERT_EQ(r.iterations.size(), 10u);
  for (std::size_t i = 0; i < r.iterations.size(); ++i) {
    EXPECT_EQ(r.iterations[i].evaluated.size(), 5u);
    if (i > 0) EXPECT_LE(r.iterations[i].best, r.iterations[i - 1].best);
  }
  for (const auto& ind : r.iterations[0].evaluated)
    for (const auto& c : ind.plan) EXPECT_EQ(c.kind, OperatorKind::w1_random);
  EXPECT_EQ(r.population.size(), 5u);
  EXPECT_TRUE(std::is_sorted(r.population.begin(), r.population.end(),
                             [](const auto& a, const auto& b) { return a.fitness < b.fitness; }));
}

TEST(Evolution, ErrorsMatchFallbackEpochs) {
  Bench s("P10_C6_T1200", 3);
  HsParams p;
  p.iterations = 3;
  p.pop_size = 4;
  Generator gen(mock(0.5, 9));
  const auto r = run_evolution(s.scenario, s.city.matrix, p, gen);
  std::size_t errors = 0, queries = 0;
  for (const auto& it : r.iterations)
    for (const auto& ind : it.evaluated)
      for (const auto& st : ind.per_step) {
        queries += st.queried;
        if (st.error) {
          ++errors;
          EXPECT_EQ(st.objective, builtin_objective("default_composite"));
          EXPECT_FALSE(extract_objective(st.raw).ok());
        } else {
          EXPECT_TRUE(extract_objective(st.raw).ok());
        }
      }
  EXPECT_EQ(errors, r.errors);
  EXPECT_EQ(queries, r.queries);
  EXPECT_GT(errors, 0u);
  EXPECT_LT(errors, queries);
}

TEST(Evolution, ReproducibleAndWorkerIndependent) {
  Bench s("P12_C6_T600", 4);
  HsParams p;
  p.iterations = 3;
  p.pop_size = 4;
  p.rng_seed = 5;
  Generator g1(mock(0.1, 2)), g2(mock(0.1, 2));
  EvolutionOptions parallel;
  parallel.workers = 3;
  const auto a = report_to_json(run_evolution(s.scenario, s.city.matrix, p, g1)).dump();
  const auto b = report_to_json(run_evolution(s.scenario, s.city.matrix, p, g2, parallel)).dump();
  EXPECT_EQ(a, b);
}

TEST(Evolution, ReplayedBestMatchesFitness) {
  Bench s("P12_C6_T900", 5);
  HsParams p;
  p.iterations = 2;
  p.pop_size = 3;
  Generator gen(mock());
  const auto r = run_evolution(s.scenario, s.city.matrix, p, gen);
  const auto& best = r.best();
  std::vector<ObjectiveSpec> per_epoch;
  for (const auto& st : best.per_step) per_epoch.push_back(st.objective);
  const auto replay = run_dispatch(s.scenario, s.city.matrix,
                                   [&](std::size_t e, const DynContext&) { return per_epoch.at(e); });
  EXPECT_EQ(replay.metrics.mean_wait_min, best.fitness);
}

TEST(Params, Validation) {
  HsParams p;
  EXPECT_TRUE(validate(p).empty());
  p.hmcr = 1.5;
  EXPECT_FALSE(validate(p).empty());
  p = HsParams{};
  p.pop_size = 0;
  EXPECT_FALSE(validate(p).empty());
}
