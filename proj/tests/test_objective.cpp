#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace evodispatch;
using namespace testsupport;

namespace {

// 1 taxi at zone 0 free at 0, 1 passenger 0 -> 1 at t=0, TR symmetric 300.
struct Tiny {
  TravelTimeMatrix tr = uniform_matrix(2, 300);
  DynContext snap{0, {VehicleState{0, ZoneId(0), 0}}, {PassengerRequest{0, ZoneId(0), ZoneId(1), 0}}};
  Assignment y{{0}};
};

ObjectiveErrorKind parse_error(const std::string& text) {
  try {
    parse_objective(std::string_view(text));
  } catch (const ObjectiveParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "accepted " << text;
  return ObjectiveErrorKind::schema;
}

/// Hand evaluation of a PairLinear expression tree via to_string round trip
/// is circular, so this reference walks the canonical features directly.
double manual_pair(const std::string& which, const PassengerRequest& p, const VehicleState& v,
                   const TravelTimeMatrix& tr) {
  const double o_s = static_cast<double>(tr(p.origin, v.zone));
  const double d_s = static_cast<double>(tr(p.destination, v.zone));
  const double gap = static_cast<double>(p.request_time - v.free_at);
  if (which == "distance") return o_s + d_s;
  if (which == "temporal") return std::abs(gap);
  return 0.0;
}

}  // namespace

TEST(ObjectiveParse, DistanceExample) {
  const auto spec = parse_objective(std::string_view(
      R"({"components":[{"form":"PairLinear","expr":"TR_origin_start + TR_dest_start"}],"weights":[1]})"));
  EXPECT_EQ(spec, builtin_objective("distance"));
}

TEST(ObjectiveParse, Errors) {
  EXPECT_EQ(parse_error(R"({"components":[{"form":"LoadQuadratic"}],"weights":[1,2]})"),
            ObjectiveErrorKind::length_mismatch);
  EXPECT_EQ(parse_error(R"({"components":[{"form":"LoadQuadratic"},{"form":"LoadQuadratic"},{"form":"LoadQuadratic"},
      {"form":"LoadQuadratic"},{"form":"LoadQuadratic"},{"form":"LoadQuadratic"}],"weights":[1,1,1,1,1,1]})"),
            ObjectiveErrorKind::component_count);
  EXPECT_EQ(parse_error(R"({"components":[],"weights":[]})"), ObjectiveErrorKind::component_count);
  EXPECT_EQ(parse_error(R"({"components":[{"form":"PairLinear","expr":"surge * 2"}],"weights":[1]})"),
            ObjectiveErrorKind::unknown_feature);
  EXPECT_EQ(parse_error(R"({"components":[{"form":"PairLinear","expr":"TR_trip * time_gap"}],"weights":[1]})"),
            ObjectiveErrorKind::non_constant_product);
  EXPECT_EQ(parse_error(R"({"components":[{"form":"PairLinear","expr":"TR_trip +"}],"weights":[1]})"),
            ObjectiveErrorKind::syntax);
  EXPECT_EQ(parse_error(R"({"components":[{"form":"Cubic"}],"weights":[1]})"), ObjectiveErrorKind::unknown_feature);
  EXPECT_EQ(parse_error("not json"), ObjectiveErrorKind::syntax);
  EXPECT_EQ(parse_error(R"({"weights":[1]})"), ObjectiveErrorKind::schema);
  EXPECT_EQ(parse_error(R"({"components":[{"form":"LoadQuadratic"}],"weights":["a"]})"), ObjectiveErrorKind::schema);
}

TEST(ObjectiveParse, ConstantProductsFold) {
  const auto e = parse_expr("2 * 3 * TR_trip");
  EXPECT_EQ(to_string(parse_expr(to_string(e))), to_string(e));
  Tiny t;
  EXPECT_DOUBLE_EQ(eval_expr(e, t.snap.passengers[0], t.snap.vehicles[0], t.tr, kDefaultBigM), 1800.0);
  EXPECT_NO_THROW(parse_expr("TR_trip * (1 + 2)"));
}

TEST(Builtins, HandValues) {
  Tiny t;
  EXPECT_DOUBLE_EQ(evaluate(builtin_objective("distance"), t.y, t.snap, t.tr), 300.0);
  EXPECT_DOUBLE_EQ(evaluate(builtin_objective("temporal"), t.y, t.snap, t.tr), 0.0);
  EXPECT_DOUBLE_EQ(evaluate(builtin_objective("utilization"), t.y, t.snap, t.tr), 1.0);
  EXPECT_DOUBLE_EQ(evaluate(builtin_objective("default_composite"), t.y, t.snap, t.tr), 301.0);
  EXPECT_THROW(builtin_objective("nope"), std::invalid_argument);
  for (const auto& n : builtin_names()) EXPECT_TRUE(validate(builtin_objective(n)).empty()) << n;
}

TEST(Evaluate, ZeroWeightsAnnihilate) {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    auto spec = random_objective(rng);
    std::fill(spec.weights.begin(), spec.weights.end(), 0.0);
    const auto tr = random_matrix(rng, 4);
    const auto snap = random_snapshot(rng, 5, 3, 4, 600);
    Assignment y;
    for (std::size_t p = 0; p < 5; ++p) y.taxi_of.push_back(rng.below(3));
    EXPECT_EQ(evaluate(spec, y, snap, tr), 0.0);
  }
}

TEST(Evaluate, ChainWithSingletonsIsZero) {
  Rng rng(2);
  const auto tr = random_matrix(rng, 5);
  const auto snap = random_snapshot(rng, 3, 4, 5, 600);
  const ObjectiveSpec chain{{CostComponent::of(ComponentForm::chain_quadratic)}, {1.0}};
  EXPECT_EQ(evaluate(chain, Assignment{{0, 1, 3}}, snap, tr), 0.0);
  // two passengers together: both ordered pairs counted
  const auto& p = snap.passengers;
  const double both = static_cast<double>(tr(p[0].destination, p[1].origin) + tr(p[1].destination, p[0].origin));
  EXPECT_EQ(evaluate(chain, Assignment{{2, 2, 0}}, snap, tr), both);
}

TEST(Evaluate, PairLinearMatchesManualSums) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto tr = random_matrix(rng, 6);
    const auto snap = random_snapshot(rng, 5, 3, 6, 900, 900);
    Assignment y;
    for (std::size_t p = 0; p < 5; ++p) y.taxi_of.push_back(rng.below(3));
    double dist = 0, temp = 0;
    std::vector<int> load(3, 0);
    for (std::size_t p = 0; p < 5; ++p) {
      dist += manual_pair("distance", snap.passengers[p], snap.vehicles[y.taxi_of[p]], tr);
      temp += manual_pair("temporal", snap.passengers[p], snap.vehicles[y.taxi_of[p]], tr);
      ++load[y.taxi_of[p]];
    }
    const double util = load[0] * load[0] + load[1] * load[1] + load[2] * load[2];
    EXPECT_DOUBLE_EQ(evaluate(builtin_objective("distance"), y, snap, tr), dist);
    EXPECT_DOUBLE_EQ(evaluate(builtin_objective("temporal"), y, snap, tr), temp);
    EXPECT_DOUBLE_EQ(evaluate(builtin_objective("default_composite"), y, snap, tr), dist + temp + util);
  }
}

TEST(Evaluate, RejectsBadAssignment) {
  Tiny t;
  EXPECT_THROW(evaluate(builtin_objective("distance"), Assignment{{1}}, t.snap, t.tr), std::invalid_argument);
  EXPECT_THROW(evaluate(builtin_objective("distance"), Assignment{}, t.snap, t.tr), std::invalid_argument);
}

TEST(Validate, Violations) {
  EXPECT_TRUE(validate(builtin_objective("default_composite")).empty());
  auto inf = builtin_objective("distance");
  inf.weights[0] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(validate(inf).empty());

  std::string deep = "TR_trip";
  for (int i = 0; i < 8; ++i) deep = "abs(" + deep + ")";
  const ObjectiveSpec d9{{CostComponent::pair_linear(parse_expr(deep))}, {1.0}};
  EXPECT_EQ(d9.components[0].expr.depth(), 9);
  EXPECT_FALSE(validate(d9).empty());
  std::string d8 = "TR_trip";
  for (int i = 0; i < 7; ++i) d8 = "abs(" + d8 + ")";
  EXPECT_TRUE(validate({{CostComponent::pair_linear(parse_expr(d8))}, {1.0}}).empty());

  EXPECT_TRUE(validate({{CostComponent::pair_linear(parse_expr("relu(big_m - TR_trip)"))}, {1.0}}).empty());
  EXPECT_FALSE(validate({{CostComponent::pair_linear(parse_expr("abs(relu(big_m))"))}, {1.0}}).empty());
  EXPECT_FALSE(validate({{CostComponent::pair_linear(parse_expr("2000000000 * TR_trip"))}, {1.0}}).empty());
  EXPECT_FALSE(validate({{CostComponent::of(ComponentForm::load_quadratic)}, {1.0, 2.0}}).empty());
  EXPECT_FALSE(validate(ObjectiveSpec{}).empty());
}

TEST(Classify, Examples) {
  EXPECT_EQ(classify(builtin_objective("distance")), ObjectiveClass::linear);
  EXPECT_EQ(classify(builtin_objective("temporal")), ObjectiveClass::linear);
  EXPECT_EQ(classify(builtin_objective("default_composite")), ObjectiveClass::convex_load);
  auto chain = builtin_objective("distance");
  chain.components.push_back(CostComponent::of(ComponentForm::chain_quadratic));
  chain.weights.push_back(0.5);
  EXPECT_EQ(classify(chain), ObjectiveClass::general_quadratic);
  const ObjectiveSpec concave{{CostComponent::of(ComponentForm::load_quadratic)}, {-1.0}};
  EXPECT_EQ(classify(concave), ObjectiveClass::general_quadratic);
}

TEST(ObjectiveProperties, AffineInWeights) {
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_objective(rng);
    auto b = a;
    for (auto& w : b.weights) w = static_cast<double>(rng.uniform_int(-4, 4)) / 2.0;
    auto sum = a;
    for (std::size_t k = 0; k < a.weights.size(); ++k) sum.weights[k] = a.weights[k] + b.weights[k];
    const auto tr = random_matrix(rng, 5);
    const auto snap = random_snapshot(rng, 4, 3, 5, 600);
    Assignment y;
    for (std::size_t p = 0; p < 4; ++p) y.taxi_of.push_back(rng.below(3));
    const double lhs = evaluate(sum, y, snap, tr);
    const double rhs = evaluate(a, y, snap, tr) + evaluate(b, y, snap, tr);
    EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(ObjectiveProperties, ArgminInvariantUnderPositiveScaling) {
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    const auto spec = random_objective(rng);
    auto scaled = spec;
    const double c = 4.0;
    for (auto& w : scaled.weights) w *= c;
    const auto tr = random_matrix(rng, 5);
    const auto snap = random_snapshot(rng, 4, 3, 5, 600);
    std::vector<Assignment> best_a, best_b;
    const double min_a = brute_force_min(spec, snap, tr);
    const double min_b = brute_force_min(scaled, snap, tr);
    for_each_assignment(4, 3, [&](const Assignment& y) {
      if (evaluate(spec, y, snap, tr) == min_a) best_a.push_back(y);
      if (evaluate(scaled, y, snap, tr) == min_b) best_b.push_back(y);
    });
    EXPECT_EQ(best_a, best_b);
  }
}

TEST(ObjectiveProperties, SerializeRoundTrip) {
  Rng rng(6);
  for (int i = 0; i < 300; ++i) {
    const auto spec = random_objective(rng);
    const auto text = serialize(spec);
    const auto back = parse_objective(std::string_view(text));
    EXPECT_EQ(back, spec);
    EXPECT_EQ(serialize(back), text);
  }
}

TEST(ObjectiveProperties, UtilizationLowerBound) {
  // sum of squared loads >= P^2/C, equality exactly when balanced
  for (std::size_t P = 1; P <= 6; ++P)
    for (std::size_t C = 1; C <= 3; ++C) {
      DynContext snap;
      for (std::size_t v = 0; v < C; ++v) snap.vehicles.push_back(VehicleState{TaxiId(v), ZoneId(0), 0});
      for (std::size_t p = 0; p < P; ++p)
        snap.passengers.push_back(PassengerRequest{PassengerId(p), ZoneId(0), ZoneId(1), 0});
      const auto tr = uniform_matrix(2, 1);
      const auto util = builtin_objective("utilization");
      const double bound = static_cast<double>(P * P) / static_cast<double>(C);
      for_each_assignment(P, C, [&](const Assignment& y) {
        const double v = evaluate(util, y, snap, tr);
        EXPECT_GE(v, bound - 1e-12);
        std::vector<std::size_t> load(C, 0);
        for (auto t : y.taxi_of) ++load[t];
        const bool balanced = std::all_of(load.begin(), load.end(), [&](auto l) { return l * C == P; });
        EXPECT_EQ(std::abs(v - bound) < 1e-12, balanced);
      });
    }
}

TEST(ObjectiveProperties, CompiledMatchesEvaluate) {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto spec = random_objective(rng);
    const auto tr = random_matrix(rng, 5);
    const auto snap = random_snapshot(rng, 5, 3, 5, 600);
    const auto m = compile(spec, snap, tr);
    for_each_assignment(5, 3, [&](const Assignment& y) {
      const double a = evaluate(spec, y, snap, tr);
      EXPECT_NEAR(m.value(y), a, 1e-9 * std::max(1.0, std::abs(a)));
    });
  }
}

TEST(Features, Definitions) {
  const auto tr = TravelTimeMatrix(3, {0, 10, 20, 30, 0, 40, 50, 60, 0});
  const PassengerRequest p{0, ZoneId(1), ZoneId(2), 500};
  const VehicleState v{0, ZoneId(0), 120};
  auto f = [&](const char* e) { return eval_expr(parse_expr(e), p, v, tr, 7.0); };
  EXPECT_EQ(f("TR_origin_start"), 30);
  EXPECT_EQ(f("TR_dest_start"), 50);
  EXPECT_EQ(f("TR_trip"), 40);
  EXPECT_EQ(f("time_gap"), 380);
  EXPECT_EQ(f("request_time"), 500);
  EXPECT_EQ(f("avail_time"), 120);
  EXPECT_EQ(f("big_m"), 7);
  EXPECT_EQ(f("relu(avail_time - request_time)"), 0);
  EXPECT_EQ(f("-TR_trip + abs(0 - 5)"), -35);
}
