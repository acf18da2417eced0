#ifndef EVODISPATCH_OBJECTIVE_HPP
#define EVODISPATCH_OBJECTIVE_HPP

// Objective DSL for the first-level assignment.
//
// An objective is a weighted sum of 1-5 cost components. PairLinear
// components are expressions over per-(taxi, passenger) features; the other
// forms are the fleet-load and trip-chaining quadratics. Objectives travel as
// JSON:
//
//   {"components":[{"form":"PairLinear","expr":"TR_origin_start + TR_dest_start"},
//                  {"form":"LoadQuadratic"}],
//    "weights":[1, 0.5]}
//
// Expression grammar (whitespace-insensitive):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary ('*' unary)*          at least one factor must be constant
//   unary   := '-' unary | primary
//   primary := number | feature | ('abs' | 'relu') '(' expr ')' | '(' expr ')'
//
// Features: TR_origin_start = TR(O^p, S^v), TR_dest_start = TR(D^p, S^v),
// TR_trip = TR(O^p, D^p), time_gap = T^p - t_S^v, request_time = T^p,
// avail_time = t_S^v, big_m = M. relu(x) = max(x, 0).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "network.hpp"
#include "simulator.hpp"
#include "text.hpp"

namespace evodispatch {

enum class FeatureKind {
  tr_origin_start,
  tr_dest_start,
  tr_trip,
  time_gap,
  request_time,
  avail_time,
  big_m,
};

inline constexpr std::string_view feature_name(FeatureKind f) {
  switch (f) {
    case FeatureKind::tr_origin_start: return "TR_origin_start";
    case FeatureKind::tr_dest_start: return "TR_dest_start";
    case FeatureKind::tr_trip: return "TR_trip";
    case FeatureKind::time_gap: return "time_gap";
    case FeatureKind::request_time: return "request_time";
    case FeatureKind::avail_time: return "avail_time";
    case FeatureKind::big_m: return "big_m";
  }
  return "?";
}

inline std::optional<FeatureKind> feature_from_name(std::string_view s) {
  for (auto f : {FeatureKind::tr_origin_start, FeatureKind::tr_dest_start, FeatureKind::tr_trip,
                 FeatureKind::time_gap, FeatureKind::request_time, FeatureKind::avail_time,
                 FeatureKind::big_m}) {
    if (feature_name(f) == s) return f;
  }
  return std::nullopt;
}

struct Expr {
  enum class Op { feature, constant, add, sub, neg, mul, abs, relu };

  Op op = Op::constant;
  FeatureKind feature = FeatureKind::tr_trip;
  double value = 0.0;
  std::vector<Expr> args;

  static Expr leaf(FeatureKind f) { return Expr{Op::feature, f, 0.0, {}}; }
  static Expr constant(double v) { return Expr{Op::constant, FeatureKind::tr_trip, v, {}}; }
  static Expr unary(Op op, Expr a) { return Expr{op, FeatureKind::tr_trip, 0.0, {std::move(a)}}; }
  static Expr binary(Op op, Expr a, Expr b) {
    return Expr{op, FeatureKind::tr_trip, 0.0, {std::move(a), std::move(b)}};
  }

  bool has_features() const {
    if (op == Op::feature) return true;
    return std::any_of(args.begin(), args.end(), [](const Expr& e) { return e.has_features(); });
  }

  int depth() const {
    int d = 0;
    for (const auto& a : args) d = std::max(d, a.depth());
    return d + 1;
  }

  friend bool operator==(const Expr& a, const Expr& b) {
    if (a.op != b.op || a.args != b.args) return false;
    if (a.op == Op::feature) return a.feature == b.feature;
    if (a.op == Op::constant) return a.value == b.value;
    return true;
  }
};

enum class ComponentForm { pair_linear, load_quadratic, load_deviation, chain_quadratic };

inline constexpr std::string_view form_name(ComponentForm f) {
  switch (f) {
    case ComponentForm::pair_linear: return "PairLinear";
    case ComponentForm::load_quadratic: return "LoadQuadratic";
    case ComponentForm::load_deviation: return "LoadDeviation";
    case ComponentForm::chain_quadratic: return "ChainQuadratic";
  }
  return "?";
}

struct CostComponent {
  ComponentForm form = ComponentForm::pair_linear;
  Expr expr;  // PairLinear only

  static CostComponent pair_linear(Expr e) { return {ComponentForm::pair_linear, std::move(e)}; }
  static CostComponent of(ComponentForm f) { return {f, {}}; }

  friend bool operator==(const CostComponent& a, const CostComponent& b) {
    return a.form == b.form && (a.form != ComponentForm::pair_linear || a.expr == b.expr);
  }
};

struct ObjectiveSpec {
  std::vector<CostComponent> components;
  std::vector<double> weights;

  friend bool operator==(const ObjectiveSpec&, const ObjectiveSpec&) = default;
};

inline constexpr std::size_t kMaxComponents = 5;
inline constexpr int kMaxExprDepth = 8;
inline constexpr double kMaxCoefficient = 1e9;
inline constexpr double kDefaultBigM = 1e6;

enum class ObjectiveErrorKind {
  syntax,
  unknown_feature,
  non_constant_product,
  length_mismatch,
  component_count,
  non_finite_weight,
  schema,
};

class ObjectiveParseError : public std::runtime_error {
 public:
  ObjectiveParseError(ObjectiveErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ObjectiveErrorKind kind() const noexcept { return kind_; }

 private:
  ObjectiveErrorKind kind_;
};

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string_view src) : src_(src) {}

  Expr parse() {
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, ObjectiveErrorKind kind = ObjectiveErrorKind::syntax) {
    throw ObjectiveParseError(kind, "expression '" + std::string(src_) + "' at offset " +
                                        std::to_string(pos_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  // Subtrees without features collapse to a single constant.
  static Expr fold(Expr e) {
    if (e.op == Expr::Op::constant || e.op == Expr::Op::feature || e.has_features()) return e;
    return Expr::constant(eval_constant(e));
  }

  static double eval_constant(const Expr& e) {
    switch (e.op) {
      case Expr::Op::constant: return e.value;
      case Expr::Op::add: return eval_constant(e.args[0]) + eval_constant(e.args[1]);
      case Expr::Op::sub: return eval_constant(e.args[0]) - eval_constant(e.args[1]);
      case Expr::Op::mul: return eval_constant(e.args[0]) * eval_constant(e.args[1]);
      case Expr::Op::neg: return -eval_constant(e.args[0]);
      case Expr::Op::abs: return std::abs(eval_constant(e.args[0]));
      case Expr::Op::relu: return std::max(eval_constant(e.args[0]), 0.0);
      case Expr::Op::feature: break;
    }
    throw std::logic_error("eval_constant on a feature");
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      if (eat('+')) {
        lhs = fold(Expr::binary(Expr::Op::add, std::move(lhs), parse_product()));
      } else if (eat('-')) {
        lhs = fold(Expr::binary(Expr::Op::sub, std::move(lhs), parse_product()));
      } else {
        return lhs;
      }
    }
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    while (eat('*')) {
      Expr rhs = parse_unary();
      if (lhs.has_features() && rhs.has_features())
        fail("product of two feature expressions", ObjectiveErrorKind::non_constant_product);
      lhs = fold(Expr::binary(Expr::Op::mul, std::move(lhs), std::move(rhs)));
    }
    return lhs;
  }

  Expr parse_unary() {
    if (eat('-')) return fold(Expr::unary(Expr::Op::neg, parse_unary()));
    return parse_primary();
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of expression");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      if (!eat(')')) fail("missing ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const auto start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      const auto word = src_.substr(start, pos_ - start);
      if (word == "abs" || word == "relu") {
        if (!eat('(')) fail("expected '(' after " + std::string(word));
        Expr inner = parse_sum();
        if (!eat(')')) fail("missing ')'");
        return fold(Expr::unary(word == "abs" ? Expr::Op::abs : Expr::Op::relu, std::move(inner)));
      }
      if (const auto f = feature_from_name(word)) return Expr::leaf(*f);
      pos_ = start;
      fail("unknown feature '" + std::string(word) + "'", ObjectiveErrorKind::unknown_feature);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Expr parse_number() {
    const auto start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
      ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    const auto v = text::parse_double(src_.substr(start, pos_ - start));
    if (!v) {
      pos_ = start;
      fail("malformed number");
    }
    return Expr::constant(*v);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

inline void print_expr(const Expr& e, std::string& out) {
  switch (e.op) {
    case Expr::Op::feature: out += feature_name(e.feature); return;
    case Expr::Op::constant:
      if (e.value < 0 || (e.value == 0 && std::signbit(e.value))) {
        out += "(-";
        out += text::format_double(-e.value);
        out += ')';
      } else {
        out += text::format_double(e.value);
      }
      return;
    case Expr::Op::neg:
      out += "(-";
      print_expr(e.args[0], out);
      out += ')';
      return;
    case Expr::Op::abs:
    case Expr::Op::relu:
      out += e.op == Expr::Op::abs ? "abs(" : "relu(";
      print_expr(e.args[0], out);
      out += ')';
      return;
    case Expr::Op::add:
    case Expr::Op::sub:
    case Expr::Op::mul: {
      const char* sym = e.op == Expr::Op::add ? " + " : e.op == Expr::Op::sub ? " - " : " * ";
      out += '(';
      print_expr(e.args[0], out);
      out += sym;
      print_expr(e.args[1], out);
      out += ')';
      return;
    }
  }
}

}  // namespace detail

inline Expr parse_expr(std::string_view src) { return detail::ExprParser(src).parse(); }

/// Canonical text; parse_expr(to_string(e)) == e for parsed expressions.
inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print_expr(e, out);
  return out;
}

/// Parses the JSON objective schema. Throws ObjectiveParseError on syntax
/// errors, unknown features or forms, component/weight length mismatch,
/// more than five components and non-finite weights. Remaining rules are
/// checked by validate().
inline ObjectiveSpec parse_objective(const nlohmann::json& j) {
  using K = ObjectiveErrorKind;
  if (!j.is_object()) throw ObjectiveParseError(K::schema, "objective must be a JSON object");
  if (!j.contains("components") || !j["components"].is_array())
    throw ObjectiveParseError(K::schema, "objective needs a 'components' array");
  if (!j.contains("weights") || !j["weights"].is_array())
    throw ObjectiveParseError(K::schema, "objective needs a 'weights' array");
  const auto& comps = j["components"];
  const auto& weights = j["weights"];
  if (comps.empty() || comps.size() > kMaxComponents)
    throw ObjectiveParseError(K::component_count, "objective needs 1-5 components, got " +
                                                      std::to_string(comps.size()));
  if (weights.size() != comps.size())
    throw ObjectiveParseError(K::length_mismatch, std::to_string(comps.size()) + " components but " +
                                                      std::to_string(weights.size()) + " weights");
  ObjectiveSpec spec;
  for (const auto& c : comps) {
    if (!c.is_object() || !c.contains("form") || !c["form"].is_string())
      throw ObjectiveParseError(K::schema, "component needs a string 'form'");
    const auto form = c["form"].get<std::string>();
    if (form == "PairLinear") {
      if (!c.contains("expr") || !c["expr"].is_string())
        throw ObjectiveParseError(K::schema, "PairLinear component needs a string 'expr'");
      spec.components.push_back(CostComponent::pair_linear(parse_expr(c["expr"].get<std::string>())));
    } else if (form == "LoadQuadratic") {
      spec.components.push_back(CostComponent::of(ComponentForm::load_quadratic));
    } else if (form == "LoadDeviation") {
      spec.components.push_back(CostComponent::of(ComponentForm::load_deviation));
    } else if (form == "ChainQuadratic") {
      spec.components.push_back(CostComponent::of(ComponentForm::chain_quadratic));
    } else {
      throw ObjectiveParseError(K::unknown_feature, "unknown component form '" + form + "'");
    }
  }
  for (const auto& w : weights) {
    if (!w.is_number()) throw ObjectiveParseError(K::schema, "weights must be numbers");
    const double v = w.get<double>();
    if (!std::isfinite(v)) throw ObjectiveParseError(K::non_finite_weight, "non-finite weight");
    spec.weights.push_back(v);
  }
  return spec;
}

inline ObjectiveSpec parse_objective(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ObjectiveParseError(ObjectiveErrorKind::syntax, std::string("objective JSON: ") + e.what());
  }
  return parse_objective(j);
}

inline nlohmann::ordered_json objective_to_json(const ObjectiveSpec& spec) {
  nlohmann::ordered_json j;
  auto& comps = j["components"] = nlohmann::ordered_json::array();
  for (const auto& c : spec.components) {
    nlohmann::ordered_json cj{{"form", form_name(c.form)}};
    if (c.form == ComponentForm::pair_linear) cj["expr"] = to_string(c.expr);
    comps.push_back(std::move(cj));
  }
  j["weights"] = spec.weights;
  return j;
}

inline std::string serialize(const ObjectiveSpec& spec) { return objective_to_json(spec).dump(); }

namespace detail {

inline void check_expr(const Expr& e, int guarded_depth, std::vector<std::string>& out) {
  using Op = Expr::Op;
  switch (e.op) {
    case Op::feature:
      if (e.feature == FeatureKind::big_m && guarded_depth > 1)
        out.push_back("big_m nested inside more than one abs/relu");
      return;
    case Op::constant:
      if (!std::isfinite(e.value)) out.push_back("non-finite constant");
      else if (std::abs(e.value) > kMaxCoefficient)
        out.push_back("constant " + text::format_double(e.value) + " exceeds |c| <= 1e9");
      return;
    case Op::add:
    case Op::sub:
    case Op::mul:
      if (e.args.size() != 2) {
        out.push_back("binary operator with wrong arity");
        return;
      }
      if (e.op == Op::mul && e.args[0].has_features() && e.args[1].has_features())
        out.push_back("product of two feature expressions");
      break;
    case Op::neg:
    case Op::abs:
    case Op::relu:
      if (e.args.size() != 1) {
        out.push_back("unary operator with wrong arity");
        return;
      }
      break;
  }
  const int next = guarded_depth + ((e.op == Op::abs || e.op == Op::relu) ? 1 : 0);
  for (const auto& a : e.args) check_expr(a, next, out);
}

}  // namespace detail

/// Every rule the objective language imposes; empty means valid.
inline std::vector<std::string> validate(const ObjectiveSpec& spec) {
  std::vector<std::string> v;
  if (spec.components.empty() || spec.components.size() > kMaxComponents)
    v.push_back("objective needs 1-5 components, got " + std::to_string(spec.components.size()));
  if (spec.weights.size() != spec.components.size())
    v.push_back("weights length " + std::to_string(spec.weights.size()) +
                " does not match components length " + std::to_string(spec.components.size()));
  for (std::size_t i = 0; i < spec.weights.size(); ++i) {
    const double w = spec.weights[i];
    if (!std::isfinite(w)) v.push_back("weight " + std::to_string(i) + " is not finite");
    else if (std::abs(w) > kMaxCoefficient)
      v.push_back("weight " + std::to_string(i) + " exceeds |w| <= 1e9");
  }
  for (std::size_t i = 0; i < spec.components.size(); ++i) {
    const auto& c = spec.components[i];
    if (c.form != ComponentForm::pair_linear) continue;
    if (c.expr.depth() > kMaxExprDepth)
      v.push_back("component " + std::to_string(i) + " expression depth " +
                  std::to_string(c.expr.depth()) + " exceeds 8");
    detail::check_expr(c.expr, 0, v);
  }
  return v;
}

enum class ObjectiveClass { linear, convex_load, general_quadratic };

/// Solver dispatch. Load terms with a negative net weight are concave and
/// therefore routed to the general solver.
inline ObjectiveClass classify(const ObjectiveSpec& spec) {
  bool chain = false;
  bool load = false;
  double load_weight = 0.0;
  for (std::size_t i = 0; i < spec.components.size(); ++i) {
    switch (spec.components[i].form) {
      case ComponentForm::chain_quadratic: chain = true; break;
      case ComponentForm::load_quadratic:
      case ComponentForm::load_deviation:
        load = true;
        load_weight += spec.weights.at(i);
        break;
      case ComponentForm::pair_linear: break;
    }
  }
  if (chain) return ObjectiveClass::general_quadratic;
  if (load) return load_weight >= 0.0 ? ObjectiveClass::convex_load : ObjectiveClass::general_quadratic;
  return ObjectiveClass::linear;
}

/// Hand-designed objectives: the three single components and their
/// unit-weight sums.
inline ObjectiveSpec builtin_objective(std::string_view name) {
  const auto distance = CostComponent::pair_linear(parse_expr("TR_origin_start + TR_dest_start"));
  const auto temporal = CostComponent::pair_linear(parse_expr("abs(time_gap)"));
  const auto utilization = CostComponent::of(ComponentForm::load_quadratic);
  if (name == "distance") return {{distance}, {1.0}};
  if (name == "temporal") return {{temporal}, {1.0}};
  if (name == "utilization") return {{utilization}, {1.0}};
  if (name == "dist_util") return {{distance, utilization}, {1.0, 1.0}};
  if (name == "temp_util") return {{temporal, utilization}, {1.0, 1.0}};
  if (name == "default_composite") return {{distance, temporal, utilization}, {1.0, 1.0, 1.0}};
  throw std::invalid_argument("unknown builtin objective '" + std::string(name) + "'");
}

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"distance", "temporal", "utilization",
                                              "dist_util", "temp_util", "default_composite"};
  return names;
}

/// First-level decision: `taxi_of[i]` is the index into DynContext::vehicles
/// serving DynContext::passengers[i].
struct Assignment {
  std::vector<std::size_t> taxi_of;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

inline double feature_value(FeatureKind f, const PassengerRequest& p, const VehicleState& v,
                            const TravelTimeMatrix& tr, double big_m) {
  switch (f) {
    case FeatureKind::tr_origin_start: return static_cast<double>(tr.at(p.origin, v.zone));
    case FeatureKind::tr_dest_start: return static_cast<double>(tr.at(p.destination, v.zone));
    case FeatureKind::tr_trip: return static_cast<double>(tr.at(p.origin, p.destination));
    case FeatureKind::time_gap: return static_cast<double>(p.request_time - v.free_at);
    case FeatureKind::request_time: return static_cast<double>(p.request_time);
    case FeatureKind::avail_time: return static_cast<double>(v.free_at);
    case FeatureKind::big_m: return big_m;
  }
  return 0.0;
}

inline double eval_expr(const Expr& e, const PassengerRequest& p, const VehicleState& v,
                        const TravelTimeMatrix& tr, double big_m) {
  using Op = Expr::Op;
  switch (e.op) {
    case Op::feature: return feature_value(e.feature, p, v, tr, big_m);
    case Op::constant: return e.value;
    case Op::add: return eval_expr(e.args[0], p, v, tr, big_m) + eval_expr(e.args[1], p, v, tr, big_m);
    case Op::sub: return eval_expr(e.args[0], p, v, tr, big_m) - eval_expr(e.args[1], p, v, tr, big_m);
    case Op::mul: return eval_expr(e.args[0], p, v, tr, big_m) * eval_expr(e.args[1], p, v, tr, big_m);
    case Op::neg: return -eval_expr(e.args[0], p, v, tr, big_m);
    case Op::abs: return std::abs(eval_expr(e.args[0], p, v, tr, big_m));
    case Op::relu: return std::max(eval_expr(e.args[0], p, v, tr, big_m), 0.0);
  }
  return 0.0;
}

/// Raw (unweighted) value of one component under an assignment.
inline double component_value(const CostComponent& c, const Assignment& y, const DynContext& snap,
                              const TravelTimeMatrix& tr, double big_m = kDefaultBigM) {
  const auto& pass = snap.passengers;
  const std::size_t C = snap.vehicles.size();
  switch (c.form) {
    case ComponentForm::pair_linear: {
      double s = 0.0;
      for (std::size_t i = 0; i < pass.size(); ++i)
        s += eval_expr(c.expr, pass[i], snap.vehicles[y.taxi_of[i]], tr, big_m);
      return s;
    }
    case ComponentForm::load_quadratic:
    case ComponentForm::load_deviation: {
      std::vector<std::int64_t> load(C, 0);
      for (auto v : y.taxi_of) ++load[v];
      std::int64_t sq = 0;
      for (auto l : load) sq += l * l;
      if (c.form == ComponentForm::load_quadratic) return static_cast<double>(sq);
      // sum_v (l_v - P/C)^2 expanded, so assignments with the same load
      // multiset evaluate to bit-identical values.
      const double P = static_cast<double>(pass.size());
      return static_cast<double>(sq) - P * P / static_cast<double>(C);
    }
    case ComponentForm::chain_quadratic: {
      std::int64_t s = 0;
      for (std::size_t a = 0; a < pass.size(); ++a)
        for (std::size_t b = 0; b < pass.size(); ++b)
          if (a != b && y.taxi_of[a] == y.taxi_of[b])
            s += tr.at(pass[a].destination, pass[b].origin);
      return static_cast<double>(s);
    }
  }
  return 0.0;
}

/// sum_i weights_i * component_i(y).
inline double evaluate(const ObjectiveSpec& spec, const Assignment& y, const DynContext& snap,
                       const TravelTimeMatrix& tr, double big_m = kDefaultBigM) {
  if (y.taxi_of.size() != snap.passengers.size())
    throw std::invalid_argument("assignment does not cover every passenger");
  for (auto v : y.taxi_of)
    if (v >= snap.vehicles.size()) throw std::invalid_argument("assignment references unknown taxi");
  double total = 0.0;
  for (std::size_t i = 0; i < spec.components.size(); ++i)
    total += spec.weights[i] * component_value(spec.components[i], y, snap, tr, big_m);
  return total;
}

/// Every objective in the language reduces to
///   sum_p pair[p][v(p)] + load_weight * sum_v load_v^2 + constant
///   + chain_weight * sum over same-taxi unordered pairs of chain[p][q],
/// which is the form the assignment solvers work with.
struct CompiledObjective {
  std::size_t passengers = 0;
  std::size_t taxis = 0;
  std::vector<double> pair;   // passengers x taxis
  double load_weight = 0.0;
  double constant = 0.0;
  double chain_weight = 0.0;
  std::vector<double> chain;  // passengers x passengers, symmetric, zero diagonal

  double pair_cost(std::size_t p, std::size_t v) const { return pair[p * taxis + v]; }
  double chain_cost(std::size_t p, std::size_t q) const { return chain[p * passengers + q]; }
  bool has_chain() const { return chain_weight != 0.0; }

  double value(const Assignment& y) const {
    double s = constant;
    std::vector<std::int64_t> load(taxis, 0);
    for (std::size_t p = 0; p < passengers; ++p) {
      s += pair_cost(p, y.taxi_of[p]);
      ++load[y.taxi_of[p]];
    }
    std::int64_t sq = 0;
    for (auto l : load) sq += l * l;
    s += load_weight * static_cast<double>(sq);
    if (has_chain()) {
      double c = 0.0;
      for (std::size_t p = 0; p < passengers; ++p)
        for (std::size_t q = p + 1; q < passengers; ++q)
          if (y.taxi_of[p] == y.taxi_of[q]) c += chain_cost(p, q);
      s += chain_weight * c;
    }
    return s;
  }
};

inline CompiledObjective compile(const ObjectiveSpec& spec, const DynContext& snap,
                                 const TravelTimeMatrix& tr, double big_m = kDefaultBigM) {
  CompiledObjective m;
  m.passengers = snap.passengers.size();
  m.taxis = snap.vehicles.size();
  m.pair.assign(m.passengers * m.taxis, 0.0);
  bool chain = false;
  for (std::size_t i = 0; i < spec.components.size(); ++i) {
    const auto& c = spec.components[i];
    const double w = spec.weights.at(i);
    switch (c.form) {
      case ComponentForm::pair_linear:
        for (std::size_t p = 0; p < m.passengers; ++p)
          for (std::size_t v = 0; v < m.taxis; ++v)
            m.pair[p * m.taxis + v] +=
                w * eval_expr(c.expr, snap.passengers[p], snap.vehicles[v], tr, big_m);
        break;
      case ComponentForm::load_quadratic: m.load_weight += w; break;
      case ComponentForm::load_deviation: {
        m.load_weight += w;
        const double P = static_cast<double>(m.passengers);
        m.constant -= w * (P * P / static_cast<double>(m.taxis));
        break;
      }
      case ComponentForm::chain_quadratic:
        m.chain_weight += w;
        chain = true;
        break;
    }
  }
  if (chain) {
    m.chain.assign(m.passengers * m.passengers, 0.0);
    for (std::size_t p = 0; p < m.passengers; ++p)
      for (std::size_t q = 0; q < m.passengers; ++q)
        if (p != q)
          m.chain[p * m.passengers + q] =
              static_cast<double>(tr.at(snap.passengers[p].destination, snap.passengers[q].origin) +
                                  tr.at(snap.passengers[q].destination, snap.passengers[p].origin));
  }
  return m;
}

}  // namespace evodispatch

#endif  // EVODISPATCH_OBJECTIVE_HPP
