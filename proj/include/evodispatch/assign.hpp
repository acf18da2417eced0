#ifndef EVODISPATCH_ASSIGN_HPP
#define EVODISPATCH_ASSIGN_HPP

// First-level assignment: map every pending passenger to exactly one taxi,
// minimizing an ObjectiveSpec. Dispatch by objective class:
//   linear             independent per-passenger argmin
//   convex_load        min-cost flow, the k-th passenger on a taxi priced at
//                      the marginal load cost (2k - 1) * w_load
//   general_quadratic  branch-and-bound up to exact_threshold passengers,
//                      greedy insertion + relocate/swap local search beyond

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "objective.hpp"

namespace evodispatch {

struct AssignOptions {
  std::size_t exact_threshold = 10;
  std::chrono::milliseconds budget{2000};
  double big_m = kDefaultBigM;
  // Work caps. They bind long before the clock on normal hardware, which
  // keeps results independent of machine speed.
  std::uint64_t node_limit = 200'000;
  std::size_t move_limit = 10'000;
};

using Clock = std::chrono::steady_clock;

namespace detail {

inline Assignment argmin_rows(const CompiledObjective& m) {
  Assignment y;
  y.taxi_of.resize(m.passengers);
  for (std::size_t p = 0; p < m.passengers; ++p) {
    std::size_t best = 0;
    for (std::size_t v = 1; v < m.taxis; ++v)
      if (m.pair_cost(p, v) < m.pair_cost(p, best)) best = v;
    y.taxi_of[p] = best;
  }
  return y;
}

/// Successive shortest paths with Dijkstra on reduced costs.
class MinCostFlow {
 public:
  explicit MinCostFlow(std::size_t nodes) : adj_(nodes) {}

  void add_arc(std::size_t from, std::size_t to, double cost) {
    adj_[from].push_back(arcs_.size());
    arcs_.push_back(Arc{to, 1, cost});
    adj_[to].push_back(arcs_.size());
    arcs_.push_back(Arc{from, 0, -cost});
  }

  /// Pushes `units` unit augmentations from s to t; `potential` must make
  /// every initial residual reduced cost non-negative.
  void run(std::size_t s, std::size_t t, std::size_t units, std::vector<double> potential) {
    const std::size_t n = adj_.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < units; ++u) {
      std::vector<double> dist(n, inf);
      std::vector<std::size_t> via(n, SIZE_MAX);
      using Item = std::pair<double, std::size_t>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      dist[s] = 0.0;
      pq.emplace(0.0, s);
      while (!pq.empty()) {
        const auto [d, x] = pq.top();
        pq.pop();
        if (d > dist[x]) continue;
        for (std::size_t a : adj_[x]) {
          const Arc& arc = arcs_[a];
          if (arc.cap == 0) continue;
          const double reduced = std::max(0.0, arc.cost + potential[x] - potential[arc.to]);
          if (d + reduced < dist[arc.to]) {
            dist[arc.to] = d + reduced;
            via[arc.to] = a;
            pq.emplace(dist[arc.to], arc.to);
          }
        }
      }
      if (dist[t] == inf) throw std::logic_error("min-cost flow: sink unreachable");
      // Capping at dist[t] keeps every residual reduced cost non-negative,
      // including arcs into nodes the search never reached.
      for (std::size_t x = 0; x < n; ++x) potential[x] += std::min(dist[x], dist[t]);
      for (std::size_t x = t; x != s;) {
        const std::size_t a = via[x];
        arcs_[a].cap -= 1;
        arcs_[a ^ 1].cap += 1;
        x = arcs_[a ^ 1].to;
      }
    }
  }

  /// Head of the saturated forward arc leaving `from`, if any.
  std::optional<std::size_t> used_arc_head(std::size_t from) const {
    for (std::size_t a : adj_[from])
      if ((a & 1) == 0 && arcs_[a].cap == 0) return arcs_[a].to;
    return std::nullopt;
  }

 private:
  struct Arc {
    std::size_t to;
    int cap;
    double cost;
  };
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Arc> arcs_;
};

inline Assignment convex_flow(const CompiledObjective& m) {
  const std::size_t P = m.passengers, C = m.taxis;
  const std::size_t src = 0, sink = P + C + 1;
  auto pnode = [](std::size_t p) { return 1 + p; };
  auto tnode = [P](std::size_t v) { return 1 + P + v; };
  MinCostFlow flow(P + C + 2);
  for (std::size_t p = 0; p < P; ++p) {
    flow.add_arc(src, pnode(p), 0.0);
    for (std::size_t v = 0; v < C; ++v) flow.add_arc(pnode(p), tnode(v), m.pair_cost(p, v));
  }
  for (std::size_t v = 0; v < C; ++v)
    for (std::size_t k = 1; k <= P; ++k)
      flow.add_arc(tnode(v), sink, m.load_weight * static_cast<double>(2 * k - 1));

  // The network is a DAG, so exact initial potentials come from one pass.
  std::vector<double> pot(P + C + 2, 0.0);
  for (std::size_t v = 0; v < C; ++v) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < P; ++p) best = std::min(best, m.pair_cost(p, v));
    pot[tnode(v)] = best;
  }
  double best_sink = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < C; ++v) best_sink = std::min(best_sink, pot[tnode(v)] + m.load_weight);
  pot[sink] = best_sink;
  flow.run(src, sink, P, std::move(pot));

  Assignment y;
  y.taxi_of.resize(P);
  for (std::size_t p = 0; p < P; ++p) {
    const auto head = flow.used_arc_head(pnode(p));
    if (!head) throw std::logic_error("min-cost flow left a passenger unassigned");
    y.taxi_of[p] = *head - 1 - P;
  }
  return y;
}

/// Depth-first search over passengers in index order, taxis in index order,
/// keeping only strictly better incumbents: the first optimum found is the
/// lexicographically smallest assignment vector.
class BranchAndBound {
 public:
  BranchAndBound(const CompiledObjective& m, std::optional<Clock::time_point> deadline,
                 std::uint64_t node_limit = UINT64_MAX)
      : m_(m), deadline_(deadline), node_limit_(node_limit), taxi_of_(m.passengers), load_(m.taxis, 0) {}

  /// Returns the best assignment found; `complete()` tells whether the
  /// search finished (and the result is therefore optimal).
  std::optional<Assignment> run() {
    dfs(0, m_.constant);
    if (best_.empty()) return std::nullopt;
    return Assignment{best_};
  }

  bool complete() const { return !timed_out_; }

 private:
  double increment(std::size_t p, std::size_t v) const {
    double inc = m_.pair_cost(p, v) + m_.load_weight * static_cast<double>(2 * load_[v] + 1);
    if (m_.has_chain()) {
      double c = 0.0;
      for (std::size_t q = 0; q < p; ++q)
        if (taxi_of_[q] == v) c += m_.chain_cost(p, q);
      inc += m_.chain_weight * c;
    }
    return inc;
  }

  double lower_bound(std::size_t next) const {
    double lb = 0.0;
    for (std::size_t r = next; r < m_.passengers; ++r) {
      const auto ahead = static_cast<std::int64_t>(r - next);
      double pessimistic_chain = 0.0;
      if (m_.chain_weight < 0.0)
        for (std::size_t q = next; q < r; ++q) pessimistic_chain += m_.chain_cost(r, q);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t v = 0; v < m_.taxis; ++v) {
        const std::int64_t l = m_.load_weight >= 0.0 ? load_[v] : load_[v] + ahead;
        double b = m_.pair_cost(r, v) + m_.load_weight * static_cast<double>(2 * l + 1);
        if (m_.has_chain()) {
          double c = pessimistic_chain;
          for (std::size_t q = 0; q < next; ++q)
            if (taxi_of_[q] == v) c += m_.chain_cost(r, q);
          b += m_.chain_weight * c;
        }
        best = std::min(best, b);
      }
      lb += best;
    }
    return lb;
  }

  void dfs(std::size_t p, double cost) {
    if (timed_out_) return;
    if (++nodes_ > node_limit_ || (deadline_ && (nodes_ & 1023) == 0 && Clock::now() > *deadline_)) {
      timed_out_ = true;
      return;
    }
    if (p == m_.passengers) {
      if (best_.empty() || cost < best_cost_) {
        best_cost_ = cost;
        best_ = taxi_of_;
      }
      return;
    }
    if (!best_.empty() && cost + lower_bound(p) >= best_cost_) return;
    for (std::size_t v = 0; v < m_.taxis; ++v) {
      const double inc = increment(p, v);
      taxi_of_[p] = v;
      ++load_[v];
      dfs(p + 1, cost + inc);
      --load_[v];
      if (timed_out_) return;
    }
  }

  const CompiledObjective& m_;
  std::optional<Clock::time_point> deadline_;
  std::uint64_t node_limit_;
  std::vector<std::size_t> taxi_of_;
  std::vector<std::int64_t> load_;
  std::vector<std::size_t> best_;
  double best_cost_ = 0.0;
  std::uint64_t nodes_ = 0;
  bool timed_out_ = false;
};

inline Assignment greedy_insertion(const CompiledObjective& m) {
  Assignment y;
  y.taxi_of.resize(m.passengers);
  std::vector<std::int64_t> load(m.taxis, 0);
  for (std::size_t p = 0; p < m.passengers; ++p) {
    std::size_t best_v = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < m.taxis; ++v) {
      double inc = m.pair_cost(p, v) + m.load_weight * static_cast<double>(2 * load[v] + 1);
      if (m.has_chain()) {
        double c = 0.0;
        for (std::size_t q = 0; q < p; ++q)
          if (y.taxi_of[q] == v) c += m.chain_cost(p, q);
        inc += m.chain_weight * c;
      }
      if (inc < best) {
        best = inc;
        best_v = v;
      }
    }
    y.taxi_of[p] = best_v;
    ++load[best_v];
  }
  return y;
}

/// Best-improvement descent over relocate and swap moves.
inline Assignment local_search(Assignment y, const CompiledObjective& m, Clock::time_point deadline,
                               std::size_t move_limit = SIZE_MAX) {
  const std::size_t P = m.passengers, C = m.taxis;
  if (P == 0 || C < 2) return y;
  std::vector<std::int64_t> load(C, 0);
  for (auto v : y.taxi_of) ++load[v];
  // chain_to[p * C + v]: sum of chain(p, q) over q != p currently on v.
  std::vector<double> chain_to;
  if (m.has_chain()) {
    chain_to.assign(P * C, 0.0);
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t q = 0; q < P; ++q)
        if (p != q) chain_to[p * C + y.taxi_of[q]] += m.chain_cost(p, q);
  }
  auto ct = [&](std::size_t p, std::size_t v) { return m.has_chain() ? chain_to[p * C + v] : 0.0; };
  auto move = [&](std::size_t p, std::size_t to) {
    const std::size_t from = y.taxi_of[p];
    if (m.has_chain()) {
      for (std::size_t q = 0; q < P; ++q) {
        if (q == p) continue;
        chain_to[q * C + from] -= m.chain_cost(q, p);
        chain_to[q * C + to] += m.chain_cost(q, p);
      }
    }
    --load[from];
    ++load[to];
    y.taxi_of[p] = to;
  };
  constexpr double kTol = 1e-9;
  for (std::size_t iter = 0;; ++iter) {
    if (iter >= move_limit || Clock::now() >= deadline) break;
    double best_delta = -kTol;
    int kind = 0;  // 1 relocate, 2 swap
    std::size_t bp = 0, bq = 0, bv = 0;
    for (std::size_t p = 0; p < P; ++p) {
      const std::size_t a = y.taxi_of[p];
      for (std::size_t b = 0; b < C; ++b) {
        if (b == a) continue;
        const double d = m.pair_cost(p, b) - m.pair_cost(p, a) +
                         m.load_weight * static_cast<double>((2 * load[b] + 1) - (2 * load[a] - 1)) +
                         m.chain_weight * (ct(p, b) - ct(p, a));
        if (d < best_delta) {
          best_delta = d;
          kind = 1;
          bp = p;
          bv = b;
        }
      }
    }
    for (std::size_t p = 0; p < P; ++p) {
      for (std::size_t q = p + 1; q < P; ++q) {
        const std::size_t a = y.taxi_of[p], b = y.taxi_of[q];
        if (a == b) continue;
        double d = m.pair_cost(p, b) + m.pair_cost(q, a) - m.pair_cost(p, a) - m.pair_cost(q, b);
        if (m.has_chain()) {
          const double pq = m.chain_cost(p, q);
          d += m.chain_weight * ((ct(p, b) - pq) - ct(p, a) + (ct(q, a) - pq) - ct(q, b));
        }
        if (d < best_delta) {
          best_delta = d;
          kind = 2;
          bp = p;
          bq = q;
        }
      }
    }
    if (kind == 0) break;
    if (kind == 1) {
      move(bp, bv);
    } else {
      const std::size_t a = y.taxi_of[bp], b = y.taxi_of[bq];
      move(bp, b);
      move(bq, a);
    }
  }
  return y;
}

inline void require_taxis(const DynContext& snap) {
  if (snap.vehicles.empty()) throw std::invalid_argument("assignment needs at least one taxi");
}

}  // namespace detail

class ThresholdExceeded : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Global optimum by branch-and-bound; ties go to the lexicographically
/// smallest taxi vector. Limited to `exact_threshold` passengers.
inline Assignment solve_exact_bnb(const ObjectiveSpec& spec, const DynContext& snap,
                                  const TravelTimeMatrix& tr, const AssignOptions& opts = {}) {
  detail::require_taxis(snap);
  if (snap.passengers.size() > opts.exact_threshold)
    throw ThresholdExceeded("branch-and-bound limited to " + std::to_string(opts.exact_threshold) +
                            " passengers, got " + std::to_string(snap.passengers.size()));
  const auto m = compile(spec, snap, tr, opts.big_m);
  detail::BranchAndBound bnb(m, std::nullopt);
  return bnb.run().value_or(Assignment{});
}

/// Relocate/swap descent from `start`; never returns a worse assignment and
/// returns `start` untouched when the budget is zero.
inline Assignment improve_local(const Assignment& start, const ObjectiveSpec& spec,
                                const DynContext& snap, const TravelTimeMatrix& tr,
                                std::chrono::milliseconds budget, double big_m = kDefaultBigM) {
  detail::require_taxis(snap);
  if (budget.count() <= 0) return start;
  const auto m = compile(spec, snap, tr, big_m);
  return detail::local_search(start, m, Clock::now() + budget);
}

inline Assignment solve_assignment(const ObjectiveSpec& spec, const DynContext& snap,
                                   const TravelTimeMatrix& tr, const AssignOptions& opts = {}) {
  detail::require_taxis(snap);
  if (snap.passengers.empty()) return Assignment{};
  const auto m = compile(spec, snap, tr, opts.big_m);
  switch (classify(spec)) {
    case ObjectiveClass::linear: return detail::argmin_rows(m);
    case ObjectiveClass::convex_load: return detail::convex_flow(m);
    case ObjectiveClass::general_quadratic: break;
  }
  const auto deadline = Clock::now() + opts.budget;
  if (snap.passengers.size() <= opts.exact_threshold) {
    detail::BranchAndBound bnb(m, deadline, opts.node_limit);
    auto found = bnb.run();
    if (bnb.complete() && found) return *found;
    // Out of budget: polish whatever is best so far.
    auto start = found.value_or(detail::greedy_insertion(m));
    return detail::local_search(std::move(start), m, deadline + opts.budget, opts.move_limit);
  }
  return detail::local_search(detail::greedy_insertion(m), m, deadline, opts.move_limit);
}

}  // namespace evodispatch

#endif  // EVODISPATCH_ASSIGN_HPP
