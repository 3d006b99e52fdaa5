#pragma once

// Fine-grained pricing over task DAGs. Every subtask picks one
// (time, cost) option; the task's time is the longest path and its cost the
// sum. The dynamic program tabulates f(node, t), the minimum cost of the
// subgraph ending at `node` within t time steps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cmarket/core.hpp"
#include "cmarket/error.hpp"
#include "cmarket/pricing.hpp"

namespace cmarket {

struct TaskOption {
  double time = 0.0;  // minutes
  double cost = 0.0;  // cents

  friend bool operator==(const TaskOption&, const TaskOption&) = default;
};

class TaskGraph {
 public:
  std::size_t add_node(std::string name, std::vector<TaskOption> options) {
    if (options.empty()) throw InvalidArgument("subtask '" + name + "' has no options");
    for (const auto& o : options) {
      if (!(o.time >= 0.0 && o.cost >= 0.0 && std::isfinite(o.time) && std::isfinite(o.cost))) {
        throw InvalidArgument("subtask '" + name + "' has a negative or non-finite option");
      }
    }
    if (index_.contains(name)) throw InvalidArgument("duplicate subtask id '" + name + "'");
    index_.emplace(name, names_.size());
    names_.push_back(std::move(name));
    options_.push_back(std::move(options));
    preds_.emplace_back();
    succs_.emplace_back();
    return names_.size() - 1;
  }

  void add_edge(std::size_t from, std::size_t to) {
    if (from >= size() || to >= size()) throw InvalidArgument("edge endpoint out of range");
    if (from == to) throw InvalidArgument("self-loop on subtask '" + names_[from] + "'");
    edges_.emplace_back(from, to);
    succs_[from].push_back(to);
    preds_[to].push_back(from);
  }

  void add_edge(const std::string& from, const std::string& to) { add_edge(index_of(from), index_of(to)); }

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<TaskOption>& options(std::size_t i) const { return options_.at(i); }
  const std::vector<std::size_t>& preds(std::size_t i) const { return preds_.at(i); }
  const std::vector<std::size_t>& succs(std::size_t i) const { return succs_.at(i); }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InvalidArgument("unknown subtask id '" + name + "'");
    return it->second;
  }

  /// Every subtask feeds at most one consumer (an in-forest).
  bool is_tree() const {
    return std::all_of(succs_.begin(), succs_.end(), [](const auto& s) { return s.size() <= 1; });
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<TaskOption>> options_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<std::vector<std::size_t>> preds_, succs_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Kahn's algorithm, always releasing the smallest ready node index.
inline std::vector<std::size_t> topological_sort(const TaskGraph& g) {
  const std::size_t n = g.size();
  std::vector<std::size_t> indeg(n);
  for (std::size_t v = 0; v < n; ++v) indeg[v] = g.preds(v).size();
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t v = 0; v < n; ++v) {
    if (indeg[v] == 0) ready.push(v);
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const std::size_t v = ready.top();
    ready.pop();
    order.push_back(v);
    for (std::size_t w : g.succs(v)) {
      if (--indeg[w] == 0) ready.push(w);
    }
  }
  if (order.size() == n) return order;

  // Every unsorted node has an unsorted predecessor; walking back must repeat.
  std::size_t v = 0;
  while (indeg[v] == 0) ++v;
  std::vector<bool> seen(n, false);
  while (!seen[v]) {
    seen[v] = true;
    for (std::size_t p : g.preds(v)) {
      if (indeg[p] > 0) {
        v = p;
        break;
      }
    }
  }
  std::size_t next = v;
  for (std::size_t p : g.preds(v)) {
    if (indeg[p] > 0) {
      next = p;
      break;
    }
  }
  throw InvalidArgument("task graph has a cycle through edge " + g.name(next) + " -> " + g.name(v));
}

/// Overall profit as a function of task completion time and cost.
using ProfitFunction = std::function<double(double time, double cost)>;

/// Closed-form overall profit for U = −α_U·t − β_U·π and linear demand.
inline ProfitFunction linear_profit(double alpha_u, double beta_u, DemandCurve m,
                                    double epsilon = PricingConstants{}.epsilon) {
  return [=](double time, double cost) {
    return linear_optimum(time, cost, alpha_u, beta_u, m, epsilon).profit;
  };
}

struct Assignment {
  std::vector<std::size_t> choice;  // option index per subtask
  double total_time = 0.0;          // longest path
  double total_cost = 0.0;          // sum over subtasks
  double profit = 0.0;
};

/// Longest-path time and summed cost of a full option choice.
inline Assignment evaluate_assignment(const TaskGraph& g, std::vector<std::size_t> choice,
                                      const ProfitFunction& profit) {
  detail::require_dims(choice.size() == g.size(), "assignment must choose one option per subtask");
  Assignment a;
  std::vector<double> finish(g.size(), 0.0);
  for (std::size_t v : topological_sort(g)) {
    detail::require(choice[v] < g.options(v).size(), "option index out of range");
    double start = 0.0;
    for (std::size_t p : g.preds(v)) start = std::max(start, finish[p]);
    const auto& o = g.options(v)[choice[v]];
    finish[v] = start + o.time;
    a.total_time = std::max(a.total_time, finish[v]);
    a.total_cost += o.cost;
  }
  a.choice = std::move(choice);
  a.profit = profit(a.total_time, a.total_cost);
  return a;
}

/// How conflicting choices for a shared ancestor are resolved.
enum class Discrepancy { MinTime, MinCost, MaxProfit };

struct DpTable {
  std::size_t bound_t = 0;       // horizon in time steps
  double granularity = 1.0;      // minutes per step
  std::vector<std::vector<double>> f;  // f[node][t]; the terminal node is last

  double cost(std::size_t node, std::size_t t) const {
    const auto& row = f.at(node);
    return row.empty() ? kInfinity : row[std::min(t, row.size() - 1)];
  }
};

struct DpRun {
  Assignment assignment;
  DpTable table;
  Discrepancy strategy = Discrepancy::MinTime;
};

namespace detail {

class FineGrainedDp {
 public:
  FineGrainedDp(const TaskGraph& g, const ProfitFunction& profit, double granularity)
      : g_(g), profit_(profit), step_(granularity) {
    require(granularity > 0.0, "granularity must be positive");
    if (g.size() == 0) throw InvalidArgument("task graph is empty");
    build();
  }

  bool needs_discrepancy_strategies() const {
    return !std::all_of(disjoint_.begin(), disjoint_.end(), [](bool b) { return b; });
  }

  DpRun run(Discrepancy strategy) {
    strategy_ = strategy;
    states_.assign(n_, {});
    at_.assign(n_, {});
    for (std::size_t v : order_) fill(v);

    DpRun out;
    out.strategy = strategy;
    out.table.bound_t = horizon_[terminal_];
    out.table.granularity = step_;
    out.table.f.resize(n_);
    for (std::size_t v = 0; v < n_; ++v) {
      out.table.f[v].resize(at_[v].size());
      for (std::size_t t = 0; t < at_[v].size(); ++t) {
        out.table.f[v][t] = at_[v][t] < 0 ? kInfinity : states_[v][at_[v][t]].cost;
      }
    }

    // max over t of profit at the realized (time, cost) of f(terminal, t).
    int last = -1;
    bool found = false;
    for (std::size_t t = 0; t < at_[terminal_].size(); ++t) {
      const int s = at_[terminal_][t];
      if (s < 0 || s == last) continue;
      last = s;
      const State& st = states_[terminal_][s];
      std::vector<std::size_t> choice(g_.size());
      for (std::size_t k = 0; k < anc_[terminal_].size(); ++k) {
        const std::size_t w = anc_[terminal_][k];
        if (w != terminal_) choice[w] = st.choice[k];
      }
      auto a = evaluate_assignment(g_, std::move(choice), profit_);
      if (!found || a.profit > out.assignment.profit) {
        out.assignment = std::move(a);
        found = true;
      }
    }
    if (!found) throw InfeasibleError("no feasible assignment within the time horizon");
    return out;
  }

 private:
  struct State {
    double cost = 0.0;
    long ticks = 0;                      // finish time in steps
    std::vector<std::uint16_t> choice;   // per entry of anc_[v]
  };

  struct Candidate {
    std::vector<int> key;  // predecessor states used
    bool valid = false;
    State state;
  };

  const TaskGraph& g_;
  const ProfitFunction& profit_;
  double step_;
  Discrepancy strategy_ = Discrepancy::MinTime;

  std::size_t n_ = 0;         // real nodes plus terminal
  std::size_t terminal_ = 0;
  std::vector<std::vector<std::size_t>> preds_;
  std::vector<std::vector<TaskOption>> options_;
  std::vector<std::vector<long>> ticks_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> pos_;                 // position in order_
  std::vector<std::vector<std::size_t>> anc_;    // ancestors ∪ {v}, topo order
  std::vector<std::vector<int>> local_;          // node -> index in anc_[v] or -1
  std::vector<bool> disjoint_;                   // predecessor subgraphs disjoint
  std::vector<long> horizon_;                    // longest path to v at max times
  std::vector<std::vector<State>> states_;
  std::vector<std::vector<int>> at_;             // state index per t, −1 = ∞

  void build() {
    const std::size_t real = g_.size();
    n_ = real + 1;
    terminal_ = real;
    preds_.resize(n_);
    options_.resize(n_);
    for (std::size_t v = 0; v < real; ++v) {
      preds_[v] = g_.preds(v);
      options_[v] = g_.options(v);
      if (options_[v].size() > 65535) throw InvalidArgument("too many options for one subtask");
    }
    // The terminal node collects every sink; it costs nothing and takes no time.
    options_[terminal_] = {TaskOption{0.0, 0.0}};
    for (std::size_t v = 0; v < real; ++v) {
      if (g_.succs(v).empty()) preds_[terminal_].push_back(v);
    }

    order_ = topological_sort(g_);
    order_.push_back(terminal_);
    pos_.assign(n_, 0);
    for (std::size_t i = 0; i < n_; ++i) pos_[order_[i]] = i;

    ticks_.resize(n_);
    for (std::size_t v = 0; v < n_; ++v) {
      for (const auto& o : options_[v]) {
        ticks_[v].push_back(static_cast<long>(std::ceil(o.time / step_ - 1e-9)));
      }
    }

    horizon_.assign(n_, 0);
    std::vector<std::vector<bool>> is_anc(n_, std::vector<bool>(n_, false));
    anc_.resize(n_);
    local_.assign(n_, std::vector<int>(n_, -1));
    disjoint_.assign(n_, true);
    for (std::size_t v : order_) {
      long start = 0;
      for (std::size_t q : preds_[v]) {
        start = std::max(start, horizon_[q]);
        for (std::size_t w = 0; w < n_; ++w) {
          if (is_anc[q][w]) {
            if (is_anc[v][w]) disjoint_[v] = false;
            is_anc[v][w] = true;
          }
        }
      }
      is_anc[v][v] = true;
      horizon_[v] = start + *std::max_element(ticks_[v].begin(), ticks_[v].end());
      for (std::size_t w : order_) {
        if (is_anc[v][w]) {
          local_[v][w] = static_cast<int>(anc_[v].size());
          anc_[v].push_back(w);
        }
      }
    }
  }

  int lookup(std::size_t q, long t) const {
    if (t < 0) return -1;
    const auto& row = at_[q];
    return row[static_cast<std::size_t>(std::min<long>(t, static_cast<long>(row.size()) - 1))];
  }

  // Whether option `a` should win over option `b` for node w.
  bool prefer(std::size_t w, std::uint16_t a, std::uint16_t b) const {
    const auto& oa = options_[w][a];
    const auto& ob = options_[w][b];
    switch (strategy_) {
      case Discrepancy::MinTime:
        if (oa.time != ob.time) return oa.time < ob.time;
        if (oa.cost != ob.cost) return oa.cost < ob.cost;
        break;
      case Discrepancy::MinCost:
        if (oa.cost != ob.cost) return oa.cost < ob.cost;
        if (oa.time != ob.time) return oa.time < ob.time;
        break;
      case Discrepancy::MaxProfit: {
        const double pa = profit_(oa.time, oa.cost);
        const double pb = profit_(ob.time, ob.cost);
        if (pa != pb) return pa > pb;
        break;
      }
    }
    return a < b;
  }

  void combine(std::size_t v, std::size_t opt, const std::vector<int>& key, Candidate& out) const {
    const auto& anc = anc_[v];
    State st;
    st.choice.assign(anc.size(), std::numeric_limits<std::uint16_t>::max());
    st.choice[local_[v][v]] = static_cast<std::uint16_t>(opt);
    const auto& preds = preds_[v];
    long pred_finish = 0;
    for (std::size_t j = 0; j < preds.size(); ++j) {
      const std::size_t q = preds[j];
      const State& s = states_[q][key[j]];
      pred_finish = std::max(pred_finish, s.ticks);
      for (std::size_t k = 0; k < anc_[q].size(); ++k) {
        const std::size_t w = anc_[q][k];
        auto& slot = st.choice[local_[v][w]];
        const auto c = s.choice[k];
        if (slot == std::numeric_limits<std::uint16_t>::max() || (slot != c && prefer(w, c, slot))) {
          slot = c;
        }
      }
    }
    if (disjoint_[v]) {
      st.cost = options_[v][opt].cost;
      for (std::size_t j = 0; j < preds.size(); ++j) st.cost += states_[preds[j]][key[j]].cost;
      st.ticks = pred_finish + ticks_[v][opt];
    } else {
      // Shared ancestors: count each once and recompute the longest path.
      std::vector<long> finish(anc.size(), 0);
      st.cost = 0.0;
      st.ticks = 0;
      for (std::size_t k = 0; k < anc.size(); ++k) {
        const std::size_t w = anc[k];
        long start = 0;
        for (std::size_t p : preds_[w]) start = std::max(start, finish[local_[v][p]]);
        finish[k] = start + ticks_[w][st.choice[k]];
        st.cost += options_[w][st.choice[k]].cost;
        st.ticks = std::max(st.ticks, finish[k]);
      }
    }
    out.state = std::move(st);
    out.valid = true;
  }

  void fill(std::size_t v) {
    const auto& preds = preds_[v];
    const long horizon = horizon_[v];
    at_[v].assign(static_cast<std::size_t>(horizon) + 1, -1);
    std::vector<Candidate> cache(options_[v].size());
    std::vector<int> key(preds.size());
    for (long t = 0; t <= horizon; ++t) {
      int cur = t > 0 ? at_[v][t - 1] : -1;
      for (std::size_t opt = 0; opt < options_[v].size(); ++opt) {
        const long rem = t - ticks_[v][opt];
        if (rem < 0) continue;
        bool ok = true;
        for (std::size_t j = 0; j < preds.size(); ++j) {
          key[j] = lookup(preds[j], rem);
          if (key[j] < 0) {
            ok = false;
            break;
          }
        }
        if (!ok) continue;
        Candidate& cand = cache[opt];
        if (!cand.valid || cand.key != key) {
          cand.key = key;
          combine(v, opt, key, cand);
        }
        if (cand.state.ticks > t) continue;
        if (cur < 0 || cand.state.cost < states_[v][cur].cost) {
          states_[v].push_back(cand.state);
          cur = static_cast<int>(states_[v].size()) - 1;
        }
      }
      at_[v][t] = cur;
    }
  }
};

}  // namespace detail

/// One full dynamic-programming pass with a fixed discrepancy strategy.
inline DpRun run_fine_grained_dp(const TaskGraph& g, const ProfitFunction& profit,
                                 double granularity, Discrepancy strategy) {
  detail::FineGrainedDp dp(g, profit, granularity);
  return dp.run(strategy);
}

/// Fine-grained pricing: exact on trees; on general DAGs every discrepancy
/// strategy is run and the most profitable assignment is kept.
inline Assignment price_fine_grained_dp(const TaskGraph& g, const ProfitFunction& profit,
                                        double granularity = 1.0) {
  detail::FineGrainedDp dp(g, profit, granularity);
  auto best = dp.run(Discrepancy::MinTime).assignment;
  if (!dp.needs_discrepancy_strategies()) return best;
  for (auto s : {Discrepancy::MinCost, Discrepancy::MaxProfit}) {
    auto a = dp.run(s).assignment;
    if (a.profit > best.profit) best = std::move(a);
  }
  return best;
}

/// Per-subtask option with the highest local profit(T_i, C_i).
inline Assignment price_greedy(const TaskGraph& g, const ProfitFunction& profit) {
  std::vector<std::size_t> choice(g.size(), 0);
  for (std::size_t v = 0; v < g.size(); ++v) {
    const auto& opts = g.options(v);
    double best = profit(opts[0].time, opts[0].cost);
    for (std::size_t k = 1; k < opts.size(); ++k) {
      const double p = profit(opts[k].time, opts[k].cost);
      if (p > best) {
        best = p;
        choice[v] = k;
      }
    }
  }
  return evaluate_assignment(g, std::move(choice), profit);
}

/// Every subtask takes option `k` (coarse-grained pricing with one configuration).
inline Assignment price_uniform(const TaskGraph& g, std::size_t k, const ProfitFunction& profit) {
  for (std::size_t v = 0; v < g.size(); ++v) {
    detail::require(k < g.options(v).size(), "uniform option index exceeds a subtask's menu");
  }
  return evaluate_assignment(g, std::vector<std::size_t>(g.size(), k), profit);
}

inline constexpr double kDefaultSearchCap = 1e7;

/// Enumerates every assignment; the first maximum in odometer order wins.
inline Assignment price_exhaustive(const TaskGraph& g, const ProfitFunction& profit,
                                   double cap = kDefaultSearchCap) {
  if (g.size() == 0) throw InvalidArgument("task graph is empty");
  double combos = 1.0;
  for (std::size_t v = 0; v < g.size(); ++v) combos *= static_cast<double>(g.options(v).size());
  if (combos > cap) {
    throw CapExceeded("exhaustive search over " + std::to_string(combos) +
                      " assignments exceeds the cap");
  }
  const auto order = topological_sort(g);
  const std::size_t n = g.size();
  std::vector<std::size_t> choice(n, 0), best_choice;
  std::vector<double> finish(n);
  double best = -kInfinity;
  while (true) {
    double total_time = 0.0, total_cost = 0.0;
    for (std::size_t v : order) {
      double start = 0.0;
      for (std::size_t p : g.preds(v)) start = std::max(start, finish[p]);
      const auto& o = g.options(v)[choice[v]];
      finish[v] = start + o.time;
      total_time = std::max(total_time, finish[v]);
      total_cost += o.cost;
    }
    const double p = profit(total_time, total_cost);
    if (p > best) {
      best = p;
      best_choice = choice;
    }
    std::size_t k = n;
    while (k > 0) {
      --k;
      if (++choice[k] < g.options(k).size()) break;
      choice[k] = 0;
      if (k == 0) return evaluate_assignment(g, std::move(best_choice), profit);
    }
  }
}

struct KnapsackItem {
  double weight = 0.0;
  double value = 0.0;
};

struct KnapsackInstance {
  TaskGraph graph;
  ProfitFunction profit;
};

/// Chain of subtasks whose optimal profit equals the 0-1 knapsack optimum:
/// item i offers (w_i, v_0 − v_i) or (0, v_0), and profit(T, C) is
/// n·v_0 − C when T ≤ W and 0 otherwise.
inline KnapsackInstance knapsack_to_graph(std::span<const KnapsackItem> items, double capacity) {
  if (items.empty()) throw InvalidArgument("knapsack needs at least one item");
  double v0 = 0.0;
  for (const auto& it : items) {
    detail::require(it.weight > 0.0 && it.value > 0.0, "knapsack weights and values must be positive");
    v0 = std::max(v0, it.value);
  }
  KnapsackInstance out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.graph.add_node("item" + std::to_string(i),
                       {TaskOption{items[i].weight, v0 - items[i].value}, TaskOption{0.0, v0}});
    if (i > 0) out.graph.add_edge(i - 1, i);
  }
  const double base = static_cast<double>(items.size()) * v0;
  out.profit = [base, capacity](double time, double cost) {
    return time <= capacity ? base - cost : 0.0;
  };
  return out;
}

}  // namespace cmarket
