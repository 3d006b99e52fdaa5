#pragma once

// JSON documents for workloads, task graphs, scenarios and VCG bid sets,
// plus CSV output for simulation metrics. Every schema error carries the
// source line and column of the offending value.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cmarket/auction.hpp"
#include "cmarket/core.hpp"
#include "cmarket/error.hpp"
#include "cmarket/pricing.hpp"
#include "cmarket/risk.hpp"
#include "cmarket/simulator.hpp"
#include "cmarket/taskgraph.hpp"

namespace cmarket::io {

using json = nlohmann::ordered_json;

/// Malformed or schema-violating input; what() is "source:line:col: message".
class SchemaError : public Error {
 public:
  using Error::Error;
};

struct SourcePos {
  std::size_t line = 1;
  std::size_t col = 1;
};

namespace detail {

// Character iterator that reports how far the parser has read.
class CountingIterator {
 public:
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  CountingIterator() = default;
  CountingIterator(const char* p, std::shared_ptr<const char*> mark) : p_(p), mark_(std::move(mark)) {}

  reference operator*() const { return *p_; }
  CountingIterator& operator++() {
    ++p_;
    if (mark_) *mark_ = p_;
    return *this;
  }
  CountingIterator operator++(int) {
    auto old = *this;
    ++*this;
    return old;
  }
  friend bool operator==(const CountingIterator& a, const CountingIterator& b) { return a.p_ == b.p_; }

 private:
  const char* p_ = nullptr;
  std::shared_ptr<const char*> mark_;
};

inline std::string escape_pointer_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

// Builds the DOM and remembers where each value starts (approximately: the
// parser's read position when the value's first token completes).
class LocatingSax : public nlohmann::json_sax<json> {
 public:
  LocatingSax(const char* begin, std::shared_ptr<const char*> mark,
              std::map<std::string, SourcePos>& where)
      : scanned_(begin), mark_(std::move(mark)), where_(where) {}

  json root;

  bool null() override { return put(json(nullptr)); }
  bool boolean(bool v) override { return put(json(v)); }
  bool number_integer(number_integer_t v) override { return put(json(v)); }
  bool number_unsigned(number_unsigned_t v) override { return put(json(v)); }
  bool number_float(number_float_t v, const string_t&) override { return put(json(v)); }
  bool string(string_t& v) override { return put(json(v)); }
  bool binary(binary_t& v) override { return put(json::binary(v)); }

  bool start_object(std::size_t) override {
    put(json::object());
    frames_.push_back({container_, false, {}, 0});
    return true;
  }
  bool key(string_t& k) override {
    frames_.back().key = k;
    return true;
  }
  bool end_object() override { return pop(); }
  bool start_array(std::size_t) override {
    put(json::array());
    frames_.push_back({container_, true, {}, 0});
    return true;
  }
  bool end_array() override { return pop(); }

  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) override {
    error_ = ex.what();
    return false;
  }

  const std::string& error() const { return error_; }

 private:
  struct Frame {
    json* node;
    bool is_array;
    std::string key;
    std::size_t index;
  };

  const char* scanned_;
  SourcePos pos_;
  std::shared_ptr<const char*> mark_;
  std::map<std::string, SourcePos>& where_;
  std::vector<Frame> frames_;
  json* container_ = nullptr;
  std::string error_;

  std::string path() const {
    // Ancestor arrays have already appended the element being filled.
    std::string p;
    for (std::size_t i = 0; i < frames_.size(); ++i) {
      const auto& f = frames_[i];
      p += '/';
      const std::size_t at = i + 1 < frames_.size() ? f.index - 1 : f.index;
      p += f.is_array ? std::to_string(at) : escape_pointer_token(f.key);
    }
    return p;
  }

  SourcePos here() {
    for (; scanned_ < *mark_; ++scanned_) {
      if (*scanned_ == '\n') {
        ++pos_.line;
        pos_.col = 1;
      } else {
        ++pos_.col;
      }
    }
    return pos_;
  }

  bool put(json value) {
    where_.emplace(path(), here());
    json* slot = nullptr;
    if (frames_.empty()) {
      root = std::move(value);
      slot = &root;
    } else {
      auto& f = frames_.back();
      if (f.is_array) {
        f.node->push_back(std::move(value));
        slot = &f.node->back();
        ++f.index;
      } else {
        slot = &((*f.node)[f.key] = std::move(value));
      }
    }
    container_ = slot;
    return true;
  }

  bool pop() {
    frames_.pop_back();
    return true;
  }
};

}  // namespace detail

/// A parsed JSON text plus the position of every value, keyed by JSON pointer.
class Document {
 public:
  Document(const std::string& text, std::string source) : source_(std::move(source)) {
    auto mark = std::make_shared<const char*>(text.data());
    detail::LocatingSax sax(text.data(), mark, where_);
    detail::CountingIterator first(text.data(), mark), last(text.data() + text.size(), nullptr);
    const bool ok = json::sax_parse(first, last, &sax);
    if (!ok) {
      // nlohmann's message already says "at line L, column C".
      throw SchemaError(source_ + ": " + sax.error());
    }
    root_ = std::move(sax.root);
  }

  static Document from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return Document(ss.str(), path);
  }

  const json& root() const { return root_; }
  const std::string& source() const { return source_; }

  SourcePos position(std::string pointer) const {
    while (true) {
      auto it = where_.find(pointer);
      if (it != where_.end()) return it->second;
      if (pointer.empty()) return {};
      pointer.erase(pointer.rfind('/'));
    }
  }

  [[noreturn]] void fail(const std::string& pointer, const std::string& msg) const {
    const auto pos = position(pointer);
    throw SchemaError(source_ + ":" + std::to_string(pos.line) + ":" + std::to_string(pos.col) +
                      ": " + (pointer.empty() ? "" : pointer + ": ") + msg);
  }

 private:
  std::string source_;
  json root_;
  std::map<std::string, SourcePos> where_;
};

/// Read-only view of one value inside a Document.
class Node {
 public:
  Node(const Document& doc) : doc_(&doc), j_(&doc.root()) {}
  Node(const Document& doc, const json& j, std::string ptr)
      : doc_(&doc), j_(&j), ptr_(std::move(ptr)) {}

  const std::string& pointer() const { return ptr_; }
  const json& raw() const { return *j_; }

  [[noreturn]] void fail(const std::string& msg) const { doc_->fail(ptr_, msg); }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  Node operator[](const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    auto it = j_->find(key);
    if (it == j_->end()) fail("missing required field '" + key + "'");
    return {*doc_, *it, ptr_ + "/" + detail::escape_pointer_token(key)};
  }

  std::optional<Node> find(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return (*this)[key];
  }

  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  Node operator[](std::size_t i) const {
    if (!j_->is_array()) fail("expected an array");
    return {*doc_, j_->at(i), ptr_ + "/" + std::to_string(i)};
  }

  std::vector<Node> items() const {
    std::vector<Node> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i]);
    return out;
  }

  std::vector<std::pair<std::string, Node>> members() const {
    if (!j_->is_object()) fail("expected an object");
    std::vector<std::pair<std::string, Node>> out;
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      out.emplace_back(it.key(), Node{*doc_, it.value(), ptr_ + "/" + detail::escape_pointer_token(it.key())});
    }
    return out;
  }

  double number() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }

  std::uint64_t unsigned_integer() const {
    if (j_->is_number_unsigned()) return j_->get<std::uint64_t>();
    if (j_->is_number_integer() && j_->get<std::int64_t>() >= 0) return j_->get<std::uint64_t>();
    fail("expected a nonnegative integer");
  }

  std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (const auto& n : items()) out.push_back(n.number());
    return out;
  }

  std::map<std::string, std::string> string_map() const {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : members()) {
      out[k] = v.raw().is_string() ? v.string() : v.raw().dump();
    }
    return out;
  }

  double number_or(const std::string& key, double fallback) const {
    auto n = find(key);
    return n ? n->number() : fallback;
  }

  // Runs `f`, turning library validation errors into positioned schema errors.
  template <class F>
  auto checked(F&& f) const -> decltype(f()) {
    try {
      return f();
    } catch (const SchemaError&) {
      throw;
    } catch (const Error& e) {
      fail(e.what());
    }
  }

 private:
  const Document* doc_;
  const json* j_;
  std::string ptr_;
};

// ---------------------------------------------------------------------------
// Reading.

inline PiecewiseUtility read_utility(const Node& n, const Targets& fallback_targets = Targets()) {
  if (n.has("pieces")) {
    std::vector<double> interior;
    if (auto t = n.find("targets")) interior = t->numbers();
    std::vector<LinearPiece> pieces;
    for (const auto& p : n["pieces"].items()) {
      pieces.push_back({p.number_or("kappa", 0.0), p["a"].number(), p["b"].number()});
    }
    return n.checked([&] { return PiecewiseUtility(Targets::from_deadlines(interior), pieces); });
  }
  const double a = n["alpha"].number();
  const double b = n["beta"].number();
  return n.checked([&] { return PiecewiseUtility::linear(a, b, fallback_targets); });
}

inline DemandCurve read_demand(const Node& n) {
  const double g = n["gamma"].number();
  const double l = n["lambda"].number();
  return n.checked([&] { return DemandCurve(g, l); });
}

inline CompletionHistogram read_histogram(const Node& n) {
  std::vector<Bin> bins;
  for (const auto& b : n.items()) {
    if (b.has("time")) {
      const double t = b["time"].number();
      bins.push_back({t, t, b["mass"].number()});
    } else {
      bins.push_back({b["lo"].number(), b["hi"].number(), b["mass"].number()});
    }
  }
  return n.checked([&] { return CompletionHistogram(bins); });
}

inline Configuration read_configuration(const Node& n) {
  std::map<std::string, std::string> tags;
  if (auto t = n.find("tags")) tags = t->string_map();
  auto id = n["id"].string();
  const double rate = n["rate"].number();
  auto hist = read_histogram(n["histogram"]);
  return n["rate"].checked([&] { return Configuration(id, rate, hist, tags); });
}

inline SimTask read_task(const Node& n) {
  SimTask t;
  t.id = n["id"].string();
  if (auto x = n.find("intensity")) t.intensity = x->string();
  if (auto x = n.find("deadlines")) t.deadlines = x->numbers();
  if (auto x = n.find("stats")) t.stats = x->string_map();
  const auto cfgs = n["configurations"];
  if (cfgs.size() == 0) cfgs.fail("a task needs at least one configuration");
  for (const auto& c : cfgs.items()) {
    t.configs.push_back(read_configuration(c));
    for (std::size_t k = 0; k + 1 < t.configs.size(); ++k) {
      if (t.configs[k].id == t.configs.back().id) c["id"].fail("duplicate configuration id");
    }
  }
  if (t.deadlines) {
    n["deadlines"].checked([&] { return Targets::from_deadlines(*t.deadlines); });
  }
  return t;
}

inline std::vector<SimTask> read_tasks(const Node& n) {
  std::vector<SimTask> tasks;
  for (const auto& x : n.items()) {
    tasks.push_back(read_task(x));
    for (std::size_t k = 0; k + 1 < tasks.size(); ++k) {
      if (tasks[k].id == tasks.back().id) x["id"].fail("duplicate task id");
    }
  }
  return tasks;
}

struct WorkloadFile {
  PiecewiseUtility utility = PiecewiseUtility::linear(1.0, 1.0);
  bool piecewise = false;  // true when the utility carries its own targets
  DemandCurve demand{100.0, 1.0};
  std::vector<SimTask> tasks;

  const SimTask& task(const std::string& id) const {
    for (const auto& t : tasks) {
      if (t.id == id) return t;
    }
    throw InvalidArgument("unknown task id '" + id + "'");
  }

  /// Targets and utility used to price `task`.
  std::pair<Targets, PiecewiseUtility> pricing_frame(const SimTask& task) const {
    if (piecewise) return {utility.targets(), utility};
    auto targets = task.targets();
    return {targets, utility.retargeted(targets)};
  }
};

inline WorkloadFile read_workload(const Document& doc) {
  Node root(doc);
  WorkloadFile w;
  const auto un = root["utility"];
  w.piecewise = un.has("pieces");
  w.utility = read_utility(un);
  w.demand = read_demand(root["demand"]);
  w.tasks = read_tasks(root["tasks"]);
  return w;
}

struct DagFile {
  TaskGraph graph;
  double alpha_u = 1.0;
  double beta_u = 1.0;
  DemandCurve demand{100.0, 1.0};

  ProfitFunction profit(double epsilon = PricingConstants{}.epsilon) const {
    return linear_profit(alpha_u, beta_u, demand, epsilon);
  }
};

inline DagFile read_dag(const Document& doc) {
  Node root(doc);
  DagFile d;
  for (const auto& n : root["nodes"].items()) {
    std::vector<TaskOption> opts;
    for (const auto& o : n["options"].items()) opts.push_back({o["time"].number(), o["cost"].number()});
    auto id = n["id"].string();
    n.checked([&] { return d.graph.add_node(id, opts); });
  }
  if (d.graph.size() == 0) root["nodes"].fail("a task graph needs at least one node");
  if (auto edges = root.find("edges")) {
    for (const auto& e : edges->items()) {
      if (e.size() != 2) e.fail("an edge is a [from, to] pair");
      auto from = e[0].string();
      auto to = e[1].string();
      e.checked([&] {
        d.graph.add_edge(from, to);
        return 0;
      });
    }
    edges->checked([&] { return topological_sort(d.graph); });
  }
  const auto p = root["profit"];
  d.alpha_u = p["alpha"].number();
  d.beta_u = p["beta"].number();
  if (!(d.alpha_u > 0.0 && d.beta_u > 0.0)) p.fail("alpha and beta must be positive");
  d.demand = read_demand(p);
  return d;
}

inline const char* to_string(AgentKind k) {
  switch (k) {
    case AgentKind::NaiveFixed: return "naive";
    case AgentKind::Expert: return "expert";
    case AgentKind::Heuristic: return "heuristic";
    case AgentKind::Estimator: return "estimator";
    case AgentKind::RiskAware: return "risk-aware";
  }
  return "";
}

inline AgentModel read_agent(const Node& n, std::size_t index) {
  AgentModel a;
  const auto kind = n["kind"].string();
  if (kind == "naive") a.kind = AgentKind::NaiveFixed;
  else if (kind == "expert") a.kind = AgentKind::Expert;
  else if (kind == "heuristic") a.kind = AgentKind::Heuristic;
  else if (kind == "estimator") a.kind = AgentKind::Estimator;
  else if (kind == "risk-aware") a.kind = AgentKind::RiskAware;
  else n["kind"].fail("unknown agent kind '" + kind + "'");
  a.name = n.has("name") ? n["name"].string() : kind + std::to_string(index);
  if (auto c = n.find("config")) a.config = static_cast<std::size_t>(c->unsigned_integer());
  if (a.kind == AgentKind::NaiveFixed && !a.config) n.fail("a naive agent needs a 'config' index");
  if (auto x = n.find("tag_key")) a.tag_key = x->string();
  a.k = n.number_or("k", a.k);
  if (!(a.k > 0.0)) n["k"].fail("estimator coefficient k must be positive");
  a.sigma = n.number_or("sigma", a.sigma);
  if (a.sigma < 0.0) n["sigma"].fail("sigma must be nonnegative");
  a.lambda = n.number_or("lambda", a.lambda);
  if (a.lambda < 0.0) n["lambda"].fail("risk lambda must be nonnegative");
  if (auto b = n.find("bounds")) {
    auto pair = [&](const char* key, double& lo, double& hi) {
      if (auto r = b->find(key)) {
        if (r->size() != 2) r->fail("expected a [lo, hi] pair");
        lo = (*r)[0].number();
        hi = (*r)[1].number();
        if (lo > hi) r->fail("lower bound exceeds upper bound");
      }
    };
    pair("t", a.t_lo_frac, a.t_hi_frac);
    pair("c", a.c_lo_frac, a.c_hi_frac);
  }
  return a;
}

inline Range read_range(const Node& n) {
  if (n.size() != 2) n.fail("expected a [lo, hi] pair");
  return {n[0].number(), n[1].number()};
}

struct ScenarioFile {
  Scenario scenario;                      // tasks empty when synthetic
  std::optional<WorkloadParams> synthetic;

  /// The runnable scenario; a seed override also reseeds a synthetic workload.
  Scenario materialize(std::optional<std::uint64_t> seed = std::nullopt) const {
    Scenario sc = scenario;
    if (seed) sc.seed = *seed;
    if (synthetic) sc.tasks = generate_synthetic_workload(sc.seed, *synthetic);
    return sc;
  }
};

inline ScenarioFile read_scenario(const Document& doc) {
  Node root(doc);
  ScenarioFile f;
  auto& sc = f.scenario;
  if (auto s = root.find("seed")) sc.seed = s->unsigned_integer();
  const auto un = root["utility"];
  if (un.has("pieces")) un.fail("scenarios use a linear utility {alpha, beta}");
  sc.alpha_u = un["alpha"].number();
  sc.beta_u = un["beta"].number();
  if (!(sc.alpha_u > 0.0 && sc.beta_u > 0.0)) un.fail("alpha and beta must be positive");
  sc.demand = read_demand(root["demand"]);
  if (auto t = root.find("trials")) sc.trials = t->unsigned_integer();
  sc.grid_step = root.number_or("grid_step", sc.grid_step);
  if (!(sc.grid_step > 0.0)) root["grid_step"].fail("grid_step must be positive");
  sc.pricing.epsilon = root.number_or("epsilon", sc.pricing.epsilon);
  if (!(sc.pricing.epsilon > 0.0)) root["epsilon"].fail("epsilon must be positive");
  if (auto r = root.find("risk")) {
    sc.risk.tv_radius = r->number_or("tv_radius", sc.risk.tv_radius);
    if (auto x = r->find("p_samples")) sc.risk.p_samples = x->unsigned_integer();
    if (auto x = r->find("markup_steps")) sc.risk.markup_steps = x->unsigned_integer();
    if (auto x = r->find("seed")) sc.risk.seed = x->unsigned_integer();
    r->checked([&] {
      sc.risk.validate();
      return 0;
    });
  }

  const bool inline_tasks = root.has("tasks");
  const bool synthetic = root.has("workload");
  if (inline_tasks == synthetic) root.fail("give exactly one of 'tasks' or 'workload'");
  if (inline_tasks) {
    sc.tasks = read_tasks(root["tasks"]);
  } else {
    const auto w = root["workload"];
    WorkloadParams wp;
    if (auto x = w.find("n_tasks")) wp.n_tasks = x->unsigned_integer();
    if (auto x = w.find("n_configs")) wp.n_configs = x->unsigned_integer();
    if (auto x = w.find("mean")) wp.mean = read_range(*x);
    if (auto x = w.find("variance")) wp.variance = read_range(*x);
    if (auto x = w.find("rate")) wp.rate = read_range(*x);
    wp.grid_step = sc.grid_step;
    w.checked([&] { return generate_synthetic_workload(0, wp).size(); });
    f.synthetic = wp;
  }

  const auto agents = root["agents"];
  if (agents.size() == 0) agents.fail("a scenario needs at least one agent");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    sc.agents.push_back(read_agent(agents[i], i));
    for (std::size_t k = 0; k < i; ++k) {
      if (sc.agents[k].name == sc.agents[i].name) agents[i].fail("duplicate agent name");
    }
  }
  return f;
}

struct BidFile {
  PiecewiseUtility utility = PiecewiseUtility::linear(1.0, 1.0);
  std::vector<Bid> bids;
};

/// {"utility": {alpha, beta}, "targets": [...], "task": "...", "bids": [{agent,
/// probs, expected_times, prices, true_costs?}]}.
inline BidFile read_bids(const Document& doc) {
  Node root(doc);
  BidFile f;
  std::vector<double> interior;
  if (auto t = root.find("targets")) interior = t->numbers();
  const Targets targets =
      root.checked([&] { return Targets::from_deadlines(interior); });
  const auto un = root["utility"];
  if (un.has("pieces")) un.fail("VCG payments need a linear utility {alpha, beta}");
  f.utility = read_utility(un, targets);
  if (!f.utility.is_linear()) un.fail("VCG payments need alpha > 0 and beta > 0");
  const std::string task = root.has("task") ? root["task"].string() : "";
  const auto bids = root["bids"];
  if (bids.size() < 2) bids.fail("a VCG auction needs at least two bids");
  for (const auto& b : bids.items()) {
    Bid bid;
    const auto agent = b["agent"].number();
    if (agent != static_cast<double>(static_cast<int>(agent))) b["agent"].fail("agent must be an integer");
    bid.agent = static_cast<int>(agent);
    const auto probs = b["probs"].numbers();
    const auto times = b["expected_times"].numbers();
    const auto prices = b["prices"].numbers();
    const auto costs = b.has("true_costs") ? b["true_costs"].numbers() : prices;
    b.checked([&] {
      IntervalStats truth{probs, times, costs};
      truth.validate();
      bid.true_stats = truth;
      bid.contract = cost_priced_contract(task, targets, IntervalStats{probs, times, prices}, prices);
      for (double x : prices) cmarket::detail::require(x >= 0.0, "reported prices must be nonnegative");
      return 0;
    });
    for (const auto& other : f.bids) {
      if (other.agent == bid.agent) b["agent"].fail("duplicate agent id");
    }
    f.bids.push_back(std::move(bid));
  }
  return f;
}

// ---------------------------------------------------------------------------
// Writing.

/// x rounded to 12 significant digits, for human-facing reports.
inline double round12(double x) {
  if (!std::isfinite(x)) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json write_utility(const PiecewiseUtility& u, bool piecewise) {
  if (!piecewise) {
    const auto p = *u.uniform_piece();
    return {{"alpha", p.a}, {"beta", p.b}};
  }
  json pieces = json::array();
  for (const auto& p : u.pieces()) pieces.push_back({{"kappa", p.kappa}, {"a", p.a}, {"b", p.b}});
  return {{"targets", u.targets().deadlines()}, {"pieces", pieces}};
}

inline json write_demand(const DemandCurve& m) { return {{"gamma", m.gamma}, {"lambda", m.lambda}}; }

inline json write_histogram(const CompletionHistogram& h) {
  json out = json::array();
  for (const auto& b : h.bins()) {
    if (b.is_point()) out.push_back({{"time", b.lo}, {"mass", b.mass}});
    else out.push_back({{"lo", b.lo}, {"hi", b.hi}, {"mass", b.mass}});
  }
  return out;
}

inline json write_task(const SimTask& t) {
  json cfgs = json::array();
  for (const auto& c : t.configs) {
    json jc = {{"id", c.id}, {"rate", c.rate}, {"histogram", write_histogram(c.histogram)}};
    if (!c.tags.empty()) jc["tags"] = c.tags;
    cfgs.push_back(std::move(jc));
  }
  json out = {{"id", t.id}, {"configurations", std::move(cfgs)}};
  if (!t.intensity.empty()) out["intensity"] = t.intensity;
  if (t.deadlines) out["deadlines"] = *t.deadlines;
  if (!t.stats.empty()) out["stats"] = t.stats;
  return out;
}

inline json write_workload(const WorkloadFile& w) {
  json tasks = json::array();
  for (const auto& t : w.tasks) tasks.push_back(write_task(t));
  return {{"utility", write_utility(w.utility, w.piecewise)},
          {"demand", write_demand(w.demand)},
          {"tasks", std::move(tasks)}};
}

inline json write_dag(const DagFile& d) {
  json nodes = json::array();
  for (std::size_t v = 0; v < d.graph.size(); ++v) {
    json opts = json::array();
    for (const auto& o : d.graph.options(v)) opts.push_back({{"time", o.time}, {"cost", o.cost}});
    nodes.push_back({{"id", d.graph.name(v)}, {"options", std::move(opts)}});
  }
  json edges = json::array();
  for (auto [a, b] : d.graph.edges()) edges.push_back({d.graph.name(a), d.graph.name(b)});
  json profit = write_demand(d.demand);
  profit["alpha"] = d.alpha_u;
  profit["beta"] = d.beta_u;
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"profit", std::move(profit)}};
}

inline json write_agent(const AgentModel& a) {
  json out = {{"name", a.name}, {"kind", to_string(a.kind)}};
  if (a.config) out["config"] = *a.config;
  if (a.kind == AgentKind::Heuristic) out["tag_key"] = a.tag_key;
  if (a.kind == AgentKind::Estimator || a.kind == AgentKind::RiskAware) {
    out["k"] = a.k;
    out["sigma"] = a.sigma;
  }
  if (a.kind == AgentKind::RiskAware) {
    out["lambda"] = a.lambda;
    out["bounds"] = {{"t", {a.t_lo_frac, a.t_hi_frac}}, {"c", {a.c_lo_frac, a.c_hi_frac}}};
  }
  return out;
}

inline json write_scenario(const ScenarioFile& f) {
  const auto& sc = f.scenario;
  json out = {{"seed", sc.seed},
              {"utility", {{"alpha", sc.alpha_u}, {"beta", sc.beta_u}}},
              {"demand", write_demand(sc.demand)},
              {"trials", sc.trials},
              {"grid_step", sc.grid_step},
              {"epsilon", sc.pricing.epsilon},
              {"risk",
               {{"tv_radius", sc.risk.tv_radius},
                {"p_samples", sc.risk.p_samples},
                {"markup_steps", sc.risk.markup_steps},
                {"seed", sc.risk.seed}}}};
  if (f.synthetic) {
    const auto& w = *f.synthetic;
    out["workload"] = {{"n_tasks", w.n_tasks},
                       {"n_configs", w.n_configs},
                       {"mean", {w.mean.lo, w.mean.hi}},
                       {"variance", {w.variance.lo, w.variance.hi}},
                       {"rate", {w.rate.lo, w.rate.hi}}};
  } else {
    json tasks = json::array();
    for (const auto& t : sc.tasks) tasks.push_back(write_task(t));
    out["tasks"] = std::move(tasks);
  }
  json agents = json::array();
  for (const auto& a : sc.agents) agents.push_back(write_agent(a));
  out["agents"] = std::move(agents);
  return out;
}

inline json write_prices(const PriceSchedule& s) {
  json out = json::array();
  for (const auto& p : s.pieces()) out.push_back({{"d", round12(p.d)}, {"e", round12(p.e)}});
  return out;
}

inline json rounded(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(round12(x));
  return out;
}

inline json write_contract(const Contract& c) {
  return {{"task", c.task},
          {"stats", c.stats},
          {"targets", rounded(c.targets.deadlines())},
          {"probs", rounded(c.probs)},
          {"expected_times", rounded(c.expected_times)},
          {"prices", write_prices(c.prices)}};
}

inline json write_outcome(const PricingOutcome& o) {
  return {{"markup", round12(o.markup)},
          {"expected_profit", round12(o.expected_profit)},
          {"expected_demand", round12(o.expected_demand)},
          {"overall_profit", round12(o.overall_profit)},
          {"consumer_expected_utility", round12(o.consumer_expected_utility)}};
}

inline json write_assignment(const TaskGraph& g, const Assignment& a) {
  json nodes = json::array();
  for (std::size_t v = 0; v < g.size(); ++v) {
    const auto& o = g.options(v)[a.choice[v]];
    nodes.push_back({{"id", g.name(v)},
                     {"option", a.choice[v]},
                     {"time", round12(o.time)},
                     {"cost", round12(o.cost)}});
  }
  return {{"assignment", std::move(nodes)},
          {"total_time", round12(a.total_time)},
          {"total_cost", round12(a.total_cost)},
          {"profit", round12(a.profit)}};
}

// ---------------------------------------------------------------------------
// CSV.

/// RFC 4180 field quoting.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// 12 significant digits; NaN and infinities become empty fields.
inline std::string csv_number(double x) {
  if (!std::isfinite(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x == 0.0 ? 0.0 : x);
  return buf;
}

inline constexpr const char* kMetricsHeader =
    "sweep_param,sweep_value,agent,task,config,accepted,profit,expected_profit,optimal_profit,"
    "utility,relative_loss,similarity,payment,relative_utility,crossover";

inline void write_metrics_rows(std::ostream& out, const std::string& param, double value,
                               const Metrics& m) {
  for (const auto& r : m.rows) {
    out << csv_field(param) << ',' << (param.empty() ? "" : csv_number(value)) << ','
        << csv_field(r.agent) << ',' << csv_field(r.task) << ',' << csv_field(r.config) << ','
        << csv_number(r.accepted) << ',' << csv_number(r.profit) << ','
        << csv_number(r.expected_profit) << ',' << csv_number(r.optimal_profit) << ','
        << csv_number(r.utility) << ',' << csv_number(r.relative_loss) << ','
        << csv_number(r.similarity) << ',' << csv_number(r.payment) << ','
        << csv_number(r.relative_utility) << ',' << csv_number(r.crossover) << '\n';
  }
}

inline void write_metrics_csv(std::ostream& out, const Metrics& m) {
  out << kMetricsHeader << '\n';
  write_metrics_rows(out, "", 0.0, m);
}

inline void write_sweep_csv(std::ostream& out, const SweepTable& t) {
  out << kMetricsHeader << '\n';
  for (const auto& [v, m] : t.blocks) write_metrics_rows(out, to_string(t.parameter), v, m);
}

}  // namespace cmarket::io
