#pragma once

// Brute-force reference for the PromQL subset: random small stores, random expressions
// rendered as text, and a direct evaluation of each expression over the raw sample list.
// Shares nothing with the engine except the Store type used to feed it.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "skillforge/core/text.hpp"
#include "skillforge/metrics/promql.hpp"
#include "skillforge/metrics/store.hpp"

namespace skillforge::oracle {

using LabelSet = std::map<std::string, std::string>;  // includes __name__

struct RawSeries {
  LabelSet labels;
  std::vector<std::pair<double, double>> samples;  // (t, v), t strictly increasing
};

struct RawStore {
  std::vector<RawSeries> series;

  metrics::Store build() const {
    metrics::Store s;
    for (const auto& rs : series) {
      metrics::SeriesId id;
      for (const auto& [k, v] : rs.labels) {
        if (k == "__name__") id.metric_name = v;
        else id.labels[k] = v;
      }
      for (auto [t, v] : rs.samples) s.ingest({id, t, v});
    }
    return s;
  }
  std::size_t sample_count() const {
    std::size_t n = 0;
    for (const auto& s : series) n += s.samples.size();
    return n;
  }
};

struct Match {
  std::string label;
  bool regex = false;
  std::string text;                               // value or pattern as written
  std::function<bool(const std::string&)> test;  // hand-written meaning of the pattern
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  enum Kind { selector, rate, sum, count, quantile, divide } kind = selector;
  std::string metric;
  std::vector<Match> matches;
  double range = 0;
  std::vector<std::string> by;
  bool by_first = false;
  double q = 0;
  NodePtr a, b;
};

struct Row {
  LabelSet labels;
  double value;
};

struct Outcome {
  bool error = false;
  std::vector<Row> rows;
};

inline std::string fmt(double v) { return text::format_double(v); }

inline std::string render(const Node& n) {
  auto sel = [&](const Node& s) {
    std::string out = s.metric;
    if (!s.matches.empty() || s.metric.empty()) {
      out += "{";
      for (std::size_t i = 0; i < s.matches.size(); ++i) {
        if (i) out += ",";
        out += s.matches[i].label + (s.matches[i].regex ? "=~" : "=") + "\"" + s.matches[i].text + "\"";
      }
      out += "}";
    }
    return out;
  };
  switch (n.kind) {
    case Node::selector: return sel(n);
    case Node::rate: return "rate(" + sel(n) + "[" + std::to_string(static_cast<int>(n.range)) + "s])";
    case Node::sum:
    case Node::count: {
      std::string op = n.kind == Node::sum ? "sum" : "count";
      std::string by;
      if (!n.by.empty()) by = "by (" + text::join(n.by, ", ") + ")";
      if (by.empty()) return op + "(" + render(*n.a) + ")";
      return n.by_first ? op + " " + by + " (" + render(*n.a) + ")" : op + "(" + render(*n.a) + ") " + by;
    }
    case Node::quantile: return "histogram_quantile(" + fmt(n.q) + ", " + render(*n.a) + ")";
    case Node::divide: return render(*n.a) + " / " + render(*n.b);
  }
  return "";
}

inline bool selected(const Node& s, const LabelSet& labels) {
  auto get = [&](const std::string& k) {
    auto it = labels.find(k);
    return it == labels.end() ? std::string() : it->second;
  };
  if (!s.metric.empty() && get("__name__") != s.metric) return false;
  for (const auto& m : s.matches) {
    if (!m.test(get(m.label))) return false;
  }
  return true;
}

inline LabelSet drop(LabelSet l, const std::string& k) {
  l.erase(k);
  return l;
}

// Textbook cumulative-bucket interpolation.
inline double quantile_of(double q, std::vector<std::pair<double, double>> b) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::sort(b.begin(), b.end());
  std::vector<std::pair<double, double>> m;
  for (auto& x : b) {
    if (!m.empty() && m.back().first == x.first) m.back().second += x.second;
    else m.push_back(x);
  }
  if (m.size() < 2 || m.back().first != std::numeric_limits<double>::infinity()) return nan;
  double total = m.back().second;
  if (total <= 0) return nan;
  double rank = q * total;
  std::size_t i = 0;
  while (i + 1 < m.size() && m[i].second < rank) ++i;
  if (i + 1 == m.size()) return m[m.size() - 2].first;
  if (i == 0 && m[0].first <= 0) return m[0].first;
  double lo = i == 0 ? 0.0 : m[i - 1].first;
  double below = i == 0 ? 0.0 : m[i - 1].second;
  double in_bucket = m[i].second - below;
  if (in_bucket <= 0) return lo;
  return lo + (m[i].first - lo) * (rank - below) / in_bucket;
}

inline Outcome evaluate(const Node& n, const RawStore& st, double at) {
  Outcome out;
  switch (n.kind) {
    case Node::selector:
      for (const auto& s : st.series) {
        if (!selected(n, s.labels)) continue;
        std::optional<std::pair<double, double>> last;
        for (auto smp : s.samples) {
          if (smp.first <= at) last = smp;
        }
        if (last && last->first >= at - metrics::kLookbackSeconds) out.rows.push_back({s.labels, last->second});
      }
      return out;
    case Node::rate:
      for (const auto& s : st.series) {
        if (!selected(n, s.labels)) continue;
        std::vector<std::pair<double, double>> w;
        for (auto smp : s.samples) {
          if (smp.first >= at - n.range && smp.first <= at) w.push_back(smp);
        }
        if (w.size() < 2) continue;
        double inc = 0;
        for (std::size_t i = 1; i < w.size(); ++i) {
          inc += w[i].second < w[i - 1].second ? w[i].second : w[i].second - w[i - 1].second;
        }
        double span = w.back().first - w.front().first;
        out.rows.push_back({drop(s.labels, "__name__"), inc / span});
      }
      // Dropping the name may collapse two series onto one label set; that is an error.
      for (std::size_t i = 0; i < out.rows.size(); ++i) {
        for (std::size_t j = i + 1; j < out.rows.size(); ++j) {
          if (out.rows[i].labels == out.rows[j].labels) return {true, {}};
        }
      }
      return out;
    case Node::sum:
    case Node::count: {
      Outcome in = evaluate(*n.a, st, at);
      if (in.error) return in;
      std::map<LabelSet, double> acc;
      for (const auto& r : in.rows) {
        LabelSet key;
        for (const auto& l : n.by) {
          if (r.labels.count(l)) key[l] = r.labels.at(l);
        }
        acc[key] += n.kind == Node::sum ? r.value : 1;
      }
      for (auto& [k, v] : acc) out.rows.push_back({k, v});
      return out;
    }
    case Node::quantile: {
      if (n.q < 0 || n.q > 1) return {true, {}};
      Outcome in = evaluate(*n.a, st, at);
      if (in.error) return in;
      std::map<LabelSet, std::vector<std::pair<double, double>>> groups;
      for (const auto& r : in.rows) {
        auto le = r.labels.find("le");
        if (le == r.labels.end()) continue;
        double bound = le->second == "+Inf" ? std::numeric_limits<double>::infinity() : std::stod(le->second);
        groups[drop(drop(r.labels, "le"), "__name__")].push_back({bound, r.value});
      }
      for (auto& [k, b] : groups) out.rows.push_back({k, quantile_of(n.q, b)});
      return out;
    }
    case Node::divide: {
      Outcome l = evaluate(*n.a, st, at);
      Outcome r = evaluate(*n.b, st, at);
      if (l.error || r.error) return {true, {}};
      std::map<LabelSet, double> right;
      for (const auto& row : r.rows) {
        if (!right.emplace(drop(row.labels, "__name__"), row.value).second) return {true, {}};
      }
      for (const auto& row : l.rows) {
        auto key = drop(row.labels, "__name__");
        auto it = right.find(key);
        if (it == right.end()) continue;
        for (const auto& done : out.rows) {
          if (done.labels == key) return {true, {}};
        }
        out.rows.push_back({key, row.value / it->second});
      }
      return out;
    }
  }
  return out;
}

// ---- random generation ---------------------------------------------------------------

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  // Up to 5 series of counters and gauges, at most 50 samples in all.
  RawStore plain_store() {
    RawStore st;
    int n = uniform(1, 5);
    std::size_t budget = 50;
    for (int i = 0; i < n; ++i) {
      RawSeries s;
      s.labels["__name__"] = pick({"m_a", "m_b"});
      s.labels["job"] = pick({"a", "ab", "b"});
      if (coin()) s.labels["inst"] = pick({"x", "y"});
      bool duplicate = false;
      for (const auto& o : st.series) duplicate = duplicate || o.labels == s.labels;
      if (duplicate) continue;
      std::size_t count = std::min<std::size_t>(budget, static_cast<std::size_t>(uniform(0, 12)));
      budget -= count;
      double t = uniform(0, 4) * 15.0;
      double v = uniform(0, 20);
      for (std::size_t k = 0; k < count; ++k) {
        s.samples.push_back({t, v});
        t += uniform(1, 4) * 15.0;
        v = coin(0.1) ? real(0, 5) : v + real(0, 30);  // occasional counter reset
      }
      if (coin(0.4) && budget >= s.samples.size()) {
        // A twin under the other metric name, so binary operators find matches.
        RawSeries twin = s;
        twin.labels["__name__"] = s.labels["__name__"] == "m_a" ? "m_b" : "m_a";
        for (auto& smp : twin.samples) smp.second = smp.second * real(0.5, 2) + 1;
        budget -= twin.samples.size();
        bool taken = false;
        for (const auto& o : st.series) taken = taken || o.labels == twin.labels;
        if (!taken) st.series.push_back(std::move(twin));
      }
      st.series.push_back(std::move(s));
    }
    return st;
  }

  // One histogram (3 or 4 bucket series sharing timestamps) plus maybe a plain series.
  RawStore histogram_store() {
    RawStore st;
    std::vector<std::string> les = {"0.05", "0.1", "0.5", "+Inf"};
    if (coin(0.15)) les.pop_back();  // no +Inf bucket: quantile is NaN
    if (coin(0.3)) les.erase(les.begin() + uniform(0, static_cast<int>(les.size()) - 2));
    std::string job = pick({"a", "b"});
    int steps = uniform(0, 10);
    std::vector<double> cum(les.size(), 0.0);
    std::vector<RawSeries> buckets(les.size());
    for (std::size_t i = 0; i < les.size(); ++i) {
      buckets[i].labels = {{"__name__", "lat_bucket"}, {"job", job}, {"le", les[i]}};
    }
    double t = uniform(0, 4) * 15.0;
    for (int k = 0; k < steps; ++k) {
      double running = 0;
      for (std::size_t i = 0; i < les.size(); ++i) {
        running += coin(0.2) ? 0 : real(0, 10);
        cum[i] += running;
        buckets[i].samples.push_back({t, cum[i]});
      }
      t += uniform(1, 6) * 15.0;
    }
    for (auto& b : buckets) st.series.push_back(std::move(b));
    if (st.series.size() < 5 && coin()) {
      RawStore extra = plain_store();
      st.series.push_back(extra.series.front());
    }
    return st;
  }

  Match match() {
    Match m;
    if (coin(0.6)) {
      m.label = "job";
      m.regex = coin(0.4);
      if (m.regex) {
        int p = uniform(0, 3);
        if (p == 0) m.text = "a|b", m.test = [](const std::string& v) { return v == "a" || v == "b"; };
        if (p == 1) m.text = "a.*", m.test = [](const std::string& v) { return v.rfind("a", 0) == 0; };
        if (p == 2) m.text = ".*", m.test = [](const std::string&) { return true; };
        if (p == 3) m.text = "b", m.test = [](const std::string& v) { return v == "b"; };
      } else {
        m.text = pick({"a", "ab", "b"});
        std::string want = m.text;
        m.test = [want](const std::string& v) { return v == want; };
      }
    } else {
      m.label = "inst";
      m.text = pick({"x", "y", ""});
      std::string want = m.text;
      m.test = [want](const std::string& v) { return v == want; };
    }
    return m;
  }

  NodePtr selector_node(const std::string& metric_pool) {
    auto n = std::make_shared<Node>();
    n->kind = Node::selector;
    if (metric_pool == "hist") {
      n->metric = coin(0.85) ? "lat_bucket" : "";
    } else {
      int c = uniform(0, 2);
      n->metric = c == 0 ? "m_a" : c == 1 ? "m_b" : "";
    }
    int k = uniform(n->metric.empty() ? 1 : 0, 2);
    for (int i = 0; i < k; ++i) n->matches.push_back(match());
    if (n->metric.empty() && n->matches.empty()) n->matches.push_back(match());
    return n;
  }

  NodePtr rate_node(const std::string& pool) {
    auto n = selector_node(pool);
    n->kind = Node::rate;
    n->range = pick_num({60, 120, 300, 600});
    return n;
  }

  NodePtr aggregate_node(Node::Kind kind, NodePtr inner) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    int c = uniform(0, 3);
    if (c == 1) n->by = {"job"};
    if (c == 2) n->by = {"inst"};
    if (c == 3) n->by = {"job", "inst"};
    n->by_first = coin();
    n->a = std::move(inner);
    return n;
  }

  NodePtr quantile_node() {
    auto n = std::make_shared<Node>();
    n->kind = Node::quantile;
    int c = uniform(0, 9);
    n->q = c == 0 ? 0.0 : c == 1 ? 1.0 : c == 2 ? (coin() ? -0.1 : 1.5) : std::round(real(0, 1) * 1000) / 1000;
    int shape = uniform(0, 2);
    if (shape == 0) {
      n->a = selector_node("hist");
    } else if (shape == 1) {
      n->a = rate_node("hist");
    } else {
      auto agg = aggregate_node(Node::sum, rate_node("hist"));
      agg->by = coin() ? std::vector<std::string>{"le"} : std::vector<std::string>{"job", "le"};
      n->a = agg;
    }
    return n;
  }

  NodePtr divide_node() {
    auto side = [&]() -> NodePtr {
      int c = uniform(0, 2);
      if (c == 0) return rate_node("plain");
      if (c == 1) return selector_node("plain");
      return aggregate_node(Node::sum, rate_node("plain"));
    };
    auto n = std::make_shared<Node>();
    n->kind = Node::divide;
    n->a = side();
    if (coin(0.6)) {
      // Same shape over the other metric, so the label sets usually line up.
      auto mirror = std::make_shared<Node>(*n->a);
      Node* leaf = mirror.get();
      if (leaf->kind == Node::sum) {
        leaf->a = std::make_shared<Node>(*leaf->a);
        leaf = leaf->a.get();
      }
      if (leaf->metric.empty()) {
        Node* left = n->a->kind == Node::sum ? n->a->a.get() : n->a.get();
        left->metric = "m_a";
      }
      leaf->metric = leaf->metric == "m_a" ? "m_b" : "m_a";
      n->b = mirror;
    } else {
      n->b = side();
    }
    return n;
  }

  double time_in(const RawStore& st) {
    double hi = 60;
    for (const auto& s : st.series) {
      if (!s.samples.empty()) hi = std::max(hi, s.samples.back().first);
    }
    return std::round(real(0, hi + 200));
  }

 private:
  std::string pick(std::initializer_list<const char*> options) {
    auto it = options.begin();
    std::advance(it, uniform(0, static_cast<int>(options.size()) - 1));
    return *it;
  }
  double pick_num(std::initializer_list<double> options) {
    auto it = options.begin();
    std::advance(it, uniform(0, static_cast<int>(options.size()) - 1));
    return *it;
  }
  std::mt19937_64 rng_;
};

inline bool close_enough(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  if (std::isinf(a) || std::isinf(b)) return a == b;
  double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= 1e-9 * scale || std::abs(a - b) <= 1e-12;
}

// Compares the engine against the reference on one case. Empty string means agreement.
inline std::string compare(const Node& expr, const RawStore& st, double at) {
  const std::string text = render(expr);
  Outcome want = evaluate(expr, st, at);
  metrics::Store store = st.build();
  metrics::QueryResult got;
  try {
    got = metrics::eval(text, store, at);
  } catch (const metrics::ParseError& e) {
    return text + ": unexpected parse error: " + e.what();
  } catch (const Error& e) {
    if (want.error) return "";
    return text + ": engine raised " + e.what();
  }
  if (want.error) return text + ": engine succeeded where the reference fails";
  std::multimap<LabelSet, double> expected;
  for (const auto& r : want.rows) expected.emplace(r.labels, r.value);
  std::multimap<LabelSet, double> actual;
  for (const auto& e : got.entries) actual.emplace(e.labels, e.value);
  if (expected.size() != actual.size()) {
    return text + ": " + std::to_string(actual.size()) + " entries, reference has " +
           std::to_string(expected.size());
  }
  for (auto e = expected.begin(), a = actual.begin(); e != expected.end(); ++e, ++a) {
    if (e->first != a->first) return text + ": label sets differ";
    if (!close_enough(e->second, a->second)) {
      return text + ": value " + fmt(a->second) + " vs reference " + fmt(e->second);
    }
  }
  return "";
}

enum class Production { selector, rate, sum, count, quantile, divide };

inline const char* name(Production p) {
  switch (p) {
    case Production::selector: return "selector";
    case Production::rate: return "rate";
    case Production::sum: return "sum";
    case Production::count: return "count";
    case Production::quantile: return "histogram_quantile";
    case Production::divide: return "divide";
  }
  return "?";
}

struct SweepResult {
  int cases = 0;
  int nonempty = 0;
  int failed = 0;
  std::vector<std::string> failures;  // the first few
};

inline SweepResult sweep(Production p, int cases, std::uint64_t seed) {
  Generator g(seed);
  SweepResult res;
  for (int i = 0; i < cases; ++i) {
    RawStore st = p == Production::quantile ? g.histogram_store() : g.plain_store();
    NodePtr expr;
    switch (p) {
      case Production::selector: expr = g.selector_node("plain"); break;
      case Production::rate: expr = g.rate_node("plain"); break;
      case Production::sum:
        expr = g.aggregate_node(Node::sum, g.coin() ? g.rate_node("plain") : g.selector_node("plain"));
        break;
      case Production::count:
        expr = g.aggregate_node(Node::count, g.coin() ? g.rate_node("plain") : g.selector_node("plain"));
        break;
      case Production::quantile: expr = g.quantile_node(); break;
      case Production::divide: expr = g.divide_node(); break;
    }
    double at = g.time_in(st);
    if (p == Production::divide) {
      // Redraw while the left operand selects nothing, otherwise most cases are trivially empty.
      for (int tries = 0; tries < 5 && evaluate(*expr->a, st, at).rows.empty(); ++tries) {
        expr = g.divide_node();
        at = g.time_in(st);
      }
    }
    ++res.cases;
    Outcome o = evaluate(*expr, st, at);
    if (!o.error && !o.rows.empty()) ++res.nonempty;
    std::string diff = compare(*expr, st, at);
    if (diff.empty()) continue;
    ++res.failed;
    if (res.failures.size() < 5) res.failures.push_back(diff);
  }
  return res;
}

}  // namespace skillforge::oracle
