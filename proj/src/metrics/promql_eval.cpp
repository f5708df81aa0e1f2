#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "skillforge/core/text.hpp"
#include "skillforge/metrics/promql.hpp"

namespace skillforge::metrics {

bool Matcher::matches(const Labels& full_labels) const {
  auto it = full_labels.find(label);
  const std::string empty;
  const std::string& actual = it == full_labels.end() ? empty : it->second;
  if (op == MatchOp::equal) return actual == value;
  return std::regex_match(actual, *compiled);
}

namespace {

Labels without(Labels labels, std::string_view key) {
  labels.erase(std::string(key));
  return labels;
}

bool selects(const VectorSelector& sel, const SeriesId& id, const Labels& full) {
  if (!sel.metric.empty() && id.metric_name != sel.metric) return false;
  return std::all_of(sel.matchers.begin(), sel.matchers.end(),
                     [&](const Matcher& m) { return m.matches(full); });
}

void sort_entries(std::vector<Entry>& entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.labels < b.labels; });
}

std::vector<Entry> eval_selector(const VectorSelector& sel, const Store& store, double at) {
  std::vector<Entry> out;
  for (const auto& [id, samples] : store.series()) {
    Labels full = id.full_labels();
    if (!selects(sel, id, full)) continue;
    auto it = std::upper_bound(samples.begin(), samples.end(), at,
                               [](double t, const Sample& s) { return t < s.timestamp; });
    if (it == samples.begin()) continue;
    const Sample& latest = *std::prev(it);
    if (latest.timestamp < at - kLookbackSeconds) continue;
    out.push_back({std::move(full), latest.value, at});
  }
  return out;
}

std::vector<Entry> eval_rate(const RateCall& call, const Store& store, double at) {
  std::vector<Entry> out;
  const double from = at - call.range_seconds;
  for (const auto& [id, samples] : store.series()) {
    Labels full = id.full_labels();
    if (!selects(call.selector, id, full)) continue;
    auto lo = std::lower_bound(samples.begin(), samples.end(), from,
                               [](const Sample& s, double t) { return s.timestamp < t; });
    auto hi = std::upper_bound(samples.begin(), samples.end(), at,
                               [](double t, const Sample& s) { return t < s.timestamp; });
    if (std::distance(lo, hi) < 2) continue;
    double increase = 0;
    for (auto it = std::next(lo); it != hi; ++it) {
      double prev = std::prev(it)->value;
      // A drop is a counter reset: the new value is all fresh increase.
      increase += it->value >= prev ? it->value - prev : it->value;
    }
    double span = std::prev(hi)->timestamp - lo->timestamp;
    if (span <= 0) continue;
    out.push_back({without(std::move(full), kNameLabel), increase / span, at});
  }
  std::set<Labels> seen;
  for (const auto& e : out) {
    if (!seen.insert(e.labels).second) throw EvalError("vector cannot contain metrics with the same labelset");
  }
  return out;
}

std::vector<Entry> eval_node(const Expr& expr, const Store& store, double at);

std::vector<Entry> eval_aggregate(const Aggregate& agg, const Store& store, double at) {
  std::map<Labels, double> groups;
  for (const auto& e : eval_node(*agg.inner, store, at)) {
    Labels key;
    for (const auto& l : agg.by) {
      auto it = e.labels.find(l);
      if (it != e.labels.end()) key[l] = it->second;
    }
    double& acc = groups[key];
    acc += agg.op == AggregateOp::sum ? e.value : 1.0;
  }
  std::vector<Entry> out;
  for (auto& [labels, value] : groups) out.push_back({labels, value, at});
  return out;
}

std::vector<Entry> eval_quantile(const QuantileCall& call, const Store& store, double at) {
  if (!(call.q >= 0 && call.q <= 1)) {
    throw RangeError("histogram_quantile: quantile " + text::format_double(call.q) +
                     " outside [0, 1]");
  }
  std::map<Labels, std::vector<std::pair<double, double>>> groups;
  for (const auto& e : eval_node(*call.inner, store, at)) {
    auto le = e.labels.find("le");
    if (le == e.labels.end()) continue;
    auto bound = text::parse_double(le->second);
    if (!bound) continue;
    groups[without(without(e.labels, "le"), kNameLabel)].push_back({*bound, e.value});
  }
  std::vector<Entry> out;
  for (auto& [labels, buckets] : groups) {
    out.push_back({labels, bucket_quantile(call.q, std::move(buckets)), at});
  }
  return out;
}

std::vector<Entry> eval_divide(const Divide& div, const Store& store, double at) {
  auto lhs = eval_node(*div.lhs, store, at);
  auto rhs = eval_node(*div.rhs, store, at);
  std::map<Labels, double> right;
  for (auto& e : rhs) {
    auto key = without(std::move(e.labels), kNameLabel);
    if (!right.emplace(std::move(key), e.value).second) {
      throw EvalError("many-to-many matching not allowed: duplicate series on the right side");
    }
  }
  std::vector<Entry> out;
  std::set<Labels> matched;
  for (auto& e : lhs) {
    auto key = without(std::move(e.labels), kNameLabel);
    auto it = right.find(key);
    if (it == right.end()) continue;
    if (!matched.insert(key).second) {
      throw EvalError("multiple matches for labels: many-to-one matching must be explicit");
    }
    out.push_back({std::move(key), e.value / it->second, at});
  }
  return out;
}

std::vector<Entry> eval_node(const Expr& expr, const Store& store, double at) {
  return std::visit(
      [&](const auto& node) -> std::vector<Entry> {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, VectorSelector>) return eval_selector(node, store, at);
        if constexpr (std::is_same_v<T, RateCall>) return eval_rate(node, store, at);
        if constexpr (std::is_same_v<T, Aggregate>) return eval_aggregate(node, store, at);
        if constexpr (std::is_same_v<T, QuantileCall>) return eval_quantile(node, store, at);
        if constexpr (std::is_same_v<T, Divide>) return eval_divide(node, store, at);
      },
      expr.node);
}

}  // namespace

double bucket_quantile(double q, std::vector<std::pair<double, double>> buckets) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::sort(buckets.begin(), buckets.end());
  // Merge duplicate bounds (same le reported by several series in one group).
  std::vector<std::pair<double, double>> merged;
  for (const auto& b : buckets) {
    if (!merged.empty() && merged.back().first == b.first) {
      merged.back().second += b.second;
    } else {
      merged.push_back(b);
    }
  }
  if (merged.size() < 2 || !std::isinf(merged.back().first)) return nan;
  const double total = merged.back().second;
  if (!(total > 0)) return nan;
  double rank = q * total;
  const size_t last = merged.size() - 1;
  size_t b = 0;
  while (b < last && merged[b].second < rank) ++b;
  if (b == last) return merged[last - 1].first;
  if (b == 0 && merged[0].first <= 0) return merged[0].first;
  double start = 0;
  double count = merged[b].second;
  if (b > 0) {
    start = merged[b - 1].first;
    count -= merged[b - 1].second;
    rank -= merged[b - 1].second;
  }
  // Only reachable for q=0 over an empty lowest bucket.
  if (count <= 0) return start;
  return start + (merged[b].first - start) * (rank / count);
}

QueryResult eval(const Expr& expr, const Store& store, double at) {
  QueryResult result;
  result.entries = eval_node(expr, store, at);
  sort_entries(result.entries);
  return result;
}

QueryResult eval(std::string_view text, const Store& store, double at) {
  return eval(*parse(text), store, at);
}

}  // namespace skillforge::metrics
