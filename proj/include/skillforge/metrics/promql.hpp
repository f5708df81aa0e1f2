#pragma once

#include <memory>
#include <regex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "skillforge/core/error.hpp"
#include "skillforge/metrics/store.hpp"

// Evaluator for the small PromQL dialect the agents actually use:
//
//   expr      := operand ( '/' operand )*
//   operand   := aggregate | rate | quantile | selector
//   aggregate := ('sum'|'count') [by] '(' expr ')' [by]
//   by        := 'by' '(' label (',' label)* ')'
//   rate      := 'rate' '(' selector '[' duration ']' ')'
//   quantile  := 'histogram_quantile' '(' number ',' expr ')'
//   selector  := [metric] [ '{' matcher (',' matcher)* [','] '}' ]
//   matcher   := label ('=' | '=~') string
//
// Anything else is a ParseError.
namespace skillforge::metrics {

class ParseError : public Error {
 public:
  ParseError(size_t offset, const std::string& what)
      : Error("parse error at char " + std::to_string(offset + 1) + ": " + what), offset_(offset) {}
  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

// Instant selectors see the newest sample no older than this.
inline constexpr double kLookbackSeconds = 300;

enum class MatchOp { equal, regex };

struct Matcher {
  std::string label;
  MatchOp op = MatchOp::equal;
  std::string value;
  std::shared_ptr<const std::regex> compiled;  // anchored; set for regex matchers

  bool matches(const Labels& full_labels) const;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct VectorSelector {
  std::string metric;  // may be empty
  std::vector<Matcher> matchers;
};

struct RateCall {
  VectorSelector selector;
  double range_seconds = 0;
};

enum class AggregateOp { sum, count };

struct Aggregate {
  AggregateOp op = AggregateOp::sum;
  std::vector<std::string> by;
  ExprPtr inner;
};

struct QuantileCall {
  double q = 0;
  ExprPtr inner;
};

struct Divide {
  ExprPtr lhs;
  ExprPtr rhs;
};

struct Expr {
  std::variant<VectorSelector, RateCall, Aggregate, QuantileCall, Divide> node;
};

ExprPtr parse(std::string_view text);

enum class ResultType { vector, scalar };

struct Entry {
  Labels labels;
  double value = 0;
  double timestamp = 0;
};

struct QueryResult {
  ResultType result_type = ResultType::vector;
  std::vector<Entry> entries;  // sorted by labels; empty is a valid answer
};

QueryResult eval(const Expr& expr, const Store& store, double at);
QueryResult eval(std::string_view text, const Store& store, double at);

// Cumulative-bucket quantile interpolation. `buckets` is (upper bound, cumulative count)
// sorted by bound; returns NaN when no +Inf bucket exists or nothing was observed.
double bucket_quantile(double q, std::vector<std::pair<double, double>> buckets);

}  // namespace skillforge::metrics
