#include <cctype>
#include <charconv>

#include "skillforge/metrics/promql.hpp"

namespace skillforge::metrics {
namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':';
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ExprPtr parse_all() {
    auto expr = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return expr;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(pos_, what); }
  [[noreturn]] void fail_at(size_t at, const std::string& what) const { throw ParseError(at, what); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void expect(char c) {
    if (peek() != c) {
      if (pos_ >= text_.size()) fail(std::string("unexpected end of input, expected '") + c + "'");
      fail(std::string("expected '") + c + "' but found '" + text_[pos_] + "'");
    }
    ++pos_;
  }

  std::string ident() {
    skip_ws();
    size_t start = pos_;
    if (pos_ >= text_.size() || !is_ident_start(text_[pos_])) fail("expected identifier");
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string label_name() {
    skip_ws();
    size_t start = pos_;
    auto name = ident();
    if (name.find(':') != std::string::npos) fail_at(start, "invalid label name \"" + name + "\"");
    return name;
  }

  std::string string_literal() {
    skip_ws();
    if (pos_ >= text_.size() || (text_[pos_] != '"' && text_[pos_] != '\'')) {
      fail("expected quoted string");
    }
    char quote = text_[pos_++];
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated string");
      char c = text_[pos_++];
      if (c == quote) break;
      if (c == '\\') {
        if (pos_ >= text_.size()) fail("unterminated escape");
        char e = text_[pos_++];
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '\\': case '"': case '\'': out.push_back(e); break;
          // Regex escapes such as \d pass through untouched.
          default: out.push_back('\\'); out.push_back(e); break;
        }
        continue;
      }
      out.push_back(c);
    }
    return out;
  }

  double number() {
    skip_ws();
    size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
            text_[pos_] == 'e' || text_[pos_] == 'E' || text_[pos_] == '-' || text_[pos_] == '+')) {
      ++pos_;
    }
    double v = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (start == pos_ || ec != std::errc() || ptr != text_.data() + pos_) {
      fail_at(start, "expected number");
    }
    return v;
  }

  double duration() {
    skip_ws();
    size_t start = pos_;
    double total = 0;
    bool any = false;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      size_t num_start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      double n = std::stod(std::string(text_.substr(num_start, pos_ - num_start)));
      if (pos_ >= text_.size()) fail("missing duration unit");
      char unit = text_[pos_++];
      switch (unit) {
        case 's': total += n; break;
        case 'm': total += n * 60; break;
        case 'h': total += n * 3600; break;
        case 'd': total += n * 86400; break;
        default: fail_at(pos_ - 1, std::string("unknown duration unit '") + unit + "'");
      }
      any = true;
    }
    if (!any || total <= 0) fail_at(start, "invalid range duration");
    return total;
  }

  std::vector<std::string> by_clause() {
    // "by" already consumed.
    expect('(');
    std::vector<std::string> labels;
    if (peek() != ')') {
      labels.push_back(label_name());
      while (peek() == ',') {
        ++pos_;
        if (peek() == ')') break;
        labels.push_back(label_name());
      }
    }
    expect(')');
    return labels;
  }

  bool at_keyword(std::string_view kw) {
    skip_ws();
    if (text_.substr(pos_, kw.size()) != kw) return false;
    size_t end = pos_ + kw.size();
    return end >= text_.size() || !is_ident_char(text_[end]);
  }

  std::vector<Matcher> matchers() {
    expect('{');
    std::vector<Matcher> out;
    while (peek() != '}') {
      Matcher m;
      m.label = label_name();
      skip_ws();
      if (pos_ >= text_.size()) fail("unexpected end of input in label matcher");
      if (text_[pos_] == '=') {
        ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '~') {
          ++pos_;
          m.op = MatchOp::regex;
        }
      } else {
        fail("unsupported label matcher operator");
      }
      size_t value_at = pos_;
      m.value = string_literal();
      if (m.op == MatchOp::regex) {
        try {
          m.compiled = std::make_shared<const std::regex>("^(?:" + m.value + ")$");
        } catch (const std::regex_error&) {
          fail_at(value_at, "invalid regular expression \"" + m.value + "\"");
        }
      }
      out.push_back(std::move(m));
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() != '}') fail("expected ',' or '}' in label matchers");
    }
    ++pos_;
    return out;
  }

  VectorSelector selector_after_name(std::string metric, size_t start) {
    VectorSelector sel;
    sel.metric = std::move(metric);
    if (peek() == '{') sel.matchers = matchers();
    if (sel.metric.empty() && sel.matchers.empty()) {
      fail_at(start, "vector selector must contain at least one matcher");
    }
    return sel;
  }

  VectorSelector selector() {
    size_t start = (skip_ws(), pos_);
    if (peek() == '{') return selector_after_name("", start);
    return selector_after_name(ident(), start);
  }

  ExprPtr make(auto node) { return std::make_shared<const Expr>(Expr{std::move(node)}); }

  ExprPtr parse_expr() {
    auto lhs = parse_operand();
    while (peek() == '/') {
      ++pos_;
      auto rhs = parse_operand();
      lhs = make(Divide{lhs, rhs});
    }
    return lhs;
  }

  ExprPtr parse_operand() {
    skip_ws();
    size_t start = pos_;
    char c = peek();
    if (c == '\0') fail("unexpected end of input");
    if (c == '{') {
      auto sel = selector();
      reject_range();
      return make(std::move(sel));
    }
    if (!is_ident_start(c)) fail("unexpected character '" + std::string(1, c) + "'");
    std::string name = ident();
    if (name == "sum" || name == "count") {
      Aggregate agg;
      agg.op = name == "sum" ? AggregateOp::sum : AggregateOp::count;
      bool have_by = false;
      if (at_keyword("by")) {
        pos_ += 2;
        agg.by = by_clause();
        have_by = true;
      }
      expect('(');
      agg.inner = parse_expr();
      expect(')');
      if (at_keyword("by")) {
        if (have_by) fail("duplicate by clause");
        pos_ += 2;
        agg.by = by_clause();
      }
      return make(std::move(agg));
    }
    if (name == "rate") {
      expect('(');
      RateCall call;
      call.selector = selector();
      expect('[');
      call.range_seconds = duration();
      expect(']');
      expect(')');
      return make(std::move(call));
    }
    if (name == "histogram_quantile") {
      expect('(');
      QuantileCall call;
      call.q = number();
      expect(',');
      call.inner = parse_expr();
      expect(')');
      return make(std::move(call));
    }
    if (peek() == '(') fail_at(start, "unknown function \"" + name + "\"");
    auto sel = selector_after_name(std::move(name), start);
    reject_range();
    return make(std::move(sel));
  }

  void reject_range() {
    if (peek() == '[') fail("range vector selector is only valid inside rate()");
  }

  std::string_view text_;
  size_t pos_ = 0;
};

}  // namespace

ExprPtr parse(std::string_view text) { return Parser(text).parse_all(); }

}  // namespace skillforge::metrics
