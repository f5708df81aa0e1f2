#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "skillforge/metrics/http_api.hpp"
#include "skillforge/metrics/promql.hpp"
#include "support.hpp"

using namespace skillforge;
using namespace skillforge::metrics;

namespace {

SeriesId sid(std::string name, Labels labels) { return {std::move(name), std::move(labels)}; }

const double kInf = std::numeric_limits<double>::infinity();

// Bucket counters whose five-minute rates are exactly 90, 100 and 100 per second.
Store synthetic_histogram() {
  Store s;
  const Labels job{{"job", "sock-shop/catalogue"}};
  auto bucket = [&](const char* le, double per_sec) {
    Labels l = job;
    l["le"] = le;
    s.ingest({sid("request_duration_seconds_bucket", l), 0, 0});
    s.ingest({sid("request_duration_seconds_bucket", l), 300, per_sec * 300});
  };
  bucket("0.005", 90);
  bucket("0.01", 100);
  bucket("+Inf", 100);
  return s;
}

}  // namespace

TEST(Store, IngestCountsAndOrdering) {
  Store s;
  s.ingest({sid("m", {{"job", "j"}}), 0, 1});
  EXPECT_EQ(s.series_count(), 1u);
  s.ingest({sid("m", {{"job", "j"}}), 15, 2});
  EXPECT_EQ(s.series_count(), 1u);
  EXPECT_EQ(s.sample_count(), 2u);
  s.ingest({sid("m", {{"job", "k"}}), 0, 1});
  EXPECT_EQ(s.series_count(), 2u);
  EXPECT_THROW(s.ingest({sid("m", {{"job", "j"}}), 10, 3}), OrderViolation);
  EXPECT_NO_THROW(s.ingest({sid("m", {{"job", "j"}}), 15, 2}));
  EXPECT_THROW(s.ingest({sid("m", {{"job", "j"}}), 15, 9}), OrderViolation);
  EXPECT_EQ(s.sample_count(), 3u);
}

TEST(Store, RangeSeesBothSamples) {
  Store s;
  s.ingest({sid("c", {{"job", "j"}}), 0, 0});
  s.ingest({sid("c", {{"job", "j"}}), 15, 30});
  auto r = eval("rate(c{job=\"j\"}[1m])", s, 15);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.entries[0].value, 2.0);
}

TEST(Store, LabelValuesAreSortedAndDistinct) {
  Store s;
  s.ingest({sid("b", {{"job", "y"}}), 0, 1});
  s.ingest({sid("a", {{"job", "x"}}), 0, 1});
  s.ingest({sid("a", {{"job", "y"}, {"i", "1"}}), 0, 1});
  EXPECT_EQ(s.label_values("job"), (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(s.label_values("__name__"), (std::vector<std::string>{"a", "b"}));
  EXPECT_TRUE(s.label_values("nope").empty());
}

TEST(PromqlHand, RateIsTwoPerSecond) {
  Store s;
  s.ingest({sid("http_requests_total", {{"job", "j"}}), 0, 0});
  s.ingest({sid("http_requests_total", {{"job", "j"}}), 60, 120});
  auto r = eval("rate(http_requests_total{job=\"j\"}[1m])", s, 60);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.entries[0].value, 2.0);
  EXPECT_EQ(r.entries[0].labels, (Labels{{"job", "j"}}));
}

TEST(PromqlHand, HistogramQuantileOnStatedBuckets) {
  auto s = synthetic_histogram();
  auto r = eval(
      "histogram_quantile(0.95, sum(rate(request_duration_seconds_bucket{job=\"sock-shop/catalogue\"}[5m])) by (le))",
      s, 300);
  ASSERT_EQ(r.entries.size(), 1u);
  const double by_hand = 0.005 + (0.01 - 0.005) * (95.0 - 90.0) / (100.0 - 90.0);
  EXPECT_EQ(r.entries[0].value, by_hand);
  EXPECT_DOUBLE_EQ(r.entries[0].value, 0.0075);
}

TEST(PromqlHand, CounterResetAddsThePostResetValue) {
  Store s;
  for (auto [t, v] : {std::pair{0.0, 10.0}, {15.0, 40.0}, {30.0, 5.0}, {45.0, 20.0}}) {
    s.ingest({sid("c", {}), t, v});
  }
  auto r = eval("rate(c[1m])", s, 45);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_DOUBLE_EQ(r.entries[0].value, (30.0 + 5.0 + 15.0) / 45.0);
}

TEST(PromqlHand, RateNeedsTwoSamples) {
  Store s;
  s.ingest({sid("c", {}), 0, 1});
  s.ingest({sid("c", {}), 400, 9});
  EXPECT_TRUE(eval("rate(c[5m])", s, 400).entries.empty());
  EXPECT_TRUE(eval("rate(c[5m])", s, 100).entries.empty());
}

TEST(PromqlHand, CountByNameOverTheFixtureJob) {
  auto env = testkit::fixture_env();
  env.tick(600);
  auto r = eval("count by (__name__)({job=\"sock-shop/catalogue\"})", env.metrics(), 600);
  std::vector<std::string> names;
  for (const auto& e : r.entries) {
    names.push_back(e.labels.at("__name__"));
    EXPECT_EQ(e.labels.size(), 1u);
    EXPECT_EQ(e.value, 1.0);
  }
  EXPECT_EQ(names, (std::vector<std::string>{"process_cpu_seconds_total", "process_resident_memory_bytes", "up"}));
}

TEST(PromqlHand, EmptySelectorIsASuccess) {
  auto env = testkit::fixture_env();
  env.tick(300);
  auto r = eval("nodejs_active_requests_total{job=\"sock-shop/catalogue\"}", env.metrics(), 300);
  EXPECT_EQ(r.result_type, ResultType::vector);
  EXPECT_TRUE(r.entries.empty());
}

TEST(PromqlHand, DivideMatchesOnLabelsWithoutName) {
  Store s;
  s.ingest({sid("a", {{"job", "x"}}), 0, 6});
  s.ingest({sid("a", {{"job", "y"}}), 0, 8});
  s.ingest({sid("b", {{"job", "x"}}), 0, 3});
  auto r = eval("a / b", s, 0);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.entries[0].labels, (Labels{{"job", "x"}}));
  EXPECT_EQ(r.entries[0].value, 2.0);
}

TEST(PromqlErrors, ParseErrorsCarryOffsets) {
  Store s;
  try {
    eval("p95(request_duration_seconds_bucket)", s, 0);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
    EXPECT_NE(std::string(e.what()).find("unknown function \"p95\""), std::string::npos);
  }
  try {
    eval("rate(c[5m]", s, 0);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 10u);
  }
  EXPECT_THROW(eval("avg(c)", s, 0), ParseError);
  EXPECT_THROW(eval("c{job=\"x\"", s, 0), ParseError);
  EXPECT_THROW(eval("c + d", s, 0), ParseError);
  EXPECT_THROW(eval("rate(c[5q])", s, 0), ParseError);
  EXPECT_THROW(eval("c{job=~\"(\"}", s, 0), ParseError);
}

TEST(PromqlErrors, QuantileOutsideUnitRange) {
  auto s = synthetic_histogram();
  EXPECT_THROW(eval("histogram_quantile(1.5, sum(rate(request_duration_seconds_bucket[5m])) by (le))", s, 300),
               RangeError);
  EXPECT_THROW(eval("histogram_quantile(-0.1, request_duration_seconds_bucket)", s, 300), RangeError);
}

TEST(QuantileProperty, MonotoneInQWithEndpoints) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::pair<double, double>> b;
    double cum = 0;
    double bound = 0;
    int n = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int i = 0; i < n; ++i) {
      bound += std::uniform_real_distribution<double>(0.001, 1.0)(rng);
      cum += std::uniform_int_distribution<int>(0, 20)(rng);
      b.push_back({bound, cum});
    }
    // The highest finite bucket or +Inf holds at least one observation.
    double top = std::uniform_int_distribution<int>(1, 5)(rng);
    if (trial % 2) b.back().second += top, cum += top;
    else cum += top;
    b.push_back({kInf, cum});
    double prev = -1;
    for (int k = 0; k <= 100; ++k) {
      double v = bucket_quantile(k / 100.0, b);
      ASSERT_GE(v, prev) << "q=" << k / 100.0;
      prev = v;
    }
    EXPECT_EQ(bucket_quantile(0.0, b), 0.0) << "q=0 returns the lower edge of the lowest bucket";
    EXPECT_EQ(bucket_quantile(1.0, b), b[b.size() - 2].first) << "q=1 returns the highest finite bound";
  }
}

TEST(QuantileProperty, NaNWithoutInfBucketOrObservations) {
  EXPECT_TRUE(std::isnan(bucket_quantile(0.5, {{0.1, 3}, {0.2, 5}})));
  EXPECT_TRUE(std::isnan(bucket_quantile(0.5, {{0.1, 0}, {kInf, 0}})));
}

TEST(HttpApi, LabelValuesListsTheCatalogueJob) {
  auto env = testkit::fixture_env();
  env.tick(60);
  auto reply = http_query("/api/v1/label/job/values", env.metrics(), 60);
  ASSERT_EQ(reply.status, 200);
  EXPECT_EQ(reply.body["status"], "success");
  auto jobs = reply.body["data"].get<std::vector<std::string>>();
  EXPECT_NE(std::find(jobs.begin(), jobs.end(), "sock-shop/catalogue"), jobs.end());
  EXPECT_TRUE(std::is_sorted(jobs.begin(), jobs.end()));
}

TEST(HttpApi, RawBracesAreRejectedEncodedAccepted) {
  auto env = testkit::fixture_env();
  env.tick(600);
  auto raw = http_query("/api/v1/query?query=rate(http_requests_total{job=\"sock-shop/catalogue\"}[5m])",
                        env.metrics(), 600);
  EXPECT_EQ(raw.status, 400);
  EXPECT_EQ(raw.body["status"], "error");
  EXPECT_NE(raw.body["error"].get<std::string>().find("invalid parameter \"query\""), std::string::npos);
  auto enc = http_query(
      "/api/v1/query?query=rate(http_requests_total%7Bjob=%22sock-shop/catalogue%22%7D%5B5m%5D)", env.metrics(),
      600);
  EXPECT_EQ(enc.status, 200);
  EXPECT_EQ(enc.body["status"], "success");
  EXPECT_EQ(enc.body["data"]["resultType"], "vector");
  EXPECT_TRUE(enc.body["data"]["result"].empty());
}

TEST(HttpApi, ErrorsAndUnknownPaths) {
  Store s;
  EXPECT_EQ(http_query("/api/v1/series", s, 0).status, 404);
  EXPECT_EQ(http_query("/api/v1/query", s, 0).status, 400);
  auto bad = http_query("/api/v1/query?query=p95(x)", s, 0);
  EXPECT_EQ(bad.status, 400);
  EXPECT_NE(bad.body["error"].get<std::string>().find("unknown function"), std::string::npos);
  EXPECT_EQ(http_query("/api/v1/query?query=%ZZ", s, 0).status, 400);
}

TEST(HttpApi, SuccessPayloadShape) {
  Store s;
  s.ingest({sid("up", {{"job", "j"}}), 0, 1});
  auto reply = http_query("/api/v1/query?query=up", s, 10);
  ASSERT_EQ(reply.status, 200);
  const auto& r = reply.body["data"]["result"];
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0]["metric"]["__name__"], "up");
  EXPECT_EQ(r[0]["value"][0], 10.0);
  EXPECT_EQ(r[0]["value"][1], "1");
}

// http_query(encode(e)) succeeds exactly when eval(e) does, with the same answer.
TEST(HttpApi, EncodeRoundTripProperty) {
  auto env = testkit::fixture_env();
  env.tick(900);
  const double now = 900;
  const std::vector<std::string> exprs = {
      "up",
      "rate(http_requests_total{job=\"sock-shop/front-end\"}[5m])",
      "sum by (status) (rate(http_requests_total[5m]))",
      "count by (__name__)({job=\"sock-shop/catalogue\"})",
      "histogram_quantile(0.9, sum(rate(request_duration_seconds_bucket[5m])) by (le))",
      "rate(http_request_duration_seconds_sum[5m]) / rate(http_request_duration_seconds_count[5m])",
      "http_requests_total{status=~\"4..\"}",
      "avg(up)",
      "rate(up[5m]",
      "histogram_quantile(2, up)",
  };
  for (const auto& e : exprs) {
    bool eval_ok = true;
    QueryResult direct;
    try {
      direct = eval(e, env.metrics(), now);
    } catch (const Error&) {
      eval_ok = false;
    }
    auto reply = http_query("/api/v1/query?query=" + percent_encode(e), env.metrics(), now);
    EXPECT_EQ(reply.ok(), eval_ok) << e;
    if (eval_ok && reply.ok()) EXPECT_EQ(reply.body["data"], to_json(direct)) << e;
    EXPECT_EQ(percent_decode(percent_encode(e)), e);
  }
}
