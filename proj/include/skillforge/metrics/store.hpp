#pragma once

#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "skillforge/core/error.hpp"

namespace skillforge::metrics {

// Sorted label map; std::map ordering makes it a canonical key.
using Labels = std::map<std::string, std::string>;

inline constexpr std::string_view kNameLabel = "__name__";

struct SeriesId {
  std::string metric_name;
  Labels labels;

  // Labels plus __name__.
  Labels full_labels() const;
  auto operator<=>(const SeriesId&) const = default;
  bool operator==(const SeriesId&) const = default;
};

struct Sample {
  double timestamp = 0;
  double value = 0;
  bool operator==(const Sample&) const = default;
};

struct MetricSample {
  SeriesId series;
  double timestamp = 0;
  double value = 0;
};

class OrderViolation : public Error {
 public:
  using Error::Error;
};

// In-memory time-series store. Single writer; const access is safe to share.
class Store {
 public:
  using SeriesMap = std::map<SeriesId, std::vector<Sample>>;

  // Throws OrderViolation when the timestamp precedes the series' last sample,
  // or repeats it with a different value. An exact repeat is a no-op.
  void ingest(const MetricSample& sample);

  size_t series_count() const { return series_.size(); }
  size_t sample_count() const;
  const SeriesMap& series() const { return series_; }

  // Sorted distinct values of `label` across every series; "__name__" lists metric names.
  std::vector<std::string> label_values(std::string_view label) const;

  bool operator==(const Store&) const = default;

 private:
  SeriesMap series_;
};

}  // namespace skillforge::metrics
