#include "skillforge/metrics/store.hpp"

#include <set>

namespace skillforge::metrics {

Labels SeriesId::full_labels() const {
  Labels out = labels;
  out[std::string(kNameLabel)] = metric_name;
  return out;
}

void Store::ingest(const MetricSample& sample) {
  auto& samples = series_[sample.series];
  if (!samples.empty()) {
    const Sample& last = samples.back();
    if (sample.timestamp < last.timestamp) {
      throw OrderViolation("out-of-order sample for " + sample.series.metric_name + ": t=" +
                           std::to_string(sample.timestamp) + " after t=" +
                           std::to_string(last.timestamp));
    }
    if (sample.timestamp == last.timestamp) {
      if (sample.value == last.value) return;
      throw OrderViolation("duplicate timestamp with a different value for " +
                           sample.series.metric_name);
    }
  }
  samples.push_back({sample.timestamp, sample.value});
}

size_t Store::sample_count() const {
  size_t n = 0;
  for (const auto& [id, samples] : series_) n += samples.size();
  return n;
}

std::vector<std::string> Store::label_values(std::string_view label) const {
  std::set<std::string> values;
  for (const auto& [id, samples] : series_) {
    if (label == kNameLabel) {
      values.insert(id.metric_name);
      continue;
    }
    auto it = id.labels.find(std::string(label));
    if (it != id.labels.end()) values.insert(it->second);
  }
  return {values.begin(), values.end()};
}

}  // namespace skillforge::metrics
