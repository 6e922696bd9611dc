#include "cpsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>

#include "cpsim/error.hpp"
#include "cpsim/mobility.hpp"
#include "cpsim/station.hpp"

namespace cpsim {

void MetricsConfig::validate() const {
  if (!(warmup >= 0.0)) throw ConfigError("metrics.warmup", "must be non-negative");
  if (!(max_distance > 0.0)) throw ConfigError("metrics.max_distance", "must be positive");
  if (!(bin_width > 0.0)) throw ConfigError("metrics.bin_width", "must be positive");
  if (!(far_threshold >= 0.0)) throw ConfigError("metrics.far_threshold", "must be non-negative");
}

double quantize(double value) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.6g", value);
  return std::strtod(buffer, nullptr);
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::vector<double> samples) {
  BoxStats stats;
  stats.count = samples.size();
  if (samples.empty()) return stats;
  std::sort(samples.begin(), samples.end());
  BoxValues v;
  v.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  v.min = samples.front();
  v.max = samples.back();
  v.q1 = quantile_sorted(samples, 0.25);
  v.median = quantile_sorted(samples, 0.5);
  v.q3 = quantile_sorted(samples, 0.75);
  const double iqr = v.q3 - v.q1;
  v.whisker_low = std::max(v.q1 - 1.5 * iqr, v.min);
  v.whisker_high = std::min(v.q3 + 1.5 * iqr, v.max);
  stats.values = v;
  return stats;
}

MetricsCollector::MetricsCollector(MetricsConfig config) : config_(config) {
  const auto bins = static_cast<std::size_t>(std::ceil(config_.max_distance / config_.bin_width));
  bin_sums_.assign(bins, 0.0);
  bin_counts_.assign(bins, 0);
}

void MetricsCollector::add_cbr(const CbrSample& sample) {
  CbrSample q = sample;
  q.cbr = quantize(sample.cbr);
  cbr_values_.push_back(q.cbr);
  if (config_.keep_raw) cbr_samples_.push_back(q);
}

void MetricsCollector::add_ote(const OteSample& sample) {
  OteSample q = sample;
  q.error = quantize(sample.error);
  q.distance = quantize(sample.distance);
  ote_errors_.push_back(q.error);
  if (q.distance > config_.far_threshold) ote_far_errors_.push_back(q.error);
  // Left-closed bins; the closing edge max_distance falls into the last bin.
  auto bin = static_cast<std::size_t>(q.distance / config_.bin_width);
  bin = std::min(bin, bin_sums_.size() - 1);
  bin_sums_[bin] += q.error;
  ++bin_counts_[bin];
  if (config_.keep_raw) ote_samples_.push_back(q);
}

void MetricsCollector::add_traffic(double density_per_km, double mean_speed) {
  density_sum_ += density_per_km;
  speed_sum_ += mean_speed;
  ++traffic_.samples;
  traffic_.mean_density = density_sum_ / static_cast<double>(traffic_.samples);
  traffic_.mean_speed = speed_sum_ / static_cast<double>(traffic_.samples);
}

std::size_t record_tick(MetricsCollector& collector, const World& world,
                        std::span<const Station* const> stations, const Channel& channel,
                        double now, bool cbr_due, SimTimeNs window_end) {
  const MetricsConfig& cfg = collector.config();
  if (now < cfg.warmup) return 0;
  const Region& logging = world.spec().logging_region;

  {
    const auto in_region = world.in_x_window(logging.start, logging.end);
    if (logging.length() > 0.0) {
      double speed_sum = 0.0;
      for (const Vehicle* v : in_region) speed_sum += v->speed;
      const double mean_speed = in_region.empty() ? 0.0 : speed_sum / static_cast<double>(in_region.size());
      collector.add_traffic(static_cast<double>(in_region.size()) / (logging.length() / 1000.0), mean_speed);
    }
  }

  std::size_t taken = 0;
  for (const Station* station : stations) {
    const Vehicle* ego = world.find(station->id);
    if (ego == nullptr || !logging.contains(ego->position.x())) continue;
    if (cbr_due) collector.add_cbr({now, station->id, channel.cbr(station->id, ego->position, window_end)});

    for (const auto& [object_id, track] : station->model(cfg.model_kind).tracks()) {
      const Vehicle* truth = world.find(object_id);
      if (truth == nullptr) continue;
      const double distance = (truth->position - ego->position).norm();
      if (distance > cfg.max_distance) continue;
      const Vec2 estimate = predicted_state(track, now).head<2>();
      collector.add_ote({now, station->id, object_id, (estimate - truth->position).norm(), distance,
                         cfg.model_kind});
      ++taken;
    }
  }
  return taken;
}

RunSummary summarize(const MetricsCollector& collector) {
  RunSummary summary;
  summary.cbr = box_stats(collector.cbr_values());
  summary.ote = box_stats(collector.ote_errors());
  summary.ote_far = box_stats(collector.ote_far_errors());
  const double width = collector.config().bin_width;
  const auto& sums = collector.bin_sums();
  const auto& counts = collector.bin_counts();
  for (std::size_t i = 0; i < sums.size(); ++i) {
    DistanceBin bin;
    bin.lo = width * static_cast<double>(i);
    bin.hi = std::min(width * static_cast<double>(i + 1), collector.config().max_distance);
    bin.count = counts[i];
    if (counts[i] > 0) bin.mean = sums[i] / static_cast<double>(counts[i]);
    summary.ote_by_distance.push_back(bin);
  }
  summary.traffic = collector.traffic();
  return summary;
}

}  // namespace cpsim
