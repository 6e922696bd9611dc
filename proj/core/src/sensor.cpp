#include "cpsim/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cpsim/error.hpp"

namespace cpsim {

void SensorParams::validate() const {
  if (!(range > 0.0)) throw ConfigError("sensor.range", "must be positive");
  if (!(period > 0.0)) throw ConfigError("sensor.period", "must be positive");
  // Zero is the noise-free limit; it is meant for checks, not for runs.
  if (!(sigma_min >= 0.0)) throw ConfigError("sensor.sigma_min", "must be non-negative");
  if (!(alpha_dist >= 0.0)) throw ConfigError("sensor.alpha_dist", "must be non-negative");
  if (!(beta_occl >= 0.0)) throw ConfigError("sensor.beta_occl", "must be non-negative");
  if (!(min_visible_fraction >= 0.0 && min_visible_fraction <= 1.0)) {
    throw ConfigError("sensor.min_visible_fraction", "must be in [0, 1]");
  }
  if (!(anisotropy > 0.0)) throw ConfigError("sensor.anisotropy", "must be positive");
}

std::vector<Vec2> footprint_corners(const Vehicle& v) {
  const Vec2 forward(std::cos(v.heading), std::sin(v.heading));
  const Vec2 left(-forward.y(), forward.x());
  const Vec2 half_l = 0.5 * v.length * forward;
  const Vec2 half_w = 0.5 * v.width * left;
  return {v.position + half_l + half_w, v.position + half_l - half_w, v.position - half_l - half_w,
          v.position - half_l + half_w};
}

AngularInterval subtended_interval(const Vec2& origin, double reference_bearing, const Vehicle& v) {
  // Angles relative to the vehicle's own centroid bearing never wrap for a
  // footprint that excludes the origin; shift to the reference afterwards.
  const Vec2 to_center = v.position - origin;
  const double center_bearing = std::atan2(to_center.y(), to_center.x());
  double lo = 0.0;
  double hi = 0.0;
  for (const Vec2& corner : footprint_corners(v)) {
    const Vec2 d = corner - origin;
    const double rel = wrap_angle(std::atan2(d.y(), d.x()) - center_bearing);
    lo = std::min(lo, rel);
    hi = std::max(hi, rel);
  }
  const double shift = wrap_angle(center_bearing - reference_bearing);
  return {lo + shift, hi + shift};
}

double uncovered_measure(AngularInterval target, std::vector<AngularInterval> occluders) {
  for (auto& o : occluders) {
    o.lo = std::max(o.lo, target.lo);
    o.hi = std::min(o.hi, target.hi);
  }
  std::erase_if(occluders, [](const AngularInterval& o) { return o.hi <= o.lo; });
  std::sort(occluders.begin(), occluders.end(),
            [](const AngularInterval& a, const AngularInterval& b) { return a.lo < b.lo; });
  double covered = 0.0;
  double run_lo = 0.0;
  double run_hi = 0.0;
  bool open = false;
  for (const auto& o : occluders) {
    if (open && o.lo <= run_hi) {
      run_hi = std::max(run_hi, o.hi);
      continue;
    }
    if (open) covered += run_hi - run_lo;
    run_lo = o.lo;
    run_hi = o.hi;
    open = true;
  }
  if (open) covered += run_hi - run_lo;
  return std::max(0.0, target.width() - covered);
}

double visible_cross_section(const Vehicle& ego, const Vehicle& target,
                             std::span<const Vehicle* const> obstacles, double range) {
  const Vec2 to_target = target.position - ego.position;
  const double distance = to_target.norm();
  if (distance > range) return 0.0;
  const double bearing = std::atan2(to_target.y(), to_target.x());
  const AngularInterval target_interval = subtended_interval(ego.position, bearing, target);
  if (!(target_interval.width() > 0.0)) return 0.0;

  std::vector<AngularInterval> occluders;
  for (const Vehicle* o : obstacles) {
    if (o->id == ego.id || o->id == target.id) continue;
    if ((o->position - ego.position).norm() >= distance) continue;
    const AngularInterval interval = subtended_interval(ego.position, bearing, *o);
    if (interval.hi <= target_interval.lo || interval.lo >= target_interval.hi) continue;
    occluders.push_back(interval);
  }
  return uncovered_measure(target_interval, std::move(occluders)) / target_interval.width();
}

std::pair<double, double> detection_stddev(double cross_section, double distance,
                                           const SensorParams& params) {
  if (!(cross_section > 0.0 && cross_section <= 1.0)) {
    throw DomainError("detection_stddev: cross_section must be in (0, 1]");
  }
  if (!(distance >= 0.0 && distance <= params.range)) {
    throw DomainError("detection_stddev: distance must be in [0, range]");
  }
  const double sigma = params.sigma_min + params.alpha_dist * (distance / params.range) +
                       params.beta_occl * (1.0 - cross_section);
  return {sigma, sigma * params.anisotropy};
}

std::vector<Detection> sense(const Vehicle& ego, std::span<const Vehicle* const> neighbors,
                             RngStream& rng, double now, const SensorParams& params) {
  std::vector<const Vehicle*> targets(neighbors.begin(), neighbors.end());
  std::sort(targets.begin(), targets.end(),
            [](const Vehicle* a, const Vehicle* b) { return a->id < b->id; });

  std::vector<Detection> detections;
  for (const Vehicle* target : targets) {
    if (target->id == ego.id) continue;
    const double distance = (target->position - ego.position).norm();
    if (distance > params.range) continue;
    const double c = visible_cross_section(ego, *target, neighbors, params.range);
    if (c <= 0.0 || c < params.min_visible_fraction) continue;
    const auto [sx, sy] = detection_stddev(c, distance, params);

    Detection d;
    d.object_id = target->id;
    const double nx = rng.normal();
    const double ny = rng.normal();
    d.measured_position = target->position + Vec2(sx * nx, sy * ny);
    d.noise_cov = Vec2(sx * sx, sy * sy).asDiagonal();
    d.timestamp = now;
    d.cross_section = c;
    d.distance = distance;
    detections.push_back(d);
  }
  return detections;
}

}  // namespace cpsim
