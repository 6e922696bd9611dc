#pragma once

#include <span>
#include <utility>
#include <vector>

#include "cpsim/mobility.hpp"
#include "cpsim/rng.hpp"
#include "cpsim/types.hpp"

namespace cpsim {

struct SensorParams {
  double range = 85.0;   // m
  double period = 0.1;   // s
  double sigma_min = 0.2;    // m, noise floor at zero distance and full visibility
  double alpha_dist = 1.3;   // m, added at the range limit
  double beta_occl = 2.0;    // m, added when fully occluded
  double min_visible_fraction = 0.05;
  // sigma_y = anisotropy * sigma_x.
  double anisotropy = 1.0;

  void validate() const;
};

struct Detection {
  ObjectId object_id = 0;
  Vec2 measured_position = Vec2::Zero();
  Mat2 noise_cov = Mat2::Identity();
  double timestamp = 0.0;
  double cross_section = 1.0;
  double distance = 0.0;
};

// Closed angular interval in radians, relative to some reference bearing.
struct AngularInterval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

// Plan-view corners of a vehicle footprint.
std::vector<Vec2> footprint_corners(const Vehicle& v);

// Interval subtended at `origin` by the footprint of `v`, expressed relative
// to `reference_bearing`. The footprint must not contain the origin.
AngularInterval subtended_interval(const Vec2& origin, double reference_bearing, const Vehicle& v);

// Total measure of `target` left after removing the union of `occluders`.
double uncovered_measure(AngularInterval target, std::vector<AngularInterval> occluders);

// Fraction of the target's angular extent not hidden by obstacles whose
// centroid is nearer to the ego than the target's. Zero beyond `range`.
double visible_cross_section(const Vehicle& ego, const Vehicle& target,
                             std::span<const Vehicle* const> obstacles, double range);

// (sigma_x, sigma_y) = sigma_min + alpha (d / range) + beta (1 - c), isotropic
// unless an anisotropy ratio is configured. Throws DomainError outside
// 0 < c <= 1, 0 <= d <= range.
std::pair<double, double> detection_stddev(double cross_section, double distance,
                                           const SensorParams& params);

// One 360-degree scan. `neighbors` are candidate targets and occluders (the ego
// itself is skipped if present); detections come out in ascending object id.
// Draws two normals per detection from `rng`, x then y.
std::vector<Detection> sense(const Vehicle& ego, std::span<const Vehicle* const> neighbors,
                             RngStream& rng, double now, const SensorParams& params);

}  // namespace cpsim
