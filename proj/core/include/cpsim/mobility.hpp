#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cpsim/rng.hpp"
#include "cpsim/types.hpp"

namespace cpsim {

// Closed interval [start, end] along the road axis, meters.
struct Region {
  double start = 0.0;
  double end = 0.0;

  bool contains(double x) const { return x >= start && x <= end; }
  double length() const { return end - start; }
};

// Intelligent Driver Model parameters.
struct IdmParams {
  double max_accel = 1.5;          // m/s^2
  double comfortable_decel = 2.0;  // m/s^2
  double time_headway = 1.2;       // s
  double min_gap = 2.0;            // m
  double exponent = 4.0;
};

struct ScenarioSpec {
  double road_length = 5000.0;
  int lanes_per_direction = 3;
  double lane_width = 3.5;
  Region comms_region{1500.0, 3500.0};
  Region logging_region{2000.0, 3000.0};
  // Vehicles per km of road. Both directions combined unless
  // `density_per_direction` is set.
  double target_density = 60.0;
  bool density_per_direction = false;
  double desired_speed_mean = 30.0;
  double desired_speed_stddev = 3.0;
  double vehicle_length = 4.5;
  double vehicle_width = 1.8;
  // Fraction of vehicles that are V2X stations.
  double penetration_rate = 1.0;
  // Upper bound on arrivals waiting at a blocked lane entry.
  int max_pending_arrivals = 5;
  IdmParams idm;

  void validate() const;

  int lane_count() const { return 2 * lanes_per_direction; }
  // Target density of a single lane, vehicles per meter.
  double lane_density_per_meter() const;
};

enum class Direction { kForward, kBackward };

struct Vehicle {
  VehicleId id = 0;
  Direction direction = Direction::kForward;
  int lane = 0;  // 0 .. lanes_per_direction - 1 within its direction
  Vec2 position = Vec2::Zero();
  double speed = 0.0;
  double desired_speed = 0.0;
  double heading = 0.0;
  double length = 4.5;
  double width = 1.8;
  bool is_station = true;

  // Distance travelled along the driving direction from the entry end.
  double progress(double road_length) const {
    return direction == Direction::kForward ? position.x() : road_length - position.x();
  }
  Vec2 velocity() const;
};

// Ground-truth traffic on a straight two-way highway. Vehicles are stored in
// ascending id order.
class World {
 public:
  explicit World(ScenarioSpec spec);

  const ScenarioSpec& spec() const { return spec_; }
  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  std::vector<Vehicle>& mutable_vehicles() { return vehicles_; }

  // nullptr when the id is not on the road.
  const Vehicle* find(VehicleId id) const;

  // Vehicles whose centroid x lies in [lo, hi], in ascending id order.
  std::vector<const Vehicle*> in_x_window(double lo, double hi) const;

  int lane_key(const Vehicle& v) const {
    return (v.direction == Direction::kForward ? 0 : spec_.lanes_per_direction) + v.lane;
  }
  double lane_center_y(Direction direction, int lane) const;

  // Adds a vehicle with the next free id; keeps id ordering.
  Vehicle& insert(Direction direction, int lane, double progress, double speed,
                  double desired_speed, bool is_station);

  // Drops vehicles whose progress exceeds the road length. Returns the count.
  std::size_t despawn_exited();

  // Per-lane indices into vehicles(), ordered leader first.
  std::vector<std::vector<std::size_t>> lanes_leader_first() const;

  std::vector<int>& pending_arrivals() { return pending_arrivals_; }

  // Must be called after positions change; in_x_window() reads this index.
  void refresh_index();

 private:

  ScenarioSpec spec_;
  std::vector<Vehicle> vehicles_;
  VehicleId next_id_ = 1;
  std::vector<int> pending_arrivals_;
  // (x, index) sorted by x, refreshed after every mutation pass.
  std::vector<std::pair<double, std::size_t>> x_index_;
};

// Desired speed from a normal truncated below at half the mean.
double draw_desired_speed(const ScenarioSpec& spec, RngStream& rng);

// IDM acceleration for a follower; `gap` is bumper-to-bumper distance to the
// leader and `leader_speed` its speed. Pass has_leader = false for free road.
double idm_acceleration(const IdmParams& idm, double speed, double desired_speed,
                        bool has_leader, double gap, double leader_speed);

// Fills the road at the target density with equilibrium-ish spacing.
void populate(World& world, RngStream& rng);

// Entry arrivals over `dt`: one Bernoulli draw per lane, queued while the
// entry is blocked. Returns ids of inserted vehicles.
std::vector<VehicleId> spawn(World& world, RngStream& rng, double dt);

// One IDM step of length dt (semi-implicit Euler: v first, then x += v dt),
// followed by removal of vehicles that left the road. No lane changes.
void advance(World& world, double dt);

}  // namespace cpsim
