#include "cpsim/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cpsim/error.hpp"

namespace cpsim {

void ScenarioSpec::validate() const {
  if (!(road_length > 0.0)) throw ConfigError("scenario.road_length", "must be positive");
  if (lanes_per_direction < 1) throw ConfigError("scenario.lanes_per_direction", "must be at least 1");
  if (!(lane_width > 0.0)) throw ConfigError("scenario.lane_width", "must be positive");
  if (!(target_density > 0.0)) throw ConfigError("scenario.target_density", "density must be positive");
  if (!(comms_region.start >= 0.0 && comms_region.start <= comms_region.end &&
        comms_region.end <= road_length)) {
    throw ConfigError("scenario.comms_region", "must lie within [0, road_length]");
  }
  if (!(logging_region.start >= comms_region.start && logging_region.start <= logging_region.end &&
        logging_region.end <= comms_region.end)) {
    throw ConfigError("scenario.logging_region", "must lie within the comms region");
  }
  if (!(desired_speed_mean > 0.0)) throw ConfigError("scenario.desired_speed_mean", "must be positive");
  if (!(desired_speed_stddev >= 0.0)) throw ConfigError("scenario.desired_speed_stddev", "must be non-negative");
  if (!(vehicle_length > 0.0)) throw ConfigError("scenario.vehicle_length", "must be positive");
  if (!(vehicle_width > 0.0)) throw ConfigError("scenario.vehicle_width", "must be positive");
  if (!(penetration_rate >= 0.0 && penetration_rate <= 1.0)) {
    throw ConfigError("scenario.penetration_rate", "must be in [0, 1]");
  }
  if (max_pending_arrivals < 1) throw ConfigError("scenario.max_pending_arrivals", "must be at least 1");
  if (!(idm.max_accel > 0.0)) throw ConfigError("scenario.idm.max_accel", "must be positive");
  if (!(idm.comfortable_decel > 0.0)) throw ConfigError("scenario.idm.comfortable_decel", "must be positive");
  if (!(idm.time_headway >= 0.0)) throw ConfigError("scenario.idm.time_headway", "must be non-negative");
  if (!(idm.min_gap > 0.0)) throw ConfigError("scenario.idm.min_gap", "must be positive");
  if (!(idm.exponent > 0.0)) throw ConfigError("scenario.idm.exponent", "must be positive");
}

double ScenarioSpec::lane_density_per_meter() const {
  const double lanes = density_per_direction ? lanes_per_direction : lane_count();
  return target_density / lanes / 1000.0;
}

Vec2 Vehicle::velocity() const { return Vec2(std::cos(heading), std::sin(heading)) * speed; }

World::World(ScenarioSpec spec) : spec_(std::move(spec)), pending_arrivals_(spec_.lane_count(), 0) {}

const Vehicle* World::find(VehicleId id) const {
  const auto it = std::lower_bound(vehicles_.begin(), vehicles_.end(), id,
                                   [](const Vehicle& v, VehicleId key) { return v.id < key; });
  return (it != vehicles_.end() && it->id == id) ? &*it : nullptr;
}

std::vector<const Vehicle*> World::in_x_window(double lo, double hi) const {
  auto first = std::lower_bound(x_index_.begin(), x_index_.end(), lo,
                                [](const auto& entry, double key) { return entry.first < key; });
  std::vector<std::size_t> picked;
  for (auto it = first; it != x_index_.end() && it->first <= hi; ++it) picked.push_back(it->second);
  std::sort(picked.begin(), picked.end());
  std::vector<const Vehicle*> out;
  out.reserve(picked.size());
  for (const auto idx : picked) out.push_back(&vehicles_[idx]);
  return out;
}

double World::lane_center_y(Direction direction, int lane) const {
  const double offset = (lane + 0.5) * spec_.lane_width;
  return direction == Direction::kForward ? offset : -offset;
}

Vehicle& World::insert(Direction direction, int lane, double progress, double speed,
                       double desired_speed, bool is_station) {
  Vehicle v;
  v.id = next_id_++;
  v.direction = direction;
  v.lane = lane;
  const double x = direction == Direction::kForward ? progress : spec_.road_length - progress;
  v.position = Vec2(x, lane_center_y(direction, lane));
  v.speed = speed;
  v.desired_speed = desired_speed;
  v.heading = direction == Direction::kForward ? 0.0 : std::numbers::pi;
  v.length = spec_.vehicle_length;
  v.width = spec_.vehicle_width;
  v.is_station = is_station;
  vehicles_.push_back(v);
  return vehicles_.back();
}

std::size_t World::despawn_exited() {
  const double length = spec_.road_length;
  return std::erase_if(vehicles_, [length](const Vehicle& v) { return v.progress(length) > length; });
}

std::vector<std::vector<std::size_t>> World::lanes_leader_first() const {
  std::vector<std::vector<std::size_t>> lanes(spec_.lane_count());
  for (std::size_t i = 0; i < vehicles_.size(); ++i) lanes[lane_key(vehicles_[i])].push_back(i);
  const double length = spec_.road_length;
  for (auto& lane : lanes) {
    std::sort(lane.begin(), lane.end(), [&](std::size_t a, std::size_t b) {
      const double pa = vehicles_[a].progress(length);
      const double pb = vehicles_[b].progress(length);
      return pa != pb ? pa > pb : vehicles_[a].id < vehicles_[b].id;
    });
  }
  return lanes;
}

void World::refresh_index() {
  x_index_.clear();
  x_index_.reserve(vehicles_.size());
  for (std::size_t i = 0; i < vehicles_.size(); ++i) x_index_.emplace_back(vehicles_[i].position.x(), i);
  std::sort(x_index_.begin(), x_index_.end());
}

double draw_desired_speed(const ScenarioSpec& spec, RngStream& rng) {
  const double floor = 0.5 * spec.desired_speed_mean;
  // Bounded rejection; falls back to the floor in the pathological case.
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double v = rng.normal(spec.desired_speed_mean, spec.desired_speed_stddev);
    if (v >= floor) return v;
  }
  return floor;
}

double idm_acceleration(const IdmParams& idm, double speed, double desired_speed, bool has_leader,
                        double gap, double leader_speed) {
  const double free_term = std::pow(speed / desired_speed, idm.exponent);
  double interaction = 0.0;
  if (has_leader) {
    const double closing = speed - leader_speed;
    const double desired_gap =
        idm.min_gap + std::max(0.0, speed * idm.time_headway +
                                        speed * closing / (2.0 * std::sqrt(idm.max_accel * idm.comfortable_decel)));
    const double s = std::max(gap, 0.01);
    interaction = (desired_gap / s) * (desired_gap / s);
  }
  return idm.max_accel * (1.0 - free_term - interaction);
}

namespace {

Direction direction_of_lane_key(const ScenarioSpec& spec, int key) {
  return key < spec.lanes_per_direction ? Direction::kForward : Direction::kBackward;
}

int lane_of_key(const ScenarioSpec& spec, int key) {
  return key < spec.lanes_per_direction ? key : key - spec.lanes_per_direction;
}

// Equilibrium IDM spacing (front-to-front) at speed v.
double equilibrium_spacing(const ScenarioSpec& spec, double v) {
  return spec.vehicle_length + spec.idm.min_gap + v * spec.idm.time_headway;
}

}  // namespace

void populate(World& world, RngStream& rng) {
  const ScenarioSpec& spec = world.spec();
  const double mean_spacing = 1.0 / spec.lane_density_per_meter();
  for (int key = 0; key < spec.lane_count(); ++key) {
    const Direction dir = direction_of_lane_key(spec, key);
    const int lane = lane_of_key(spec, key);
    // Walk from the exit end backwards so each new vehicle knows its leader.
    double progress = spec.road_length - 0.5 * rng.uniform() * mean_spacing;
    double leader_speed = -1.0;
    while (progress >= 0.0) {
      const double desired = draw_desired_speed(spec, rng);
      const double speed = leader_speed < 0.0 ? desired : std::min(desired, leader_speed);
      const bool station = rng.uniform() < spec.penetration_rate;
      world.insert(dir, lane, progress, speed, desired, station);
      leader_speed = speed;
      const double min_spacing = equilibrium_spacing(spec, speed);
      const double spacing = mean_spacing > min_spacing
                                 ? min_spacing + rng.exponential(mean_spacing - min_spacing)
                                 : mean_spacing;
      progress -= spacing;
    }
  }
  // insert() appends in id order already; keep the index in sync.
  world.refresh_index();
}

std::vector<VehicleId> spawn(World& world, RngStream& rng, double dt) {
  std::vector<VehicleId> inserted;
  if (!(dt > 0.0)) return inserted;
  const ScenarioSpec& spec = world.spec();
  const auto lanes = world.lanes_leader_first();
  auto& pending = world.pending_arrivals();

  for (int key = 0; key < spec.lane_count(); ++key) {
    // Flow = density x speed, with the lane's current mean speed so the
    // long-run density tracks the target even when platoons form.
    double lane_speed = spec.desired_speed_mean;
    if (!lanes[key].empty()) {
      double sum = 0.0;
      for (const auto idx : lanes[key]) sum += world.vehicles()[idx].speed;
      lane_speed = sum / static_cast<double>(lanes[key].size());
    }
    const double lane_rate = spec.lane_density_per_meter() * lane_speed;  // veh/s
    const double arrival_probability = 1.0 - std::exp(-lane_rate * dt);
    // Fixed draw count per lane per call keeps the stream aligned across runs.
    const bool arrival = rng.uniform() < arrival_probability;
    const double desired = draw_desired_speed(spec, rng);
    const bool station = rng.uniform() < spec.penetration_rate;
    if (arrival && pending[key] < spec.max_pending_arrivals) ++pending[key];
    if (pending[key] == 0) continue;

    const auto& lane = lanes[key];
    double speed = desired;
    if (!lane.empty()) {
      const Vehicle& last = world.vehicles()[lane.back()];
      const double gap = last.progress(spec.road_length) - 0.5 * last.length - 0.5 * spec.vehicle_length;
      // Largest speed whose equilibrium gap fits, capped by leader and desire.
      const double fitting = (gap - spec.idm.min_gap) / std::max(spec.idm.time_headway, 1e-9);
      speed = std::min({desired, last.speed, fitting});
      if (gap <= spec.idm.min_gap || speed < 0.5 * spec.desired_speed_mean) continue;  // blocked
    }
    const Vehicle& v = world.insert(direction_of_lane_key(spec, key), lane_of_key(spec, key), 0.0,
                                    speed, desired, station);
    inserted.push_back(v.id);
    --pending[key];
  }
  world.refresh_index();
  return inserted;
}

void advance(World& world, double dt) {
  const ScenarioSpec& spec = world.spec();
  const double length = spec.road_length;
  auto& vehicles = world.mutable_vehicles();
  const auto lanes = world.lanes_leader_first();

  // Accelerations from the pre-step state, then a leader-first position pass.
  std::vector<double> accel(vehicles.size(), 0.0);
  for (const auto& lane : lanes) {
    for (std::size_t i = 0; i < lane.size(); ++i) {
      const Vehicle& v = vehicles[lane[i]];
      if (i == 0) {
        accel[lane[i]] = idm_acceleration(spec.idm, v.speed, v.desired_speed, false, 0.0, 0.0);
        continue;
      }
      const Vehicle& leader = vehicles[lane[i - 1]];
      const double gap = leader.progress(length) - v.progress(length) - 0.5 * (leader.length + v.length);
      accel[lane[i]] = idm_acceleration(spec.idm, v.speed, v.desired_speed, true, gap, leader.speed);
    }
  }

  for (const auto& lane : lanes) {
    for (std::size_t i = 0; i < lane.size(); ++i) {
      Vehicle& v = vehicles[lane[i]];
      const double old_progress = v.progress(length);
      double speed = std::max(0.0, v.speed + accel[lane[i]] * dt);
      double new_progress = old_progress + speed * dt;
      if (i > 0) {
        const Vehicle& leader = vehicles[lane[i - 1]];  // already moved
        const double limit = leader.progress(length) - 0.5 * (leader.length + v.length) - 0.01;
        if (new_progress > limit) {
          // Emergency clamp; speed is re-derived so x += v dt still holds.
          new_progress = std::max(old_progress, limit);
          speed = (new_progress - old_progress) / dt;
        }
      }
      v.speed = speed;
      const double x = v.direction == Direction::kForward ? new_progress : length - new_progress;
      v.position.x() = x;
    }
  }
  world.despawn_exited();
  world.refresh_index();
}

}  // namespace cpsim
