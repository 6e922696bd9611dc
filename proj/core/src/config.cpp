#include "cpsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "cpsim/error.hpp"

namespace cpsim {

using Json = nlohmann::ordered_json;

namespace {

long ratio_to_ticks(double period, double tick, const char* field) {
  const double ratio = period / tick;
  const long rounded = std::lround(ratio);
  if (rounded < 1 || std::abs(ratio - static_cast<double>(rounded)) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError(field, "must be a positive integer multiple of tick");
  }
  return rounded;
}

Json region_json(const Region& r) { return Json::array({r.start, r.end}); }

Json to_json(const SimConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["duration"] = c.duration;
  j["tick"] = c.tick;

  const ScenarioSpec& s = c.scenario;
  j["scenario"] = {
      {"road_length", s.road_length},
      {"lanes_per_direction", s.lanes_per_direction},
      {"lane_width", s.lane_width},
      {"comms_region", region_json(s.comms_region)},
      {"logging_region", region_json(s.logging_region)},
      {"target_density", s.target_density},
      {"density_per_direction", s.density_per_direction},
      {"desired_speed_mean", s.desired_speed_mean},
      {"desired_speed_stddev", s.desired_speed_stddev},
      {"vehicle_length", s.vehicle_length},
      {"vehicle_width", s.vehicle_width},
      {"penetration_rate", s.penetration_rate},
      {"max_pending_arrivals", s.max_pending_arrivals},
      {"idm",
       {{"max_accel", s.idm.max_accel},
        {"comfortable_decel", s.idm.comfortable_decel},
        {"time_headway", s.idm.time_headway},
        {"min_gap", s.idm.min_gap},
        {"exponent", s.idm.exponent}}},
  };

  const SensorParams& se = c.sensor;
  j["sensor"] = {
      {"range", se.range},
      {"period", se.period},
      {"sigma_min", se.sigma_min},
      {"alpha_dist", se.alpha_dist},
      {"beta_occl", se.beta_occl},
      {"min_visible_fraction", se.min_visible_fraction},
      {"anisotropy", se.anisotropy},
  };

  const MotionModelParams& m = c.motion_model;
  j["motion_model"] = {
      {"accel_stddev", m.accel_stddev},
      {"initial_velocity_variance", m.initial_velocity_variance},
      {"stale_after", m.stale_after},
  };

  const PolicyConfig& p = c.policy;
  j["policy"] = {
      {"mode", std::string(to_string(p.mode))},
      {"theta", p.theta},
      {"gamma", p.gamma},
      {"kl_use_means", p.kl_use_means},
      {"check_period", p.check_period},
      {"self_echo", p.self_echo},
      {"header_bytes", p.header_bytes},
      {"per_object_bytes", p.per_object_bytes},
      {"etsi",
       {{"position", p.etsi.position},
        {"speed", p.etsi.speed},
        {"heading_deg", p.etsi.heading_deg},
        {"max_interval", p.etsi.max_interval},
        {"min_heading_speed", p.etsi.min_heading_speed}}},
  };

  const RadioParams& r = c.radio;
  j["radio"] = {
      {"bit_rate", r.bit_rate},
      {"tx_power_dbm", r.tx_power_dbm},
      {"signal_threshold_dbm", r.signal_threshold_dbm},
      {"noise_threshold_dbm", r.noise_threshold_dbm},
      {"carrier_sense_threshold_dbm", r.carrier_sense_threshold_dbm},
      {"carrier_freq", r.carrier_freq},
      {"path_loss_exponent", r.path_loss_exponent},
      {"reference_loss_db", r.reference_loss_db},
      {"preamble_overhead", r.preamble_overhead},
      {"slot", r.slot},
      {"cw", r.cw},
      {"cbr_window", r.cbr_window},
  };

  const MetricsConfig& mt = c.metrics;
  j["metrics"] = {
      {"warmup", mt.warmup},
      {"max_distance", mt.max_distance},
      {"bin_width", mt.bin_width},
      {"far_threshold", mt.far_threshold},
      {"model_kind", std::string(to_string(mt.model_kind))},
      {"keep_raw", mt.keep_raw},
      {"export_frames", mt.export_frames},
  };
  return j;
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

bool compatible(const Json& base, const Json& value) {
  if (base.is_boolean()) return value.is_boolean();
  if (base.is_string()) return value.is_string();
  if (base.is_number_integer() || base.is_number_unsigned()) {
    if (value.is_number_integer() || value.is_number_unsigned()) return true;
    return value.is_number_float() && std::trunc(value.get<double>()) == value.get<double>();
  }
  if (base.is_number()) return value.is_number();
  if (base.is_array()) {
    if (!value.is_array() || value.size() != base.size()) return false;
    for (std::size_t i = 0; i < value.size(); ++i) {
      if (!compatible(base[i], value[i])) return false;
    }
    return true;
  }
  return false;
}

Json coerce(const Json& base, const Json& value) {
  if ((base.is_number_integer() || base.is_number_unsigned()) && value.is_number_float()) {
    return static_cast<std::int64_t>(value.get<double>());
  }
  if (base.is_array()) {
    Json out = Json::array();
    for (std::size_t i = 0; i < value.size(); ++i) out.push_back(coerce(base[i], value[i]));
    return out;
  }
  return value;
}

void merge_checked(Json& base, const Json& overlay, const std::string& path) {
  if (!overlay.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected a mapping");
  for (const auto& [key, value] : overlay.items()) {
    const std::string field = join(path, key);
    if (!base.contains(key)) throw ConfigError(field, "unknown key");
    Json& slot = base[key];
    if (slot.is_object()) {
      merge_checked(slot, value, field);
      continue;
    }
    if (!compatible(slot, value)) throw ConfigError(field, "wrong type (got " + value.dump() + ")");
    slot = coerce(slot, value);
  }
}

Region region_from(const Json& j) { return {j[0].get<double>(), j[1].get<double>()}; }

template <typename T>
T get_nonnegative_integer(const Json& j, const char* field) {
  const auto value = j.get<std::int64_t>();
  if (value < 0) throw ConfigError(field, "must be non-negative");
  return static_cast<T>(value);
}

SimConfig from_json(const Json& j) {
  SimConfig c;
  c.seed = j.at("seed").is_number_unsigned() ? j.at("seed").get<std::uint64_t>()
                                             : get_nonnegative_integer<std::uint64_t>(j.at("seed"), "seed");
  c.duration = j.at("duration").get<double>();
  c.tick = j.at("tick").get<double>();

  const Json& s = j.at("scenario");
  c.scenario.road_length = s.at("road_length").get<double>();
  c.scenario.lanes_per_direction = s.at("lanes_per_direction").get<int>();
  c.scenario.lane_width = s.at("lane_width").get<double>();
  c.scenario.comms_region = region_from(s.at("comms_region"));
  c.scenario.logging_region = region_from(s.at("logging_region"));
  c.scenario.target_density = s.at("target_density").get<double>();
  c.scenario.density_per_direction = s.at("density_per_direction").get<bool>();
  c.scenario.desired_speed_mean = s.at("desired_speed_mean").get<double>();
  c.scenario.desired_speed_stddev = s.at("desired_speed_stddev").get<double>();
  c.scenario.vehicle_length = s.at("vehicle_length").get<double>();
  c.scenario.vehicle_width = s.at("vehicle_width").get<double>();
  c.scenario.penetration_rate = s.at("penetration_rate").get<double>();
  c.scenario.max_pending_arrivals = s.at("max_pending_arrivals").get<int>();
  const Json& idm = s.at("idm");
  c.scenario.idm.max_accel = idm.at("max_accel").get<double>();
  c.scenario.idm.comfortable_decel = idm.at("comfortable_decel").get<double>();
  c.scenario.idm.time_headway = idm.at("time_headway").get<double>();
  c.scenario.idm.min_gap = idm.at("min_gap").get<double>();
  c.scenario.idm.exponent = idm.at("exponent").get<double>();

  const Json& se = j.at("sensor");
  c.sensor.range = se.at("range").get<double>();
  c.sensor.period = se.at("period").get<double>();
  c.sensor.sigma_min = se.at("sigma_min").get<double>();
  c.sensor.alpha_dist = se.at("alpha_dist").get<double>();
  c.sensor.beta_occl = se.at("beta_occl").get<double>();
  c.sensor.min_visible_fraction = se.at("min_visible_fraction").get<double>();
  c.sensor.anisotropy = se.at("anisotropy").get<double>();

  const Json& m = j.at("motion_model");
  c.motion_model.accel_stddev = m.at("accel_stddev").get<double>();
  c.motion_model.initial_velocity_variance = m.at("initial_velocity_variance").get<double>();
  c.motion_model.stale_after = m.at("stale_after").get<double>();

  const Json& p = j.at("policy");
  c.policy.mode = parse_policy_mode(p.at("mode").get<std::string>());
  c.policy.theta = p.at("theta").get<double>();
  c.policy.gamma = p.at("gamma").get<double>();
  c.policy.kl_use_means = p.at("kl_use_means").get<bool>();
  c.policy.check_period = p.at("check_period").get<double>();
  c.policy.self_echo = p.at("self_echo").get<bool>();
  c.policy.header_bytes = get_nonnegative_integer<std::size_t>(p.at("header_bytes"), "policy.header_bytes");
  c.policy.per_object_bytes =
      get_nonnegative_integer<std::size_t>(p.at("per_object_bytes"), "policy.per_object_bytes");
  const Json& e = p.at("etsi");
  c.policy.etsi.position = e.at("position").get<double>();
  c.policy.etsi.speed = e.at("speed").get<double>();
  c.policy.etsi.heading_deg = e.at("heading_deg").get<double>();
  c.policy.etsi.max_interval = e.at("max_interval").get<double>();
  c.policy.etsi.min_heading_speed = e.at("min_heading_speed").get<double>();

  const Json& r = j.at("radio");
  c.radio.bit_rate = r.at("bit_rate").get<double>();
  c.radio.tx_power_dbm = r.at("tx_power_dbm").get<double>();
  c.radio.signal_threshold_dbm = r.at("signal_threshold_dbm").get<double>();
  c.radio.noise_threshold_dbm = r.at("noise_threshold_dbm").get<double>();
  c.radio.carrier_sense_threshold_dbm = r.at("carrier_sense_threshold_dbm").get<double>();
  c.radio.carrier_freq = r.at("carrier_freq").get<double>();
  c.radio.path_loss_exponent = r.at("path_loss_exponent").get<double>();
  c.radio.reference_loss_db = r.at("reference_loss_db").get<double>();
  c.radio.preamble_overhead = r.at("preamble_overhead").get<double>();
  c.radio.slot = r.at("slot").get<double>();
  c.radio.cw = r.at("cw").get<int>();
  c.radio.cbr_window = r.at("cbr_window").get<double>();

  const Json& mt = j.at("metrics");
  c.metrics.warmup = mt.at("warmup").get<double>();
  c.metrics.max_distance = mt.at("max_distance").get<double>();
  c.metrics.bin_width = mt.at("bin_width").get<double>();
  c.metrics.far_threshold = mt.at("far_threshold").get<double>();
  c.metrics.model_kind = parse_model_kind(mt.at("model_kind").get<std::string>());
  c.metrics.keep_raw = mt.at("keep_raw").get<bool>();
  c.metrics.export_frames = mt.at("export_frames").get<bool>();
  return c;
}

Json scalar_from_yaml(const YAML::Node& node) {
  const std::string& text = node.Scalar();
  if (node.Tag() != "!") {  // unquoted: infer the type
    if (text == "true" || text == "True") return true;
    if (text == "false" || text == "False") return false;
    std::int64_t integer = 0;
    auto [iend, iec] = std::from_chars(text.data(), text.data() + text.size(), integer);
    if (iec == std::errc() && iend == text.data() + text.size()) return integer;
    double real = 0.0;
    auto [dend, dec] = std::from_chars(text.data(), text.data() + text.size(), real);
    if (dec == std::errc() && dend == text.data() + text.size()) return real;
  }
  return text;
}

Json json_from_yaml(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Map: {
      Json out = Json::object();
      for (const auto& kv : node) out[kv.first.as<std::string>()] = json_from_yaml(kv.second);
      return out;
    }
    case YAML::NodeType::Sequence: {
      Json out = Json::array();
      for (const auto& item : node) out.push_back(json_from_yaml(item));
      return out;
    }
    case YAML::NodeType::Scalar:
      return scalar_from_yaml(node);
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      break;
  }
  return nullptr;
}

Json parse_yaml_text(std::string_view text, const std::string& what) {
  try {
    return json_from_yaml(YAML::Load(std::string(text)));
  } catch (const YAML::Exception& ex) {
    throw ConfigError(what, std::string("parse error: ") + ex.what());
  }
}

}  // namespace

void SimConfig::validate() const {
  if (!(tick > 0.0)) throw ConfigError("tick", "must be positive");
  if (!(duration >= 0.0)) throw ConfigError("duration", "must be non-negative");
  if (duration > 0.0 && duration < tick) throw ConfigError("duration", "must be at least one tick");
  scenario.validate();
  sensor.validate();
  motion_model.validate();
  policy.validate();
  radio.validate();
  metrics.validate();
  (void)sensor_every();
  (void)policy_every();
  (void)cbr_every();
}

long SimConfig::sensor_every() const { return ratio_to_ticks(sensor.period, tick, "sensor.period"); }
long SimConfig::policy_every() const { return ratio_to_ticks(policy.check_period, tick, "policy.check_period"); }
long SimConfig::cbr_every() const { return ratio_to_ticks(radio.cbr_window, tick, "radio.cbr_window"); }

std::string to_json_text(const SimConfig& config) { return to_json(config).dump(2) + "\n"; }

SimConfig parse_config_text(std::string_view text) {
  Json merged = to_json(SimConfig{});
  const Json overlay = parse_yaml_text(text, "<config>");
  if (!overlay.is_null()) merge_checked(merged, overlay, "");
  SimConfig config;
  try {
    config = from_json(merged);
  } catch (const Json::exception& ex) {
    throw ConfigError("<config>", ex.what());
  }
  config.validate();
  return config;
}

SimConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open configuration file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

SimConfig with_override(const SimConfig& config, std::string_view key, std::string_view value) {
  Json base = to_json(config);
  Json* slot = &base;
  std::string path;
  std::size_t begin = 0;
  while (begin <= key.size()) {
    const std::size_t dot = std::min(key.find('.', begin), key.size());
    const std::string part(key.substr(begin, dot - begin));
    path = join(path, part);
    if (!slot->is_object() || !slot->contains(part)) throw ConfigError(path, "unknown key");
    slot = &(*slot)[part];
    begin = dot + 1;
  }
  const Json parsed = parse_yaml_text(value, std::string(key));
  if (!compatible(*slot, parsed)) throw ConfigError(std::string(key), "wrong type (got '" + std::string(value) + "')");
  *slot = coerce(*slot, parsed);
  SimConfig out;
  try {
    out = from_json(base);
  } catch (const Json::exception& ex) {
    throw ConfigError(std::string(key), ex.what());
  }
  out.validate();
  return out;
}

std::uint64_t config_digest(const SimConfig& config) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : to_json_text(config)) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace cpsim
