#include "cpsim/export.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cpsim/error.hpp"

namespace cpsim {

using Json = nlohmann::ordered_json;

namespace {

Json number(double value) {
  if (!std::isfinite(value)) return nullptr;
  return quantize(value);
}

Json box_json(const BoxStats& stats) {
  Json j;
  j["count"] = stats.count;
  const auto put = [&](const char* key, auto member) {
    j[key] = stats.values ? number((*stats.values).*member) : Json(nullptr);
  };
  put("mean", &BoxValues::mean);
  put("min", &BoxValues::min);
  put("q1", &BoxValues::q1);
  put("median", &BoxValues::median);
  put("q3", &BoxValues::q3);
  put("max", &BoxValues::max);
  put("whisker_low", &BoxValues::whisker_low);
  put("whisker_high", &BoxValues::whisker_high);
  return j;
}

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, double>>& out) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      if (prefix.empty() && key == "config") continue;
      flatten(value, prefix.empty() ? key : prefix + "." + key, out);
    }
  } else if (j.is_array()) {
    for (const Json& item : j) {
      // Distance bins are keyed by their edges rather than position.
      if (item.is_object() && item.contains("lo") && item.contains("hi")) {
        const std::string label = format_number(item["lo"].get<double>()) + "-" +
                                  format_number(item["hi"].get<double>());
        for (const auto& [key, value] : item.items()) {
          if (key == "lo" || key == "hi") continue;
          flatten(value, prefix + "." + label + "." + key, out);
        }
      }
    }
  } else if (j.is_number()) {
    out.emplace_back(prefix, j.get<double>());
  }
}

}  // namespace

std::string format_number(double value) {
  if (!std::isfinite(value)) return "nan";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.6g", value);
  return buffer;
}

std::string summary_json(const RunSummary& s, const SimConfig& config) {
  Json j;
  char digest[17];
  std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(config_digest(config)));
  j["config_digest"] = digest;
  j["ticks"] = s.ticks;
  j["simulated_time"] = number(s.simulated_time);
  j["ote_model"] = std::string(to_string(config.metrics.model_kind));
  j["cbr"] = box_json(s.cbr);
  j["ote"] = box_json(s.ote);
  j["ote_far"] = box_json(s.ote_far);
  Json bins = Json::array();
  for (const DistanceBin& b : s.ote_by_distance) {
    bins.push_back({{"lo", number(b.lo)},
                    {"hi", number(b.hi)},
                    {"count", b.count},
                    {"mean", b.mean ? number(*b.mean) : Json(nullptr)}});
  }
  j["ote_by_distance"] = bins;
  j["channel"] = {
      {"submitted", s.channel.submitted},
      {"replaced", s.channel.replaced},
      {"transmitted", s.channel.transmitted},
      {"delivered_frames", s.channel.delivered_frames},
      {"receptions", s.channel.receptions},
      {"collided", s.channel.collided},
      {"out_of_range", s.channel.out_of_range},
      {"frames_with_collision", s.channel.frames_with_collision},
  };
  j["perception"] = {
      {"detections", s.detections},
      {"cpms_generated", s.cpms_generated},
      {"objects_reported", s.objects_reported},
      {"malformed_cpms", s.malformed_cpms},
  };
  j["traffic"] = {
      {"samples", s.traffic.samples},
      {"mean_density_per_km", number(s.traffic.mean_density)},
      {"mean_speed", number(s.traffic.mean_speed)},
  };
  j["config"] = Json::parse(to_json_text(config));
  return j.dump(2) + "\n";
}

std::string ote_csv(std::span<const OteSample> samples) {
  std::string out = "time,ego_id,object_id,error_m,distance_m\n";
  out.reserve(out.size() + samples.size() * 40);
  for (const OteSample& s : samples) {
    out += format_number(s.time);
    out += ',';
    out += std::to_string(s.ego_id);
    out += ',';
    out += std::to_string(s.object_id);
    out += ',';
    out += format_number(s.error);
    out += ',';
    out += format_number(s.distance);
    out += '\n';
  }
  return out;
}

std::string cbr_csv(std::span<const CbrSample> samples) {
  std::string out = "time,station_id,cbr\n";
  for (const CbrSample& s : samples) {
    out += format_number(s.time) + ',' + std::to_string(s.station_id) + ',' + format_number(s.cbr) + '\n';
  }
  return out;
}

std::string frames_csv(std::span<const FrameRecord> frames) {
  std::ostringstream out;
  out << "frame_id,sender_id,tx_start_ns,tx_end_ns,objects,intended,received,collided,out_of_range\n";
  for (const FrameRecord& f : frames) {
    out << f.frame_id << ',' << f.sender_id << ',' << f.tx_start << ',' << f.tx_end << ',' << f.objects << ','
        << f.intended << ',' << f.received << ',' << f.collided << ',' << f.out_of_range << '\n';
  }
  return out.str();
}

std::string serialize_world(const World& world) {
  std::string out;
  char line[160];
  for (const Vehicle& v : world.vehicles()) {
    std::snprintf(line, sizeof line, "%u %d %d %.17g %.17g %.17g %.17g %d\n", v.id,
                  v.direction == Direction::kForward ? 0 : 1, v.lane, v.position.x(), v.position.y(), v.speed,
                  v.desired_speed, v.is_station ? 1 : 0);
    out += line;
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError(path.string(), "write failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_run_artifacts(const std::filesystem::path& dir, const RunArtifacts& artifacts,
                         const SimConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
  write_text_file(dir / "summary.json", summary_json(artifacts.summary, config));
  write_text_file(dir / "config.json", to_json_text(config));
  write_text_file(dir / "ote.csv", ote_csv(artifacts.ote));
  write_text_file(dir / "cbr.csv", cbr_csv(artifacts.cbr));
  if (config.metrics.export_frames) write_text_file(dir / "frames.csv", frames_csv(artifacts.frames));
}

std::vector<std::pair<std::string, double>> summary_statistics(std::string_view summary_text) {
  Json j;
  try {
    j = Json::parse(summary_text);
  } catch (const Json::parse_error& ex) {
    throw IoError("summary.json", std::string("malformed: ") + ex.what());
  }
  std::vector<std::pair<std::string, double>> out;
  flatten(j, "", out);
  return out;
}

std::string compare_csv(std::string_view summary_a, std::string_view summary_b) {
  const auto a = summary_statistics(summary_a);
  const auto b = summary_statistics(summary_b);
  std::map<std::string, double> b_lookup(b.begin(), b.end());
  std::map<std::string, double> a_lookup(a.begin(), a.end());

  std::string out = "statistic,a,b,relative_change\n";
  const auto row = [&](const std::string& name, const double* va, const double* vb) {
    out += name + ',';
    if (va) out += format_number(*va);
    out += ',';
    if (vb) out += format_number(*vb);
    out += ',';
    if (va && vb && *vb != 0.0) out += format_number((*va - *vb) / *vb);
    out += '\n';
  };
  for (const auto& [name, value] : a) {
    const auto it = b_lookup.find(name);
    row(name, &value, it == b_lookup.end() ? nullptr : &it->second);
  }
  for (const auto& [name, value] : b) {
    if (!a_lookup.contains(name)) row(name, nullptr, &value);
  }
  return out;
}

}  // namespace cpsim
