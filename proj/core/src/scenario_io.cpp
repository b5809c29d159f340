#include "fields/scenario_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

namespace fields {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reads typed fields out of a JSON document, recording every problem with
// its location instead of stopping at the first one.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void error(const std::string& where, const std::string& what) { errors_.push_back(where + ": " + what); }

  bool object(const json& j, const std::string& where) {
    if (j.is_object()) return true;
    error(where, "expected an object");
    return false;
  }

  void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) return;
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items()) {
      if (!allowed.contains(k)) error(where, "unknown field \"" + k + "\"");
    }
  }

  std::optional<double> number(const json& obj, const char* key, const std::string& where, bool required) {
    if (!obj.contains(key)) {
      if (required) error(where, std::string("missing field \"") + key + "\"");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
      error(where + "." + key, "expected a number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  double number_or(const json& obj, const char* key, const std::string& where, double fallback) {
    return number(obj, key, where, false).value_or(fallback);
  }

  std::optional<std::string> string(const json& obj, const char* key, const std::string& where, bool required) {
    if (!obj.contains(key)) {
      if (required) error(where, std::string("missing field \"") + key + "\"");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_string()) {
      error(where + "." + key, "expected a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::optional<Vec2> point(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) {
      error(where, std::string("missing field \"") + key + "\"");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      error(where + "." + key, "expected [x, y]");
      return std::nullopt;
    }
    try {
      return Vec2(v[0].get<double>(), v[1].get<double>());
    } catch (const DomainError& e) {
      error(where + "." + key, e.what());
      return std::nullopt;
    }
  }

  const json* array(const json& obj, const char* key, const std::string& where, bool required) {
    if (!obj.contains(key)) {
      if (required) error(where, std::string("missing field \"") + key + "\"");
      return nullptr;
    }
    const json& v = obj.at(key);
    if (!v.is_array()) {
      error(where + "." + key, "expected an array");
      return nullptr;
    }
    return &v;
  }

 private:
  std::vector<std::string>& errors_;
};

std::string indexed(const char* name, std::size_t i) { return std::string(name) + "[" + std::to_string(i) + "]"; }

std::optional<PatternConfig> read_pattern(Reader& r, const json& b, const std::string& where) {
  const auto kind = r.string(b, "pattern", where, true);
  if (!kind) return std::nullopt;
  const std::string section_where = where + "." + *kind;
  const json empty = json::object();
  const json& section = b.contains(*kind) ? b.at(*kind) : empty;
  if (!r.object(section, section_where)) return std::nullopt;

  if (*kind == "greeting") {
    r.only_keys(section, section_where, {"t1", "t2", "dwell"});
    GreetingConfig g;
    g.t1 = r.number_or(section, "t1", section_where, g.t1);
    g.t2 = r.number(section, "t2", section_where, false).value_or(g.t1 * 2.0 / 3.0);
    g.dwell = r.number_or(section, "dwell", section_where, g.dwell);
    return g;
  }
  if (*kind == "turn_taking") {
    r.only_keys(section, section_where, {"t1", "dwell"});
    TurnTakingConfig c;
    c.t1 = r.number_or(section, "t1", section_where, c.t1);
    c.dwell = r.number_or(section, "dwell", section_where, c.dwell);
    return c;
  }
  if (*kind == "revealing") {
    r.only_keys(section, section_where, {"thresholds", "dwell"});
    RevealingConfig c;
    if (const json* th = r.array(section, "thresholds", section_where, false)) {
      c.thresholds.clear();
      for (std::size_t i = 0; i < th->size(); ++i) {
        if (!(*th)[i].is_number()) {
          r.error(section_where + "." + indexed("thresholds", i), "expected a number");
          continue;
        }
        c.thresholds.push_back((*th)[i].get<double>());
      }
    }
    c.dwell = r.number_or(section, "dwell", section_where, c.dwell);
    return c;
  }
  r.error(where + ".pattern", "unknown pattern kind \"" + *kind + "\"");
  return std::nullopt;
}

std::optional<Directionality> read_directionality(Reader& r, const json& d, const std::string& where) {
  const auto s = r.string(d, "directionality", where, false);
  if (!s || *s == "directional") return Directionality::Directional;
  if (*s == "non_directional") return Directionality::NonDirectional;
  r.error(where + ".directionality", "expected \"directional\" or \"non_directional\"");
  return std::nullopt;
}

ordered_json point_json(Vec2 p) { return ordered_json::array({p.x, p.y}); }

ordered_json pattern_json(const PatternConfig& cfg) {
  return std::visit(
      [](const auto& c) -> ordered_json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, GreetingConfig>) {
          return {{"t1", c.t1}, {"t2", c.t2}, {"dwell", c.dwell}};
        } else if constexpr (std::is_same_v<T, TurnTakingConfig>) {
          return {{"t1", c.t1}, {"dwell", c.dwell}};
        } else {
          return {{"thresholds", c.thresholds}, {"dwell", c.dwell}};
        }
      },
      cfg);
}

std::string json_pointer_for(std::string_view path) {
  static const std::regex kAllowed(
      R"(^(actors\[\d+\]\.(k|rest_radius|velocity_smoothing_alpha|heading_speed_floor|initial_heading))$)"
      R"(|^(devices\[\d+\]\.(radius|facing|position|directionality))$)"
      R"(|^(bindings\[\d+\]\.(greeting|turn_taking|revealing)\.(t1|t2|dwell|thresholds(\[\d+\])?))$)"
      R"(|^(noise\.(enabled|range_sigma|angle_sigma|seed))$)"
      R"(|^(tick_rate|duration|polygon_n)$)");
  const std::string p(path);
  if (!std::regex_match(p, kAllowed)) throw ValidationError({"unknown parameter path \"" + p + "\""});
  std::string pointer;
  for (char c : p) {
    if (c == '.' || c == '[') {
      pointer += '/';
    } else if (c != ']') {
      pointer += c;
    }
  }
  return "/" + pointer;
}

}  // namespace

ScenarioConfig scenario_from_json(const json& doc) {
  std::vector<std::string> errors;
  Reader r(errors);
  if (!r.object(doc, "document")) throw ValidationError(std::move(errors));
  r.only_keys(doc, "document",
              {"version", "name", "arena", "tick_rate", "duration", "polygon_n", "noise", "devices", "actors",
               "bindings"});

  const auto version = r.string(doc, "version", "document", true);
  if (version && *version != kScenarioSchema) {
    r.error("document.version", "unsupported schema \"" + *version + "\", expected \"" +
                                    std::string(kScenarioSchema) + "\"");
  }

  ScenarioConfig cfg;
  cfg.name = r.string(doc, "name", "document", false).value_or(cfg.name);
  if (doc.contains("arena") && r.object(doc.at("arena"), "arena")) {
    const json& a = doc.at("arena");
    r.only_keys(a, "arena", {"width", "height"});
    cfg.arena.width = r.number_or(a, "width", "arena", cfg.arena.width);
    cfg.arena.height = r.number_or(a, "height", "arena", cfg.arena.height);
  }
  cfg.tick_rate = r.number_or(doc, "tick_rate", "document", cfg.tick_rate);
  cfg.duration = r.number_or(doc, "duration", "document", cfg.duration);
  if (doc.contains("polygon_n")) {
    if (doc.at("polygon_n").is_number_integer()) {
      cfg.polygon_n = doc.at("polygon_n").get<int>();
    } else {
      r.error("document.polygon_n", "expected an integer");
    }
  }

  if (doc.contains("noise") && r.object(doc.at("noise"), "noise")) {
    const json& n = doc.at("noise");
    r.only_keys(n, "noise", {"enabled", "range_sigma", "angle_sigma", "seed"});
    cfg.noise.range_sigma = r.number_or(n, "range_sigma", "noise", cfg.noise.range_sigma);
    cfg.noise.angle_sigma = r.number_or(n, "angle_sigma", "noise", cfg.noise.angle_sigma);
    if (n.contains("enabled")) {
      if (n.at("enabled").is_boolean()) {
        cfg.noise.enabled = n.at("enabled").get<bool>();
      } else {
        r.error("noise.enabled", "expected a boolean");
      }
    }
    if (n.contains("seed")) {
      if (n.at("seed").is_number_unsigned() || (n.at("seed").is_number_integer() && n.at("seed").get<long long>() >= 0)) {
        cfg.noise.seed = n.at("seed").get<std::uint64_t>();
      } else {
        r.error("noise.seed", "expected a non-negative integer");
      }
    }
  }

  if (const json* devices = r.array(doc, "devices", "document", true)) {
    for (std::size_t i = 0; i < devices->size(); ++i) {
      const std::string where = indexed("devices", i);
      const json& d = (*devices)[i];
      if (!r.object(d, where)) continue;
      r.only_keys(d, where, {"name", "position", "facing", "radius", "directionality"});
      NamedDevice nd;
      nd.name = r.string(d, "name", where, true).value_or("");
      if (auto p = r.point(d, "position", where)) nd.config.position = *p;
      nd.config.facing = r.number_or(d, "facing", where, 0.0);
      nd.config.radius = r.number(d, "radius", where, true).value_or(1.0);
      if (auto dir = read_directionality(r, d, where)) nd.config.directionality = *dir;
      cfg.devices.push_back(std::move(nd));
    }
  }

  if (const json* actors = r.array(doc, "actors", "document", true)) {
    for (std::size_t i = 0; i < actors->size(); ++i) {
      const std::string where = indexed("actors", i);
      const json& a = (*actors)[i];
      if (!r.object(a, where)) continue;
      r.only_keys(a, where,
                  {"name", "rest_radius", "k", "velocity_smoothing_alpha", "heading_speed_floor", "initial_heading",
                   "waypoints"});
      ActorSpec spec;
      spec.name = r.string(a, "name", where, true).value_or("");
      spec.params.rest_radius = r.number_or(a, "rest_radius", where, spec.params.rest_radius);
      spec.params.k = r.number_or(a, "k", where, spec.params.k);
      spec.params.velocity_smoothing_alpha =
          r.number_or(a, "velocity_smoothing_alpha", where, spec.params.velocity_smoothing_alpha);
      spec.params.heading_speed_floor = r.number_or(a, "heading_speed_floor", where, spec.params.heading_speed_floor);
      spec.initial_heading = r.number_or(a, "initial_heading", where, 0.0);
      std::vector<Waypoint> wps;
      if (const json* w = r.array(a, "waypoints", where, true)) {
        for (std::size_t j = 0; j < w->size(); ++j) {
          const std::string wwhere = where + "." + indexed("waypoints", j);
          if (!r.object((*w)[j], wwhere)) continue;
          r.only_keys((*w)[j], wwhere, {"t", "position"});
          const auto t = r.number((*w)[j], "t", wwhere, true);
          const auto p = r.point((*w)[j], "position", wwhere);
          if (t && p) wps.push_back({*t, *p});
        }
      }
      try {
        spec.trajectory = Trajectory::from_waypoints(std::move(wps));
      } catch (const ValidationError& e) {
        for (const auto& msg : e.errors()) r.error(where, msg);
      }
      cfg.actors.push_back(std::move(spec));
    }
  }

  if (const json* bindings = r.array(doc, "bindings", "document", true)) {
    for (std::size_t i = 0; i < bindings->size(); ++i) {
      const std::string where = indexed("bindings", i);
      const json& b = (*bindings)[i];
      if (!r.object(b, where)) continue;
      r.only_keys(b, where, {"actor", "device", "pattern", "greeting", "turn_taking", "revealing"});
      Binding binding;
      binding.actor = r.string(b, "actor", where, true).value_or("");
      binding.device = r.string(b, "device", where, true).value_or("");
      if (auto p = read_pattern(r, b, where)) {
        binding.pattern = *p;
        cfg.bindings.push_back(std::move(binding));
      }
    }
  }

  if (errors.empty()) errors = cfg.validate();
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return cfg;
}

ScenarioConfig load_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError({std::string("malformed JSON: ") + e.what()});
  }
  return scenario_from_json(doc);
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError({"cannot open scenario file \"" + path + "\""});
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

json scenario_to_json(const ScenarioConfig& cfg) {
  ordered_json doc;
  doc["version"] = kScenarioSchema;
  doc["name"] = cfg.name;
  doc["arena"] = {{"width", cfg.arena.width}, {"height", cfg.arena.height}};
  doc["tick_rate"] = cfg.tick_rate;
  doc["duration"] = cfg.duration;
  doc["polygon_n"] = cfg.polygon_n;
  doc["noise"] = {{"enabled", cfg.noise.enabled},
                  {"range_sigma", cfg.noise.range_sigma},
                  {"angle_sigma", cfg.noise.angle_sigma},
                  {"seed", cfg.noise.seed}};
  doc["devices"] = ordered_json::array();
  for (const auto& d : cfg.devices) {
    doc["devices"].push_back({{"name", d.name},
                              {"position", point_json(d.config.position)},
                              {"facing", d.config.facing},
                              {"radius", d.config.radius},
                              {"directionality", d.config.directionality == Directionality::Directional
                                                     ? "directional"
                                                     : "non_directional"}});
  }
  doc["actors"] = ordered_json::array();
  for (const auto& a : cfg.actors) {
    ordered_json wps = ordered_json::array();
    for (const auto& w : a.trajectory.waypoints()) wps.push_back({{"t", w.t}, {"position", point_json(w.position)}});
    doc["actors"].push_back({{"name", a.name},
                             {"rest_radius", a.params.rest_radius},
                             {"k", a.params.k},
                             {"velocity_smoothing_alpha", a.params.velocity_smoothing_alpha},
                             {"heading_speed_floor", a.params.heading_speed_floor},
                             {"initial_heading", a.initial_heading},
                             {"waypoints", wps}});
  }
  doc["bindings"] = ordered_json::array();
  for (const auto& b : cfg.bindings) {
    const std::string kind = to_string(kind_of(b.pattern));
    ordered_json jb = {{"actor", b.actor}, {"device", b.device}, {"pattern", kind}};
    jb[kind] = pattern_json(b.pattern);
    doc["bindings"].push_back(std::move(jb));
  }
  return json::parse(doc.dump());
}

std::string config_hash(const ScenarioConfig& cfg) {
  const std::string canonical = scenario_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ScenarioConfig set_param(const ScenarioConfig& cfg, std::string_view path, const json& value) {
  const json::json_pointer ptr(json_pointer_for(path));
  json doc = scenario_to_json(cfg);
  if (!doc.contains(ptr)) throw ValidationError({"unknown parameter path \"" + std::string(path) + "\""});
  doc[ptr] = value;
  return scenario_from_json(doc);
}

ordered_json event_to_json(const PatternEvent& event) {
  ordered_json j = {{"type", to_string(event.kind)}, {"t", event.t}};
  if (event.kind == EventKind::LevelChanged) {
    j["from"] = event.from;
    j["to"] = event.to;
  }
  return j;
}

ordered_json record_to_json(const TraceRecord& record) {
  ordered_json events = ordered_json::array();
  for (const auto& e : record.events) events.push_back(event_to_json(e));
  return {{"t", record.t},
          {"actor", record.actor},
          {"device", record.device},
          {"pi", record.pi},
          {"state", describe(record.state)},
          {"events", std::move(events)}};
}

void write_trace_jsonl(std::ostream& out, const EventTrace& trace, const ScenarioConfig& cfg) {
  ordered_json meta = {{"schema", kTraceSchema},
                       {"scenario", trace.meta.scenario},
                       {"config_hash", trace.meta.config_hash},
                       {"seed", trace.meta.seed},
                       {"config", ordered_json::parse(scenario_to_json(cfg).dump())}};
  out << ordered_json{{"meta", std::move(meta)}}.dump() << '\n';
  for (const auto& r : trace.records) out << record_to_json(r).dump() << '\n';
}

std::string trace_to_jsonl(const EventTrace& trace, const ScenarioConfig& cfg) {
  std::ostringstream out;
  write_trace_jsonl(out, trace, cfg);
  return out.str();
}

}  // namespace fields
