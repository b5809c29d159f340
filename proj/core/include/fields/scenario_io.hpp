#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "fields/simulator.hpp"

namespace fields {

inline constexpr std::string_view kScenarioSchema = "fields-scenario/1";
inline constexpr std::string_view kTraceSchema = "fields-trace/1";

/// Parses and fully validates a scenario document. Missing optional fields
/// take their defaults. Throws ValidationError listing every problem found.
ScenarioConfig load_scenario(std::string_view text);
ScenarioConfig scenario_from_json(const nlohmann::json& doc);
ScenarioConfig load_scenario_file(const std::string& path);

/// Materialized document: every default written out.
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);

/// FNV-1a 64 of the canonical materialized document, as 16 hex digits.
std::string config_hash(const ScenarioConfig& cfg);

/// Returns a copy of `cfg` with the parameter at `path` (e.g. "actors[0].k",
/// "bindings[0].greeting.t2", "devices[1].radius") replaced. Throws
/// ValidationError on an unknown path or when the result is invalid.
ScenarioConfig set_param(const ScenarioConfig& cfg, std::string_view path, const nlohmann::json& value);

nlohmann::ordered_json event_to_json(const PatternEvent& event);
/// {"t","actor","device","pi","state","events"} in that key order.
nlohmann::ordered_json record_to_json(const TraceRecord& record);

/// Header line followed by one line per record.
void write_trace_jsonl(std::ostream& out, const EventTrace& trace, const ScenarioConfig& cfg);
std::string trace_to_jsonl(const EventTrace& trace, const ScenarioConfig& cfg);

}  // namespace fields
