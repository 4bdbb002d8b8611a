#include "driftlab/events.hpp"

#include <json.hpp>

#include "driftlab/errors.hpp"

namespace driftlab {

std::string event_json_line(const DriftEvent& event) {
  nlohmann::ordered_json j;
  j["detector_id"] = event.detector_id;
  j["stream_index"] = event.stream_index;
  j["detected_at_index"] = event.detected_at_index;
  j["severity"] = event.severity ? nlohmann::ordered_json(*event.severity)
                                 : nlohmann::ordered_json(nullptr);
  j["ci_lower"] = event.ci ? nlohmann::ordered_json(event.ci->lower)
                           : nlohmann::ordered_json(nullptr);
  j["ci_upper"] = event.ci ? nlohmann::ordered_json(event.ci->upper)
                           : nlohmann::ordered_json(nullptr);
  j["compute_time"] = event.compute_time;
  return j.dump();
}

DriftEvent event_from_json_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("event line: ") + e.what());
  }
  DriftEvent ev;
  try {
    ev.detector_id = j.at("detector_id").get<std::string>();
    ev.stream_index = j.at("stream_index").get<std::int64_t>();
    ev.detected_at_index = j.at("detected_at_index").get<std::int64_t>();
    if (j.contains("severity") && !j["severity"].is_null()) {
      ev.severity = j["severity"].get<double>();
    }
    if (j.contains("ci_lower") && !j["ci_lower"].is_null() && j.contains("ci_upper") &&
        !j["ci_upper"].is_null()) {
      ThresholdCI ci;
      ci.lower = j["ci_lower"].get<double>();
      ci.upper = j["ci_upper"].get<double>();
      ev.ci = ci;
    }
    if (j.contains("compute_time") && !j["compute_time"].is_null()) {
      ev.compute_time = j["compute_time"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("event line: ") + e.what());
  }
  return ev;
}

}  // namespace driftlab
