#include "swarmplan/sim/intervention.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace swarm::sim {

const std::vector<std::string>& intervention_kinds() {
    static const std::vector<std::string> k = {"relabel_feature", "confirm_or_edit_plan", "select_scheme",
                                               "reassign_subtask", "define_region",       "trigger_skill"};
    return k;
}

namespace {

void need_string(const nlohmann::json& p, const char* key) {
    if (!p.contains(key) || !p.at(key).is_string() || p.at(key).get<std::string>().empty()) {
        throw InterventionError(std::string("payload needs a non-empty string '") + key + "'");
    }
}

}  // namespace

void validate_shape(const Intervention& iv) {
    const auto& k = intervention_kinds();
    if (std::find(k.begin(), k.end(), iv.kind) == k.end()) throw InterventionError("unknown intervention kind '" + iv.kind + "'");
    if (iv.time_ms && *iv.time_ms < 0) throw InterventionError("negative intervention time");
    const auto& p = iv.payload;
    if (!p.is_object()) throw InterventionError("payload must be an object");
    if (iv.kind == "relabel_feature") {
        need_string(p, "feature");
        need_string(p, "type");
    } else if (iv.kind == "confirm_or_edit_plan") {
        need_string(p, "approval");
        std::string action = p.value("action", "approve");
        if (action != "approve" && action != "edit") throw InterventionError("action must be approve or edit");
        if (action == "edit" && !p.contains("schemes")) throw InterventionError("edit needs 'schemes'");
    } else if (iv.kind == "select_scheme") {
        need_string(p, "task");
        if (!p.contains("scheme") || !p.at("scheme").is_number_integer() || p.at("scheme").get<long long>() < 0) {
            throw InterventionError("payload needs a non-negative integer 'scheme'");
        }
    } else if (iv.kind == "reassign_subtask") {
        need_string(p, "subtask");
        need_string(p, "robot");
    } else if (iv.kind == "define_region") {
        need_string(p, "resource");
        if (!p.contains("polygon") || !p.at("polygon").is_array() || p.at("polygon").size() < 3) {
            throw InterventionError("polygon needs at least three points");
        }
        for (const auto& pt : p.at("polygon")) {
            if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number() ||
                !std::isfinite(pt[0].get<double>()) || !std::isfinite(pt[1].get<double>())) {
                throw InterventionError("polygon points are [x, y] pairs of finite numbers");
            }
        }
    } else if (iv.kind == "trigger_skill") {
        need_string(p, "robot");
        need_string(p, "skill");
    }
}

Intervention intervention_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InterventionError("intervention must be an object");
    Intervention iv;
    if (!j.contains("kind") || !j.at("kind").is_string()) throw InterventionError("intervention needs a 'kind'");
    iv.kind = j.at("kind").get<std::string>();
    if (j.contains("time_ms") && !j.at("time_ms").is_null()) {
        if (!j.at("time_ms").is_number_integer()) throw InterventionError("time_ms must be an integer");
        iv.time_ms = j.at("time_ms").get<Millis>();
    }
    if (j.contains("payload")) iv.payload = j.at("payload");
    validate_shape(iv);
    return iv;
}

nlohmann::json intervention_to_json(const Intervention& iv) {
    nlohmann::json j;
    j["kind"] = iv.kind;
    j["payload"] = iv.payload;
    j["time_ms"] = iv.time_ms ? nlohmann::json(*iv.time_ms) : nlohmann::json(nullptr);
    return j;
}

std::vector<Intervention> parse_intervention_trace(const std::string& text) {
    std::vector<Intervention> out;
    auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return out;
    nlohmann::json doc;
    bool whole = true;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        whole = false;
    }
    if (whole && (doc.is_array() || (doc.is_object() && doc.contains("interventions")))) {
        const auto& arr = doc.is_array() ? doc : doc.at("interventions");
        if (!arr.is_array()) throw InterventionError("'interventions' must be an array");
        for (const auto& e : arr) out.push_back(intervention_from_json(e));
        return out;
    }
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(intervention_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw InterventionError("line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

std::string write_intervention_trace(const std::vector<Intervention>& ivs) {
    std::string out;
    for (const auto& iv : ivs) out += intervention_to_json(iv).dump() + "\n";
    return out;
}

}  // namespace swarm::sim
