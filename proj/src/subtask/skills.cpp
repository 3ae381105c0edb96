#include "swarmplan/subtask/skills.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace swarm::subtask {

namespace {

const std::map<std::string, std::string>& skill_map() {
    static const std::map<std::string, std::string> m = {
        {"inspect", "inspection"},         {"operate", "operation"},      {"monitor", "monitoring"},
        {"lay", "laying"},                 {"clean_up", "cleanup"},       {"ignite", "ignition"},
        {"fix", "fixing"},                 {"rescue", "rescue"},          {"liquid_spray", "liquid_spray"},
        {"gas_spray", "gas_spray"},        {"solid_spray", "solid_spray"}, {"explore", "local_exploration"},
    };
    return m;
}

const std::map<std::string, std::string>& descriptions() {
    static const std::map<std::string, std::string> m = {
        {"inspect", "On-site investigation"},
        {"operate", "Valve/switch control"},
        {"monitor", "Post-task observation"},
        {"lay", "Place covering material"},
        {"clean_up", "Clear debris and obstacles"},
        {"ignite", "Controlled ignition"},
        {"fix", "Repair equipment"},
        {"rescue", "Move a person to safety"},
        {"liquid_spray", "Spray pressurized liquid"},
        {"gas_spray", "Release gas near a target"},
        {"solid_spray", "Spread powder or granules"},
        {"explore", "Search an area for a resource"},
    };
    return m;
}

}  // namespace

std::string platform_name(Platform p) {
    switch (p) {
        case Platform::UHeli: return "UHeli";
        case Platform::UAV: return "UAV";
        case Platform::UGV: return "UGV";
        case Platform::TUGV: return "TUGV";
        case Platform::Dog: return "Dog";
    }
    return "?";
}

Platform parse_platform(const std::string& name) {
    for (Platform p : {Platform::UHeli, Platform::UAV, Platform::UGV, Platform::TUGV, Platform::Dog}) {
        if (platform_name(p) == name) return p;
    }
    throw std::invalid_argument("unknown platform type '" + name + "'");
}

const std::set<std::string>& platform_skills(Platform p) {
    static const std::map<Platform, std::set<std::string>> table = {
        {Platform::UHeli, {"global_exploration"}},
        {Platform::UAV,
         {"local_exploration", "inspection", "monitoring", "detection", "throwing", "liquid_spray", "gas_spray",
          "ignition"}},
        {Platform::UGV,
         {"local_exploration", "inspection", "monitoring", "transportation", "ignition", "solid_spray",
          "liquid_spray", "gas_spray"}},
        {Platform::TUGV,
         {"local_exploration", "inspection", "monitoring", "transportation", "ignition", "building", "solid_spray",
          "laying", "cleanup", "liquid_spray", "gas_spray"}},
        {Platform::Dog,
         {"local_exploration", "inspection", "monitoring", "operation", "building", "rescue", "cleanup", "ignition",
          "fixing"}},
    };
    return table.at(p);
}

double platform_velocity(Platform) { return 2.0; }

bool is_aerial(Platform p) { return p == Platform::UHeli || p == Platform::UAV; }

const std::vector<std::string>& subtask_skills() {
    static const std::vector<std::string> v = [] {
        std::vector<std::string> out;
        for (const auto& [k, _] : skill_map()) out.push_back(k);
        return out;
    }();
    return v;
}

bool is_subtask_skill(const std::string& s) { return skill_map().count(s) > 0; }

std::string robot_skill_for(const std::string& s) {
    auto it = skill_map().find(s);
    if (it == skill_map().end()) throw std::invalid_argument("unknown skill '" + s + "'");
    return it->second;
}

bool platform_can(Platform p, const std::string& s) {
    auto it = skill_map().find(s);
    return it != skill_map().end() && platform_skills(p).count(it->second) > 0;
}

std::string skill_description(const std::string& s) {
    auto it = descriptions().find(s);
    if (it == descriptions().end()) throw std::invalid_argument("unknown skill '" + s + "'");
    return it->second;
}

std::set<std::string> subtask_capabilities(const std::vector<Platform>& robots) {
    std::set<std::string> out;
    for (const auto& s : subtask_skills()) {
        for (Platform p : robots) {
            if (platform_can(p, s)) {
                out.insert(s);
                break;
            }
        }
    }
    return out;
}

const std::vector<FeatureSpec>& task_features() {
    static const std::vector<FeatureSpec> v = {
        {"alkane_gas_flame", "af", {{"inspect", 2}, {"operate", 1}, {"liquid_spray", 1}, {"monitor", 2}}},
        {"high_temp_liquid_flame", "htlf", {{"inspect", 2}, {"lay", 2}, {"liquid_spray", 1}, {"monitor", 2}}},
        {"high-voltage_electrical_flame",
         "hvf",
         {{"inspect", 2}, {"liquid_spray", 1}, {"monitor", 2}, {"operate", 1}, {"lay", 1}}},
        {"trapped_person", "tp", {{"inspect", 2}, {"clean_up", 2}, {"rescue", 1}, {"monitor", 2}}},
        {"poisoned_person", "poi", {{"inspect", 2}, {"rescue", 1}, {"gas_spray", 1}, {"monitor", 2}}},
        {"hydrogen_sulfide_leakage", "h2s", {{"inspect", 2}, {"ignite", 1}, {"monitor", 2}, {"solid_spray", 1}}},
        {"damaged_tank", "tank", {{"liquid_spray", 1}, {"monitor", 2}, {"fix", 1}}},
    };
    return v;
}

const std::vector<std::string>& resource_types() {
    static const std::vector<std::string> v = {"valve", "switch",        "water",        "foam",    "activated_carbon",
                                               "asbestos_felt", "oxygen", "metal_net", "antidote"};
    return v;
}

bool is_task_type(const std::string& type) { return feature_by_type(type) != nullptr; }

bool is_resource_type(const std::string& type) {
    const auto& r = resource_types();
    return std::find(r.begin(), r.end(), type) != r.end();
}

bool is_feature_type(const std::string& type) { return is_task_type(type) || is_resource_type(type); }

const FeatureSpec* feature_by_type(const std::string& type) {
    for (const auto& f : task_features()) {
        if (f.type == type) return &f;
    }
    return nullptr;
}

const FeatureSpec* feature_by_symbol(const std::string& symbol) {
    for (const auto& f : task_features()) {
        if (f.symbol == symbol) return &f;
    }
    return nullptr;
}

std::optional<int> robots_for(const std::string& type, const std::string& skill) {
    const FeatureSpec* f = feature_by_type(type);
    if (!f) return std::nullopt;
    for (const auto& [s, n] : f->skills) {
        if (s == skill) return n;
    }
    return std::nullopt;
}

}  // namespace swarm::subtask
