// Robot platforms, skill vocabularies and the feature taxonomy.
//
// Subtask skills are the verbs used in generated plans (inspect, operate,
// ...). Robot skills are platform capabilities (inspection, operation, ...).
// robot_skill_for maps the first onto the second.

#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace swarm::subtask {

enum class Platform { UHeli, UAV, UGV, TUGV, Dog };

std::string platform_name(Platform p);
/// Throws std::invalid_argument for names other than the five platforms.
Platform parse_platform(const std::string& name);
const std::set<std::string>& platform_skills(Platform p);
double platform_velocity(Platform p);
bool is_aerial(Platform p);

inline constexpr const char* kExploreSkill = "explore";

/// inspect, operate, liquid_spray, ... plus the exploration skill.
const std::vector<std::string>& subtask_skills();
bool is_subtask_skill(const std::string& s);
/// Throws std::invalid_argument for unknown subtask skills.
std::string robot_skill_for(const std::string& subtask_skill);
bool platform_can(Platform p, const std::string& subtask_skill);
/// Short description used in prompts.
std::string skill_description(const std::string& subtask_skill);
/// Subtask skills a set of platforms can perform together.
std::set<std::string> subtask_capabilities(const std::vector<Platform>& robots);

struct FeatureSpec {
    std::string type;
    std::string symbol;  // proposition used in mission formulas
    std::vector<std::pair<std::string, int>> skills;  // subtask skill, robots needed
};

/// Task-type features in table order.
const std::vector<FeatureSpec>& task_features();
const std::vector<std::string>& resource_types();
bool is_task_type(const std::string& type);
bool is_resource_type(const std::string& type);
bool is_feature_type(const std::string& type);
const FeatureSpec* feature_by_type(const std::string& type);
const FeatureSpec* feature_by_symbol(const std::string& symbol);
/// Robots needed for `skill` on a feature type; nullopt if not listed.
std::optional<int> robots_for(const std::string& type, const std::string& skill);

}  // namespace swarm::subtask
