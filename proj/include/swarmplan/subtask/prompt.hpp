// Structured prompts for the three generation stages: related-knowledge
// analysis, subtask guide, and subtask sequencing.

#pragma once

#include <string>
#include <vector>

#include "swarmplan/geometry.hpp"

namespace swarm::subtask {

struct PerceivedItem {
    std::string id;
    std::string type;
    Vec2 position;
};

struct PromptContext {
    std::string task_name;  // feature id or instance name
    std::string task_type;
    Vec2 position;
    std::vector<std::string> knowledge;     // retrieved plans and map facts
    std::vector<std::string> capabilities;  // subtask skill names
    std::vector<PerceivedItem> perception;  // nearby resources

    /// Distinct resource types in `perception`, sorted.
    std::vector<std::string> resource_types() const;
};

enum class Stage { Analysis = 1, Guide = 2, Sequencing = 3 };

struct StagePrompts {
    PromptContext context;
    std::string analysis;    // stage I, complete
    std::string guide;       // stage II, with a placeholder for the analysis
    std::string sequencing;  // stage III, with placeholders for analysis and guide
};

inline constexpr const char* kAnalysisSlot = "{{analysis}}";
inline constexpr const char* kGuideSlot = "{{guide}}";

/// Throws std::invalid_argument for a capability outside the skill
/// vocabulary or a perception entry with non-finite coordinates.
StagePrompts build_prompt(const std::string& task_name, const std::string& task_type, Vec2 position,
                          const std::vector<std::string>& knowledge, const std::vector<std::string>& capabilities,
                          const std::vector<PerceivedItem>& perception);

std::string render_analysis(const PromptContext& c);
std::string render_guide(const PromptContext& c, const std::string& analysis);
std::string render_sequencing(const PromptContext& c, const std::string& analysis, const std::string& guide);

std::string fill_slots(std::string tmpl, const std::string& analysis, const std::string& guide);

}  // namespace swarm::subtask
