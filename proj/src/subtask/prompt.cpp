#include "swarmplan/subtask/prompt.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "swarmplan/subtask/skills.hpp"

namespace swarm::subtask {

std::vector<std::string> PromptContext::resource_types() const {
    std::set<std::string> s;
    for (const auto& p : perception) s.insert(p.type);
    return {s.begin(), s.end()};
}

namespace {

void header(std::ostringstream& os, const PromptContext& c) {
    os << "Task: name: " << c.task_name << "; type: " << c.task_type << "\n\n";
    os << "Resources:";
    bool first = true;
    for (const auto& r : c.resource_types()) {
        os << (first ? " " : ", ") << r;
        first = false;
    }
    os << "\n\n";
    os << "Related Knowledge:";
    for (const auto& k : c.knowledge) os << " " << k;
    os << "\n\n";
}

void skills(std::ostringstream& os, const PromptContext& c) {
    os << "Robot Skills:\n";
    for (const auto& s : c.capabilities) os << "- " << s << ": " << skill_description(s) << "\n";
    os << "\n";
}

const char* kInstruction =
    "Instruction: Build the task out of the listed skills only. Reply with strict JSON and nothing else.\n\n";

}  // namespace

std::string render_analysis(const PromptContext& c) {
    std::ostringstream os;
    header(os, c);
    os << kInstruction;
    skills(os, c);
    os << "Output Format:\n"
          "- related_knowledge_analysis: examine the candidate schemes and their steps\n"
          "- schemes_draft: describe each scheme in plain words, then formally\n"
          "- schemes:\n"
          "  - scheme_1:\n"
          "    - steps:\n"
          "      - step_1:\n"
          "        * required_skill: skill_name\n"
          "        * required_resources: at most one nearby object\n"
          "        * dependency: prerequisite steps\n";
    return os.str();
}

std::string render_guide(const PromptContext& c, const std::string& analysis) {
    std::ostringstream os;
    header(os, c);
    skills(os, c);
    os << kInstruction;
    os << "Related Knowledge Analysis: " << analysis << "\n\n";
    os << "Output Format:\n"
          "- schemes_draft: describe the schemes and their steps in plain words, then restate them in the "
          "'schemes' part. One scheme with one step is shown; produce as many as needed.\n";
    return os.str();
}

std::string render_sequencing(const PromptContext& c, const std::string& analysis, const std::string& guide) {
    std::ostringstream os;
    header(os, c);
    skills(os, c);
    os << kInstruction;
    os << "Related Knowledge Analysis: " << analysis << "\n\n";
    os << "Subtask Guide: " << guide << "\n\n";
    os << "Output Format:\n"
          "- schemes:\n"
          "  - scheme_1:\n"
          "    - step_1:\n"
          "      * required_skill: skill name\n"
          "      * resource: zero or one object available nearby for direct use (\"\" if none)\n"
          "      * dependency: [steps that must finish first]\n"
          "    - step_N:\n"
          "      * required_skill: skill name\n"
          "      * resource: zero or one object available nearby for direct use (\"\" if none)\n"
          "      * dependency: [steps that must finish first, e.g. step_1]\n";
    return os.str();
}

std::string fill_slots(std::string tmpl, const std::string& analysis, const std::string& guide) {
    auto replace = [&](const std::string& slot, const std::string& value) {
        for (std::size_t pos = tmpl.find(slot); pos != std::string::npos; pos = tmpl.find(slot, pos + value.size())) {
            tmpl.replace(pos, slot.size(), value);
        }
    };
    replace(kAnalysisSlot, analysis);
    replace(kGuideSlot, guide);
    return tmpl;
}

StagePrompts build_prompt(const std::string& task_name, const std::string& task_type, Vec2 position,
                          const std::vector<std::string>& knowledge, const std::vector<std::string>& capabilities,
                          const std::vector<PerceivedItem>& perception) {
    for (const auto& s : capabilities) {
        if (!is_subtask_skill(s)) throw std::invalid_argument("unknown skill '" + s + "' in capabilities");
    }
    for (const auto& p : perception) {
        if (!std::isfinite(p.position.x) || !std::isfinite(p.position.y)) {
            throw std::invalid_argument("perception entry " + p.id + " has invalid coordinates");
        }
    }
    StagePrompts out;
    out.context = {task_name, task_type, position, knowledge, capabilities, perception};
    out.analysis = render_analysis(out.context);
    out.guide = render_guide(out.context, kAnalysisSlot);
    out.sequencing = render_sequencing(out.context, kAnalysisSlot, kGuideSlot);
    return out;
}

}  // namespace swarm::subtask
