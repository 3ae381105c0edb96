// Three-stage subtask generation behind a pluggable text backend.
//
// Every backend answers the stage prompts with text. Stage III must carry
// the schemes -> steps -> {required_skill, resource, dependency} object; it
// is parsed, converted to layered graphs, extended with exploration nodes
// and validated.

#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmplan/subtask/layered_dag.hpp"
#include "swarmplan/subtask/prompt.hpp"

namespace swarm::subtask {

class GenerationError : public std::runtime_error {
public:
    enum class Kind { Timeout, Backend, Parse, Invalid };
    GenerationError(Kind kind, const std::string& message, std::string raw = {})
        : std::runtime_error(message), kind_(kind), raw_(std::move(raw)) {}
    Kind kind() const { return kind_; }
    const std::string& raw() const { return raw_; }

private:
    Kind kind_;
    std::string raw_;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string name() const = 0;
    /// Throws GenerationError (Timeout or Backend) on transport failure.
    virtual std::string respond(Stage stage, const std::string& prompt, const PromptContext& ctx) = 0;
};

struct RuleStep {
    std::string skill;
    std::string resource;
};

/// Built-in schemes per task type, each a chain of steps.
const std::vector<std::vector<RuleStep>>& rule_schemes(const std::string& task_type);

/// Deterministic backend. Its output depends only on the task type and the
/// resource types present in the context; schemes whose resources are all
/// perceived come first.
class RuleBackend : public Backend {
public:
    std::string name() const override { return "rule"; }
    std::string respond(Stage stage, const std::string& prompt, const PromptContext& ctx) override;
};

struct HttpBackendOptions {
    std::string url;  // http://host:port/path
    std::chrono::milliseconds timeout{10000};
    std::size_t max_in_flight = 4;
};

/// POSTs {"stage": n, "prompt": text} and reads either a JSON object with a
/// "content" string or the raw body.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendOptions opts);
    ~HttpBackend() override;
    std::string name() const override { return "http"; }
    std::string respond(Stage stage, const std::string& prompt, const PromptContext& ctx) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct ParsedStep {
    std::string name;
    std::string skill;
    std::string resource;
    std::vector<std::string> dependency;
    std::optional<int> robots;
};

struct ParsedScheme {
    std::string name;
    std::vector<ParsedStep> steps;
};

/// Tolerant reader for the stage III object: keys are matched without case,
/// JSON may be embedded in prose, schemes and steps may be objects or lists,
/// and "required_resources" is accepted for "resource". A step lacking
/// required_skill, resource or dependency is an error. Throws
/// GenerationError(Parse) with the raw text attached.
std::vector<ParsedScheme> parse_schemes(const std::string& text);

struct GenerationOptions {
    std::size_t max_schemes = 4;
    std::size_t retries = 2;                   // extra stage III attempts after a parse failure
    std::map<std::string, Millis> service_ms;  // per skill
    Millis default_service_ms = 20000;
    std::map<std::string, double> skill_success;  // per skill, default 1
    std::set<std::string> group_capabilities;     // validation set; empty uses the context's
    std::set<std::string> known_resources;        // types with a known instance
    ExplorationPriors priors;
};

/// Converts one parsed scheme into a graph. Robot counts come from the
/// step, else the feature table, else 1. Throws GenerationError(Invalid) for
/// a dependency naming no step.
LayeredDag scheme_to_dag(const ParsedScheme& s, const std::string& task_type, int index,
                         const GenerationOptions& opts);

struct GenerationResult {
    std::vector<LayeredDag> candidates;
    std::vector<std::vector<DagViolation>> rejected;  // violations of dropped schemes
    std::string analysis;
    std::string guide;
    std::string sequencing_response;
    std::size_t attempts = 0;
};

GenerationResult generate(const PromptContext& ctx, Backend& backend, const GenerationOptions& opts = {});

}  // namespace swarm::subtask
