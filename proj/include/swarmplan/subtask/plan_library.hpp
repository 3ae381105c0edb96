// Plan library with term-frequency cosine retrieval.

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace swarm::subtask {

/// Lowercase alphanumeric runs (underscore and hyphen split words). Common
/// English function words are dropped.
std::vector<std::string> tokenize(const std::string& text);

struct RetrievalHit {
    std::size_t index = 0;
    double score = 0.0;
    std::string text;
};

class PlanLibrary {
public:
    /// Throws std::invalid_argument when empty or an entry is blank.
    explicit PlanLibrary(std::vector<std::string> entries);

    /// Parses a JSON array of strings.
    static PlanLibrary from_json_text(const std::string& text);
    static PlanLibrary load(const std::string& path);
    static PlanLibrary builtin();

    const std::vector<std::string>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    /// Highest cosine first, lower index on ties. top_n must be >= 1.
    std::vector<RetrievalHit> retrieve(const std::string& query, std::size_t top_n = 1) const;

private:
    std::vector<std::string> entries_;
    std::vector<std::map<std::string, double>> index_;
};

/// Cosine of raw term-frequency vectors.
double tf_cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b);
std::map<std::string, double> term_frequencies(const std::string& text);

}  // namespace swarm::subtask
