#include "swarmplan/subtask/plan_library.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace swarm::subtask {

namespace {

const std::set<std::string>& stop_words() {
    static const std::set<std::string> s = {"a",    "an",   "and",  "are", "as",   "at",   "be",   "by",  "for",
                                            "from", "if",   "in",   "is",  "it",   "its",  "of",   "on",  "or",
                                            "the",  "then", "this", "to",  "with", "when", "that", "any", "all"};
    return s;
}

const std::vector<std::string>& builtin_entries() {
    static const std::vector<std::string> v = {
        "Alkane gas flame: look over the leak point and nearby area first. Stop the flame either by closing the "
        "supply valve or by cooling it with a water jet. Keep watching the site until the flame is gone.",
        "High temperature liquid flame: survey the pool and how far it spreads. Smother it under asbestos felt "
        "laid over the surface; without felt, cool it with water. Keep watching for flare-ups afterwards.",
        "High voltage electrical fire: inspect the area with care before acting. Operating the switch to cut the "
        "power is preferred. Otherwise spray foam on the fire and lay a metal net to stop current leakage. Watch "
        "the site throughout.",
        "Trapped person: inspect the scene to find the victim and judge their state. Clear the debris blocking "
        "access, carry the person out, then keep observing the victim until help arrives.",
        "Poisoned person: inspect the scene to identify the toxin. Release oxygen near the victim, move them out of "
        "the danger zone and keep observing their recovery.",
        "Hydrogen sulfide leakage: inspect how far the gas has spread. Burn it off with a controlled ignition, or "
        "spread activated carbon powder to adsorb it. Keep observing readings until the air is clean.",
        "Damaged storage tank: cool the shell with water, repair the breach, and keep observing the tank for new "
        "leaks.",
    };
    return v;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && !stop_words().count(cur)) out.push_back(cur);
        cur.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

std::map<std::string, double> term_frequencies(const std::string& text) {
    std::map<std::string, double> tf;
    for (const auto& t : tokenize(text)) tf[t] += 1.0;
    return tf;
}

double tf_cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (const auto& [t, w] : a) {
        na += w * w;
        auto it = b.find(t);
        if (it != b.end()) dot += w * it->second;
    }
    for (const auto& [t, w] : b) nb += w * w;
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

PlanLibrary::PlanLibrary(std::vector<std::string> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw std::invalid_argument("plan library is empty");
    for (const auto& e : entries_) {
        if (tokenize(e).empty()) throw std::invalid_argument("plan library entry is blank");
        index_.push_back(term_frequencies(e));
    }
}

PlanLibrary PlanLibrary::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("plan library is not valid JSON: ") + e.what());
    }
    if (!j.is_array()) throw std::invalid_argument("plan library must be a JSON list of strings");
    std::vector<std::string> v;
    for (const auto& e : j) {
        if (!e.is_string()) throw std::invalid_argument("plan library must be a JSON list of strings");
        v.push_back(e.get<std::string>());
    }
    return PlanLibrary(std::move(v));
}

PlanLibrary PlanLibrary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read plan library " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

PlanLibrary PlanLibrary::builtin() { return PlanLibrary(builtin_entries()); }

std::vector<RetrievalHit> PlanLibrary::retrieve(const std::string& query, std::size_t top_n) const {
    if (top_n == 0) throw std::invalid_argument("top_n must be at least 1");
    auto q = term_frequencies(query);
    std::vector<RetrievalHit> hits;
    for (std::size_t i = 0; i < entries_.size(); ++i) hits.push_back({i, tf_cosine(q, index_[i]), entries_[i]});
    std::stable_sort(hits.begin(), hits.end(),
                     [](const RetrievalHit& a, const RetrievalHit& b) { return a.score > b.score; });
    if (hits.size() > top_n) hits.resize(top_n);
    return hits;
}

}  // namespace swarm::subtask
