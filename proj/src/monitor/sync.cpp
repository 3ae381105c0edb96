#include "swarmplan/monitor/sync.hpp"

#include <algorithm>
#include <limits>

namespace swarm::monitor {

const char* sync_kind_name(SyncKind k) { return k == SyncKind::Precedes ? "precedes" : "simultaneous"; }

std::vector<SyncViolation> check_sync(const std::vector<SyncRule>& rules, const ObservedSchedule& schedule) {
    std::vector<SyncViolation> out;
    for (const auto& rule : rules) {
        auto down = schedule.find(rule.downstream);
        auto up = schedule.find(rule.upstream);
        if (rule.kind == SyncKind::Precedes) {
            if (down == schedule.end() || down->second.empty()) continue;
            Millis latest_start = std::numeric_limits<Millis>::min();
            for (const auto& [_, iv] : down->second) latest_start = std::max(latest_start, iv.start_ms);
            if (up == schedule.end() || up->second.empty()) {
                out.push_back({rule, 0, latest_start, rule.downstream + " ran with no record of " + rule.upstream});
                continue;
            }
            Millis earliest_end = std::numeric_limits<Millis>::max();
            for (const auto& [_, iv] : up->second) earliest_end = std::min(earliest_end, iv.end_ms);
            if (latest_start < earliest_end) {
                out.push_back({rule, earliest_end, latest_start,
                               rule.downstream + " started at " + std::to_string(latest_start) + " ms before " +
                                   rule.upstream + " ended at " + std::to_string(earliest_end) + " ms"});
            }
            continue;
        }
        std::vector<std::pair<std::string, Millis>> starts;
        for (auto it : {up, down}) {
            if (it == schedule.end()) continue;
            for (const auto& [robot, iv] : it->second) starts.emplace_back(robot, iv.start_ms);
            if (rule.upstream == rule.downstream) break;
        }
        for (std::size_t i = 1; i < starts.size(); ++i) {
            if (starts[i].second != starts[0].second) {
                out.push_back({rule, starts[0].second, starts[i].second,
                               starts[i].first + " started at " + std::to_string(starts[i].second) + " ms, " +
                                   starts[0].first + " at " + std::to_string(starts[0].second) + " ms"});
                break;
            }
        }
    }
    return out;
}

std::vector<SyncRule> precedence_rules(const automaton::RPoset& poset, const std::map<std::string, std::string>& activity) {
    std::vector<SyncRule> out;
    for (const auto& [h, l] : poset.precedence) {
        auto a = activity.find(h);
        auto b = activity.find(l);
        if (a == activity.end() || b == activity.end()) continue;
        out.push_back({SyncKind::Precedes, a->second, b->second});
    }
    return out;
}

}  // namespace swarm::monitor
