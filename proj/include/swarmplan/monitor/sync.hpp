// Ordering and synchronised-start checks over observed execution times.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "swarmplan/automaton/rposet.hpp"
#include "swarmplan/geometry.hpp"

namespace swarm::monitor {

enum class SyncKind { Precedes, Simultaneous };

const char* sync_kind_name(SyncKind k);

/// For Precedes, `upstream` must have ended before `downstream` starts. For
/// Simultaneous, both activities (equal ids: one multi-robot subtask) start
/// together on every robot.
struct SyncRule {
    SyncKind kind = SyncKind::Precedes;
    std::string upstream;
    std::string downstream;

    friend bool operator==(const SyncRule&, const SyncRule&) = default;
    friend auto operator<=>(const SyncRule&, const SyncRule&) = default;
};

struct Interval {
    Millis start_ms = 0;
    Millis end_ms = 0;
};

/// activity id -> robot id -> observed interval of that robot's part.
using ObservedSchedule = std::map<std::string, std::map<std::string, Interval>>;

struct SyncViolation {
    SyncRule rule;
    Millis upstream_ms = 0;    // min upstream end, or the first start for Simultaneous
    Millis downstream_ms = 0;  // max downstream start, or the differing start
    std::string detail;
};

/// Precedes fails when the latest downstream start is still earlier than
/// the earliest upstream end, or when downstream ran and upstream has no
/// record. Simultaneous fails when any two recorded starts differ. Rules
/// whose activities have not started are skipped.
std::vector<SyncViolation> check_sync(const std::vector<SyncRule>& rules, const ObservedSchedule& schedule);

/// Precedes rules for every precedence pair of the poset, mapped through
/// `activity` (task proposition -> activity id). Pairs with an unmapped
/// proposition are left out.
std::vector<SyncRule> precedence_rules(const automaton::RPoset& poset, const std::map<std::string, std::string>& activity);

}  // namespace swarm::monitor
