//===-- explorer.h - Guided GUI exploration --------------------------------===//
//
// The driver loop: drains the event-sequence queue Q, records one concrete
// summary per applied sequence, queues symbolic summaries in L, and turns
// them into complete sequences with the solver once Q is empty.
//
//===---------------------------------------------------------------------===//
#ifndef APEX_EXPLORER_H
#define APEX_EXPLORER_H

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "apex/gui_model.h"
#include "apex/solver.h"
#include "json.hpp"

namespace apex {

inline constexpr const char *kReportSchema = "report.v1";
inline constexpr int kDefaultPenaltyWindow = 3;
inline constexpr int kDefaultMaxAttempts = 5;

struct Target {
  MethodSig method;
  int index = 0;
  std::string to_string() const;
  bool operator==(const Target &) const = default;
  auto operator<=>(const Target &) const = default;
};

/// "Cls.m:7". Throws std::invalid_argument on bad syntax.
Target parse_target(const std::string &text);
/// One target per line; blank lines and '#' comments skipped. Throws
/// std::invalid_argument when an entry does not resolve against `app`.
std::vector<Target> parse_targets(const std::string &text, const App &app);

struct ExploreOptions {
  uint64_t seed = kDefaultSeed;
  /// Applied events, counting route replays; 0 means unlimited.
  int max_events = 0;
  /// Wall-clock limit; 0 means unlimited.
  double max_seconds = 0;
  int loop_bound = kDefaultLoopBound;
  int max_paths = kDefaultMaxPaths;
  int call_depth = kDefaultCallDepth;
  int penalty_window = kDefaultPenaltyWindow;
  int max_attempts = kDefaultMaxAttempts;
  SolverOptions solver;
};

using Priority = std::vector<int64_t>;

struct SequenceCandidate {
  EventSequence events;
  bool partial = true;
  /// State the single event of a partial candidate is available in.
  std::string source_state;
  /// Summary a complete candidate was generated for.
  std::string goal_summary;
  Priority priority;
  int64_t insertion_index = 0;
};

/// Symbolic summary waiting in L, keyed by the state it is expected from.
struct QueueLEntry {
  std::string summary;
  std::string source;
  Priority priority;
  int penalty_until = 0;
  int attempts = 0;
  int64_t insertion_index = 0;
};

/// Handlers the event triggers in `state` (entry events: the started
/// activity's onCreate).
std::vector<MethodSig> candidate_handlers(const App &app, const GuiModel &m,
                                          const std::string &state, const Event &e);

/// (partial, targets statically reachable from the handlers, handlers can
/// change the GUI, -insertion), compared lexicographically.
Priority priority_event_seq(const SequenceCandidate &c, const std::vector<Target> &targets,
                            const App &app, const GuiModel &m,
                            int call_depth = kDefaultCallDepth);

/// (targets on path, startActivity/finish on path, sput+iput on path,
/// -insertion).
Priority priority_summary(const EventSummary &s, const std::vector<Target> &targets,
                          const App &app, int64_t insertion_index);

/// Failed solve: skip for `window` iterations. Returns true when the entry
/// has used up `max_attempts` and must be retired.
bool penalize(QueueLEntry &entry, int iteration, int window, int max_attempts);

/// Index of the entry with the highest priority, or -1.
int pick_best_candidate(const std::vector<SequenceCandidate> &q);
/// Highest-priority entry not under penalty at `iteration`, or -1.
int pick_best_summary(const std::vector<QueueLEntry> &l, int iteration);

struct MethodCoverage {
  int covered = 0;
  int total = 0;
};

struct CoverageReport {
  int covered = 0;
  int total = 0;
  std::map<MethodSig, MethodCoverage> methods;
  int targets_hit = 0;
  int targets_total = 0;

  double ratio() const { return total ? static_cast<double>(covered) / total : 0.0; }
  nlohmann::json to_json() const;
};

/// Instructions in the entered blocks over all instructions of the app.
CoverageReport coverage(const App &app, const std::set<std::pair<MethodSig, int>> &blocks,
                        const std::vector<Target> &targets = {});

bool target_covered(const App &app, const Target &t,
                    const std::set<std::pair<MethodSig, int>> &blocks);

struct HistoryRecord {
  /// Full sequence from a fresh start.
  EventSequence sequence;
  bool partial = true;
  std::string source;
  std::string dst;
  std::vector<MethodSig> handlers;
  std::string log_digest;
  int coverage_delta = 0;
  /// Empty on success; otherwise why the sequence did not apply.
  std::string error;
  bool trapped = false;
};

struct TargetHit {
  Target target;
  EventSequence sequence;
  int iteration = 0;
};

struct Retirement {
  std::string summary;
  std::string source;
  int attempts = 0;
  std::string reason;
};

struct ExploreStats {
  int iterations = 0;
  int sequences_applied = 0;
  int partial_applied = 0;
  int complete_applied = 0;
  int events_applied = 0;
  int application_failures = 0;
  int solve_calls = 0;
  int solved = 0;
  int unknown = 0;
  int summaries_concretized = 0;
  bool budget_exhausted = false;
};

struct ExploreResult {
  GuiModel model;
  std::vector<Target> targets;
  std::vector<HistoryRecord> history;
  std::vector<TargetHit> hits;
  std::vector<Retirement> retired;
  std::set<std::pair<MethodSig, int>> covered_blocks;
  CoverageReport coverage;
  ExploreStats stats;

  /// Deterministic: no timings.
  nlohmann::json report_json(const App &app) const;
};

ExploreResult explore(const App &app, const std::vector<Target> &targets,
                      const ExploreOptions &opts = {});

struct RandomResult {
  std::vector<Target> targets;
  std::set<std::pair<MethodSig, int>> covered_blocks;
  CoverageReport coverage;
  std::vector<TargetHit> hits;
  int events_applied = 0;
  int restarts = 0;

  nlohmann::json report_json(const App &app) const;
};

/// Uniformly random enabled events (widget, text and broadcast events plus
/// entry events) from a fresh boot; restarts after a crash.
RandomResult baseline_random(const App &app, const std::vector<Target> &targets,
                             int event_budget, uint64_t seed);

} // namespace apex

#endif
