//===-- gui_model.h - Constraint-aware GUI model --------------------------===//
//
// States are equivalence classes of layouts under their (event, handler)
// sets; transitions are labeled with concrete event summaries. Symbolic
// summaries live in the summary store only.
//
//===---------------------------------------------------------------------===//
#ifndef APEX_GUI_MODEL_H
#define APEX_GUI_MODEL_H

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "apex/ipcfg.h"
#include "apex/runtime.h"
#include "json.hpp"

namespace apex {

/// Pseudo-state that entry events leave from.
inline constexpr const char *kBootState = "boot";
inline constexpr const char *kModelSchema = "model.v1";

/// (event descriptor, handler) pairs; handler is "" for an unbound text field.
using CanonicalLayout = std::set<std::pair<std::string, MethodSig>>;

CanonicalLayout canonical_layout(const App &app, const RuntimeState &state);
bool layout_equivalent(const CanonicalLayout &a, const CanonicalLayout &b);
std::string state_id_of(const CanonicalLayout &c);

struct GuiState {
  std::string id;
  CanonicalLayout canonical;
  ConcreteLayout representative;
  bool initial = false;
  /// Shortest known sequence reaching the state from a fresh start.
  EventSequence witness;
};

enum class SummaryStatus { Concrete, Symbolic };

struct EventSummary {
  std::string id;
  /// Event with the payload it was first seen with.
  Event event;
  /// Foreground activity when the event is dispatched (the started
  /// activity for entry events).
  ActivityId activity;
  /// State the summary was first derived in.
  std::string source;
  /// Path of the event's first root method; empty when no method ran.
  Path path;
  SummaryStatus status = SummaryStatus::Symbolic;
  int solve_attempts = 0;

  bool concrete() const { return status == SummaryStatus::Concrete; }
};

std::string summary_id_of(const Event &e, const Path &p);

/// One root method invocation of an applied event.
struct RootPath {
  MethodSig sig;
  ActivityId activity;
  Path path;
  bool operator==(const RootPath &) const = default;
};

struct Transition {
  std::string src;
  std::string summary;
  std::string dst;
  /// Full sequence from an entry event whose last event produced this edge.
  EventSequence witness;
  /// All roots of the final event, first one matching the summary path.
  std::vector<RootPath> roots;
  /// Replay failures recorded against this edge.
  int failures = 0;
};

struct UpdateResult {
  std::string dst;
  bool new_state = false;
  bool new_transition = false;
};

class GuiModel {
public:
  std::map<std::string, GuiState> states;
  std::map<std::string, EventSummary> summaries;
  std::vector<Transition> transitions;
  /// (state, descriptor) -> handlers.
  std::map<std::pair<std::string, std::string>, std::vector<MethodSig>> theta;
  /// handler -> ids of its enumerated paths.
  std::map<MethodSig, std::vector<std::string>> lambda;

  /// Records a concrete summary observed from `src` and the layout reached.
  /// Idempotent for an already-known (src, summary, dst).
  UpdateResult update(const EventSummary &summary, const std::string &src,
                      const CanonicalLayout &observed,
                      const ConcreteLayout &representative,
                      const EventSequence &witness,
                      const std::vector<RootPath> &roots);

  /// Adds a state for a layout reached without a recorded transition (for
  /// instance the state before the final event of a generated sequence).
  /// Returns true when the state is new.
  bool add_state(const CanonicalLayout &observed, const ConcreteLayout &representative,
                 const EventSequence &witness);

  /// Adds a symbolic summary unless one with the same id exists.
  const EventSummary &add_symbolic(const EventSummary &s);

  const EventSummary *summary(const std::string &id) const;
  std::vector<const Transition *> transitions_of(const std::string &summary_id) const;
  Transition *find_transition(const std::string &src, const std::string &summary,
                              const std::string &dst);

  /// Shortest route between states as transition indices; `from` may be
  /// kBootState. Weights are 1 plus recorded failures; ties go to the
  /// smaller state id, then summary id.
  std::optional<std::vector<size_t>> find_route(const std::string &from,
                                                const std::string &to) const;
  /// Events of the route from boot to `goal`.
  std::optional<EventSequence> find_path(const std::string &goal) const;
  EventSequence route_events(const std::vector<size_t> &route) const;

  nlohmann::json to_json() const;
  static GuiModel from_json(const nlohmann::json &j);
  std::string to_dot() const;
};

/// Root paths of an applied event, recovered from its log.
std::vector<RootPath> root_paths(const App &app, const EventResult &r,
                                 int call_depth_bound = kDefaultCallDepth);

nlohmann::json path_to_json(const Path &p);
Path path_from_json(const nlohmann::json &j);
nlohmann::json layout_to_json(const ConcreteLayout &l);
ConcreteLayout layout_from_json(const nlohmann::json &j);
nlohmann::json sequence_to_json(const EventSequence &seq);
EventSequence sequence_from_json(const nlohmann::json &j);

} // namespace apex

#endif
