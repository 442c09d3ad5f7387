//===-- runtime.h - Concrete interpreter / device simulator --------------===//
//
// Boots an app, applies events, runs handler bytecode plus the implicit
// lifecycle callbacks, and emits instrumentation-style execution logs
// (method start/return, block entry, receiver registration).
//
//===---------------------------------------------------------------------===//
#ifndef APEX_RUNTIME_H
#define APEX_RUNTIME_H

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "apex/appir.h"

namespace apex {

inline constexpr uint64_t kDefaultSeed = 42;

struct WidgetState {
  std::string id;
  WidgetKind kind = WidgetKind::Button;
  std::map<HandlerKind, MethodSig> bindings;
  std::string text;
  bool operator==(const WidgetState &) const = default;
};

struct ConcreteLayout {
  ActivityId activity;
  std::vector<WidgetState> widgets;
  const WidgetState *find(std::string_view id) const;
  WidgetState *find(std::string_view id);
  bool operator==(const ConcreteLayout &) const = default;
};

ConcreteLayout instantiate_layout(const Activity &act);

struct Object {
  std::string cls;
  std::map<std::string, Value> fields;
  /// Array length, or -1 for plain objects.
  int64_t length = -1;
  bool operator==(const Object &) const = default;
};

struct Heap {
  std::map<std::string, Value> statics;
  std::map<int64_t, Object> objects;
  int64_t next_object = 1;

  /// Never-written statics read as integer 0.
  Value static_value(const std::string &field) const;
  bool operator==(const Heap &) const = default;
};

struct ActivityRecord {
  ActivityId id;
  ConcreteLayout layout;
  std::map<std::string, std::string> extras;
  bool operator==(const ActivityRecord &) const = default;
};

struct Receiver {
  std::string action;
  MethodSig handler;
  bool operator==(const Receiver &) const = default;
};

struct RuntimeState {
  /// Back stack; the last record is the foreground activity.
  std::vector<ActivityRecord> stack;
  Heap heap;
  /// Registration order, no duplicates.
  std::vector<Receiver> receivers;
  uint64_t seed = kDefaultSeed;
  bool crashed = false;

  bool booted() const { return !stack.empty(); }
  const ActivityRecord &top() const { return stack.back(); }
  const ConcreteLayout &current_layout() const { return stack.back().layout; }
  const ActivityId &current_activity() const { return stack.back().id; }
  bool operator==(const RuntimeState &) const = default;
};

enum class LogKind { MethodStart, MethodReturn, BlockEnter, ReceiverRegistered, Trap };

struct LogEntry {
  LogKind kind = LogKind::MethodStart;
  MethodSig sig;
  int block = -1;
  /// Receiver action (REG) or trap reason (T).
  std::string detail;
  bool operator==(const LogEntry &) const = default;
};

struct ExecLog {
  std::vector<LogEntry> entries;

  /// Line format: `S sig`, `R sig`, `B sig idx`, `REG action sig`,
  /// `T sig idx reason`.
  std::string to_text() const;
  static ExecLog from_text(const std::string &text);
  bool operator==(const ExecLog &) const = default;
};

class IntegrityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class EventNotEnabled : public std::runtime_error {
public:
  EventNotEnabled(const std::string &msg, int index = -1)
      : std::runtime_error(msg), index_(index) {}
  /// Position in the applied sequence, or -1 for a single event.
  int index() const { return index_; }

private:
  int index_;
};

/// A root method invocation during one event, with the foreground activity
/// at the time it started.
struct RootCall {
  MethodSig sig;
  ActivityId activity;
  bool operator==(const RootCall &) const = default;
};

/// Concrete return of an unmodeled API; `site` is "api@method:index#n" where
/// n counts executions of that call site within one root invocation.
struct ApiObservation {
  std::string site;
  Value value;
};

struct EventResult {
  ConcreteLayout layout;
  std::vector<MethodSig> handlers;
  ExecLog log;
  std::vector<RootCall> roots;
  std::vector<ApiObservation> api_returns;
  bool trapped = false;
  std::string trap_reason;
};

/// Roots of the log's method forest in order. Throws IntegrityError when the
/// start/return entries are not properly nested.
std::vector<MethodSig> event_handler_of(const ExecLog &log);

/// (method, block) pairs entered according to the log.
std::set<std::pair<MethodSig, int>> blocks_entered(const ExecLog &log);

/// Runs the main activity's launch. Traps mark the state crashed.
struct BootResult {
  RuntimeState state;
  EventResult result;
};
BootResult boot(const App &app, uint64_t seed = kDefaultSeed);

bool is_enabled(const App &app, const RuntimeState &state, const Event &e);

/// Applies one event in place. Entry events (launch/intent) restart the app.
/// Throws EventNotEnabled if the event is not enabled; a runtime trap leaves
/// the state as it was before the event and is reported in the result.
EventResult apply_event(const App &app, RuntimeState &state, const Event &e);

/// Events available in the current state: one per (widget, bound kind), one
/// text input per textfield, one broadcast per registered receiver action.
std::vector<Event> extract_events(const App &app, const RuntimeState &state);

/// Seeded random text for a textfield's first encounter (8 letters).
std::string random_text(uint64_t seed, const std::string &activity,
                        const std::string &widget);

struct SequenceResult {
  RuntimeState state;
  /// State right before the final event was applied.
  RuntimeState pre_final;
  EventResult last;
  std::set<std::pair<MethodSig, int>> covered;
  int applied = 0;
};

/// Fresh boot, then the events in order. The first event must be an entry
/// event. Throws EventNotEnabled carrying the failing index.
SequenceResult apply_sequence(const App &app, const EventSequence &seq,
                              uint64_t seed = kDefaultSeed);

/// Continues from an existing state (partial-sequence application).
SequenceResult apply_sequence_from(const App &app, RuntimeState start,
                                   const EventSequence &seq);

} // namespace apex

#endif
