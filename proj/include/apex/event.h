#ifndef APEX_EVENT_H
#define APEX_EVENT_H

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace apex {

enum class EventKind { Launch, Intent, Tap, LongTap, TextInput, Back, Broadcast };

const char *event_kind_name(EventKind k);
std::optional<EventKind> parse_event_kind(const std::string &s);

/// A user or system event. Payloads (text, extras) are not part of the
/// event's identity; see descriptor().
struct Event {
  EventKind kind = EventKind::Launch;
  /// Activity id for launch/intent, widget id for tap/longtap/text, action
  /// string for broadcast, empty for back.
  std::string target;
  /// Intent action (intent events only).
  std::string action;
  std::optional<std::string> text;
  std::map<std::string, std::string> extras;

  static Event launch(std::string activity);
  static Event intent(std::string activity, std::string action,
                      std::map<std::string, std::string> extras = {});
  static Event tap(std::string widget);
  static Event long_tap(std::string widget);
  static Event text_input(std::string widget, std::string text);
  static Event back();
  static Event broadcast(std::string action);

  bool is_entry() const {
    return kind == EventKind::Launch || kind == EventKind::Intent;
  }
  bool is_widget_event() const {
    return kind == EventKind::Tap || kind == EventKind::LongTap ||
           kind == EventKind::TextInput;
  }

  /// Identity used by the handler map and summary ids, e.g. "b1/tap",
  /// "broadcast:HEADSET", "intent:A2:action.VIEW".
  std::string descriptor() const;

  /// One line of a sequence file: `kind target [payload-json]`.
  std::string to_line() const;
  /// Inverse of to_line(); throws std::invalid_argument on bad input.
  static Event from_line(const std::string &line);

  bool operator==(const Event &) const = default;
  auto operator<=>(const Event &) const = default;
};

using EventSequence = std::vector<Event>;

std::string sequence_to_text(const EventSequence &seq);
/// Parses a sequence file; blank lines and lines starting with '#' are
/// skipped.
EventSequence sequence_from_text(const std::string &text);

} // namespace apex

#endif
