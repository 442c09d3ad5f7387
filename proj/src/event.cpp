#include "apex/event.h"

#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace apex {

using nlohmann::json;

const char *event_kind_name(EventKind k) {
  switch (k) {
  case EventKind::Launch: return "launch";
  case EventKind::Intent: return "intent";
  case EventKind::Tap: return "tap";
  case EventKind::LongTap: return "longtap";
  case EventKind::TextInput: return "text";
  case EventKind::Back: return "back";
  case EventKind::Broadcast: return "broadcast";
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(const std::string &s) {
  for (EventKind k : {EventKind::Launch, EventKind::Intent, EventKind::Tap,
                      EventKind::LongTap, EventKind::TextInput, EventKind::Back,
                      EventKind::Broadcast})
    if (s == event_kind_name(k))
      return k;
  return std::nullopt;
}

Event Event::launch(std::string activity) {
  Event e;
  e.kind = EventKind::Launch;
  e.target = std::move(activity);
  return e;
}

Event Event::intent(std::string activity, std::string action,
                    std::map<std::string, std::string> extras) {
  Event e;
  e.kind = EventKind::Intent;
  e.target = std::move(activity);
  e.action = std::move(action);
  e.extras = std::move(extras);
  return e;
}

Event Event::tap(std::string widget) {
  Event e;
  e.kind = EventKind::Tap;
  e.target = std::move(widget);
  return e;
}

Event Event::long_tap(std::string widget) {
  Event e;
  e.kind = EventKind::LongTap;
  e.target = std::move(widget);
  return e;
}

Event Event::text_input(std::string widget, std::string text) {
  Event e;
  e.kind = EventKind::TextInput;
  e.target = std::move(widget);
  e.text = std::move(text);
  return e;
}

Event Event::back() {
  Event e;
  e.kind = EventKind::Back;
  return e;
}

Event Event::broadcast(std::string action) {
  Event e;
  e.kind = EventKind::Broadcast;
  e.target = std::move(action);
  return e;
}

std::string Event::descriptor() const {
  switch (kind) {
  case EventKind::Launch:
    return "launch:" + target;
  case EventKind::Intent:
    return "intent:" + target + ":" + action;
  case EventKind::Tap:
  case EventKind::LongTap:
  case EventKind::TextInput:
    return target + "/" + event_kind_name(kind);
  case EventKind::Back:
    return "back";
  case EventKind::Broadcast:
    return "broadcast:" + target;
  }
  return "?";
}

std::string Event::to_line() const {
  std::string line = event_kind_name(kind);
  if (kind == EventKind::Back)
    return line;
  line += " " + target;
  if (kind == EventKind::TextInput) {
    line += " " + json(text.value_or("")).dump();
  } else if (kind == EventKind::Intent) {
    json payload = {{"action", action}, {"extras", json::object()}};
    for (const auto &[k, v] : extras)
      payload["extras"][k] = v;
    line += " " + payload.dump();
  }
  return line;
}

Event Event::from_line(const std::string &line) {
  std::istringstream in(line);
  std::string kind_name, target;
  in >> kind_name;
  auto kind = parse_event_kind(kind_name);
  if (!kind)
    throw std::invalid_argument("unknown event kind '" + kind_name + "'");
  Event e;
  e.kind = *kind;
  if (e.kind == EventKind::Back)
    return e;
  if (!(in >> e.target))
    throw std::invalid_argument("event '" + kind_name + "' needs a target");
  std::string rest;
  std::getline(in, rest);
  auto first = rest.find_first_not_of(" \t");
  rest = first == std::string::npos ? "" : rest.substr(first);
  json payload;
  if (!rest.empty()) {
    try {
      payload = json::parse(rest);
    } catch (const json::exception &ex) {
      throw std::invalid_argument("bad payload json: " + std::string(ex.what()));
    }
  }
  if (e.kind == EventKind::TextInput) {
    if (!payload.is_string())
      throw std::invalid_argument("text event needs a json string payload");
    e.text = payload.get<std::string>();
  } else if (e.kind == EventKind::Intent) {
    if (!payload.is_object() || !payload.contains("action"))
      throw std::invalid_argument("intent event needs {\"action\": ...}");
    e.action = payload.at("action").get<std::string>();
    if (payload.contains("extras"))
      for (auto &[k, v] : payload.at("extras").items())
        e.extras[k] = v.get<std::string>();
  } else if (!payload.is_null()) {
    throw std::invalid_argument("event '" + kind_name + "' takes no payload");
  }
  return e;
}

std::string sequence_to_text(const EventSequence &seq) {
  std::string out;
  for (const auto &e : seq)
    out += e.to_line() + "\n";
  return out;
}

EventSequence sequence_from_text(const std::string &text) {
  EventSequence seq;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#')
      continue;
    auto last = line.find_last_not_of(" \t\r");
    seq.push_back(Event::from_line(line.substr(first, last - first + 1)));
  }
  return seq;
}

} // namespace apex
