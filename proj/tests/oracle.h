// Exhaustive sequence enumeration over the runtime alone, used as an
// independent reference for the explorer's model.
#ifndef APEX_TESTS_ORACLE_H
#define APEX_TESTS_ORACLE_H

#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "apex/explorer.h"

namespace apex::testing {

struct OracleTransition {
  std::string src;
  std::string event;
  std::string trace;
  std::string dst;
  auto operator<=>(const OracleTransition &) const = default;
};

/// Sorted "descriptor handler" lines of everything the foreground layout and
/// the registered receivers react to.
inline std::string oracle_state_key(const RuntimeState &st) {
  std::set<std::string> lines;
  if (st.booted() && !st.crashed) {
    for (const auto &w : st.current_layout().widgets) {
      for (const auto &[kind, sig] : w.bindings) {
        if (kind == HandlerKind::Click)
          lines.insert(w.id + "/tap " + sig);
        else if (kind == HandlerKind::LongClick)
          lines.insert(w.id + "/longtap " + sig);
      }
      if (w.kind == WidgetKind::TextField) {
        auto it = w.bindings.find(HandlerKind::Text);
        lines.insert(w.id + "/text " + (it == w.bindings.end() ? "" : it->second));
      }
    }
    for (const auto &r : st.receivers)
      lines.insert("broadcast:" + r.action + " " + r.handler);
  }
  std::string key;
  for (const auto &l : lines)
    key += l + "\n";
  return key;
}

inline std::string model_state_key(const GuiModel &m, const std::string &id) {
  if (id == kBootState)
    return "boot";
  std::string key;
  std::set<std::string> lines;
  for (const auto &[d, h] : m.states.at(id).canonical)
    lines.insert(d + " " + h);
  for (const auto &l : lines)
    key += l + "\n";
  return key;
}

/// Block entries of the first root invocation in the log.
inline std::string oracle_trace(const ExecLog &log) {
  std::string out;
  int depth = 0;
  bool started = false;
  for (const auto &e : log.entries) {
    if (e.kind == LogKind::MethodStart) {
      if (depth == 0 && started)
        break;
      started = true;
      ++depth;
    } else if (e.kind == LogKind::MethodReturn) {
      --depth;
    } else if (e.kind == LogKind::BlockEnter && started) {
      out += e.sig + ":" + std::to_string(e.block) + " ";
    }
  }
  return out;
}

inline std::string path_trace(const Path &p, const App &app) {
  std::string out;
  for (const auto &[sig, b] : p.block_trace(app))
    out += sig + ":" + std::to_string(b) + " ";
  return out;
}

struct OracleResult {
  std::set<OracleTransition> transitions;
  std::set<std::string> states;
};

inline void oracle_dfs(const App &app, const RuntimeState &st, const std::string &key,
                       int depth, int max_len, OracleResult &out) {
  if (depth == max_len)
    return;
  std::vector<Event> events = entry_events(app);
  if (depth > 0)
    for (const auto &e : extract_events(app, st))
      events.push_back(e);
  for (const auto &e : events) {
    if (depth > 0 && !is_enabled(app, st, e))
      continue;
    RuntimeState next = st;
    auto r = apply_event(app, next, e);
    if (r.trapped)
      continue;
    std::string src = e.is_entry() ? "boot" : key;
    std::string dst = oracle_state_key(next);
    out.states.insert(dst);
    out.transitions.insert({src, e.descriptor(), oracle_trace(r.log), dst});
    oracle_dfs(app, next, dst, depth + 1, max_len, out);
  }
}

inline OracleResult brute_force(const App &app, int max_len, uint64_t seed = kDefaultSeed) {
  OracleResult out;
  RuntimeState st;
  st.seed = seed;
  oracle_dfs(app, st, "boot", 0, max_len, out);
  return out;
}

inline std::set<OracleTransition> model_transitions(const GuiModel &m, const App &app) {
  std::set<OracleTransition> out;
  for (const auto &t : m.transitions) {
    const EventSummary &s = m.summaries.at(t.summary);
    out.insert({model_state_key(m, t.src), s.event.descriptor(), path_trace(s.path, app),
                model_state_key(m, t.dst)});
  }
  return out;
}

/// Replays the transition's witness and checks the recorded paths and the
/// symbolic summary of its final event against the concrete run. Returns a
/// description of the first disagreement.
inline std::optional<std::string> check_transition(const App &app, const GuiModel &m,
                                                   const Transition &t) {
  SequenceResult sr;
  try {
    sr = apply_sequence(app, t.witness);
  } catch (const EventNotEnabled &e) {
    return std::string("witness does not apply: ") + e.what();
  }
  auto roots = root_paths(app, sr.last);
  if (roots != t.roots)
    return "replayed roots differ from the recorded ones";
  const EventSummary &s = m.summaries.at(t.summary);
  if (!roots.empty() && roots[0].path != s.path)
    return "replayed path differs from the summary";
  const Event &e = t.witness.back();
  ActivityId act = e.is_entry() ? e.target : sr.pre_final.current_activity();
  SymResult sym = execute_event(app, e, act, roots);
  if (sym.state.havoc)
    return "symbolic state lost precision";
  Resolver res = concrete_resolver(sr.pre_final, e, sr.last);
  auto holds = evaluate_constraint(sym.constraint, res);
  if (!holds || !*holds)
    return "path constraint does not hold: " + constraint_to_string(sym.constraint);
  if (auto bad = check_post_state(sym.state, res, sr.state))
    return "post-state mismatch: " + *bad;
  return std::nullopt;
}

} // namespace apex::testing

#endif
