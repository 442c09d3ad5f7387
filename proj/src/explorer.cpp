#include "apex/explorer.h"

#include <algorithm>
#include <chrono>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "apex/hash.h"

namespace apex {

using nlohmann::json;

std::string Target::to_string() const { return method + ":" + std::to_string(index); }

Target parse_target(const std::string &text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw std::invalid_argument("bad target '" + text + "', expected Cls.m:index");
  Target t;
  t.method = text.substr(0, colon);
  try {
    size_t used = 0;
    t.index = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1)
      throw std::invalid_argument("");
  } catch (const std::exception &) {
    throw std::invalid_argument("bad target index in '" + text + "'");
  }
  return t;
}

std::vector<Target> parse_targets(const std::string &text, const App &app) {
  std::vector<Target> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#')
      continue;
    auto e = line.find_last_not_of(" \t\r");
    Target t = parse_target(line.substr(b, e - b + 1));
    const Method *m = app.method(t.method);
    if (!m)
      throw std::invalid_argument("line " + std::to_string(line_no) + ": unknown method " +
                                  t.method);
    if (t.index < 0 || t.index >= static_cast<int>(m->body.size()))
      throw std::invalid_argument("line " + std::to_string(line_no) + ": index " +
                                  std::to_string(t.index) + " out of range for " +
                                  t.method);
    out.push_back(t);
  }
  return out;
}

namespace {

bool is_gui_api(const Instr &in) {
  return in.op == Opcode::Api && (in.name == "ui.startActivity" || in.name == "ui.finish");
}

bool is_field_write(const Instr &in) {
  return in.op == Opcode::SPut || in.op == Opcode::IPut;
}

const Instr &instr_of(const App &app, const Stmt &s) {
  return app.method_at(s.method).body[static_cast<size_t>(s.index)];
}

ActivityId activity_in(const GuiModel &m, const std::string &state, const Event &e) {
  if (e.is_entry() || state == kBootState)
    return e.target;
  auto it = m.states.find(state);
  return it == m.states.end() ? ActivityId{} : it->second.representative.activity;
}

} // namespace

std::vector<MethodSig> candidate_handlers(const App &app, const GuiModel &m,
                                          const std::string &state, const Event &e) {
  if (e.is_entry()) {
    const Activity *a = app.activity(e.target);
    if (a && a->on_create)
      return {*a->on_create};
    return {};
  }
  auto it = m.theta.find({state, e.descriptor()});
  return it == m.theta.end() ? std::vector<MethodSig>{} : it->second;
}

Priority priority_event_seq(const SequenceCandidate &c, const std::vector<Target> &targets,
                            const App &app, const GuiModel &m, int call_depth) {
  std::set<Stmt> reach;
  if (!c.events.empty())
    for (const auto &h : candidate_handlers(app, m, c.source_state, c.events.back()))
      for (const auto &s : build_ipcfg(h, app, call_depth).statements())
        reach.insert(s);
  int64_t hits = 0;
  for (const auto &t : targets)
    hits += reach.count({t.method, t.index});
  bool gui = std::any_of(reach.begin(), reach.end(),
                         [&](const Stmt &s) { return is_gui_api(instr_of(app, s)); });
  return {c.partial ? 1 : 0, hits, gui ? 1 : 0, -c.insertion_index};
}

Priority priority_summary(const EventSummary &s, const std::vector<Target> &targets,
                          const App &app, int64_t insertion_index) {
  int64_t hits = 0, writes = 0;
  bool gui = false;
  for (const auto &st : s.path.stmts) {
    for (const auto &t : targets)
      hits += t.method == st.method && t.index == st.index;
    const Instr &in = instr_of(app, st);
    gui = gui || is_gui_api(in);
    writes += is_field_write(in);
  }
  return {hits, gui ? 1 : 0, writes, -insertion_index};
}

bool penalize(QueueLEntry &entry, int iteration, int window, int max_attempts) {
  entry.penalty_until = iteration + window;
  ++entry.attempts;
  return entry.attempts >= max_attempts;
}

int pick_best_candidate(const std::vector<SequenceCandidate> &q) {
  int best = -1;
  for (size_t i = 0; i < q.size(); ++i)
    if (best < 0 || q[i].priority > q[static_cast<size_t>(best)].priority)
      best = static_cast<int>(i);
  return best;
}

int pick_best_summary(const std::vector<QueueLEntry> &l, int iteration) {
  int best = -1;
  for (size_t i = 0; i < l.size(); ++i) {
    if (l[i].penalty_until > iteration)
      continue;
    if (best < 0 || l[i].priority > l[static_cast<size_t>(best)].priority)
      best = static_cast<int>(i);
  }
  return best;
}

json CoverageReport::to_json() const {
  json per = json::object();
  for (const auto &[sig, mc] : methods)
    per[sig] = {{"covered", mc.covered}, {"total", mc.total}};
  return {{"covered", covered},
          {"total", total},
          {"ratio", ratio()},
          {"methods", per},
          {"targets_hit", targets_hit},
          {"targets_total", targets_total}};
}

bool target_covered(const App &app, const Target &t,
                    const std::set<std::pair<MethodSig, int>> &blocks) {
  const Method *m = app.method(t.method);
  if (!m)
    return false;
  for (size_t b = 0; b < m->leaders.size(); ++b) {
    int end = b + 1 < m->leaders.size() ? m->leaders[b + 1]
                                        : static_cast<int>(m->body.size());
    if (t.index >= m->leaders[b] && t.index < end)
      return blocks.count({t.method, static_cast<int>(b)}) > 0;
  }
  return false;
}

CoverageReport coverage(const App &app, const std::set<std::pair<MethodSig, int>> &blocks,
                        const std::vector<Target> &targets) {
  CoverageReport r;
  for (const auto &[sig, m] : app.methods) {
    MethodCoverage mc;
    mc.total = static_cast<int>(m.body.size());
    for (size_t b = 0; b < m.leaders.size(); ++b) {
      if (!blocks.count({sig, static_cast<int>(b)}))
        continue;
      int end = b + 1 < m.leaders.size() ? m.leaders[b + 1]
                                          : static_cast<int>(m.body.size());
      mc.covered += end - m.leaders[b];
    }
    r.covered += mc.covered;
    r.total += mc.total;
    r.methods[sig] = mc;
  }
  r.targets_total = static_cast<int>(targets.size());
  for (const auto &t : targets)
    r.targets_hit += target_covered(app, t, blocks);
  return r;
}

namespace {

json hits_json(const std::vector<Target> &targets, const std::vector<TargetHit> &hits) {
  json out = json::array();
  for (const auto &t : targets) {
    json j = {{"target", t.to_string()}, {"hit", false}};
    for (const auto &h : hits)
      if (h.target == t) {
        j["hit"] = true;
        j["iteration"] = h.iteration;
        j["sequence"] = sequence_to_json(h.sequence);
        j["length"] = h.sequence.size();
      }
    out.push_back(j);
  }
  return out;
}

class Driver {
public:
  Driver(const App &app, const std::vector<Target> &targets, const ExploreOptions &opts)
      : app_(app), targets_(targets), opts_(opts),
        start_(std::chrono::steady_clock::now()) {
    live_.seed = opts.seed;
  }

  ExploreResult run() {
    for (const auto &e : entry_events(app_))
      push_partial(e, kBootState);
    while (!q_.empty() || !l_.empty()) {
      while (!q_.empty()) {
        if (out_of_budget())
          return finish();
        int i = pick_best_candidate(q_);
        SequenceCandidate c = std::move(q_[static_cast<size_t>(i)]);
        q_.erase(q_.begin() + i);
        apply(c);
      }
      if (l_.empty())
        break;
      ++res_.stats.iterations;
      solve_next();
    }
    return finish();
  }

private:
  const App &app_;
  const std::vector<Target> &targets_;
  const ExploreOptions &opts_;
  std::chrono::steady_clock::time_point start_;

  ExploreResult res_;
  std::vector<SequenceCandidate> q_;
  std::vector<QueueLEntry> l_;
  std::set<std::pair<std::string, std::string>> queued_;
  /// (source, summary) -> (entry, complete candidates still to run).
  std::map<std::pair<std::string, std::string>, std::pair<QueueLEntry, int>> pending_;
  int64_t next_insert_ = 0;
  SymCache cache_;
  std::map<MethodSig, PathSet> paths_;

  RuntimeState live_;
  bool live_valid_ = false;
  EventSequence live_seq_;

  GuiModel &model() { return res_.model; }

  bool out_of_budget() {
    if (opts_.max_events > 0 && res_.stats.events_applied >= opts_.max_events)
      res_.stats.budget_exhausted = true;
    if (opts_.max_seconds > 0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count() >
            opts_.max_seconds)
      res_.stats.budget_exhausted = true;
    return res_.stats.budget_exhausted;
  }

  ExploreResult finish() {
    res_.targets = targets_;
    res_.coverage = coverage(app_, res_.covered_blocks, targets_);
    return std::move(res_);
  }

  void push_partial(const Event &e, const std::string &source) {
    SequenceCandidate c;
    c.events = {e};
    c.partial = true;
    c.source_state = source;
    c.insertion_index = next_insert_++;
    c.priority = priority_event_seq(c, targets_, app_, model(), opts_.call_depth);
    q_.push_back(std::move(c));
  }

  void push_complete(const EventSequence &seq, const QueueLEntry &goal) {
    SequenceCandidate c;
    c.events = seq;
    c.partial = false;
    c.source_state = goal.source;
    c.goal_summary = goal.summary;
    c.insertion_index = next_insert_++;
    c.priority = priority_event_seq(c, targets_, app_, model(), opts_.call_depth);
    q_.push_back(std::move(c));
  }

  const PathSet &paths_of(const MethodSig &sig) {
    auto it = paths_.find(sig);
    if (it == paths_.end()) {
      it = paths_
               .emplace(sig, enumerate_paths(build_ipcfg(sig, app_, opts_.call_depth),
                                             opts_.loop_bound, opts_.max_paths))
               .first;
      auto &ids = model().lambda[sig];
      for (const auto &p : it->second.paths)
        ids.push_back(p.id());
    }
    return it->second;
  }

  bool has_transition_from(const std::string &src, const std::string &summary) const {
    for (const auto &t : res_.model.transitions)
      if (t.src == src && t.summary == summary)
        return true;
    return false;
  }

  int note_blocks(const std::set<std::pair<MethodSig, int>> &blocks,
                  const EventSequence &seq) {
    int before = coverage(app_, res_.covered_blocks).covered;
    res_.covered_blocks.insert(blocks.begin(), blocks.end());
    for (const auto &t : targets_) {
      bool known = std::any_of(res_.hits.begin(), res_.hits.end(),
                               [&](const TargetHit &h) { return h.target == t; });
      if (!known && target_covered(app_, t, blocks))
        res_.hits.push_back({t, seq, res_.stats.iterations});
    }
    return coverage(app_, res_.covered_blocks).covered - before;
  }

  void fail(HistoryRecord h, const std::string &why) {
    h.error = why;
    ++res_.stats.application_failures;
    live_valid_ = false;
    res_.history.push_back(std::move(h));
  }

  bool at_state(const std::string &state) const {
    return live_valid_ && layout_equivalent(canonical_layout(app_, live_),
                                            res_.model.states.at(state).canonical);
  }

  // Fresh replay of `seq`; on a disabled event returns its index.
  std::optional<int> replay(const EventSequence &seq) {
    try {
      auto sr = apply_sequence(app_, seq, opts_.seed);
      res_.stats.events_applied += static_cast<int>(seq.size());
      note_blocks(sr.covered, seq);
      live_ = sr.state;
      live_seq_ = seq;
      live_valid_ = true;
      return std::nullopt;
    } catch (const EventNotEnabled &ex) {
      res_.stats.events_applied += std::max(ex.index(), 0) + 1;
      live_valid_ = false;
      return std::max(ex.index(), 0);
    }
  }

  // Brings the live device to `state`: the model route first, then the
  // state's recorded witness when the route does not get there.
  bool reach(const std::string &state, HistoryRecord &h) {
    if (at_state(state))
      return true;
    if (auto route = model().find_route(kBootState, state)) {
      EventSequence seq = model().route_events(*route);
      auto failed = replay(seq);
      if (!failed && at_state(state))
        return true;
      if (!route->empty()) {
        size_t edge = failed && static_cast<size_t>(*failed) < route->size()
                          ? (*route)[static_cast<size_t>(*failed)]
                          : route->back();
        ++model().transitions[edge].failures;
      }
    }
    const EventSequence &w = model().states.at(state).witness;
    if (!w.empty() && !replay(w) && at_state(state))
      return true;
    h.sequence = w;
    fail(h, "could not reach state " + state);
    return false;
  }

  void apply(const SequenceCandidate &c) {
    HistoryRecord h;
    h.partial = c.partial;
    h.source = c.source_state;
    if (!c.partial) {
      auto key = std::make_pair(c.source_state, c.goal_summary);
      if (has_transition_from(c.source_state, c.goal_summary)) {
        settle_pending(key);
        return;
      }
    }

    const Event &e = c.events.back();
    RuntimeState pre;
    EventResult r;
    EventSequence full;
    std::string src;
    std::set<std::pair<MethodSig, int>> blocks;
    if (c.partial) {
      if (e.is_entry()) {
        live_ = RuntimeState{};
        live_.seed = opts_.seed;
        live_seq_.clear();
        live_valid_ = true;
        src = kBootState;
      } else {
        if (!reach(c.source_state, h))
          return;
        src = c.source_state;
      }
      full = live_seq_;
      full.push_back(e);
      h.sequence = full;
      if (!is_enabled(app_, live_, e)) {
        fail(h, "event not enabled: " + e.descriptor());
        return;
      }
      pre = live_;
      r = apply_event(app_, live_, e);
      ++res_.stats.events_applied;
      auto b = blocks_entered(r.log);
      blocks.insert(b.begin(), b.end());
      ++res_.stats.partial_applied;
    } else {
      full = c.events;
      h.sequence = full;
      try {
        auto sr = apply_sequence(app_, full, opts_.seed);
        res_.stats.events_applied += static_cast<int>(full.size());
        pre = sr.pre_final;
        r = sr.last;
        live_ = sr.state;
        blocks = sr.covered;
      } catch (const EventNotEnabled &ex) {
        res_.stats.events_applied += std::max(ex.index(), 0) + 1;
        fail(h, ex.what());
        settle_pending({c.source_state, c.goal_summary});
        return;
      }
      live_seq_ = full;
      live_valid_ = true;
      ++res_.stats.complete_applied;
      if (e.is_entry()) {
        src = kBootState;
      } else {
        auto canon = canonical_layout(app_, pre);
        src = state_id_of(canon);
        EventSequence prefix(full.begin(), full.end() - 1);
        if (model().add_state(canon, pre.current_layout(), prefix))
          for (const auto &ev : extract_events(app_, pre))
            push_partial(ev, src);
      }
    }
    ++res_.stats.sequences_applied;
    h.source = src;
    h.handlers = r.handlers;
    h.log_digest = hex64(fnv1a64(r.log.to_text()));
    h.coverage_delta = note_blocks(blocks, full);
    if (r.trapped) {
      h.trapped = true;
      h.error = "trap: " + r.trap_reason;
      if (c.partial)
        live_seq_ = full, live_seq_.pop_back();
      res_.history.push_back(std::move(h));
      if (!c.partial)
        settle_pending({c.source_state, c.goal_summary});
      return;
    }
    if (c.partial)
      live_seq_ = full;

    auto roots = root_paths(app_, r, opts_.call_depth);
    EventSummary s;
    s.event = e;
    s.activity = e.is_entry() ? e.target : pre.current_activity();
    s.source = src;
    if (!roots.empty())
      s.path = roots[0].path;
    s.id = summary_id_of(e, s.path);
    auto upd = model().update(s, src, canonical_layout(app_, live_), live_.current_layout(),
                              full, roots);
    h.dst = upd.dst;
    res_.history.push_back(std::move(h));
    if (upd.new_transition)
      ++res_.stats.summaries_concretized;
    if (upd.new_state)
      for (const auto &ev : extract_events(app_, live_))
        push_partial(ev, upd.dst);

    // Entries in L for (src, s) are now covered.
    std::erase_if(l_, [&](const QueueLEntry &q) {
      return q.source == src && q.summary == s.id;
    });
    if (!roots.empty())
      for (const auto &p : symbolic_paths(roots[0].path, paths_of(roots[0].sig))) {
        EventSummary sym = s;
        sym.path = p;
        sym.id = summary_id_of(e, p);
        model().add_symbolic(sym);
        if (has_transition_from(src, sym.id) || !queued_.insert({src, sym.id}).second)
          continue;
        QueueLEntry q;
        q.summary = sym.id;
        q.source = src;
        q.insertion_index = next_insert_++;
        q.priority = priority_summary(sym, targets_, app_, q.insertion_index);
        l_.push_back(std::move(q));
      }
    if (!c.partial)
      settle_pending({c.source_state, c.goal_summary});
  }

  // One complete candidate of a solved entry has run (or was skipped).
  void settle_pending(const std::pair<std::string, std::string> &key) {
    auto it = pending_.find(key);
    if (it == pending_.end())
      return;
    if (--it->second.second > 0 && !has_transition_from(key.first, key.second))
      return;
    QueueLEntry entry = it->second.first;
    pending_.erase(it);
    if (has_transition_from(key.first, key.second))
      return;
    if (penalize(entry, res_.stats.iterations, opts_.penalty_window, opts_.max_attempts))
      res_.retired.push_back({entry.summary, entry.source, entry.attempts,
                              "generated sequences did not reproduce the path"});
    else
      l_.push_back(entry);
  }

  void solve_next() {
    int i = pick_best_summary(l_, res_.stats.iterations);
    if (i < 0) {
      int next = l_.front().penalty_until;
      for (const auto &e : l_)
        next = std::min(next, e.penalty_until);
      res_.stats.iterations = next;
      i = pick_best_summary(l_, res_.stats.iterations);
    }
    QueueLEntry entry = l_[static_cast<size_t>(i)];
    l_.erase(l_.begin() + i);
    EventSummary sigma = model().summaries.at(entry.summary);
    sigma.source = entry.source;
    sigma.activity = activity_in(model(), entry.source, sigma.event);
    ++res_.stats.solve_calls;
    ++model().summaries.at(entry.summary).solve_attempts;
    SolveOutcome out = solve_summary(model(), sigma, app_, cache_, opts_.solver);
    if (!out.candidates.empty()) {
      ++res_.stats.solved;
      pending_[{entry.source, entry.summary}] = {entry,
                                                static_cast<int>(out.candidates.size())};
      for (const auto &seq : out.candidates)
        push_complete(seq, entry);
      return;
    }
    res_.stats.unknown += out.unknown;
    if (penalize(entry, res_.stats.iterations, opts_.penalty_window, opts_.max_attempts))
      res_.retired.push_back({entry.summary, entry.source, entry.attempts, out.reason});
    else
      l_.push_back(entry);
  }
};

} // namespace

json ExploreResult::report_json(const App &app) const {
  json j;
  j["schema"] = kReportSchema;
  j["app"] = app.name;
  j["coverage"] = coverage.to_json();
  j["targets"] = hits_json(targets, hits);
  j["queues"] = {{"iterations", stats.iterations},
                 {"sequences_applied", stats.sequences_applied},
                 {"partial_applied", stats.partial_applied},
                 {"complete_applied", stats.complete_applied},
                 {"events_applied", stats.events_applied},
                 {"application_failures", stats.application_failures},
                 {"solve_calls", stats.solve_calls},
                 {"solved", stats.solved},
                 {"unknown", stats.unknown},
                 {"budget_exhausted", stats.budget_exhausted}};
  json ret = json::array();
  for (const auto &r : retired)
    ret.push_back({{"summary", r.summary},
                   {"source", r.source},
                   {"attempts", r.attempts},
                   {"reason", r.reason}});
  j["retired"] = ret;
  int concrete = 0, symbolic = 0;
  for (const auto &[id, s] : model.summaries)
    (s.concrete() ? concrete : symbolic) += 1;
  j["model"] = {{"states", model.states.size()},
                {"transitions", model.transitions.size()},
                {"concrete_summaries", concrete},
                {"symbolic_summaries", symbolic}};
  return j;
}

ExploreResult explore(const App &app, const std::vector<Target> &targets,
                      const ExploreOptions &opts) {
  return Driver(app, targets, opts).run();
}

json RandomResult::report_json(const App &app) const {
  json j;
  j["schema"] = kReportSchema;
  j["app"] = app.name;
  j["mode"] = "baseline-random";
  j["coverage"] = coverage.to_json();
  j["targets"] = hits_json(targets, hits);
  j["events_applied"] = events_applied;
  j["restarts"] = restarts;
  return j;
}

RandomResult baseline_random(const App &app, const std::vector<Target> &targets,
                             int event_budget, uint64_t seed) {
  RandomResult res;
  std::mt19937_64 rng(seed);
  auto b = boot(app, seed);
  RuntimeState st = b.state;
  EventSequence seq{Event::launch(app.manifest.main_activity)};
  auto note = [&](const ExecLog &log) {
    auto blocks = blocks_entered(log);
    res.covered_blocks.insert(blocks.begin(), blocks.end());
    for (const auto &t : targets) {
      bool known = std::any_of(res.hits.begin(), res.hits.end(),
                               [&](const TargetHit &h) { return h.target == t; });
      if (!known && target_covered(app, t, blocks))
        res.hits.push_back({t, seq, res.events_applied});
    }
  };
  note(b.result.log);
  auto entries = entry_events(app);
  while (res.events_applied < event_budget) {
    if (st.crashed) {
      auto nb = boot(app, seed);
      st = nb.state;
      seq = {Event::launch(app.manifest.main_activity)};
      ++res.restarts;
      note(nb.result.log);
      continue;
    }
    std::vector<Event> evs = extract_events(app, st);
    evs.insert(evs.end(), entries.begin(), entries.end());
    Event e = evs[std::uniform_int_distribution<size_t>(0, evs.size() - 1)(rng)];
    ++res.events_applied;
    if (!is_enabled(app, st, e))
      continue;
    if (e.is_entry())
      seq.clear();
    seq.push_back(e);
    auto r = apply_event(app, st, e);
    note(r.log);
    if (r.trapped)
      seq.pop_back();
  }
  res.targets = targets;
  res.coverage = coverage(app, res.covered_blocks, targets);
  return res;
}

} // namespace apex
