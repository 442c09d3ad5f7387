#include "apex/gui_model.h"

#include <algorithm>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "apex/hash.h"

namespace apex {

using nlohmann::json;

CanonicalLayout canonical_layout(const App &app, const RuntimeState &state) {
  (void)app;
  CanonicalLayout c;
  if (!state.booted() || state.crashed)
    return c;
  for (const auto &w : state.current_layout().widgets) {
    for (const auto &[kind, sig] : w.bindings) {
      if (kind == HandlerKind::Click)
        c.insert({Event::tap(w.id).descriptor(), sig});
      else if (kind == HandlerKind::LongClick)
        c.insert({Event::long_tap(w.id).descriptor(), sig});
    }
    if (w.kind == WidgetKind::TextField) {
      auto it = w.bindings.find(HandlerKind::Text);
      c.insert({Event::text_input(w.id, "").descriptor(),
                it == w.bindings.end() ? "" : it->second});
    }
  }
  for (const auto &r : state.receivers)
    c.insert({Event::broadcast(r.action).descriptor(), r.handler});
  return c;
}

bool layout_equivalent(const CanonicalLayout &a, const CanonicalLayout &b) {
  return a == b;
}

std::string state_id_of(const CanonicalLayout &c) {
  std::string text;
  for (const auto &[d, h] : c)
    text += d + "\t" + h + "\n";
  return "s" + hex64(fnv1a64(text)).substr(0, 12);
}

std::string summary_id_of(const Event &e, const Path &p) {
  return "e" + hex64(fnv1a64(e.descriptor() + "|" + p.to_string())).substr(0, 12);
}

UpdateResult GuiModel::update(const EventSummary &summary,
                              const std::string &src,
                              const CanonicalLayout &observed,
                              const ConcreteLayout &representative,
                              const EventSequence &witness,
                              const std::vector<RootPath> &roots) {
  UpdateResult r;
  r.dst = state_id_of(observed);
  r.new_state = add_state(observed, representative, witness);
  auto it = states.find(r.dst);
  if (src == kBootState)
    it->second.initial = true;

  auto sit = summaries.find(summary.id);
  if (sit == summaries.end()) {
    EventSummary s = summary;
    s.status = SummaryStatus::Concrete;
    if (s.source.empty())
      s.source = src;
    summaries.emplace(s.id, s);
  } else {
    sit->second.status = SummaryStatus::Concrete;
  }

  if (!find_transition(src, summary.id, r.dst)) {
    transitions.push_back({src, summary.id, r.dst, witness, roots, 0});
    r.new_transition = true;
  }
  return r;
}

bool GuiModel::add_state(const CanonicalLayout &observed,
                         const ConcreteLayout &representative,
                         const EventSequence &witness) {
  std::string id = state_id_of(observed);
  auto it = states.find(id);
  if (it != states.end()) {
    if (witness.size() < it->second.witness.size())
      it->second.witness = witness;
    return false;
  }
  GuiState s;
  s.id = id;
  s.canonical = observed;
  s.representative = representative;
  s.witness = witness;
  states.emplace(id, std::move(s));
  for (const auto &[desc, handler] : observed) {
    auto &hs = theta[{id, desc}];
    if (!handler.empty() && std::find(hs.begin(), hs.end(), handler) == hs.end())
      hs.push_back(handler);
  }
  return true;
}

std::vector<RootPath> root_paths(const App &app, const EventResult &r,
                                 int call_depth_bound) {
  std::vector<RootPath> roots;
  auto logs = split_roots(r.log);
  for (size_t i = 0; i < logs.size() && i < r.roots.size(); ++i)
    roots.push_back({r.roots[i].sig, r.roots[i].activity,
                     executed_path(logs[i],
                                   build_ipcfg(r.roots[i].sig, app, call_depth_bound))});
  return roots;
}

const EventSummary &GuiModel::add_symbolic(const EventSummary &s) {
  auto it = summaries.find(s.id);
  if (it == summaries.end()) {
    EventSummary copy = s;
    copy.status = SummaryStatus::Symbolic;
    it = summaries.emplace(copy.id, copy).first;
  }
  return it->second;
}

const EventSummary *GuiModel::summary(const std::string &id) const {
  auto it = summaries.find(id);
  return it == summaries.end() ? nullptr : &it->second;
}

std::vector<const Transition *>
GuiModel::transitions_of(const std::string &summary_id) const {
  std::vector<const Transition *> out;
  for (const auto &t : transitions)
    if (t.summary == summary_id)
      out.push_back(&t);
  return out;
}

Transition *GuiModel::find_transition(const std::string &src,
                                      const std::string &summary,
                                      const std::string &dst) {
  for (auto &t : transitions)
    if (t.src == src && t.summary == summary && t.dst == dst)
      return &t;
  return nullptr;
}

std::optional<std::vector<size_t>>
GuiModel::find_route(const std::string &from, const std::string &to) const {
  if (from == to)
    return std::vector<size_t>{};
  // Outgoing edges sorted by (summary, dst) so relaxation order is fixed.
  std::map<std::string, std::vector<size_t>> out;
  for (size_t i = 0; i < transitions.size(); ++i)
    out[transitions[i].src].push_back(i);
  for (auto &[_, v] : out)
    std::sort(v.begin(), v.end(), [&](size_t a, size_t b) {
      return std::tie(transitions[a].summary, transitions[a].dst) <
             std::tie(transitions[b].summary, transitions[b].dst);
    });
  std::map<std::string, long> dist;
  std::map<std::string, size_t> via;
  using Item = std::pair<long, std::string>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[from] = 0;
  pq.push({0, from});
  std::set<std::string> done;
  while (!pq.empty()) {
    auto [d, s] = pq.top();
    pq.pop();
    if (!done.insert(s).second)
      continue;
    if (s == to)
      break;
    for (size_t ti : out[s]) {
      const Transition &t = transitions[ti];
      if (t.dst == kBootState)
        continue;
      long nd = d + 1 + t.failures;
      auto it = dist.find(t.dst);
      if (it == dist.end() || nd < it->second) {
        dist[t.dst] = nd;
        via[t.dst] = ti;
        pq.push({nd, t.dst});
      }
    }
  }
  if (!done.count(to))
    return std::nullopt;
  std::vector<size_t> route;
  for (std::string cur = to; cur != from;) {
    size_t ti = via.at(cur);
    route.push_back(ti);
    cur = transitions[ti].src;
  }
  std::reverse(route.begin(), route.end());
  return route;
}

EventSequence GuiModel::route_events(const std::vector<size_t> &route) const {
  EventSequence seq;
  for (size_t ti : route)
    seq.push_back(transitions[ti].witness.back());
  return seq;
}

std::optional<EventSequence> GuiModel::find_path(const std::string &goal) const {
  if (!states.count(goal))
    return std::nullopt;
  auto r = find_route(kBootState, goal);
  if (!r)
    return std::nullopt;
  return route_events(*r);
}

json path_to_json(const Path &p) {
  json stmts = json::array();
  for (const auto &s : p.stmts)
    stmts.push_back({s.method, s.index});
  return {{"root", p.root}, {"stmts", stmts}};
}

Path path_from_json(const json &j) {
  Path p;
  p.root = j.at("root").get<std::string>();
  for (const auto &s : j.at("stmts"))
    p.stmts.push_back({s.at(0).get<std::string>(), s.at(1).get<int>()});
  return p;
}

json layout_to_json(const ConcreteLayout &l) {
  json widgets = json::array();
  for (const auto &w : l.widgets) {
    json b = json::object();
    for (const auto &[k, sig] : w.bindings)
      b[handler_kind_name(k)] = sig;
    widgets.push_back({{"id", w.id},
                       {"kind", widget_kind_name(w.kind)},
                       {"bindings", b},
                       {"text", w.text}});
  }
  return {{"activity", l.activity}, {"widgets", widgets}};
}

ConcreteLayout layout_from_json(const json &j) {
  ConcreteLayout l;
  l.activity = j.at("activity").get<std::string>();
  for (const auto &w : j.at("widgets")) {
    WidgetState ws;
    ws.id = w.at("id").get<std::string>();
    std::string kind = w.at("kind").get<std::string>();
    for (WidgetKind k :
         {WidgetKind::Button, WidgetKind::TextField, WidgetKind::ListItem})
      if (kind == widget_kind_name(k))
        ws.kind = k;
    for (auto &[k, sig] : w.at("bindings").items())
      for (HandlerKind hk :
           {HandlerKind::Click, HandlerKind::LongClick, HandlerKind::Text})
        if (k == handler_kind_name(hk))
          ws.bindings[hk] = sig.get<std::string>();
    ws.text = w.at("text").get<std::string>();
    l.widgets.push_back(std::move(ws));
  }
  return l;
}

json sequence_to_json(const EventSequence &seq) {
  json a = json::array();
  for (const auto &e : seq)
    a.push_back(e.to_line());
  return a;
}

EventSequence sequence_from_json(const json &j) {
  EventSequence seq;
  for (const auto &line : j)
    seq.push_back(Event::from_line(line.get<std::string>()));
  return seq;
}

json GuiModel::to_json() const {
  json st = json::array();
  for (const auto &[id, s] : states) {
    json canon = json::array();
    for (const auto &[d, h] : s.canonical)
      canon.push_back({d, h});
    st.push_back({{"id", id},
                   {"initial", s.initial},
                   {"canonical", canon},
                   {"layout", layout_to_json(s.representative)},
                   {"witness", sequence_to_json(s.witness)}});
  }
  json sums = json::array();
  for (const auto &[id, s] : summaries)
    sums.push_back({{"id", id},
                    {"event", s.event.to_line()},
                    {"descriptor", s.event.descriptor()},
                    {"activity", s.activity},
                    {"source", s.source},
                    {"path", path_to_json(s.path)},
                    {"status", s.concrete() ? "concrete" : "symbolic"},
                    {"solve_attempts", s.solve_attempts}});
  json trans = json::array();
  for (const auto &t : transitions) {
    json roots = json::array();
    for (const auto &r : t.roots)
      roots.push_back({{"sig", r.sig},
                       {"activity", r.activity},
                       {"path", path_to_json(r.path)}});
    trans.push_back({{"src", t.src},
                     {"summary", t.summary},
                     {"dst", t.dst},
                     {"witness", sequence_to_json(t.witness)},
                     {"roots", roots},
                     {"failures", t.failures}});
  }
  json th = json::array();
  for (const auto &[key, hs] : theta)
    th.push_back({{"state", key.first}, {"event", key.second}, {"handlers", hs}});
  json lam = json::object();
  for (const auto &[sig, ids] : lambda)
    lam[sig] = ids;
  return {{"schema", kModelSchema},
          {"states", st},
          {"summaries", sums},
          {"transitions", trans},
          {"theta", th},
          {"lambda", lam}};
}

GuiModel GuiModel::from_json(const json &j) {
  if (j.value("schema", "") != kModelSchema)
    throw std::invalid_argument("not a " + std::string(kModelSchema) +
                                " document");
  GuiModel m;
  for (const auto &s : j.at("states")) {
    GuiState g;
    g.id = s.at("id").get<std::string>();
    g.initial = s.at("initial").get<bool>();
    for (const auto &p : s.at("canonical"))
      g.canonical.insert({p.at(0).get<std::string>(), p.at(1).get<std::string>()});
    g.representative = layout_from_json(s.at("layout"));
    g.witness = sequence_from_json(s.at("witness"));
    m.states.emplace(g.id, std::move(g));
  }
  for (const auto &s : j.at("summaries")) {
    EventSummary e;
    e.id = s.at("id").get<std::string>();
    e.event = Event::from_line(s.at("event").get<std::string>());
    e.activity = s.at("activity").get<std::string>();
    e.source = s.at("source").get<std::string>();
    e.path = path_from_json(s.at("path"));
    e.status = s.at("status") == "concrete" ? SummaryStatus::Concrete
                                            : SummaryStatus::Symbolic;
    e.solve_attempts = s.at("solve_attempts").get<int>();
    m.summaries.emplace(e.id, std::move(e));
  }
  for (const auto &t : j.at("transitions")) {
    Transition tr;
    tr.src = t.at("src").get<std::string>();
    tr.summary = t.at("summary").get<std::string>();
    tr.dst = t.at("dst").get<std::string>();
    tr.witness = sequence_from_json(t.at("witness"));
    for (const auto &r : t.at("roots"))
      tr.roots.push_back({r.at("sig").get<std::string>(),
                          r.at("activity").get<std::string>(),
                          path_from_json(r.at("path"))});
    tr.failures = t.at("failures").get<int>();
    m.transitions.push_back(std::move(tr));
  }
  for (const auto &t : j.at("theta"))
    m.theta[{t.at("state").get<std::string>(), t.at("event").get<std::string>()}] =
        t.at("handlers").get<std::vector<std::string>>();
  for (auto &[sig, ids] : j.at("lambda").items())
    m.lambda[sig] = ids.get<std::vector<std::string>>();
  return m;
}

std::string GuiModel::to_dot() const {
  std::ostringstream o;
  o << "digraph model {\n  rankdir=LR;\n";
  for (const auto &[id, s] : states)
    o << "  " << id << " [label=\"" << id << "\\n"
      << s.representative.activity << "\""
      << (s.initial ? ",shape=doublecircle" : ",shape=circle") << "];\n";
  for (const auto &t : transitions) {
    if (t.src == kBootState)
      continue;
    const EventSummary &s = summaries.at(t.summary);
    o << "  " << t.src << " -> " << t.dst << " [label=\""
      << s.event.descriptor() << "/" << s.path.id().substr(0, 8) << "\"];\n";
  }
  o << "}\n";
  return o.str();
}

} // namespace apex
