#include "apex/runtime.h"

#include <algorithm>
#include <random>
#include <sstream>

#include "apex/hash.h"

namespace apex {

namespace {

constexpr int kMaxCallDepth = 64;
constexpr long kMaxSteps = 1000000;
constexpr int kMaxTransitions = 32;

struct Trap {
  std::string reason;
};

[[noreturn]] void trap(std::string reason) { throw Trap{std::move(reason)}; }

struct Transition {
  bool finish = false;
  ActivityId target;
};

class Interp {
public:
  Interp(const App &app, RuntimeState &st, EventResult &res)
      : app_(app), st_(st), res_(res) {}

  void run_root(const MethodSig &sig, const std::vector<Value> &args) {
    res_.roots.push_back({sig, st_.current_activity()});
    site_counts_.clear();
    call(sig, args, 0);
  }

  void settle_transitions() {
    int n = 0;
    while (!pending_.empty()) {
      if (++n > kMaxTransitions)
        trap("transition limit exceeded");
      Transition t = pending_.front();
      pending_.erase(pending_.begin());
      if (t.finish) {
        if (st_.stack.size() <= 1)
          continue;
        run_lifecycle(st_.top().id, &Activity::on_pause);
        run_lifecycle(st_.top().id, &Activity::on_stop);
        st_.stack.pop_back();
      } else {
        const Activity *dst = app_.activity(t.target);
        if (!dst)
          trap("startActivity: unknown activity '" + t.target + "'");
        run_lifecycle(st_.top().id, &Activity::on_pause);
        run_lifecycle(st_.top().id, &Activity::on_stop);
        st_.stack.push_back({dst->id, instantiate_layout(*dst), {}});
        run_lifecycle(dst->id, &Activity::on_create);
      }
    }
  }

  void run_lifecycle(const ActivityId &id,
                     std::optional<MethodSig> Activity::*slot) {
    const Activity *act = app_.activity(id);
    if (act && (act->*slot))
      run_root(*(act->*slot), {});
  }

private:
  void log(LogKind k, const MethodSig &sig, int block = -1,
           std::string detail = {}) {
    res_.log.entries.push_back({k, sig, block, std::move(detail)});
  }

  const std::string &str_arg(const Value &v, const char *api) {
    if (!v.is_str())
      trap(std::string(api) + ": expected a string argument");
    return v.as_str();
  }

  WidgetState &widget_arg(const Value &v, const char *api) {
    WidgetState *w = st_.stack.back().layout.find(str_arg(v, api));
    if (!w)
      trap(std::string(api) + ": no widget '" + v.as_str() + "'");
    return *w;
  }

  Object &object_at(const Value &v) {
    if (!v.is_ref())
      trap("null or non-object reference");
    auto it = st_.heap.objects.find(v.as_ref().id);
    if (it == st_.heap.objects.end())
      trap("dangling reference");
    return it->second;
  }

  std::string array_slot(Object &arr, const Value &idx) {
    if (arr.length < 0)
      trap("array access on non-array object");
    if (!idx.is_numeric() || idx.numeric() < 0 || idx.numeric() >= arr.length)
      trap("array index out of bounds");
    return std::to_string(idx.numeric());
  }

  std::optional<Value> call_api(const Instr &ins, const std::vector<Value> &a,
                                const MethodSig &sig, int pc) {
    const std::string &n = ins.name;
    if (n == "ui.startActivity") {
      pending_.push_back({false, str_arg(a[0], "ui.startActivity")});
      return std::nullopt;
    }
    if (n == "ui.finish") {
      pending_.push_back({true, {}});
      return std::nullopt;
    }
    if (n == "ui.setHandler") {
      WidgetState &w = widget_arg(a[0], "ui.setHandler");
      const std::string &target = str_arg(a[1], "ui.setHandler");
      if (!app_.method(target))
        trap("ui.setHandler: unknown method '" + target + "'");
      w.bindings[HandlerKind::Click] = target;
      return std::nullopt;
    }
    if (n == "ui.setText") {
      WidgetState &w = widget_arg(a[0], "ui.setText");
      w.text = str_arg(a[1], "ui.setText");
      return std::nullopt;
    }
    if (n == "ui.getText")
      return Value::of_str(widget_arg(a[0], "ui.getText").text);
    if (n == "sys.registerReceiver") {
      Receiver r{str_arg(a[0], "sys.registerReceiver"),
                 str_arg(a[1], "sys.registerReceiver")};
      if (!app_.method(r.handler))
        trap("sys.registerReceiver: unknown method '" + r.handler + "'");
      log(LogKind::ReceiverRegistered, r.handler, -1, r.action);
      if (std::find(st_.receivers.begin(), st_.receivers.end(), r) ==
          st_.receivers.end())
        st_.receivers.push_back(r);
      return std::nullopt;
    }
    if (n == "intent.getExtra") {
      const auto &extras = st_.top().extras;
      auto it = extras.find(str_arg(a[0], "intent.getExtra"));
      return Value::of_str(it == extras.end() ? "" : it->second);
    }
    if (n == "str.equals")
      return Value::of_bool(str_arg(a[0], "str.equals") ==
                            str_arg(a[1], "str.equals"));
    if (n == "str.length")
      return Value::of_int(
          static_cast<int64_t>(str_arg(a[0], "str.length").size()));
    if (n == "str.concat")
      return Value::of_str(str_arg(a[0], "str.concat") +
                           str_arg(a[1], "str.concat"));
    // Unmodeled: deterministic concrete value, recorded per call site.
    std::string base = n + "@" + sig + ":" + std::to_string(pc);
    int occurrence = site_counts_[base]++;
    Value v = Value::of_int(0);
    res_.api_returns.push_back({base + "#" + std::to_string(occurrence), v});
    return v;
  }

  std::optional<Value> call(const MethodSig &sig, const std::vector<Value> &args,
                            int depth) {
    if (depth >= kMaxCallDepth)
      trap("call depth exceeded");
    const Method &m = app_.method_at(sig);
    std::vector<Value> regs(static_cast<size_t>(std::max(m.register_count, 1)));
    for (size_t i = 0; i < args.size() && i < regs.size(); ++i)
      regs[i] = args[i];
    std::optional<Value> last;
    log(LogKind::MethodStart, sig);
    size_t leader = 0;
    int pc = 0;
    auto at = [&](int r) -> Value & { return regs.at(static_cast<size_t>(r)); };
    for (;;) {
      if (++steps_ > kMaxSteps)
        trap("step limit exceeded");
      if (pc < 0 || pc >= static_cast<int>(m.body.size()))
        trap("pc out of range");
      leader = static_cast<size_t>(m.block_of(pc));
      if (m.leaders[leader] == pc)
        log(LogKind::BlockEnter, sig, static_cast<int>(leader));
      const Instr &ins = m.body[static_cast<size_t>(pc)];
      int next = pc + 1;
      switch (ins.op) {
      case Opcode::Const:
        at(ins.dst) = *ins.imm;
        break;
      case Opcode::Move:
        at(ins.dst) = at(ins.a);
        break;
      case Opcode::BinOp: {
        auto v = apply_arith(ins.arith, at(ins.a), at(ins.b));
        if (!v)
          trap(ins.arith == ArithOp::Div ? "division by zero or bad operand"
                                         : "arithmetic on non-numeric value");
        at(ins.dst) = *v;
        break;
      }
      case Opcode::If: {
        auto c = apply_cmp(ins.cmp, at(ins.a), ins.imm ? *ins.imm : at(ins.b));
        if (!c)
          trap("ordering comparison on non-numeric value");
        if (*c)
          next = ins.target;
        break;
      }
      case Opcode::Goto:
        next = ins.target;
        break;
      case Opcode::SGet:
        at(ins.dst) = st_.heap.static_value(ins.name);
        break;
      case Opcode::SPut:
        st_.heap.statics[ins.name] = at(ins.a);
        break;
      case Opcode::IGet: {
        Object &o = object_at(at(ins.b));
        auto it = o.fields.find(ins.name);
        at(ins.dst) = it == o.fields.end() ? Value::of_int(0) : it->second;
        break;
      }
      case Opcode::IPut:
        object_at(at(ins.b)).fields[ins.name] = at(ins.a);
        break;
      case Opcode::New: {
        Object o;
        o.cls = ins.name;
        if (!ins.name.empty() && ins.name.front() == '[')
          o.length = std::stoll(ins.name.substr(1, ins.name.size() - 2));
        int64_t id = st_.heap.next_object++;
        st_.heap.objects[id] = std::move(o);
        at(ins.dst) = Value::of_ref({id});
        break;
      }
      case Opcode::AGet: {
        Object &arr = object_at(at(ins.b));
        auto it = arr.fields.find(array_slot(arr, at(ins.c)));
        at(ins.dst) = it == arr.fields.end() ? Value::of_int(0) : it->second;
        break;
      }
      case Opcode::APut: {
        Object &arr = object_at(at(ins.b));
        arr.fields[array_slot(arr, at(ins.c))] = at(ins.a);
        break;
      }
      case Opcode::Invoke:
      case Opcode::Api: {
        std::vector<Value> a;
        for (int r : ins.args)
          a.push_back(at(r));
        last = ins.op == Opcode::Invoke ? call(ins.name, a, depth + 1)
                                        : call_api(ins, a, sig, pc);
        break;
      }
      case Opcode::MoveResult:
        at(ins.dst) = last.value_or(Value::of_int(0));
        break;
      case Opcode::Return: {
        log(LogKind::MethodReturn, sig);
        if (ins.a >= 0)
          return at(ins.a);
        return std::nullopt;
      }
      }
      if (ins.op != Opcode::Invoke && ins.op != Opcode::Api)
        last.reset();
      pc = next;
    }
  }

  const App &app_;
  RuntimeState &st_;
  EventResult &res_;
  std::vector<Transition> pending_;
  std::map<std::string, int> site_counts_;
  long steps_ = 0;
};

const char *log_tag(LogKind k) {
  switch (k) {
  case LogKind::MethodStart: return "S";
  case LogKind::MethodReturn: return "R";
  case LogKind::BlockEnter: return "B";
  case LogKind::ReceiverRegistered: return "REG";
  case LogKind::Trap: return "T";
  }
  return "?";
}

std::vector<Value> handler_args(const App &app, const MethodSig &sig,
                                const std::string &arg) {
  if (app.method_at(sig).param_count >= 1)
    return {Value::of_str(arg)};
  return {};
}

} // namespace

const WidgetState *ConcreteLayout::find(std::string_view id) const {
  for (const auto &w : widgets)
    if (w.id == id)
      return &w;
  return nullptr;
}

WidgetState *ConcreteLayout::find(std::string_view id) {
  for (auto &w : widgets)
    if (w.id == id)
      return &w;
  return nullptr;
}

ConcreteLayout instantiate_layout(const Activity &act) {
  ConcreteLayout l;
  l.activity = act.id;
  for (const auto &w : act.layout.widgets)
    l.widgets.push_back({w.id, w.kind, w.bindings, w.initial_text});
  return l;
}

Value Heap::static_value(const std::string &field) const {
  auto it = statics.find(field);
  return it == statics.end() ? Value::of_int(0) : it->second;
}

std::string ExecLog::to_text() const {
  std::string out;
  for (const auto &e : entries) {
    out += log_tag(e.kind);
    switch (e.kind) {
    case LogKind::MethodStart:
    case LogKind::MethodReturn:
      out += " " + e.sig;
      break;
    case LogKind::BlockEnter:
      out += " " + e.sig + " " + std::to_string(e.block);
      break;
    case LogKind::ReceiverRegistered:
      out += " " + e.detail + " " + e.sig;
      break;
    case LogKind::Trap:
      out += " " + e.detail;
      break;
    }
    out += "\n";
  }
  return out;
}

ExecLog ExecLog::from_text(const std::string &text) {
  ExecLog log;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty())
      continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    LogEntry e;
    bool ok = true;
    if (tag == "S" || tag == "R") {
      e.kind = tag == "S" ? LogKind::MethodStart : LogKind::MethodReturn;
      ok = static_cast<bool>(ls >> e.sig);
    } else if (tag == "B") {
      e.kind = LogKind::BlockEnter;
      ok = static_cast<bool>(ls >> e.sig >> e.block);
    } else if (tag == "REG") {
      e.kind = LogKind::ReceiverRegistered;
      ok = static_cast<bool>(ls >> e.detail >> e.sig);
    } else if (tag == "T") {
      e.kind = LogKind::Trap;
      std::getline(ls, e.detail);
      if (!e.detail.empty() && e.detail.front() == ' ')
        e.detail.erase(0, 1);
    } else {
      ok = false;
    }
    if (!ok)
      throw std::invalid_argument("bad log line " + std::to_string(no) + ": " +
                                  line);
    log.entries.push_back(std::move(e));
  }
  return log;
}

std::vector<MethodSig> event_handler_of(const ExecLog &log) {
  std::vector<MethodSig> roots;
  std::vector<MethodSig> stack;
  for (const auto &e : log.entries) {
    if (e.kind == LogKind::Trap)
      return roots; // frames left open by a trap are expected
    if (e.kind == LogKind::MethodStart) {
      if (stack.empty())
        roots.push_back(e.sig);
      stack.push_back(e.sig);
    } else if (e.kind == LogKind::MethodReturn) {
      if (stack.empty() || stack.back() != e.sig)
        throw IntegrityError("unbalanced log: unexpected return of " + e.sig);
      stack.pop_back();
    }
  }
  if (!stack.empty())
    throw IntegrityError("unbalanced log: " + stack.back() + " never returns");
  return roots;
}

std::set<std::pair<MethodSig, int>> blocks_entered(const ExecLog &log) {
  std::set<std::pair<MethodSig, int>> out;
  for (const auto &e : log.entries)
    if (e.kind == LogKind::BlockEnter)
      out.insert({e.sig, e.block});
  return out;
}

std::string random_text(uint64_t seed, const std::string &activity,
                        const std::string &widget) {
  std::mt19937_64 rng(seed ^ fnv1a64(activity + "." + widget));
  std::string s;
  for (int i = 0; i < 8; ++i)
    s += static_cast<char>('a' + rng() % 26);
  return s;
}

bool is_enabled(const App &app, const RuntimeState &state, const Event &e) {
  switch (e.kind) {
  case EventKind::Launch:
    return e.target == app.manifest.main_activity;
  case EventKind::Intent:
    for (const auto &f : app.manifest.intent_filters)
      if (f.activity == e.target && f.action == e.action)
        return true;
    return false;
  case EventKind::Tap:
  case EventKind::LongTap:
  case EventKind::TextInput: {
    if (!state.booted() || state.crashed)
      return false;
    const WidgetState *w = state.current_layout().find(e.target);
    if (!w)
      return false;
    if (e.kind == EventKind::TextInput)
      return w->kind == WidgetKind::TextField;
    return w->bindings.count(*handler_kind_for(e.kind)) > 0;
  }
  case EventKind::Back:
    return state.booted() && !state.crashed && state.stack.size() > 1;
  case EventKind::Broadcast:
    if (!state.booted() || state.crashed)
      return false;
    for (const auto &r : state.receivers)
      if (r.action == e.target)
        return true;
    return false;
  }
  return false;
}

EventResult apply_event(const App &app, RuntimeState &state, const Event &e) {
  if (!is_enabled(app, state, e))
    throw EventNotEnabled("event not enabled: " + e.descriptor());
  RuntimeState snapshot = state;
  EventResult res;
  Interp in(app, state, res);
  try {
    if (e.is_entry()) {
      uint64_t seed = state.seed;
      state = RuntimeState{};
      state.seed = seed;
      const Activity *act = app.activity(e.target);
      state.stack.push_back({act->id, instantiate_layout(*act), e.extras});
      in.run_lifecycle(act->id, &Activity::on_create);
    } else if (e.kind == EventKind::Back) {
      in.run_lifecycle(state.top().id, &Activity::on_pause);
      in.run_lifecycle(state.top().id, &Activity::on_stop);
      state.stack.pop_back();
    } else if (e.kind == EventKind::Broadcast) {
      std::vector<Receiver> targets;
      for (const auto &r : state.receivers)
        if (r.action == e.target)
          targets.push_back(r);
      for (const auto &r : targets) {
        in.run_root(r.handler, handler_args(app, r.handler, e.target));
        in.settle_transitions();
      }
    } else {
      WidgetState *w = state.stack.back().layout.find(e.target);
      if (e.kind == EventKind::TextInput)
        w->text = e.text ? *e.text
                         : random_text(state.seed, state.current_activity(),
                                       w->id);
      auto it = w->bindings.find(*handler_kind_for(e.kind));
      if (it != w->bindings.end()) {
        MethodSig sig = it->second;
        in.run_root(sig, handler_args(app, sig, e.target));
      }
    }
    in.settle_transitions();
  } catch (const Trap &t) {
    res.trapped = true;
    res.trap_reason = t.reason;
    res.log.entries.push_back({LogKind::Trap, {}, -1, t.reason});
    if (e.is_entry()) {
      // The app crashed while starting: keep the fresh activity, disable
      // everything but another entry event.
      uint64_t seed = snapshot.seed;
      state = RuntimeState{};
      state.seed = seed;
      const Activity *act = app.activity(e.target);
      state.stack.push_back({act->id, instantiate_layout(*act), e.extras});
      state.crashed = true;
    } else {
      state = std::move(snapshot);
    }
  }
  if (state.booted())
    res.layout = state.current_layout();
  res.handlers = event_handler_of(res.log);
  return res;
}

std::vector<Event> extract_events(const App &app, const RuntimeState &state) {
  std::vector<Event> out;
  if (!state.booted() || state.crashed)
    return out;
  const ConcreteLayout &l = state.current_layout();
  for (const auto &w : l.widgets) {
    if (w.bindings.count(HandlerKind::Click))
      out.push_back(Event::tap(w.id));
    if (w.bindings.count(HandlerKind::LongClick))
      out.push_back(Event::long_tap(w.id));
  }
  for (const auto &w : l.widgets)
    if (w.kind == WidgetKind::TextField)
      out.push_back(
          Event::text_input(w.id, random_text(state.seed, l.activity, w.id)));
  std::set<std::string> seen;
  for (const auto &r : state.receivers)
    if (seen.insert(r.action).second)
      out.push_back(Event::broadcast(r.action));
  (void)app;
  return out;
}

BootResult boot(const App &app, uint64_t seed) {
  BootResult b;
  b.state.seed = seed;
  b.result = apply_event(app, b.state, Event::launch(app.manifest.main_activity));
  return b;
}

SequenceResult apply_sequence_from(const App &app, RuntimeState start,
                                   const EventSequence &seq) {
  SequenceResult r;
  r.state = std::move(start);
  for (size_t i = 0; i < seq.size(); ++i) {
    if (i + 1 == seq.size())
      r.pre_final = r.state;
    try {
      r.last = apply_event(app, r.state, seq[i]);
    } catch (const EventNotEnabled &ex) {
      throw EventNotEnabled(ex.what(), static_cast<int>(i));
    }
    auto blocks = blocks_entered(r.last.log);
    r.covered.insert(blocks.begin(), blocks.end());
    r.applied = static_cast<int>(i) + 1;
  }
  return r;
}

SequenceResult apply_sequence(const App &app, const EventSequence &seq,
                              uint64_t seed) {
  if (seq.empty())
    throw EventNotEnabled("empty sequence", 0);
  if (!seq.front().is_entry())
    throw EventNotEnabled("sequence must start with an entry event", 0);
  RuntimeState fresh;
  fresh.seed = seed;
  return apply_sequence_from(app, std::move(fresh), seq);
}

} // namespace apex
