#include "apex/appir.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace apex {

const char *widget_kind_name(WidgetKind k) {
  switch (k) {
  case WidgetKind::Button: return "button";
  case WidgetKind::TextField: return "textfield";
  case WidgetKind::ListItem: return "listitem";
  }
  return "?";
}

const char *handler_kind_name(HandlerKind k) {
  switch (k) {
  case HandlerKind::Click: return "click";
  case HandlerKind::LongClick: return "longclick";
  case HandlerKind::Text: return "text";
  }
  return "?";
}

std::optional<HandlerKind> handler_kind_for(EventKind k) {
  switch (k) {
  case EventKind::Tap: return HandlerKind::Click;
  case EventKind::LongTap: return HandlerKind::LongClick;
  case EventKind::TextInput: return HandlerKind::Text;
  default: return std::nullopt;
  }
}

const char *opcode_name(Opcode op) {
  switch (op) {
  case Opcode::Const: return "const";
  case Opcode::Move: return "move";
  case Opcode::BinOp: return "binop";
  case Opcode::If: return "if";
  case Opcode::Goto: return "goto";
  case Opcode::SGet: return "sget";
  case Opcode::SPut: return "sput";
  case Opcode::IGet: return "iget";
  case Opcode::IPut: return "iput";
  case Opcode::New: return "new";
  case Opcode::AGet: return "aget";
  case Opcode::APut: return "aput";
  case Opcode::Invoke: return "invoke";
  case Opcode::MoveResult: return "move_result";
  case Opcode::Api: return "api";
  case Opcode::Return: return "return";
  }
  return "?";
}

bool Instr::operator==(const Instr &o) const {
  return op == o.op && dst == o.dst && a == o.a && b == o.b && c == o.c &&
         arith == o.arith && cmp == o.cmp && imm == o.imm &&
         target == o.target && name == o.name && args == o.args;
}

const WidgetDecl *LayoutDecl::find(std::string_view id) const {
  for (const auto &w : widgets)
    if (w.id == id)
      return &w;
  return nullptr;
}

int Method::block_of(int instr_index) const {
  auto it = std::upper_bound(leaders.begin(), leaders.end(), instr_index);
  return static_cast<int>(it - leaders.begin()) - 1;
}

int Method::block_end(int block) const {
  return block + 1 < block_count() ? leaders[block + 1]
                                   : static_cast<int>(body.size());
}

std::string Method::owner() const {
  auto dot = sig.rfind('.');
  return dot == std::string::npos ? sig : sig.substr(0, dot);
}

const Activity *App::activity(std::string_view id) const {
  for (const auto &a : activities)
    if (a.id == id)
      return &a;
  return nullptr;
}

const Method *App::method(std::string_view sig) const {
  auto it = methods.find(std::string(sig));
  return it == methods.end() ? nullptr : &it->second;
}

const Method &App::method_at(std::string_view sig) const {
  const Method *m = method(sig);
  if (!m)
    throw std::out_of_range("no method '" + std::string(sig) + "'");
  return *m;
}

int App::total_instructions() const {
  int n = 0;
  for (const auto &[sig, m] : methods)
    n += static_cast<int>(m.body.size());
  return n;
}

ParseError::ParseError(const std::string &msg, int line, int column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) +
                         ": " + msg),
      reason_(msg), line_(line), column_(column) {}

const std::vector<ApiSpec> &api_catalog() {
  static const std::vector<ApiSpec> catalog = {
      {"ui.startActivity", 1, false, true},
      {"ui.finish", 0, false, true},
      {"ui.setHandler", 2, false, true},
      {"ui.setText", 2, false, true},
      {"ui.getText", 1, true, true},
      {"sys.registerReceiver", 2, false, true},
      {"intent.getExtra", 1, true, true},
      {"str.equals", 2, true, true},
      {"str.length", 1, true, true},
      {"str.concat", 2, true, true},
      {"net.fetch", 1, true, false},
      {"sys.time", 0, true, false},
  };
  return catalog;
}

const ApiSpec *find_api(std::string_view name) {
  for (const auto &spec : api_catalog())
    if (spec.name == name)
      return &spec;
  return nullptr;
}

std::vector<int> compute_leaders(const std::vector<Instr> &body) {
  std::set<int> leaders{0};
  int n = static_cast<int>(body.size());
  for (int i = 0; i < n; ++i) {
    const Instr &ins = body[i];
    if (ins.is_branch()) {
      if (ins.target >= 0 && ins.target < n)
        leaders.insert(ins.target);
      if (i + 1 < n)
        leaders.insert(i + 1);
    } else if (ins.op == Opcode::Return && i + 1 < n) {
      leaders.insert(i + 1);
    }
  }
  return {leaders.begin(), leaders.end()};
}

std::vector<Event> entry_events(const App &app) {
  std::vector<Event> events;
  events.push_back(Event::launch(app.manifest.main_activity));
  for (const auto &f : app.manifest.intent_filters)
    events.push_back(Event::intent(f.activity, f.action));
  return events;
}

namespace {

struct Token {
  std::string text;
  int column;
};

// Splits a line into whitespace-separated tokens. Double-quoted sections are
// kept intact (including escapes); ';' outside quotes starts a comment.
std::vector<Token> tokenize(const std::string &line, int line_no) {
  std::vector<Token> out;
  size_t i = 0, n = line.size();
  auto trimmed = line.find_first_not_of(" \t\r");
  if (trimmed != std::string::npos && line.compare(trimmed, 2, "//") == 0)
    return out;
  while (i < n) {
    while (i < n && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
      ++i;
    if (i >= n || line[i] == ';')
      break;
    size_t start = i;
    std::string text;
    while (i < n && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' &&
           line[i] != ';') {
      if (line[i] == '"') {
        size_t q = i++;
        while (i < n && line[i] != '"') {
          if (line[i] == '\\')
            ++i;
          ++i;
        }
        if (i >= n)
          throw ParseError("unterminated string literal", line_no,
                           static_cast<int>(q) + 1);
        ++i;
        text += line.substr(q, i - q);
      } else {
        text += line[i++];
      }
    }
    out.push_back({text, static_cast<int>(start) + 1});
  }
  return out;
}

std::optional<int64_t> parse_int(std::string_view s) {
  int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    return std::nullopt;
  return v;
}

class Parser {
public:
  explicit Parser(std::string_view text) {
    std::string src(text);
    std::istringstream in(src);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      auto toks = tokenize(line, no);
      if (!toks.empty())
        lines_.push_back({no, std::move(toks)});
    }
  }

  App run() {
    App app;
    bool saw_manifest = false;
    while (pos_ < lines_.size()) {
      auto &[no, toks] = lines_[pos_];
      const std::string &kw = toks[0].text;
      if (kw == "app") {
        expect_arity(2, 2);
        app.name = toks[1].text;
        ++pos_;
      } else if (kw == "manifest") {
        if (saw_manifest)
          fail("duplicate manifest section", toks[0]);
        saw_manifest = true;
        parse_manifest(app);
      } else if (kw == "activity") {
        parse_activity(app);
      } else if (kw == "method") {
        parse_method(app);
      } else {
        fail("unexpected '" + kw + "' at top level", toks[0]);
      }
    }
    if (!saw_manifest)
      throw ParseError("missing manifest section", 1, 1);
    validate(app);
    return app;
  }

private:
  struct Line {
    int no;
    std::vector<Token> toks;
  };

  [[noreturn]] void fail(const std::string &msg, const Token &t) const {
    throw ParseError(msg, lines_[std::min(pos_, lines_.size() - 1)].no,
                     t.column);
  }
  [[noreturn]] void fail_at(const std::string &msg, int line, int col) const {
    throw ParseError(msg, line, col);
  }

  const Line &cur() const { return lines_[pos_]; }

  void expect_arity(size_t lo, size_t hi) const {
    const auto &toks = cur().toks;
    if (toks.size() < lo || toks.size() > hi)
      fail("wrong number of operands for '" + toks[0].text + "'", toks[0]);
  }

  // Consumes lines until "end"; the header line must be current on entry.
  template <typename Fn> void body_until_end(const std::string &what, Fn fn) {
    int header_line = cur().no;
    ++pos_;
    while (pos_ < lines_.size()) {
      if (cur().toks[0].text == "end") {
        ++pos_;
        return;
      }
      fn(cur());
      ++pos_;
    }
    fail_at("unterminated " + what + " section (missing 'end')", header_line,
            1);
  }

  void parse_manifest(App &app) {
    expect_arity(1, 1);
    body_until_end("manifest", [&](const Line &l) {
      const auto &kw = l.toks[0].text;
      if (kw == "main") {
        expect_arity(2, 2);
        app.manifest.main_activity = l.toks[1].text;
      } else if (kw == "filter") {
        expect_arity(3, 3);
        for (const auto &f : app.manifest.intent_filters)
          if (f.activity == l.toks[1].text && f.action == l.toks[2].text)
            fail("duplicate intent filter action '" + f.action + "'",
                 l.toks[2]);
        app.manifest.intent_filters.push_back({l.toks[1].text, l.toks[2].text});
      } else {
        fail("unexpected '" + kw + "' in manifest", l.toks[0]);
      }
    });
  }

  void parse_activity(App &app) {
    expect_arity(2, 2);
    Activity act;
    act.id = cur().toks[1].text;
    if (app.activity(act.id))
      fail("duplicate activity id '" + act.id + "'", cur().toks[1]);
    body_until_end("activity", [&](const Line &l) {
      const auto &kw = l.toks[0].text;
      if (kw == "onCreate" || kw == "onPause" || kw == "onStop") {
        expect_arity(2, 2);
        auto &slot = kw == "onCreate"  ? act.on_create
                     : kw == "onPause" ? act.on_pause
                                       : act.on_stop;
        slot = l.toks[1].text;
        lifecycle_refs_.push_back({l.no, l.toks[1].column, l.toks[1].text});
        return;
      }
      std::optional<WidgetKind> kind;
      for (WidgetKind k :
           {WidgetKind::Button, WidgetKind::TextField, WidgetKind::ListItem})
        if (kw == widget_kind_name(k))
          kind = k;
      if (!kind)
        fail("unexpected '" + kw + "' in activity", l.toks[0]);
      if (l.toks.size() < 2)
        fail("widget needs an id", l.toks[0]);
      WidgetDecl w;
      w.kind = *kind;
      w.id = l.toks[1].text;
      if (act.layout.find(w.id))
        fail("duplicate widget id '" + w.id + "'", l.toks[1]);
      for (size_t i = 2; i < l.toks.size(); ++i) {
        const auto &t = l.toks[i];
        auto eq = t.text.find('=');
        if (eq == std::string::npos)
          fail("expected key=value, got '" + t.text + "'", t);
        std::string key = t.text.substr(0, eq), val = t.text.substr(eq + 1);
        if (key == "init") {
          try {
            auto j = nlohmann::json::parse(val);
            if (!j.is_string())
              throw std::invalid_argument("not a string");
            w.initial_text = j.get<std::string>();
          } catch (const std::exception &) {
            fail("init= needs a quoted string", t);
          }
          continue;
        }
        std::optional<HandlerKind> hk;
        for (HandlerKind k :
             {HandlerKind::Click, HandlerKind::LongClick, HandlerKind::Text})
          if (key == handler_kind_name(k))
            hk = k;
        if (!hk)
          fail("unknown widget attribute '" + key + "'", t);
        if (w.bindings.count(*hk))
          fail("duplicate binding for '" + key + "'", t);
        w.bindings[*hk] = val;
        handler_refs_.push_back({l.no, t.column, val});
      }
      act.layout.widgets.push_back(std::move(w));
    });
    app.activities.push_back(std::move(act));
  }

  int parse_reg(const Token &t) const {
    if (t.text.size() < 2 || t.text[0] != 'v')
      fail("expected register, got '" + t.text + "'", t);
    auto v = parse_int(std::string_view(t.text).substr(1));
    if (!v || *v < 0 || *v > 65535)
      fail("bad register '" + t.text + "'", t);
    return static_cast<int>(*v);
  }

  Value parse_literal(const Token &t) const {
    std::string_view s = t.text;
    if (!s.empty() && s[0] == '#')
      s.remove_prefix(1);
    if (s == "true")
      return Value::of_bool(true);
    if (s == "false")
      return Value::of_bool(false);
    if (!s.empty() && s[0] == '"') {
      try {
        auto j = nlohmann::json::parse(s);
        if (j.is_string())
          return Value::of_str(j.get<std::string>());
      } catch (const std::exception &) {
      }
      fail("bad string literal", t);
    }
    if (auto v = parse_int(s))
      return Value::of_int(*v);
    fail("bad literal '" + t.text + "'", t);
  }

  void parse_method(App &app) {
    const auto &hdr = cur().toks;
    if (hdr.size() < 2)
      fail("method needs a signature", hdr[0]);
    Method m;
    m.sig = hdr[1].text;
    if (m.sig.find('.') == std::string::npos)
      fail("method signature must be Class.name", hdr[1]);
    if (app.methods.count(m.sig))
      fail("duplicate method '" + m.sig + "'", hdr[1]);
    int declared_regs = -1;
    for (size_t i = 2; i < hdr.size(); ++i) {
      auto eq = hdr[i].text.find('=');
      std::string key = hdr[i].text.substr(0, eq);
      auto val = eq == std::string::npos
                     ? std::nullopt
                     : parse_int(std::string_view(hdr[i].text).substr(eq + 1));
      if (!val || *val < 0)
        fail("expected params=N or regs=N", hdr[i]);
      if (key == "params")
        m.param_count = static_cast<int>(*val);
      else if (key == "regs")
        declared_regs = static_cast<int>(*val);
      else
        fail("unknown method attribute '" + key + "'", hdr[i]);
    }

    struct PendingTarget {
      size_t instr;
      Token tok;
      int line;
    };
    std::map<std::string, int> labels;
    std::vector<PendingTarget> pending;
    std::vector<std::pair<int, int>> reg_sites; // (line, col) per instr
    int max_reg = -1;

    body_until_end("method", [&](const Line &l) {
      const auto &t = l.toks;
      const std::string &kw = t[0].text;
      if (t.size() == 1 && kw.size() > 1 && kw.back() == ':') {
        std::string label = kw.substr(0, kw.size() - 1);
        if (labels.count(label))
          fail("duplicate label '" + label + "'", t[0]);
        labels[label] = static_cast<int>(m.body.size());
        return;
      }
      Instr ins;
      ins.line = l.no;
      auto need = [&](size_t lo, size_t hi) {
        if (t.size() < lo || t.size() > hi)
          fail("wrong number of operands for '" + kw + "'", t[0]);
      };
      auto reg = [&](size_t i) {
        int r = parse_reg(t[i]);
        max_reg = std::max(max_reg, r);
        return r;
      };
      auto target = [&](size_t i) {
        pending.push_back({m.body.size(), t[i], l.no});
      };
      if (kw == "const") {
        need(3, 3);
        ins.op = Opcode::Const;
        ins.dst = reg(1);
        ins.imm = parse_literal(t[2]);
      } else if (kw == "move") {
        need(3, 3);
        ins.op = Opcode::Move;
        ins.dst = reg(1);
        ins.a = reg(2);
      } else if (auto ar = parse_arith(kw); ar && kw.size() == 3) {
        need(4, 4);
        ins.op = Opcode::BinOp;
        ins.arith = *ar;
        ins.dst = reg(1);
        ins.a = reg(2);
        ins.b = reg(3);
      } else if (kw == "if") {
        need(5, 5);
        ins.op = Opcode::If;
        auto cmp = parse_cmp(t[1].text);
        if (!cmp)
          fail("unknown comparison '" + t[1].text + "'", t[1]);
        ins.cmp = *cmp;
        ins.a = reg(2);
        if (!t[3].text.empty() && t[3].text[0] == '#')
          ins.imm = parse_literal(t[3]);
        else
          ins.b = reg(3);
        target(4);
      } else if (kw == "goto") {
        need(2, 2);
        ins.op = Opcode::Goto;
        target(1);
      } else if (kw == "sget" || kw == "sput") {
        need(3, 3);
        ins.op = kw == "sget" ? Opcode::SGet : Opcode::SPut;
        (kw == "sget" ? ins.dst : ins.a) = reg(1);
        ins.name = t[2].text;
      } else if (kw == "iget" || kw == "iput") {
        need(4, 4);
        ins.op = kw == "iget" ? Opcode::IGet : Opcode::IPut;
        (kw == "iget" ? ins.dst : ins.a) = reg(1);
        ins.b = reg(2);
        ins.name = t[3].text;
      } else if (kw == "new") {
        need(3, 3);
        ins.op = Opcode::New;
        ins.dst = reg(1);
        ins.name = t[2].text;
        if (ins.name.front() == '[') {
          auto n = parse_int(
              std::string_view(ins.name).substr(1, ins.name.size() - 2));
          if (ins.name.back() != ']' || !n || *n < 0)
            fail("array class must be [N]", t[2]);
        }
      } else if (kw == "aget" || kw == "aput") {
        need(4, 4);
        ins.op = kw == "aget" ? Opcode::AGet : Opcode::APut;
        (kw == "aget" ? ins.dst : ins.a) = reg(1);
        ins.b = reg(2);
        ins.c = reg(3);
      } else if (kw == "invoke" || kw == "api") {
        need(2, 64);
        ins.op = kw == "invoke" ? Opcode::Invoke : Opcode::Api;
        ins.name = t[1].text;
        for (size_t i = 2; i < t.size(); ++i)
          ins.args.push_back(reg(i));
        if (ins.op == Opcode::Api) {
          const ApiSpec *spec = find_api(ins.name);
          if (!spec)
            fail("unknown api '" + ins.name + "'", t[1]);
          if (static_cast<int>(ins.args.size()) != spec->arity)
            fail("api '" + ins.name + "' takes " +
                     std::to_string(spec->arity) + " arguments",
                 t[0]);
        } else {
          invoke_refs_.push_back(
              {l.no, t[1].column, ins.name, static_cast<int>(ins.args.size())});
        }
      } else if (kw == "move_result") {
        need(2, 2);
        ins.op = Opcode::MoveResult;
        ins.dst = reg(1);
      } else if (kw == "return") {
        need(1, 2);
        ins.op = Opcode::Return;
        if (t.size() == 2)
          ins.a = reg(1);
      } else {
        fail("unknown instruction '" + kw + "'", t[0]);
      }
      reg_sites.push_back({l.no, t[0].column});
      m.body.push_back(std::move(ins));
    });

    int n = static_cast<int>(m.body.size());
    for (const auto &p : pending) {
      int target;
      if (auto v = parse_int(p.tok.text)) {
        target = static_cast<int>(*v);
      } else {
        auto it = labels.find(p.tok.text);
        if (it == labels.end())
          fail_at("unknown label '" + p.tok.text + "'", p.line, p.tok.column);
        target = it->second;
      }
      if (target < 0 || target >= n)
        fail_at("invalid branch target " + std::to_string(target), p.line,
                p.tok.column);
      m.body[p.instr].target = target;
    }
    if (m.body.empty())
      fail_at("method '" + m.sig + "' has an empty body", hdr_line(), 1);

    int needed = std::max(max_reg + 1, m.param_count);
    if (declared_regs >= 0) {
      if (declared_regs < needed) {
        // Report at the first instruction that uses an out-of-range register.
        for (size_t i = 0; i < m.body.size(); ++i) {
          const Instr &ins = m.body[i];
          int hi = std::max({ins.dst, ins.a, ins.b, ins.c});
          for (int r : ins.args)
            hi = std::max(hi, r);
          if (hi >= declared_regs)
            fail_at("register v" + std::to_string(hi) +
                        " out of range (regs=" +
                        std::to_string(declared_regs) + ")",
                    reg_sites[i].first, reg_sites[i].second);
        }
        fail_at("params exceed regs", reg_sites[0].first, 1);
      }
      m.register_count = declared_regs;
    } else {
      m.register_count = needed;
    }

    // Every reachable instruction must either transfer control or have a
    // successor; falling off the end is rejected.
    std::vector<bool> seen(n, false);
    std::vector<int> work{0};
    while (!work.empty()) {
      int i = work.back();
      work.pop_back();
      if (seen[i])
        continue;
      seen[i] = true;
      const Instr &ins = m.body[i];
      if (ins.op == Opcode::Return)
        continue;
      if (ins.is_branch())
        work.push_back(ins.target);
      if (ins.op != Opcode::Goto) {
        if (i + 1 >= n)
          fail_at("control falls off the end of '" + m.sig + "'",
                  reg_sites[i].first, reg_sites[i].second);
        work.push_back(i + 1);
      }
    }
    m.leaders = compute_leaders(m.body);
    app.methods.emplace(m.sig, std::move(m));
  }

  int hdr_line() const { return lines_[pos_ - 1].no; }

  void validate(const App &app) {
    auto check = [&](const std::vector<Ref> &refs, const char *what) {
      for (const auto &r : refs)
        if (!app.method(r.sig))
          throw ParseError(std::string(what) + " '" + r.sig + "'", r.line,
                           r.col);
    };
    check(handler_refs_, "unresolved handler reference");
    check(lifecycle_refs_, "unresolved lifecycle reference");
    check(invoke_refs_, "unresolved method reference");
    for (const auto &r : invoke_refs_)
      if (app.method_at(r.sig).param_count != r.arg_count)
        throw ParseError("invoke of '" + r.sig + "' passes " +
                             std::to_string(r.arg_count) + " arguments, " +
                             "callee takes " +
                             std::to_string(app.method_at(r.sig).param_count),
                         r.line, r.col);
    if (app.manifest.main_activity.empty())
      throw ParseError("manifest has no main activity", 1, 1);
    if (!app.activity(app.manifest.main_activity))
      throw ParseError("main activity '" + app.manifest.main_activity +
                           "' is not declared",
                       1, 1);
    for (const auto &f : app.manifest.intent_filters)
      if (!app.activity(f.activity))
        throw ParseError("intent filter names unknown activity '" +
                             f.activity + "'",
                         1, 1);
  }

  struct Ref {
    int line;
    int col;
    std::string sig;
    int arg_count = -1;
  };

  std::vector<Line> lines_;
  size_t pos_ = 0;
  std::vector<Ref> handler_refs_, lifecycle_refs_, invoke_refs_;
};

} // namespace

std::string instr_to_string(const Instr &ins) {
  auto r = [](int reg) { return "v" + std::to_string(reg); };
  std::string s;
  switch (ins.op) {
  case Opcode::Const:
    return "const " + r(ins.dst) + " " + ins.imm->to_literal();
  case Opcode::Move:
    return "move " + r(ins.dst) + " " + r(ins.a);
  case Opcode::BinOp:
    return std::string(arith_name(ins.arith)) + " " + r(ins.dst) + " " +
           r(ins.a) + " " + r(ins.b);
  case Opcode::If:
    return std::string("if ") + cmp_name(ins.cmp) + " " + r(ins.a) + " " +
           (ins.imm ? "#" + ins.imm->to_literal() : r(ins.b)) + " " +
           std::to_string(ins.target);
  case Opcode::Goto:
    return "goto " + std::to_string(ins.target);
  case Opcode::SGet:
    return "sget " + r(ins.dst) + " " + ins.name;
  case Opcode::SPut:
    return "sput " + r(ins.a) + " " + ins.name;
  case Opcode::IGet:
    return "iget " + r(ins.dst) + " " + r(ins.b) + " " + ins.name;
  case Opcode::IPut:
    return "iput " + r(ins.a) + " " + r(ins.b) + " " + ins.name;
  case Opcode::New:
    return "new " + r(ins.dst) + " " + ins.name;
  case Opcode::AGet:
    return "aget " + r(ins.dst) + " " + r(ins.b) + " " + r(ins.c);
  case Opcode::APut:
    return "aput " + r(ins.a) + " " + r(ins.b) + " " + r(ins.c);
  case Opcode::Invoke:
  case Opcode::Api:
    s = std::string(ins.op == Opcode::Invoke ? "invoke " : "api ") + ins.name;
    for (int a : ins.args)
      s += " " + r(a);
    return s;
  case Opcode::MoveResult:
    return "move_result " + r(ins.dst);
  case Opcode::Return:
    return ins.a >= 0 ? "return " + r(ins.a) : "return";
  }
  return "?";
}

App parse_app(std::string_view text) { return Parser(text).run(); }

App load_app_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_app(ss.str());
}

std::string serialize_app(const App &app) {
  std::ostringstream out;
  if (!app.name.empty())
    out << "app " << app.name << "\n\n";
  out << "manifest\n  main " << app.manifest.main_activity << "\n";
  for (const auto &f : app.manifest.intent_filters)
    out << "  filter " << f.activity << " " << f.action << "\n";
  out << "end\n";
  for (const auto &act : app.activities) {
    out << "\nactivity " << act.id << "\n";
    for (const auto &w : act.layout.widgets) {
      out << "  " << widget_kind_name(w.kind) << " " << w.id;
      for (const auto &[k, sig] : w.bindings)
        out << " " << handler_kind_name(k) << "=" << sig;
      if (!w.initial_text.empty())
        out << " init=" << quote(w.initial_text);
      out << "\n";
    }
    if (act.on_create)
      out << "  onCreate " << *act.on_create << "\n";
    if (act.on_pause)
      out << "  onPause " << *act.on_pause << "\n";
    if (act.on_stop)
      out << "  onStop " << *act.on_stop << "\n";
    out << "end\n";
  }
  for (const auto &[sig, m] : app.methods) {
    out << "\nmethod " << sig << " params=" << m.param_count
        << " regs=" << m.register_count << "\n";
    for (size_t i = 0; i < m.body.size(); ++i) {
      std::string text = instr_to_string(m.body[i]);
      out << "  " << text;
      out << std::string(text.size() < 36 ? 36 - text.size() : 1, ' ') << "; "
          << i << "\n";
    }
    out << "end\n";
  }
  return out.str();
}

} // namespace apex
