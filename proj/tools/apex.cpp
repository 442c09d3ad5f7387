// apex: command-line front end for parsing, exploring, replaying and the
// random baseline.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "apex/explorer.h"

using namespace apex;
namespace fs = std::filesystem;

namespace {

int log_level() {
  const char *v = std::getenv("APEX_LOG");
  if (!v || !*v)
    return 0;
  std::string s = v;
  if (s == "debug")
    return 2;
  return 1;
}

void log_info(const std::string &msg) {
  if (log_level() >= 1)
    std::cerr << "[apex] " << msg << "\n";
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct Common {
  std::string app_path;
  std::string targets_path;
  std::string out_dir = "apex-out";
  uint64_t seed = kDefaultSeed;
  int max_events = 0;
  double max_seconds = 0;
  int loop_bound = kDefaultLoopBound;
  int max_paths = kDefaultMaxPaths;
  int domain_bound = kDefaultDomainBound;
  int recursion_bound = kDefaultRecursionBound;
  int penalty_window = kDefaultPenaltyWindow;
};

// Loads the app and targets; prints a diagnostic and returns false on error.
bool load(const Common &c, App &app, std::vector<Target> &targets) {
  try {
    app = load_app_file(c.app_path);
  } catch (const ParseError &e) {
    std::cerr << c.app_path << ":" << e.what() << "\n";
    return false;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return false;
  }
  if (c.targets_path.empty())
    return true;
  try {
    targets = parse_targets(read_file(c.targets_path), app);
  } catch (const std::exception &e) {
    std::cerr << c.targets_path << ": " << e.what() << "\n";
    return false;
  }
  return true;
}

ExploreOptions options_of(const Common &c) {
  ExploreOptions o;
  o.seed = c.seed;
  o.max_events = c.max_events;
  o.max_seconds = c.max_seconds;
  o.loop_bound = c.loop_bound;
  o.max_paths = c.max_paths;
  o.penalty_window = c.penalty_window;
  o.solver.domain_bound = c.domain_bound;
  o.solver.recursion_bound = c.recursion_bound;
  return o;
}

std::string safe_name(const std::string &s) {
  std::string out;
  for (char ch : s)
    out += std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' ? ch : '_';
  return out;
}

int cmd_explore(const Common &c, bool require_targets) {
  App app;
  std::vector<Target> targets;
  if (!load(c, app, targets))
    return 2;
  if (require_targets && targets.empty()) {
    std::cerr << "error: target mode needs --targets with at least one entry\n";
    return 2;
  }
  log_info("exploring " + app.name);
  ExploreResult r = explore(app, targets, options_of(c));
  fs::path out = c.out_dir;
  fs::create_directories(out / "sequences");
  write_file(out / "model.json", r.model.to_json().dump(2) + "\n");
  write_file(out / "model.dot", r.model.to_dot());
  write_file(out / "report.json", r.report_json(app).dump(2) + "\n");
  for (size_t i = 0; i < r.model.transitions.size(); ++i) {
    std::ostringstream name;
    name << "transition-" << std::setw(4) << std::setfill('0') << i << ".txt";
    write_file(out / "sequences" / name.str(),
               sequence_to_text(r.model.transitions[i].witness));
  }
  for (const auto &h : r.hits)
    write_file(out / "sequences" / ("target-" + safe_name(h.target.to_string()) + ".txt"),
               sequence_to_text(h.sequence));

  std::cout << "app " << app.name << ": " << r.model.states.size() << " states, "
            << r.model.transitions.size() << " transitions, coverage " << r.coverage.covered
            << "/" << r.coverage.total << "\n";
  for (const auto &t : targets) {
    const TargetHit *hit = nullptr;
    for (const auto &h : r.hits)
      if (h.target == t)
        hit = &h;
    std::cout << "target " << t.to_string() << ": "
              << (hit ? "hit (length " + std::to_string(hit->sequence.size()) + ")"
                      : std::string("not reached"))
              << "\n";
  }
  return 0;
}

int cmd_replay(const std::string &app_path, const std::string &seq_path, uint64_t seed) {
  App app;
  std::vector<Target> none;
  Common c;
  c.app_path = app_path;
  if (!load(c, app, none))
    return 2;
  EventSequence seq;
  try {
    seq = sequence_from_text(read_file(seq_path));
  } catch (const std::exception &e) {
    std::cerr << seq_path << ": " << e.what() << "\n";
    return 2;
  }
  if (seq.empty()) {
    std::cerr << seq_path << ": empty sequence\n";
    return 1;
  }
  SequenceResult r;
  try {
    r = apply_sequence(app, seq, seed);
  } catch (const EventNotEnabled &e) {
    std::cout << "failed at index " << e.index() << ": " << e.what() << "\n";
    return 1;
  }
  int before = coverage(app, {}).covered;
  std::cout << "layout " << state_id_of(canonical_layout(app, r.state)) << " ("
            << r.state.current_activity() << ")\n";
  auto roots = root_paths(app, r.last);
  std::cout << "path " << (roots.empty() ? std::string("<none>") : roots[0].path.to_string())
            << "\n";
  std::cout << "coverage +" << coverage(app, r.covered).covered - before << "\n";
  if (r.last.trapped) {
    std::cout << "trap: " << r.last.trap_reason << "\n";
    return 1;
  }
  return 0;
}

int cmd_baseline(const Common &c) {
  App app;
  std::vector<Target> targets;
  if (!load(c, app, targets))
    return 2;
  RandomResult r = baseline_random(app, targets, c.max_events, c.seed);
  fs::create_directories(c.out_dir);
  write_file(fs::path(c.out_dir) / "report.json", r.report_json(app).dump(2) + "\n");
  std::cout << "app " << app.name << ": " << r.events_applied << " random events, coverage "
            << r.coverage.covered << "/" << r.coverage.total << ", targets "
            << r.coverage.targets_hit << "/" << r.coverage.targets_total << "\n";
  return 0;
}

int cmd_parse(const std::string &app_path) {
  Common c;
  c.app_path = app_path;
  App app;
  std::vector<Target> none;
  if (!load(c, app, none))
    return 2;
  std::cout << "app " << app.name << ": " << app.activities.size() << " activities, "
            << app.methods.size() << " methods, " << app.total_instructions()
            << " instructions\n";
  return 0;
}

int cmd_cfg(const std::string &app_path, const std::string &method, bool inter) {
  Common c;
  c.app_path = app_path;
  App app;
  std::vector<Target> none;
  if (!load(c, app, none))
    return 2;
  const Method *m = app.method(method);
  if (!m) {
    std::cerr << "error: unknown method " << method << "\n";
    return 2;
  }
  std::cout << (inter ? build_ipcfg(method, app).to_dot() : cfg_to_dot(build_cfg(*m), *m));
  return 0;
}

void add_common(CLI::App *sub, Common &c, bool with_targets) {
  sub->add_option("app", c.app_path, "App file (.mapp)")->required();
  if (with_targets)
    sub->add_option("--targets", c.targets_path, "Targets file, one Cls.m:index per line");
  sub->add_option("--out", c.out_dir, "Output directory");
  sub->add_option("--seed", c.seed, "Seed");
  sub->add_option("--max-events", c.max_events, "Event budget (0 = unlimited)");
  sub->add_option("--max-seconds", c.max_seconds, "Time budget (0 = unlimited)");
  sub->add_option("--loop-bound", c.loop_bound, "Loop unrolling bound");
  sub->add_option("--max-paths", c.max_paths, "Paths enumerated per handler");
  sub->add_option("--domain-bound", c.domain_bound, "Integer domain bound of the solver");
  sub->add_option("--recursion-bound", c.recursion_bound, "Backward chaining depth");
  sub->add_option("--penalty-window", c.penalty_window,
                  "Iterations a failed summary is skipped");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App cli{"apex: guided GUI exploration for .mapp apps"};
  cli.require_subcommand(1);

  std::string parse_path;
  auto *parse = cli.add_subcommand("parse", "Parse and validate an app");
  parse->add_option("app", parse_path, "App file")->required();

  Common explore_c, target_c, baseline_c;
  auto *exp = cli.add_subcommand("explore", "Guided exploration");
  add_common(exp, explore_c, true);
  auto *tgt = cli.add_subcommand("target", "Guided exploration towards code targets");
  add_common(tgt, target_c, true);
  auto *base = cli.add_subcommand("baseline-random", "Random event baseline");
  add_common(base, baseline_c, true);
  baseline_c.max_events = 1000;

  std::string replay_app, replay_seq;
  uint64_t replay_seed = kDefaultSeed;
  auto *rep = cli.add_subcommand("replay", "Apply an event sequence file");
  rep->add_option("app", replay_app, "App file")->required();
  rep->add_option("sequence", replay_seq, "Sequence file")->required();
  rep->add_option("--seed", replay_seed, "Seed");

  std::string cfg_app, cfg_method;
  bool cfg_inter = false;
  auto *cfg = cli.add_subcommand("cfg", "Print a method CFG or IPCFG as dot");
  cfg->add_option("app", cfg_app, "App file")->required();
  cfg->add_option("method", cfg_method, "Method signature")->required();
  cfg->add_flag("--ipcfg", cfg_inter, "Inter-procedural graph from this root");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return cli.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*parse)
      return cmd_parse(parse_path);
    if (*exp)
      return cmd_explore(explore_c, false);
    if (*tgt)
      return cmd_explore(target_c, true);
    if (*base)
      return cmd_baseline(baseline_c);
    if (*rep)
      return cmd_replay(replay_app, replay_seq, replay_seed);
    if (*cfg)
      return cmd_cfg(cfg_app, cfg_method, cfg_inter);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
