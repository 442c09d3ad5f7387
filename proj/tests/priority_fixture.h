// A small app whose handlers differ in exactly the features the queue
// priorities look at.
#ifndef APEX_TESTS_PRIORITY_FIXTURE_H
#define APEX_TESTS_PRIORITY_FIXTURE_H

#include <string>
#include <vector>

#include "apex/explorer.h"
#include "testutil.h"

namespace apex::testing {

// Buttons with handlers of known shape: `far` reaches two targets, `gui`
// starts an activity, `plain` does neither; `w1`/`w2` write one and two
// fields.
inline App priority_app() {
  return parse_app(R"(
manifest
  main A
end
activity A
  button far click=A.far
  button gui click=A.gui
  button plain click=A.plain
  button w1 click=A.w1
  button w2 click=A.w2
end
activity B
end
method A.far regs=1
  const v0 1
  sput v0 A.t1
  sput v0 A.t2
  return
end
method A.gui regs=1
  const v0 "B"
  api ui.startActivity v0
  return
end
method A.plain regs=1
  const v0 1
  return
end
method A.w1 regs=1
  const v0 1
  sput v0 A.a
  return
end
method A.w2 regs=1
  const v0 1
  sput v0 A.a
  sput v0 A.b
  return
end
)");
}

struct PriorityFixture {
  App app = priority_app();
  GuiModel m;
  std::string s;
  std::vector<Target> targets{{"A.far", 1}, {"A.far", 2}};

  PriorityFixture() {
    RuntimeState st;
    EventSequence w;
    s = observe(app, m, st, kBootState, Event::launch("A"), w).dst;
  }

  SequenceCandidate cand(const std::string &widget, bool partial, int64_t ins) {
    SequenceCandidate c;
    c.events = partial ? EventSequence{Event::tap(widget)}
                       : EventSequence{Event::launch("A"), Event::tap(widget)};
    c.partial = partial;
    c.source_state = s;
    c.insertion_index = ins;
    c.priority = priority_event_seq(c, targets, app, m);
    return c;
  }

  EventSummary summary(const std::string &root) {
    EventSummary e;
    e.path = enumerate_paths(build_ipcfg(root, app)).paths.at(0);
    return e;
  }

  // Dequeue order of the candidates, by widget.
  std::vector<std::string> order(std::vector<SequenceCandidate> q) {
    std::vector<std::string> out;
    while (!q.empty()) {
      int i = pick_best_candidate(q);
      out.push_back(q[static_cast<size_t>(i)].events.back().target);
      q.erase(q.begin() + i);
    }
    return out;
  }
};

} // namespace apex::testing

#endif
