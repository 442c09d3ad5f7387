// Serial vs OpenMP decide on constraints that force a large part of the
// search space to be visited.
#include <chrono>
#include <cstdio>
#include <omp.h>

#include "apex/solver.h"

using namespace apex;

namespace {

ExprRef var(const char *name) { return mk_sym(SymKind::StaticField, name); }

template <typename F> double time_ms(F &&f, int reps) {
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i)
    f();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
             .count() /
         reps;
}

} // namespace

int main(int argc, char **argv) {
  int bound = argc > 1 ? std::atoi(argv[1]) : 24;
  int reps = argc > 2 ? std::atoi(argv[2]) : 3;
  ExprRef a = var("B.a"), b = var("B.b"), c = var("B.c"), d = var("B.d");
  // a + b + c + d == 4*bound - 1 with every variable <= bound: only the
  // corner assignments satisfy it, late in domain order.
  ExprRef sum = mk_arith(ArithOp::Add, mk_arith(ArithOp::Add, a, b),
                         mk_arith(ArithOp::Add, c, d));
  std::vector<std::pair<const char *, PathConstraint>> cases = {
      {"sat-late", {mk_cmp(CmpOp::Eq, sum, mk_int(4 * bound - 1))}},
      {"unsat", {mk_cmp(CmpOp::Eq, sum, mk_int(4 * bound + 1))}},
      {"sat-mixed",
       {mk_cmp(CmpOp::Eq, mk_arith(ArithOp::Mul, a, b), mk_arith(ArithOp::Add, c, mk_int(7))),
        mk_cmp(CmpOp::Gt, d, mk_arith(ArithOp::Sub, a, c)),
        mk_cmp(CmpOp::Lt, mk_arith(ArithOp::Add, a, d), mk_int(-bound / 2))}},
  };
  std::printf("bound %d, %d threads\n", bound, omp_get_max_threads());
  std::printf("%-10s %12s %12s %8s %s\n", "case", "serial ms", "parallel ms", "speedup",
              "agree");
  for (const auto &[name, c] : cases) {
    SolveResult s, p;
    double ts = time_ms([&] { s = decide_serial(c, bound); }, reps);
    double tp = time_ms([&] { p = decide_parallel(c, bound); }, reps);
    bool agree = s.status == p.status && s.assignment == p.assignment;
    std::printf("%-10s %12.2f %12.2f %8.2f %s (%s)\n", name, ts, tp, ts / tp,
                agree ? "yes" : "NO", solve_status_name(s.status));
  }
  return 0;
}
