//===-- solver.h - Constraint solving over event summaries ------------------===//
//
// `decide` is a bounded decision procedure for the small constraints path
// summaries produce. `solve_summary` turns a symbolic summary into concrete
// candidate event sequences by chaining backwards through concrete model
// transitions until every state symbol is grounded at a fresh start.
//
//===---------------------------------------------------------------------===//
#ifndef APEX_SOLVER_H
#define APEX_SOLVER_H

#include <optional>
#include <string>
#include <vector>

#include "apex/symexec.h"

namespace apex {

inline constexpr int kDefaultDomainBound = 64;
inline constexpr int kDefaultRecursionBound = 3;
inline constexpr int kDefaultKMax = 16;

enum class SolveStatus { Sat, Unsat, Unknown };
const char *solve_status_name(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::Unsat;
  Valuation assignment;
  /// For Unknown: the offending sub-expression.
  std::string reason;
};

/// Sort of every free symbol, inferred from how the constraint uses it;
/// unconstrained symbols default to Int.
std::map<Symbol, Sort> infer_sorts(const PathConstraint &c);

/// Candidate values in search order. Ints: 0, 1, -1, ..., bound, -bound.
std::vector<Value> int_domain(int bound);
/// Strings: literals of the constraint, their substrings and pairwise
/// concatenations, plus fresh representatives per length; ordered by
/// (length, text).
std::vector<Value> string_domain(const PathConstraint &c, int string_symbols);

/// Backtracking search; the first assignment in domain order wins. Parallel
/// over the first variable's domain when it pays off; the result is the same
/// as the serial search.
SolveResult decide(const PathConstraint &c, int domain_bound = kDefaultDomainBound);
SolveResult decide_serial(const PathConstraint &c,
                          int domain_bound = kDefaultDomainBound);
SolveResult decide_parallel(const PathConstraint &c,
                            int domain_bound = kDefaultDomainBound);

/// Conjunct-wise: substitutes the post-state of `post` into `c`, conjoins
/// the event's own path constraint and simplifies. A false conjunct makes
/// the result [false].
PathConstraint precondition(const SymResult &post, const PathConstraint &c);

/// Residual of `c` after executing the event summarized by `post`, then
/// decide over what is left.
SolveResult satisfies(const SymResult &post, const PathConstraint &c,
                      int domain_bound = kDefaultDomainBound,
                      PathConstraint *residual = nullptr);

/// Smallest k <= k_max such that k applications of an affine effect
/// (x -> x + c) satisfy `residual` starting from the values `base` gives.
/// nullopt when an effect on a constrained symbol is not affine or no k works.
std::optional<int> repetition_expand(const SymState &post,
                                     const PathConstraint &residual, int k_max,
                                     const Resolver &base);

/// Boot values: statics 0, texts of `fresh` activities their declared text.
ExprRef ground_boot(const ExprRef &e, const App &app, const SymState &entry);

struct SolverOptions {
  int recursion_bound = kDefaultRecursionBound;
  int domain_bound = kDefaultDomainBound;
  int k_max = kDefaultKMax;
  size_t max_candidates = 16;
  /// Backward steps explored before giving up.
  int node_budget = 4096;
};

struct SolveOutcome {
  /// Shortest first, then lexicographic by event text; no duplicates.
  std::vector<EventSequence> candidates;
  /// Why nothing was found (empty when candidates exist).
  std::string reason;
  bool unknown = false;
};

SolveOutcome solve_summary(const GuiModel &m, const EventSummary &sigma,
                           const App &app, SymCache &cache,
                           const SolverOptions &opts = {});

/// Post-state of one recorded transition at the given chain generation.
SymResult transition_effect(const GuiModel &m, const Transition &t, const App &app,
                            int generation);

} // namespace apex

#endif
