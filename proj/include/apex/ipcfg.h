//===-- ipcfg.h - CFGs, inter-procedural CFGs and bounded paths ----------===//
#ifndef APEX_IPCFG_H
#define APEX_IPCFG_H

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "apex/appir.h"
#include "apex/runtime.h"

namespace apex {

inline constexpr int kDefaultLoopBound = 1;
inline constexpr int kDefaultMaxPaths = 256;
inline constexpr int kDefaultCallDepth = 8;

struct Cfg {
  MethodSig method;
  /// Block i covers instructions [blocks[i].first, blocks[i].second).
  std::vector<std::pair<int, int>> blocks;
  std::vector<std::pair<int, int>> edges;
  /// Successors per block, ascending.
  std::vector<std::vector<int>> succ;
  /// Edges that close a cycle in a DFS from block 0.
  std::set<std::pair<int, int>> back_edges;

  bool has_edge(int from, int to) const;
};

Cfg build_cfg(const Method &m);

/// A straight run of one block inside one calling context. Blocks are split
/// after every inlined invoke, so a node never contains a call in its middle.
struct IpNode {
  int id = 0;
  /// Call string: ids of the nodes whose final invoke led here.
  std::vector<int> context;
  MethodSig method;
  int block = 0;
  int begin = 0;
  int end = 0;
  int depth = 0;
  bool is_return = false;
};

enum class IpEdgeKind { Flow, Call, Return };

struct IpEdge {
  int from = 0;
  int to = 0;
  IpEdgeKind kind = IpEdgeKind::Flow;
  /// Intra-method back edge (loop).
  bool back = false;
};

struct Stmt {
  MethodSig method;
  int index = 0;
  bool operator==(const Stmt &) const = default;
  auto operator<=>(const Stmt &) const = default;
};

struct Path {
  MethodSig root;
  std::vector<Stmt> stmts;

  bool empty() const { return stmts.empty(); }
  /// Stable hex id of the statement list.
  std::string id() const;
  /// "Root:{0,1,2}" listing the statement indices (callees as Sig:i).
  std::string to_string() const;
  /// (method, block) in entry order; derived from leader statements.
  std::vector<std::pair<MethodSig, int>> block_trace(const App &app) const;
  bool operator==(const Path &) const = default;
  auto operator<=>(const Path &) const = default;
};

class Ipcfg {
public:
  const App *app = nullptr;
  MethodSig root;
  int call_depth_bound = kDefaultCallDepth;
  std::vector<IpNode> nodes;
  std::vector<IpEdge> edges;
  /// Outgoing edge indices per node, targets ascending by block.
  std::vector<std::vector<int>> out;
  /// Opaque call sites, e.g. "A.f:3 -> A.f (call depth bound 2)".
  std::vector<std::string> diagnostics;

  int entry() const { return 0; }
  /// Every statement some node of the graph covers.
  std::set<Stmt> statements() const;
  std::string to_dot() const;
};

Ipcfg build_ipcfg(const MethodSig &root, const App &app,
                  int call_depth_bound = kDefaultCallDepth);

struct PathSet {
  std::vector<Path> paths;
  bool truncated = false;
};

/// Root-entry to root-return paths, DFS with successors in ascending block
/// order; each back edge is followed at most loop_bound times per context.
PathSet enumerate_paths(const Ipcfg &g, int loop_bound = kDefaultLoopBound,
                        int max_paths = kDefaultMaxPaths);

/// Entries of each root invocation of an event log, in order.
std::vector<ExecLog> split_roots(const ExecLog &log);

/// The statement path of one root invocation. Frames nested deeper than the
/// graph's call-depth bound are dropped, matching opaque call sites. Throws
/// IntegrityError when the log does not fit the graph.
Path executed_path(const ExecLog &root_log, const Ipcfg &g);

/// Enumerated paths other than the executed one.
std::vector<Path> symbolic_paths(const Path &executed, const PathSet &all);

std::string cfg_to_dot(const Cfg &cfg, const Method &m);

} // namespace apex

#endif
