#include "cdce/max_flow.hpp"

#include <algorithm>
#include <limits>

#include "cdce/errors.hpp"

namespace cdce {

FlowGraph::FlowGraph(int n_nodes)
    : n_(n_nodes),
      adj_(static_cast<size_t>(n_nodes)),
      tr_cap_(static_cast<size_t>(n_nodes), 0),
      orig_source_(static_cast<size_t>(n_nodes), 0),
      orig_sink_(static_cast<size_t>(n_nodes), 0),
      parent_arc_(static_cast<size_t>(n_nodes), kRoot),
      tree_(static_cast<size_t>(n_nodes), Tree::Free),
      ts_(static_cast<size_t>(n_nodes), 0),
      dist_(static_cast<size_t>(n_nodes), 0),
      active_flag_(static_cast<size_t>(n_nodes), false) {}

void FlowGraph::add_edge(int u, int v, std::int64_t cap, std::int64_t rev_cap) {
  if (cap < 0 || rev_cap < 0) throw ConfigError("FlowGraph: negative capacity");
  if (u == v) return;
  adj_[static_cast<size_t>(u)].push_back(static_cast<int>(arcs_.size()));
  arcs_.push_back({v, cap});
  orig_cap_.push_back(cap);
  adj_[static_cast<size_t>(v)].push_back(static_cast<int>(arcs_.size()));
  arcs_.push_back({u, rev_cap});
  orig_cap_.push_back(rev_cap);
}

void FlowGraph::add_terminal(int v, std::int64_t from_source, std::int64_t to_sink) {
  if (from_source < 0 || to_sink < 0) throw ConfigError("FlowGraph: negative capacity");
  orig_source_[static_cast<size_t>(v)] += from_source;
  orig_sink_[static_cast<size_t>(v)] += to_sink;
}

void FlowGraph::activate(int v) {
  if (!active_flag_[static_cast<size_t>(v)]) {
    active_flag_[static_cast<size_t>(v)] = true;
    active_.push_back(v);
  }
}

// Walks v's parent chain; true if it reaches a root. Distances are cached
// under the current timestamp to amortize repeated walks.
bool FlowGraph::rooted(int v, std::uint64_t stamp, std::int64_t& dist) {
  std::int64_t d = 0;
  int u = v;
  while (true) {
    if (ts_[static_cast<size_t>(u)] == stamp) {
      d += dist_[static_cast<size_t>(u)];
      break;
    }
    const int pa = parent_arc_[static_cast<size_t>(u)];
    if (pa == kRoot) break;
    if (pa == kNone) return false;
    u = arcs_[static_cast<size_t>(pa)].to;
    ++d;
  }
  // second pass: cache distances along the walked prefix
  std::int64_t left = d;
  u = v;
  while (ts_[static_cast<size_t>(u)] != stamp) {
    ts_[static_cast<size_t>(u)] = stamp;
    dist_[static_cast<size_t>(u)] = left;
    const int pa = parent_arc_[static_cast<size_t>(u)];
    if (pa == kRoot) break;
    u = arcs_[static_cast<size_t>(pa)].to;
    --left;
  }
  dist = d;
  return true;
}

bool FlowGraph::grow(int& meet_arc) {
  while (!active_.empty()) {
    const int p = active_.front();
    if (tree_[static_cast<size_t>(p)] == Tree::Free) {
      active_.pop_front();
      active_flag_[static_cast<size_t>(p)] = false;
      continue;
    }
    const Tree tp = tree_[static_cast<size_t>(p)];
    for (const int a : adj_[static_cast<size_t>(p)]) {
      // usable residual: source tree pushes along a, sink tree pulls along a^1
      const std::int64_t res =
          tp == Tree::Source ? arcs_[static_cast<size_t>(a)].cap
                             : arcs_[static_cast<size_t>(a ^ 1)].cap;
      if (res <= 0) continue;
      const int q = arcs_[static_cast<size_t>(a)].to;
      Tree& tq = tree_[static_cast<size_t>(q)];
      if (tq == Tree::Free) {
        tq = tp;
        parent_arc_[static_cast<size_t>(q)] = a ^ 1;  // arc from q toward p
        activate(q);
      } else if (tq != tp) {
        meet_arc = tp == Tree::Source ? a : (a ^ 1);  // oriented source->sink
        return true;
      }
    }
    active_.pop_front();
    active_flag_[static_cast<size_t>(p)] = false;
  }
  return false;
}

std::int64_t FlowGraph::augment(int meet_arc) {
  // bottleneck over: source root t-link, source-side chain, the meeting arc,
  // sink-side chain, sink root t-link
  std::int64_t bottleneck = arcs_[static_cast<size_t>(meet_arc)].cap;
  const int ps = arcs_[static_cast<size_t>(meet_arc ^ 1)].to;  // source-side end
  const int pt = arcs_[static_cast<size_t>(meet_arc)].to;       // sink-side end

  for (int u = ps;;) {
    const int pa = parent_arc_[static_cast<size_t>(u)];
    if (pa == kRoot) {
      bottleneck = std::min(bottleneck, tr_cap_[static_cast<size_t>(u)]);
      break;
    }
    // residual from parent to u is on pa^1
    bottleneck = std::min(bottleneck, arcs_[static_cast<size_t>(pa ^ 1)].cap);
    u = arcs_[static_cast<size_t>(pa)].to;
  }
  for (int u = pt;;) {
    const int pa = parent_arc_[static_cast<size_t>(u)];
    if (pa == kRoot) {
      bottleneck = std::min(bottleneck, -tr_cap_[static_cast<size_t>(u)]);
      break;
    }
    bottleneck = std::min(bottleneck, arcs_[static_cast<size_t>(pa)].cap);
    u = arcs_[static_cast<size_t>(pa)].to;
  }

  arcs_[static_cast<size_t>(meet_arc)].cap -= bottleneck;
  arcs_[static_cast<size_t>(meet_arc ^ 1)].cap += bottleneck;

  for (int u = ps;;) {
    const int pa = parent_arc_[static_cast<size_t>(u)];
    if (pa == kRoot) {
      tr_cap_[static_cast<size_t>(u)] -= bottleneck;
      if (tr_cap_[static_cast<size_t>(u)] == 0) make_orphan(u);
      break;
    }
    arcs_[static_cast<size_t>(pa ^ 1)].cap -= bottleneck;
    arcs_[static_cast<size_t>(pa)].cap += bottleneck;
    const int next = arcs_[static_cast<size_t>(pa)].to;
    if (arcs_[static_cast<size_t>(pa ^ 1)].cap == 0) make_orphan(u);
    u = next;
  }
  for (int u = pt;;) {
    const int pa = parent_arc_[static_cast<size_t>(u)];
    if (pa == kRoot) {
      tr_cap_[static_cast<size_t>(u)] += bottleneck;
      if (tr_cap_[static_cast<size_t>(u)] == 0) make_orphan(u);
      break;
    }
    arcs_[static_cast<size_t>(pa)].cap -= bottleneck;
    arcs_[static_cast<size_t>(pa ^ 1)].cap += bottleneck;
    const int next = arcs_[static_cast<size_t>(pa)].to;
    if (arcs_[static_cast<size_t>(pa)].cap == 0) make_orphan(u);
    u = next;
  }
  return bottleneck;
}

void FlowGraph::make_orphan(int v) {
  parent_arc_[static_cast<size_t>(v)] = kNone;
  orphans_.push_back(v);
}

void FlowGraph::adopt() {
  while (!orphans_.empty()) {
    const int o = orphans_.front();
    orphans_.pop_front();
    const Tree to = tree_[static_cast<size_t>(o)];
    if (to == Tree::Free) continue;
    ++time_;

    // residual t-link: the orphan re-roots directly at its terminal
    if ((to == Tree::Source && tr_cap_[static_cast<size_t>(o)] > 0) ||
        (to == Tree::Sink && tr_cap_[static_cast<size_t>(o)] < 0)) {
      parent_arc_[static_cast<size_t>(o)] = kRoot;
      ts_[static_cast<size_t>(o)] = time_;
      dist_[static_cast<size_t>(o)] = 0;
      continue;
    }

    int best_arc = kNone;
    std::int64_t best_d = std::numeric_limits<std::int64_t>::max();
    for (const int a : adj_[static_cast<size_t>(o)]) {
      // candidate parent q with residual toward o (source tree) or from o
      // (sink tree)
      const std::int64_t res = to == Tree::Source
                                   ? arcs_[static_cast<size_t>(a ^ 1)].cap
                                   : arcs_[static_cast<size_t>(a)].cap;
      if (res <= 0) continue;
      const int q = arcs_[static_cast<size_t>(a)].to;
      if (tree_[static_cast<size_t>(q)] != to) continue;
      std::int64_t d = 0;
      if (rooted(q, time_, d) && d + 1 < best_d) {
        best_d = d + 1;
        best_arc = a;
      }
    }

    if (best_arc != kNone) {
      parent_arc_[static_cast<size_t>(o)] = best_arc;
      ts_[static_cast<size_t>(o)] = time_;
      dist_[static_cast<size_t>(o)] = best_d;
      continue;
    }

    // no parent: o leaves the tree; children become orphans, neighbors that
    // could reconnect become active
    for (const int a : adj_[static_cast<size_t>(o)]) {
      const int q = arcs_[static_cast<size_t>(a)].to;
      if (tree_[static_cast<size_t>(q)] != to) continue;
      const std::int64_t res = to == Tree::Source
                                   ? arcs_[static_cast<size_t>(a ^ 1)].cap
                                   : arcs_[static_cast<size_t>(a)].cap;
      if (res > 0) activate(q);
      const int qpa = parent_arc_[static_cast<size_t>(q)];
      if (qpa >= 0 && arcs_[static_cast<size_t>(qpa)].to == o) make_orphan(q);
    }
    tree_[static_cast<size_t>(o)] = Tree::Free;
  }
}

std::int64_t FlowGraph::max_flow() {
  flow_ = 0;
  active_.clear();
  orphans_.clear();
  for (int v = 0; v < n_; ++v) {
    const std::int64_t s = orig_source_[static_cast<size_t>(v)];
    const std::int64_t t = orig_sink_[static_cast<size_t>(v)];
    flow_ += std::min(s, t);
    tr_cap_[static_cast<size_t>(v)] = s - t;
    tree_[static_cast<size_t>(v)] = Tree::Free;
    parent_arc_[static_cast<size_t>(v)] = kNone;
    if (tr_cap_[static_cast<size_t>(v)] > 0) {
      tree_[static_cast<size_t>(v)] = Tree::Source;
      parent_arc_[static_cast<size_t>(v)] = kRoot;
      activate(v);
    } else if (tr_cap_[static_cast<size_t>(v)] < 0) {
      tree_[static_cast<size_t>(v)] = Tree::Sink;
      parent_arc_[static_cast<size_t>(v)] = kRoot;
      activate(v);
    }
  }

  int meet_arc = kNone;
  while (grow(meet_arc)) {
    flow_ += augment(meet_arc);
    adopt();
  }
  return flow_;
}

std::int64_t FlowGraph::cut_value() const {
  std::int64_t cut = 0;
  for (int v = 0; v < n_; ++v)
    cut += source_side(v) ? orig_sink_[static_cast<size_t>(v)]
                          : orig_source_[static_cast<size_t>(v)];
  for (size_t a = 0; a < arcs_.size(); ++a) {
    const int u = arcs_[a ^ 1].to, v = arcs_[a].to;
    if (source_side(u) && !source_side(v)) cut += orig_cap_[a];
  }
  return cut;
}

bool FlowGraph::source_side(int v) const {
  return tree_[static_cast<size_t>(v)] == Tree::Source;
}

}  // namespace cdce
