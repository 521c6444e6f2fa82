#pragma once

#include <cstdint>
#include <deque>
#include <vector>

namespace cdce {

// s-t max-flow on grid-like graphs via tree-growing augmenting paths
// (Boykov-Kolmogorov). Terminals are virtual: t-link capacities live on the
// nodes. Capacities are nonnegative integers; callers scale energies into
// fixed point.
class FlowGraph {
 public:
  explicit FlowGraph(int n_nodes);

  void add_edge(int u, int v, std::int64_t cap, std::int64_t rev_cap = 0);
  // t-links: capacity from the source and to the sink (accumulates).
  void add_terminal(int v, std::int64_t from_source, std::int64_t to_sink);

  std::int64_t max_flow();

  // After max_flow(): true if v is on the source side of the min cut.
  bool source_side(int v) const;

  // Capacity of the returned partition's cut; equals max_flow() exactly at
  // optimality (duality certificate, used by tests).
  std::int64_t cut_value() const;

 private:
  enum class Tree : std::uint8_t { Free, Source, Sink };
  static constexpr int kRoot = -1;
  static constexpr int kNone = -2;

  struct Arc {
    int to;
    std::int64_t cap;
  };

  bool grow(int& meet_arc);
  std::int64_t augment(int meet_arc);
  void adopt();
  bool rooted(int v, std::uint64_t stamp, std::int64_t& dist);
  void make_orphan(int v);
  void activate(int v);

  int n_;
  std::vector<Arc> arcs_;  // paired: arc a and a^1 are reverses
  std::vector<std::int64_t> orig_cap_;
  std::vector<std::vector<int>> adj_;
  std::vector<std::int64_t> tr_cap_;  // >0: residual from source; <0: to sink
  std::vector<std::int64_t> orig_source_, orig_sink_;
  std::vector<int> parent_arc_;  // arc from this node toward its parent
  std::vector<Tree> tree_;
  std::vector<std::uint64_t> ts_;
  std::vector<std::int64_t> dist_;
  std::vector<bool> active_flag_;
  std::deque<int> active_;
  std::deque<int> orphans_;
  std::uint64_t time_ = 0;
  std::int64_t flow_ = 0;
};

}  // namespace cdce
