#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "caged/data/ingest.hpp"

namespace caged::graph {

using Node = std::uint32_t;

/// Row-compressed symmetric sparsity pattern over the unified node space
/// [0, M+N): users first, then items offset by M. Columns in each row are
/// sorted ascending. `reverse[e]` is the position of the mirrored edge, so a
/// transposed product can walk the same layout.
struct SparsePattern {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<std::size_t> offsets;  // size num_nodes + 1
  std::vector<Node> cols;            // size nnz
  std::vector<std::size_t> reverse;  // size nnz

  std::size_t num_nodes() const { return num_users + num_items; }
  std::size_t nnz() const { return cols.size(); }
  std::span<const Node> row(Node v) const { return {cols.data() + offsets[v], offsets[v + 1] - offsets[v]}; }
  // Position of (v, x) in cols, or nnz() when absent.
  std::size_t find(Node v, Node x) const;

  friend bool operator==(const SparsePattern&, const SparsePattern&) = default;
};

/// Immutable bipartite interaction graph built from train edges only.
class InteractionGraph {
 public:
  InteractionGraph(std::size_t num_users, std::size_t num_items, std::span<const data::Interaction> edges);

  std::size_t num_users() const { return pattern_->num_users; }
  std::size_t num_items() const { return pattern_->num_items; }
  std::size_t num_nodes() const { return pattern_->num_nodes(); }
  // Undirected edge count |E|.
  std::size_t num_edges() const { return pattern_->nnz() / 2; }

  Node user_node(std::uint32_t u) const { return u; }
  Node item_node(std::uint32_t i) const { return static_cast<Node>(num_users() + i); }
  bool is_user(Node v) const { return v < num_users(); }

  std::span<const Node> neighbors(Node v) const { return pattern_->row(v); }
  std::size_t degree(Node v) const { return pattern_->offsets[v + 1] - pattern_->offsets[v]; }
  std::size_t item_degree(std::uint32_t i) const { return degree(item_node(i)); }
  bool has_edge(Node v, Node x) const { return pattern_->find(v, x) != pattern_->nnz(); }

  const SparsePattern& pattern() const { return *pattern_; }
  std::shared_ptr<const SparsePattern> shared_pattern() const { return pattern_; }

 private:
  std::shared_ptr<const SparsePattern> pattern_;
};

InteractionGraph build_graph(const data::IndexedDataset& dataset);

}  // namespace caged::graph
