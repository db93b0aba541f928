#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "caged/core/matrix.hpp"
#include "caged/graph/graph.hpp"

namespace caged::graph {

/// Per-edge aggregation weights over the adjacency pattern. Values are stored
/// in pattern order, so two matrices on the same graph align entry by entry.
class AggregationMatrix {
 public:
  AggregationMatrix(std::shared_ptr<const SparsePattern> pattern, std::vector<double> values);

  const SparsePattern& pattern() const { return *pattern_; }
  std::shared_ptr<const SparsePattern> shared_pattern() const { return pattern_; }
  std::size_t num_nodes() const { return pattern_->num_nodes(); }
  std::size_t nnz() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<const double> row_values(Node v) const {
    return {values_.data() + pattern_->offsets[v], pattern_->offsets[v + 1] - pattern_->offsets[v]};
  }
  // 0 when (v, x) is not an edge.
  double at(Node v, Node x) const;
  double row_sum(Node v) const;

  bool same_pattern(const AggregationMatrix& other) const;

  friend bool operator==(const AggregationMatrix& a, const AggregationMatrix& b) {
    return a.same_pattern(b) && a.values_ == b.values_;
  }

 private:
  std::shared_ptr<const SparsePattern> pattern_;
  std::vector<double> values_;
};

/// D^{-1/2} A D^{-1/2}: entry (v, x) = 1 / sqrt(deg(v) deg(x)).
AggregationMatrix normalized_adjacency(const InteractionGraph& graph);

/// F(v) = sum over neighbours x of 1 / sqrt(deg(v) deg(x)). Throws std::domain_error for deg(v) = 0.
double normalizer(const InteractionGraph& graph, Node v);

/// p(x | v) = deg(x)^{-1/2} / sum_{x' in N(v)} deg(x')^{-1/2}. Throws std::domain_error when x is not a neighbour of v.
double history_likelihood(const InteractionGraph& graph, Node center, Node neighbor);

/// out = W * in. Rows of zero-degree nodes come out zero.
void spmm(const AggregationMatrix& weights, ConstMatrixView in, MatrixView out);
Matrix spmm(const AggregationMatrix& weights, ConstMatrixView in);
/// out = W^T * in, walking the mirrored entries of the symmetric pattern.
void spmm_transpose(const AggregationMatrix& weights, ConstMatrixView in, MatrixView out);

/// Binary snapshot: u64 M, N, nnz; u64 row offsets [M+N+1]; u32 column
/// indices [nnz]; f64 values [nnz]; all little-endian.
void write_snapshot(const AggregationMatrix& weights, std::ostream& os);
void write_snapshot(const AggregationMatrix& weights, const std::filesystem::path& file);
/// Reads a snapshot and checks that its pattern equals the graph's.
AggregationMatrix read_snapshot(const InteractionGraph& graph, std::istream& is);
AggregationMatrix read_snapshot(const InteractionGraph& graph, const std::filesystem::path& file);

}  // namespace caged::graph
