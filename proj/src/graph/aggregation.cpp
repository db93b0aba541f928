#include "caged/graph/aggregation.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "caged/core/binary_io.hpp"
#include "caged/simd/kernels.hpp"

namespace caged::graph {

AggregationMatrix::AggregationMatrix(std::shared_ptr<const SparsePattern> pattern, std::vector<double> values)
    : pattern_(std::move(pattern)), values_(std::move(values)) {
  if (!pattern_ || values_.size() != pattern_->nnz())
    throw std::invalid_argument("AggregationMatrix: value count does not match pattern");
}

double AggregationMatrix::at(Node v, Node x) const {
  const std::size_t e = pattern_->find(v, x);
  return e == nnz() ? 0.0 : values_[e];
}

double AggregationMatrix::row_sum(Node v) const {
  double s = 0.0;
  for (double w : row_values(v)) s += w;
  return s;
}

bool AggregationMatrix::same_pattern(const AggregationMatrix& other) const {
  return pattern_ == other.pattern_ || *pattern_ == *other.pattern_;
}

AggregationMatrix normalized_adjacency(const InteractionGraph& graph) {
  const auto& p = graph.pattern();
  std::vector<double> values(p.nnz());
  for (Node v = 0; v < p.num_nodes(); ++v) {
    const double dv = static_cast<double>(graph.degree(v));
    for (std::size_t e = p.offsets[v]; e < p.offsets[v + 1]; ++e) {
      values[e] = 1.0 / std::sqrt(dv * static_cast<double>(graph.degree(p.cols[e])));
    }
  }
  return AggregationMatrix(graph.shared_pattern(), std::move(values));
}

double normalizer(const InteractionGraph& graph, Node v) {
  const std::size_t dv = graph.degree(v);
  if (dv == 0) throw std::domain_error("normalizer: node has no neighbours");
  double s = 0.0;
  for (Node x : graph.neighbors(v)) s += 1.0 / std::sqrt(static_cast<double>(dv) * static_cast<double>(graph.degree(x)));
  return s;
}

double history_likelihood(const InteractionGraph& graph, Node center, Node neighbor) {
  if (!graph.has_edge(center, neighbor)) throw std::domain_error("history_likelihood: not a neighbour of the center");
  double denom = 0.0;
  for (Node x : graph.neighbors(center)) denom += 1.0 / std::sqrt(static_cast<double>(graph.degree(x)));
  return (1.0 / std::sqrt(static_cast<double>(graph.degree(neighbor)))) / denom;
}

namespace {

void check_shapes(const AggregationMatrix& w, ConstMatrixView in, MatrixView out) {
  if (in.rows() != w.num_nodes() || out.rows() != w.num_nodes() || in.cols() != out.cols())
    throw std::invalid_argument("spmm: shape mismatch");
  if (in.data() == out.data()) throw std::invalid_argument("spmm: input and output must not alias");
}

}  // namespace

void spmm(const AggregationMatrix& weights, ConstMatrixView in, MatrixView out) {
  check_shapes(weights, in, out);
  const auto& p = weights.pattern();
  const auto& k = simd::active();
  const auto vals = weights.values();
  const std::size_t cols = in.cols();
  for (Node v = 0; v < p.num_nodes(); ++v) {
    double* dst = out.row(v).data();
    std::fill(dst, dst + cols, 0.0);
    for (std::size_t e = p.offsets[v]; e < p.offsets[v + 1]; ++e) k.axpy(vals[e], in.row(p.cols[e]).data(), dst, cols);
  }
}

Matrix spmm(const AggregationMatrix& weights, ConstMatrixView in) {
  Matrix out(in.rows(), in.cols());
  spmm(weights, in, out.view());
  return out;
}

void spmm_transpose(const AggregationMatrix& weights, ConstMatrixView in, MatrixView out) {
  check_shapes(weights, in, out);
  const auto& p = weights.pattern();
  const auto& k = simd::active();
  const auto vals = weights.values();
  const std::size_t cols = in.cols();
  // (W^T)[v, x] = W[x, v], stored at the mirrored position.
  for (Node v = 0; v < p.num_nodes(); ++v) {
    double* dst = out.row(v).data();
    std::fill(dst, dst + cols, 0.0);
    for (std::size_t e = p.offsets[v]; e < p.offsets[v + 1]; ++e)
      k.axpy(vals[p.reverse[e]], in.row(p.cols[e]).data(), dst, cols);
  }
}

void write_snapshot(const AggregationMatrix& weights, std::ostream& os) {
  const auto& p = weights.pattern();
  binio::put_u64(os, p.num_users);
  binio::put_u64(os, p.num_items);
  binio::put_u64(os, p.nnz());
  for (std::size_t off : p.offsets) binio::put_u64(os, off);
  for (Node c : p.cols) binio::put_u32(os, c);
  for (double v : weights.values()) binio::put_f64(os, v);
  if (!os) throw std::runtime_error("write_snapshot: write failed");
}

void write_snapshot(const AggregationMatrix& weights, const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + file.string());
  write_snapshot(weights, os);
}

AggregationMatrix read_snapshot(const InteractionGraph& graph, std::istream& is) {
  const auto& p = graph.pattern();
  const auto m = binio::get_u64(is);
  const auto n = binio::get_u64(is);
  const auto nnz = binio::get_u64(is);
  if (m != p.num_users || n != p.num_items || nnz != p.nnz())
    throw std::runtime_error("read_snapshot: header does not match the graph");
  for (std::size_t i = 0; i < p.offsets.size(); ++i)
    if (binio::get_u64(is) != p.offsets[i]) throw std::runtime_error("read_snapshot: row offsets differ from graph");
  for (std::size_t i = 0; i < p.cols.size(); ++i)
    if (binio::get_u32(is) != p.cols[i]) throw std::runtime_error("read_snapshot: column indices differ from graph");
  std::vector<double> values(nnz);
  for (auto& v : values) {
    v = binio::get_f64(is);
    if (!(std::isfinite(v) && v > 0.0)) throw std::runtime_error("read_snapshot: weights must be positive and finite");
  }
  return AggregationMatrix(graph.shared_pattern(), std::move(values));
}

AggregationMatrix read_snapshot(const InteractionGraph& graph, const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + file.string());
  return read_snapshot(graph, is);
}

}  // namespace caged::graph
