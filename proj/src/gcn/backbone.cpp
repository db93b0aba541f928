#include "caged/gcn/backbone.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "caged/simd/kernels.hpp"

namespace caged::gcn {

void validate_batch(const graph::InteractionGraph& graph, std::span<const Triplet> batch) {
  for (const auto& t : batch) {
    if (t.user >= graph.num_users() || t.pos >= graph.num_items() || t.neg >= graph.num_items())
      throw std::invalid_argument("BPR triplet index out of range");
    if (!graph.has_edge(graph.user_node(t.user), graph.item_node(t.pos)))
      throw std::invalid_argument("BPR triplet positive is not a train interaction");
    if (graph.has_edge(graph.user_node(t.user), graph.item_node(t.neg)))
      throw std::invalid_argument("BPR triplet negative is a train interaction");
  }
}

std::vector<Matrix> propagate(const graph::AggregationMatrix& weights, ConstMatrixView e0, int layers) {
  if (layers < 0) throw std::invalid_argument("propagate: layer count must be >= 0");
  if (e0.rows() != weights.num_nodes()) throw std::invalid_argument("propagate: embedding rows do not match graph");
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(layers) + 1);
  out.push_back(to_matrix(e0));
  for (int l = 1; l <= layers; ++l) out.push_back(graph::spmm(weights, out.back()));
  return out;
}

Matrix pool(std::span<const Matrix> snapshots) {
  if (snapshots.empty()) throw std::invalid_argument("pool: need at least one snapshot");
  Matrix out(snapshots[0].rows(), snapshots[0].cols());
  const auto& k = simd::active();
  for (const auto& s : snapshots) {
    if (s.rows() != out.rows() || s.cols() != out.cols()) throw std::invalid_argument("pool: snapshot shape mismatch");
    k.axpy(1.0, s.data(), out.data(), out.size());
  }
  k.scale(1.0 / static_cast<double>(snapshots.size()), out.data(), out.data(), out.size());
  return out;
}

Matrix pooled_embeddings(const graph::AggregationMatrix& weights, ConstMatrixView e0, int layers) {
  return pool(propagate(weights, e0, layers));
}

double score(ConstMatrixView pooled, std::size_t num_users, std::uint32_t user, std::uint32_t item) {
  return simd::dot(pooled.row(user), pooled.row(num_users + item));
}

double neg_log_sigmoid(double x) {
  // -ln sigmoid(x) = softplus(-x)
  return x >= 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double bpr_loss(std::span<const Triplet> batch, ConstMatrixView pooled, std::size_t num_users, double gamma,
                const optim::ParamStore& theta) {
  if (gamma < 0.0) throw std::invalid_argument("bpr_loss: gamma must be >= 0");
  double loss = 0.0;
  for (const auto& t : batch) {
    const double diff = score(pooled, num_users, t.user, t.pos) - score(pooled, num_users, t.user, t.neg);
    loss += neg_log_sigmoid(diff);
  }
  return loss + gamma * theta.squared_norm();
}

BprGradient bpr_backward(std::span<const Triplet> batch, ConstMatrixView e0, const graph::AggregationMatrix& weights,
                         int layers, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("bpr_backward: gamma must be >= 0");
  const std::size_t m = weights.pattern().num_users;
  const Matrix pooled = pooled_embeddings(weights, e0, layers);
  const auto& k = simd::active();
  const std::size_t dim = e0.cols();

  BprGradient out;
  Matrix g_pooled(pooled.rows(), dim);
  std::vector<double> diff_vec(dim);
  double loss = 0.0;
  for (const auto& t : batch) {
    const auto pu = pooled.row(t.user);
    const auto pi = pooled.row(m + t.pos);
    const auto pj = pooled.row(m + t.neg);
    const double d = k.dot(pu.data(), pi.data(), dim) - k.dot(pu.data(), pj.data(), dim);
    loss += neg_log_sigmoid(d);
    // d/dd of -ln sigmoid(d) = -sigmoid(-d)
    const double g = -sigmoid(-d);
    for (std::size_t c = 0; c < dim; ++c) diff_vec[c] = pi[c] - pj[c];
    k.axpy(g, diff_vec.data(), g_pooled.row(t.user).data(), dim);
    k.axpy(g, pu.data(), g_pooled.row(m + t.pos).data(), dim);
    k.axpy(-g, pu.data(), g_pooled.row(m + t.neg).data(), dim);
  }

  // grad_E0 = 1/(L+1) * sum_l (W^T)^l G
  Matrix acc = g_pooled;
  Matrix cur = std::move(g_pooled);
  Matrix next(cur.rows(), dim);
  for (int l = 1; l <= layers; ++l) {
    graph::spmm_transpose(weights, cur, next.view());
    k.axpy(1.0, next.data(), acc.data(), acc.size());
    std::swap(cur, next);
  }
  k.scale(1.0 / static_cast<double>(layers + 1), acc.data(), acc.data(), acc.size());
  optim::add_l2_gradient(e0.flat(), gamma, acc.flat());
  out.loss = loss + optim::l2_penalty(e0.flat(), gamma);
  out.grad_e0 = std::move(acc);
  return out;
}

Matrix init_embeddings(std::size_t num_nodes, std::size_t dim, double stddev, Rng& rng) {
  Matrix e(num_nodes, dim);
  std::normal_distribution<double> normal(0.0, stddev);
  for (double& x : e.flat()) x = normal(rng);
  return e;
}

std::vector<Triplet> sample_triplets(const graph::InteractionGraph& graph, std::span<const data::Interaction> positives,
                                     Rng& rng) {
  std::vector<Triplet> out;
  out.reserve(positives.size());
  const std::size_t n = graph.num_items();
  if (n == 0) return out;
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
  for (const auto& p : positives) {
    const auto u = graph.user_node(p.user);
    if (graph.degree(u) >= n) continue;
    std::uint32_t j = pick(rng);
    while (graph.has_edge(u, graph.item_node(j))) j = pick(rng);
    out.push_back({p.user, p.item, j});
  }
  return out;
}

}  // namespace caged::gcn
