#include "caged/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "caged/core/error.hpp"
#include "caged/core/log.hpp"
#include "caged/core/rng.hpp"
#include "caged/gcn/backbone.hpp"

namespace caged::train {

graph::AggregationMatrix momentum_update(const graph::AggregationMatrix& current, const graph::AggregationMatrix& w_caged,
                                         double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("momentum_update: epsilon must lie in [0, 1]");
  if (!current.same_pattern(w_caged)) throw std::invalid_argument("momentum_update: sparsity patterns differ");
  const auto a = current.values();
  const auto w = w_caged.values();
  std::vector<double> out(a.size());
  const double keep = 1.0 - epsilon;
  for (std::size_t e = 0; e < a.size(); ++e) out[e] = keep * a[e] + epsilon * w[e];
  return graph::AggregationMatrix(current.shared_pattern(), std::move(out));
}

TrainState::TrainState(graph::AggregationMatrix initial) : weights(std::move(initial)) {}

TrainContext::TrainContext(const data::IndexedDataset& ds)
    : dataset(ds), graph(graph::build_graph(ds)), initial_weights(graph::normalized_adjacency(graph)) {}

TrainState init_state(const TrainContext& ctx, const TrainConfig& config) {
  config.validate();
  TrainState s(ctx.initial_weights);
  Rng emb_rng = make_rng(config.seed, Stream::kEmbeddingInit);
  Matrix e0 = gcn::init_embeddings(ctx.graph.num_nodes(), config.dim, config.init_std, emb_rng);
  s.backbone.add("embedding", {e0.rows(), e0.cols()}, std::vector<double>(e0.flat().begin(), e0.flat().end()));
  s.backbone_adam = optim::AdamState::for_params(s.backbone);
  if (config.mode == Mode::kCaged) {
    Rng caged_rng = make_rng(config.seed, Stream::kCagedInit);
    s.caged = vae::CagedParams::random(config.dim, config.mlp_layers, caged_rng);
    s.caged_adam = optim::AdamState::for_params(s.caged->store());
  }
  return s;
}

Matrix current_pooled(const TrainState& state, const TrainConfig& config) {
  return gcn::pooled_embeddings(state.weights, state.embeddings(), config.layers);
}

double train_epoch_backbone(TrainState& state, const TrainContext& ctx, const TrainConfig& config, int epoch) {
  std::vector<data::Interaction> order = ctx.dataset.train;
  Rng shuffle_rng = make_rng(config.seed, Stream::kShuffle, static_cast<std::uint64_t>(epoch));
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  Rng neg_rng = make_rng(config.seed, Stream::kNegatives, static_cast<std::uint64_t>(epoch));

  double loss_sum = 0.0;
  std::size_t batches = 0;
  optim::Gradients grads = optim::Gradients::zeros_like(state.backbone);
  for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
    const std::size_t end = std::min(order.size(), start + config.batch_size);
    const auto triplets = gcn::sample_triplets(
        ctx.graph, std::span<const data::Interaction>(order.data() + start, end - start), neg_rng);
    if (triplets.empty()) continue;
    auto g = gcn::bpr_backward(triplets, state.embeddings(), state.weights, config.layers, config.gamma);
    if (!std::isfinite(g.loss)) throw TrainingDiverged("BPR loss became non-finite", epoch);
    grads.values[0].assign(g.grad_e0.flat().begin(), g.grad_e0.flat().end());
    try {
      optim::adam_step(state.backbone, grads, state.backbone_adam, config.eta1);
    } catch (const NonFiniteGradient& e) {
      throw TrainingDiverged(e.what(), epoch);
    }
    loss_sum += g.loss;
    ++batches;
  }
  if (!state.backbone.all_finite()) throw TrainingDiverged("embeddings became non-finite", epoch);
  return batches == 0 ? 0.0 : loss_sum / static_cast<double>(batches);
}

bool update_condition(TrainState& state, double val_recall, bool gate_enabled) {
  const bool improved = val_recall > state.best_val_recall;
  if (improved) state.best_val_recall = val_recall;
  return !gate_enabled || improved;
}

double train_epoch_caged(TrainState& state, const TrainContext& ctx, const TrainConfig& config, ConstMatrixView pooled,
                         int epoch) {
  if (!state.caged) throw std::logic_error("train_epoch_caged: state has no CAGED parameters");
  const auto& p = ctx.graph.pattern();
  std::vector<vae::DirectedEdge> edges;
  edges.reserve(p.nnz());
  for (graph::Node v = 0; v < p.num_nodes(); ++v)
    for (graph::Node x : p.row(v)) edges.push_back({v, x});
  Rng shuffle_rng = make_rng(config.seed, Stream::kCagedShuffle, static_cast<std::uint64_t>(epoch));
  std::shuffle(edges.begin(), edges.end(), shuffle_rng);
  Rng noise_rng = make_rng(config.seed, Stream::kCagedNoise, static_cast<std::uint64_t>(epoch));
  std::normal_distribution<double> normal(0.0, 1.0);

  double sum = 0.0;
  for (std::size_t start = 0; start < edges.size(); start += config.batch_size) {
    const std::size_t end = std::min(edges.size(), start + config.batch_size);
    const std::span<const vae::DirectedEdge> batch(edges.data() + start, end - start);
    Matrix taus(batch.size(), config.dim);
    for (double& t : taus.flat()) t = normal(noise_rng);
    auto g = vae::caged_backward(batch, pooled, *state.caged, taus, config.lambda, config.beta);
    if (!std::isfinite(g.mean_elbo)) throw TrainingDiverged("ELBO became non-finite", epoch);
    try {
      optim::adam_step(state.caged->store(), g.grads, state.caged_adam, config.eta2);
    } catch (const NonFiniteGradient& e) {
      throw TrainingDiverged(e.what(), epoch);
    }
    sum += g.mean_elbo * static_cast<double>(batch.size());
  }
  return edges.empty() ? 0.0 : sum / static_cast<double>(edges.size());
}

namespace {

bool weights_finite(const graph::AggregationMatrix& w) {
  return std::all_of(w.values().begin(), w.values().end(), [](double x) { return std::isfinite(x) && x > 0.0; });
}

}  // namespace

RunResult run(const TrainConfig& config, const data::IndexedDataset& dataset, const RunHooks& hooks) {
  config.validate();
  TrainContext ctx(dataset);
  RunResult result{init_state(ctx, config)};
  TrainState& state = result.final_state;
  result.best_embeddings = to_matrix(state.embeddings());
  result.best_weights = state.weights;
  const bool use_caged = config.mode == Mode::kCaged;

  int since_best = 0;
  double best_for_stop = -1.0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    EpochLog entry;
    entry.epoch = epoch;
    try {
      entry.train_loss = train_epoch_backbone(state, ctx, config, epoch);
      const Matrix pooled = current_pooled(state, config);
      entry.val_recall = eval::mean_recall(ctx.graph, pooled, dataset.validation, config.k);

      const bool improved = entry.val_recall > best_for_stop;
      if (improved) {
        best_for_stop = entry.val_recall;
        result.best_embeddings = to_matrix(state.embeddings());
        result.best_weights = state.weights;
        result.best_epoch = epoch;
        since_best = 0;
      } else {
        ++since_best;
      }

      if (use_caged && update_condition(state, entry.val_recall, config.update_condition)) {
        if (config.two_stage || !state.caged_pretrained) {
          for (int rep = 0; rep < config.caged_epochs; ++rep)
            entry.caged_elbo = train_epoch_caged(state, ctx, config, pooled, epoch * config.caged_epochs + rep);
          state.caged_pretrained = true;
        }
        auto w = vae::generate_weight_matrix(ctx.graph, pooled, *state.caged, config.lambda, config.beta);
        graph::AggregationMatrix before = state.weights;
        state.weights = config.momentum ? momentum_update(state.weights, w, config.epsilon) : std::move(w);
        if (!weights_finite(state.weights)) throw TrainingDiverged("aggregation weights became non-finite", epoch);
        entry.updated = true;
        if (hooks.on_update) hooks.on_update(epoch, before, state);
      }
    } catch (const TrainingDiverged& e) {
      result.diverged = true;
      result.divergence_reason = e.what();
      result.divergence_epoch = epoch;
      log::info("training diverged at epoch ", epoch, ": ", e.what());
      break;
    }
    state.epoch = epoch;
    state.log.push_back(entry);
    result.history.push_back(entry);
    log::debug("epoch ", epoch, " loss=", entry.train_loss, " val_recall=", entry.val_recall,
               entry.updated ? " (updated)" : "");
    if (hooks.on_epoch) hooks.on_epoch(entry, state);
    if (since_best >= config.patience) break;
  }

  const Matrix pooled = gcn::pooled_embeddings(*result.best_weights, result.best_embeddings, config.layers);
  result.test_report = eval::evaluate(ctx.graph, pooled, dataset.test, config.k, static_cast<std::size_t>(config.iip_bins));
  return result;
}

}  // namespace caged::train
