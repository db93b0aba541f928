#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "caged/data/ingest.hpp"
#include "caged/eval/metrics.hpp"
#include "caged/graph/aggregation.hpp"
#include "caged/graph/graph.hpp"
#include "caged/optim/adam.hpp"
#include "caged/optim/param_store.hpp"
#include "caged/train/config.hpp"
#include "caged/vae/caged.hpp"

namespace caged::train {

/// (1 - epsilon) * current + epsilon * w_caged, entrywise over a shared pattern.
graph::AggregationMatrix momentum_update(const graph::AggregationMatrix& current, const graph::AggregationMatrix& w_caged,
                                         double epsilon);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_recall = 0.0;
  bool updated = false;
  double caged_elbo = 0.0;  // mean ELBO of the last CAGED epoch; 0 when not trained this epoch
};

struct TrainState {
  explicit TrainState(graph::AggregationMatrix initial);

  graph::AggregationMatrix weights;  // current aggregation matrix
  optim::ParamStore backbone;        // "embedding": (M+N) x K
  std::optional<vae::CagedParams> caged;
  optim::AdamState backbone_adam;
  optim::AdamState caged_adam;
  double best_val_recall = -1.0;
  int epoch = 0;
  bool caged_pretrained = false;  // w/o-TS: CAGED trained once, then frozen
  std::vector<EpochLog> log;

  ConstMatrixView embeddings() const { return backbone[0].matrix(); }
};

/// Everything a run needs that is derived once from the dataset.
struct TrainContext {
  const data::IndexedDataset& dataset;
  graph::InteractionGraph graph;
  graph::AggregationMatrix initial_weights;

  explicit TrainContext(const data::IndexedDataset& ds);
};

TrainState init_state(const TrainContext& ctx, const TrainConfig& config);

/// Pooled embeddings under the state's current weights.
Matrix current_pooled(const TrainState& state, const TrainConfig& config);

/// Stage 1: one BPR pass over shuffled train pairs with fresh negatives.
/// Returns the mean batch loss. Throws TrainingDiverged on a non-finite loss.
double train_epoch_backbone(TrainState& state, const TrainContext& ctx, const TrainConfig& config, int epoch);

/// True iff `val_recall` strictly beats the best recorded value (which is then
/// updated). With the gate disabled it always returns true.
bool update_condition(TrainState& state, double val_recall, bool gate_enabled = true);

/// Stage 2: one pass over all directed edges on frozen pooled embeddings.
/// Returns the mean ELBO over visited edges.
double train_epoch_caged(TrainState& state, const TrainContext& ctx, const TrainConfig& config, ConstMatrixView pooled,
                         int epoch);

struct RunHooks {
  // After each epoch, with the state as left by that epoch.
  std::function<void(const EpochLog&, const TrainState&)> on_epoch;
  // After an aggregation update at `epoch`, with the matrix before and after.
  std::function<void(int epoch, const graph::AggregationMatrix& before, const TrainState&)> on_update;
};

struct RunResult {
  TrainState final_state;
  std::vector<EpochLog> history;
  // Best-validation snapshot used for the test report.
  Matrix best_embeddings;
  std::optional<graph::AggregationMatrix> best_weights;
  int best_epoch = 0;
  eval::EvalReport test_report;
  bool diverged = false;
  std::string divergence_reason;
  int divergence_epoch = 0;
};

/// Two-stage loop with the validation-gated CAGED update and momentum blend.
/// Divergence (non-finite loss, gradient or weights) is reported in the
/// result instead of thrown.
RunResult run(const TrainConfig& config, const data::IndexedDataset& dataset, const RunHooks& hooks = {});

}  // namespace caged::train
