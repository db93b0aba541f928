#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace caged::train {

enum class Mode {
  kCaged,     // full method
  kBackbone,  // aggregation weights frozen at D^{-1/2} A D^{-1/2}
};

struct TrainConfig {
  std::size_t dim = 256;
  int layers = 3;
  double eta1 = 1e-3;
  double eta2 = 1e-3;
  double gamma = 1e-4;
  double lambda = 1.0;
  double beta = 0.0;
  double epsilon = 1e-2;
  std::size_t batch_size = 2048;
  int max_epochs = 500;
  int patience = 20;
  std::uint64_t seed = 2024;
  std::size_t k = 20;
  double init_std = 0.1;
  int mlp_layers = 3;
  int caged_epochs = 1;
  Mode mode = Mode::kCaged;
  // Ablation switches; all on for the full method.
  bool two_stage = true;
  bool update_condition = true;
  bool momentum = true;
  int iip_bins = 20;

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
  /// Applies one key=value pair. Unknown keys throw with the list of valid keys.
  void set(const std::string& key, const std::string& value);
  /// Flat key=value listing in canonical key order (round-trips through set()).
  std::map<std::string, std::string> to_map() const;

  static const std::vector<std::string>& keys();
  /// Named ablation variants: "wo-ts", "wo-uc", "wo-mu".
  void apply_ablation(const std::string& name);
};

/// Reads a flat key=value file ('#' starts a comment) into `config`.
void load_config_file(const std::filesystem::path& file, TrainConfig& config);

}  // namespace caged::train
