#include "caged/cli/app.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "caged/cli/synth.hpp"
#include "caged/core/error.hpp"
#include "caged/data/ingest.hpp"
#include "caged/eval/metrics.hpp"
#include "caged/gcn/backbone.hpp"
#include "caged/graph/aggregation.hpp"
#include "caged/optim/param_store.hpp"
#include "caged/simd/kernels.hpp"
#include "caged/train/config.hpp"
#include "caged/train/trainer.hpp"
#include "caged/vae/caged.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace caged::cli {
namespace {

// Usage / configuration problems (exit 1), as opposed to runtime failures (exit 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string resolve_delimiter(const std::string& format) {
  if (format.empty() || format == "tsv") return "\t";
  if (format == "csv") return ",";
  if (format == "movielens") return "::";
  if (format == "space") return " ";
  return format;
}

std::string epoch_dir_name(int epoch) {
  std::ostringstream os;
  os << "epoch_" << std::setw(4) << std::setfill('0') << epoch;
  return os.str();
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
}

void write_checkpoint(const fs::path& dir, int epoch, const train::TrainConfig& config,
                      const graph::InteractionGraph& graph, const graph::AggregationMatrix& weights,
                      const optim::ParamStore& backbone, const std::optional<vae::CagedParams>& caged) {
  fs::create_directories(dir);
  graph::write_snapshot(weights, dir / "aggregation.bin");
  optim::write_params(backbone, dir / "embedding.bin");
  if (caged) vae::write_caged(*caged, dir / "caged.bin");
  nlohmann::ordered_json meta;
  meta["epoch"] = epoch;
  meta["layers"] = config.layers;
  meta["dim"] = config.dim;
  write_text(dir / "meta.json", meta.dump(2) + "\n");
  eval::write_histogram_csv(eval::edge_iip_histogram(graph, weights, static_cast<std::size_t>(config.iip_bins)),
                            dir / "iip.csv");
}

std::string epoch_json(const train::EpochLog& e) {
  nlohmann::ordered_json j;
  j["epoch"] = e.epoch;
  j["train_loss"] = e.train_loss;
  j["val_recall"] = e.val_recall;
  j["updated"] = e.updated;
  return j.dump();
}

// ---- subcommands -------------------------------------------------------------

struct PrepareArgs {
  std::string input;
  std::string out;
  std::string format = "tsv";
  std::optional<double> threshold;
  std::uint64_t seed = 2024;
};

int cmd_prepare(const PrepareArgs& a, std::ostream& out) {
  if (!fs::exists(a.input)) throw std::runtime_error("input file not found: " + a.input);
  auto records = data::load_interactions(a.input, resolve_delimiter(a.format));
  if (a.threshold) records = data::binarize(records, *a.threshold);
  records = data::deduplicate(records);
  const auto ds = data::split(records, {}, a.seed);
  data::save_dataset(ds, a.out);
  const double density = static_cast<double>(records.size()) /
                         (static_cast<double>(ds.num_users) * static_cast<double>(ds.num_items));
  out << "users=" << ds.num_users << " items=" << ds.num_items << " interactions=" << records.size()
      << " density=" << std::fixed << std::setprecision(5) << density << std::defaultfloat << " train="
      << ds.train.size() << " validation=" << ds.validation.size() << " test=" << ds.test.size()
      << " repaired_users=" << ds.repaired_users.size() << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string data;
  std::string out;
};

int cmd_train(const TrainArgs& a, const train::TrainConfig& config, std::ostream& out, std::ostream& err) {
  const auto ds = data::load_dataset(a.data);
  const fs::path root(a.out);
  fs::create_directories(root / "checkpoints");
  {
    std::ostringstream cfg;
    for (const auto& [k, v] : config.to_map()) cfg << k << '=' << v << '\n';
    write_text(root / "config.txt", cfg.str());
  }
  const auto graph = graph::build_graph(ds);
  std::ofstream progress(root / "progress.jsonl");
  if (!progress) throw std::runtime_error("cannot write progress log");

  {
    // Initial checkpoint (epoch 0), identical to what run() starts from.
    const train::TrainContext ctx(ds);
    const auto s0 = train::init_state(ctx, config);
    write_checkpoint(root / "checkpoints" / epoch_dir_name(0), 0, config, graph, s0.weights, s0.backbone, s0.caged);
  }

  train::RunHooks hooks;
  hooks.on_epoch = [&](const train::EpochLog& e, const train::TrainState&) {
    progress << epoch_json(e) << '\n';
    progress.flush();
  };
  hooks.on_update = [&](int epoch, const graph::AggregationMatrix&, const train::TrainState& s) {
    write_checkpoint(root / "checkpoints" / epoch_dir_name(epoch), epoch, config, graph, s.weights, s.backbone, s.caged);
  };
  const auto result = train::run(config, ds, hooks);

  {
    optim::ParamStore best;
    best.add("embedding", {result.best_embeddings.rows(), result.best_embeddings.cols()},
             std::vector<double>(result.best_embeddings.flat().begin(), result.best_embeddings.flat().end()));
    write_checkpoint(root / "best", result.best_epoch, config, graph, *result.best_weights, best, std::nullopt);
  }
  write_text(root / "report.json", eval::report_to_json(result.test_report) + "\n");
  eval::write_histogram_csv(result.test_report.iip_histogram, root / "iip_histogram.csv");

  if (result.diverged) {
    nlohmann::ordered_json f;
    f["status"] = "diverged";
    f["epoch"] = result.divergence_epoch;
    f["reason"] = result.divergence_reason;
    write_text(root / "failure.json", f.dump(2) + "\n");
    err << "training diverged at epoch " << result.divergence_epoch << ": " << result.divergence_reason << '\n';
    return kExitDiverged;
  }
  out << "epochs=" << result.history.size() << " best_epoch=" << result.best_epoch
      << " test_recall@" << result.test_report.k << '=' << result.test_report.all.recall
      << " niche_recall=" << result.test_report.niche.recall << '\n';
  return kExitOk;
}

struct EvaluateArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::optional<std::size_t> k;
  int bins = 20;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto ds = data::load_dataset(a.data);
  const auto graph = graph::build_graph(ds);
  const fs::path ck(a.checkpoint);
  std::ifstream meta_in(ck / "meta.json");
  if (!meta_in) throw std::runtime_error("checkpoint has no meta.json: " + ck.string());
  const auto meta = nlohmann::json::parse(meta_in);
  const int layers = meta.at("layers").get<int>();
  const auto weights = graph::read_snapshot(graph, ck / "aggregation.bin");
  const auto params = optim::read_params(ck / "embedding.bin");
  const auto& emb = params.get("embedding");
  if (emb.shape.size() != 2 || emb.shape[0] != graph.num_nodes())
    throw std::runtime_error("checkpoint embeddings do not match the dataset");
  const Matrix pooled = gcn::pooled_embeddings(weights, emb.matrix(), layers);
  const auto report = eval::evaluate(graph, pooled, ds.test, a.k.value_or(20), static_cast<std::size_t>(a.bins));
  const std::string json = eval::report_to_json(report);
  out << json << '\n';
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "report.json", json + "\n");
    eval::write_histogram_csv(report.iip_histogram, fs::path(a.out) / "iip_histogram.csv");
    eval::write_histogram_csv(eval::edge_iip_histogram(graph, weights, static_cast<std::size_t>(a.bins)),
                              fs::path(a.out) / "edge_iip_histogram.csv");
  }
  return kExitOk;
}

struct ReportArgs {
  std::string run;
  std::string out;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const fs::path root(a.run);
  std::ifstream progress(root / "progress.jsonl");
  if (!progress) throw std::runtime_error("run directory has no progress.jsonl: " + root.string());
  std::ostringstream csv;
  csv << "kind,stage,epoch,train_loss,val_recall,updated,bin_left,bin_right,count\n";
  std::string line;
  while (std::getline(progress, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    csv << "progress,," << j.at("epoch").get<int>() << ',' << j.at("train_loss").get<double>() << ','
        << j.at("val_recall").get<double>() << ',' << (j.at("updated").get<bool>() ? 1 : 0) << ",,,\n";
  }
  std::vector<fs::path> stages;
  if (fs::exists(root / "checkpoints"))
    for (const auto& entry : fs::directory_iterator(root / "checkpoints"))
      if (entry.is_directory() && fs::exists(entry.path() / "iip.csv")) stages.push_back(entry.path());
  std::sort(stages.begin(), stages.end());
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const std::string stage = s == 0 ? "before" : (s + 1 == stages.size() ? "after" : "during");
    const int epoch = std::stoi(stages[s].filename().string().substr(6));
    std::ifstream hist(stages[s] / "iip.csv");
    std::getline(hist, line);  // header
    while (std::getline(hist, line))
      if (!line.empty()) csv << "iip," << stage << ',' << epoch << ",,,," << line << '\n';
  }
  if (a.out.empty()) {
    out << csv.str();
  } else {
    write_text(a.out, csv.str());
    out << "wrote " << a.out << '\n';
  }
  return kExitOk;
}

struct SynthArgs {
  SynthSpec spec;
  std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  std::vector<data::RawInteraction> records;
  try {
    records = synthesize(a.spec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  write_interactions(records, a.out);
  out << "wrote " << records.size() << " interactions to " << a.out << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"CAGED: causal graph aggregation weights for popularity debiasing"};
  app.require_subcommand(1);
  std::string isa = "auto";
  app.add_option("--isa", isa, "Kernel variant: auto|scalar|avx2")->capture_default_str();

  // prepare
  PrepareArgs prep;
  double threshold = 0.0;
  auto* prepare = app.add_subcommand("prepare", "Load, binarize and split an interaction file");
  prepare->add_option("--input", prep.input, "Interaction file")->required();
  prepare->add_option("--out", prep.out, "Output dataset directory")->required();
  prepare->add_option("--format", prep.format, "tsv|csv|movielens|space or a literal delimiter")->capture_default_str();
  auto* thr_opt = prepare->add_option("--threshold", threshold, "Keep ratings >= threshold (omit for no binarization)");
  prepare->add_option("--seed", prep.seed, "Split seed")->capture_default_str();

  // train
  TrainArgs targs;
  std::string config_file;
  std::vector<std::string> sets;
  std::string ablation;
  train::TrainConfig cfg_flags;
  auto* trn = app.add_subcommand("train", "Run two-stage training with momentum weight updates");
  trn->add_option("--data", targs.data, "Prepared dataset directory")->required();
  trn->add_option("--out", targs.out, "Run output directory")->required();
  trn->add_option("--config", config_file, "Flat key=value config file");
  trn->add_option("--set", sets, "Override: key=value (repeatable)");
  trn->add_option("--ablation", ablation, "wo-ts|wo-uc|wo-mu");
  std::map<std::string, std::string> flag_values;
  const std::vector<std::pair<std::string, std::string>> flag_keys = {
      {"--seed", "seed"},     {"--k", "k"},         {"--epochs", "max_epochs"}, {"--eta1", "eta1"},
      {"--eta2", "eta2"},     {"--gamma", "gamma"}, {"--lambda", "lambda"},     {"--beta", "beta"},
      {"--epsilon", "epsilon"}, {"--layers", "layers"}, {"--dim", "dim"},      {"--batch-size", "batch_size"},
      {"--mode", "mode"}};
  for (const auto& [flag, key] : flag_keys) trn->add_option(flag, flag_values[key], "Sets config key '" + key + "'");

  // evaluate
  EvaluateArgs eargs;
  std::size_t eval_k = 20;
  auto* evl = app.add_subcommand("evaluate", "Evaluate a checkpoint on the test split");
  evl->add_option("--checkpoint", eargs.checkpoint, "Checkpoint directory")->required();
  evl->add_option("--data", eargs.data, "Prepared dataset directory")->required();
  auto* k_opt = evl->add_option("--k", eval_k, "Cutoff K")->capture_default_str();
  evl->add_option("--out", eargs.out, "Directory for report.json and histogram CSVs");
  evl->add_option("--bins", eargs.bins, "IIP histogram bins")->capture_default_str();

  // report
  ReportArgs rargs;
  auto* rep = app.add_subcommand("report", "Concatenate progress log and IIP histograms into one CSV");
  rep->add_option("--run", rargs.run, "Run output directory")->required();
  rep->add_option("--out", rargs.out, "CSV file (stdout when omitted)");

  // synth
  SynthArgs sargs;
  auto* syn = app.add_subcommand("synth", "Generate a synthetic long-tail interaction file");
  syn->add_option("--users", sargs.spec.users)->capture_default_str();
  syn->add_option("--items", sargs.spec.items)->capture_default_str();
  syn->add_option("--interactions", sargs.spec.interactions)->capture_default_str();
  syn->add_option("--zipf", sargs.spec.zipf_exponent, "Item popularity exponent")->capture_default_str();
  syn->add_option("--seed", sargs.spec.seed)->capture_default_str();
  syn->add_option("--out", sargs.out, "Output interaction file")->required();

  std::vector<std::string> argv_store{"caged"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (isa != "auto") {
      const auto parsed = simd::parse_isa(isa);
      if (!parsed) throw UsageError("unknown --isa '" + isa + "' (expected auto|scalar|avx2)");
      if (!simd::select(*parsed)) throw UsageError("kernel variant '" + isa + "' is not available on this CPU");
    }

    if (*prepare) {
      if (thr_opt->count() > 0) prep.threshold = threshold;
      return cmd_prepare(prep, out);
    }
    if (*trn) {
      train::TrainConfig config;
      try {
        if (!config_file.empty()) train::load_config_file(config_file, config);
        for (const auto& kv : sets) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
          config.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        for (const auto& [flag, key] : flag_keys)
          if (trn->get_option(flag)->count() > 0) config.set(key, flag_values[key]);
        if (!ablation.empty()) config.apply_ablation(ablation);
        config.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      return cmd_train(targs, config, out, err);
    }
    if (*evl) {
      if (k_opt->count() > 0) eargs.k = eval_k;
      if (eval_k == 0) throw UsageError("--k must be >= 1");
      return cmd_evaluate(eargs, out);
    }
    if (*rep) return cmd_report(rargs, out);
    if (*syn) return cmd_synth(sargs, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const TrainingDiverged& e) {
    err << "error: training diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace caged::cli
