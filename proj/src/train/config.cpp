#include "caged/train/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace caged::train {
namespace {

template <class T>
T parse(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) throw std::invalid_argument("invalid value for '" + key + "': " + value);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw std::invalid_argument("invalid boolean for '" + key + "': " + value);
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<std::string>& TrainConfig::keys() {
  static const std::vector<std::string> k{
      "batch_size", "beta",      "caged_epochs", "dim",         "epsilon",  "eta1",         "eta2",
      "gamma",      "init_std",  "iip_bins",     "k",           "lambda",   "layers",       "max_epochs",
      "mlp_layers", "mode",      "momentum",     "patience",    "seed",     "two_stage",    "update_condition"};
  return k;
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "dim") dim = parse<std::size_t>(key, value);
  else if (key == "layers") layers = parse<int>(key, value);
  else if (key == "eta1") eta1 = parse<double>(key, value);
  else if (key == "eta2") eta2 = parse<double>(key, value);
  else if (key == "gamma") gamma = parse<double>(key, value);
  else if (key == "lambda") lambda = parse<double>(key, value);
  else if (key == "beta") beta = parse<double>(key, value);
  else if (key == "epsilon") epsilon = parse<double>(key, value);
  else if (key == "batch_size") batch_size = parse<std::size_t>(key, value);
  else if (key == "max_epochs") max_epochs = parse<int>(key, value);
  else if (key == "patience") patience = parse<int>(key, value);
  else if (key == "seed") seed = parse<std::uint64_t>(key, value);
  else if (key == "k") k = parse<std::size_t>(key, value);
  else if (key == "init_std") init_std = parse<double>(key, value);
  else if (key == "mlp_layers") mlp_layers = parse<int>(key, value);
  else if (key == "caged_epochs") caged_epochs = parse<int>(key, value);
  else if (key == "iip_bins") iip_bins = parse<int>(key, value);
  else if (key == "two_stage") two_stage = parse_bool(key, value);
  else if (key == "update_condition") update_condition = parse_bool(key, value);
  else if (key == "momentum") momentum = parse_bool(key, value);
  else if (key == "mode") {
    if (value == "caged") mode = Mode::kCaged;
    else if (value == "backbone") mode = Mode::kBackbone;
    else throw std::invalid_argument("invalid value for 'mode': " + value + " (expected caged|backbone)");
  } else {
    std::ostringstream os;
    os << "unknown config key '" << key << "'; valid keys:";
    for (const auto& k : keys()) os << ' ' << k;
    throw std::invalid_argument(os.str());
  }
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  return {
      {"batch_size", std::to_string(batch_size)},
      {"beta", fmt_double(beta)},
      {"caged_epochs", std::to_string(caged_epochs)},
      {"dim", std::to_string(dim)},
      {"epsilon", fmt_double(epsilon)},
      {"eta1", fmt_double(eta1)},
      {"eta2", fmt_double(eta2)},
      {"gamma", fmt_double(gamma)},
      {"init_std", fmt_double(init_std)},
      {"iip_bins", std::to_string(iip_bins)},
      {"k", std::to_string(k)},
      {"lambda", fmt_double(lambda)},
      {"layers", std::to_string(layers)},
      {"max_epochs", std::to_string(max_epochs)},
      {"mlp_layers", std::to_string(mlp_layers)},
      {"mode", mode == Mode::kCaged ? "caged" : "backbone"},
      {"momentum", momentum ? "true" : "false"},
      {"patience", std::to_string(patience)},
      {"seed", std::to_string(seed)},
      {"two_stage", two_stage ? "true" : "false"},
      {"update_condition", update_condition ? "true" : "false"},
  };
}

void TrainConfig::validate() const {
  auto req = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  req(dim >= 1, "dim must be >= 1");
  req(layers >= 0, "layers must be >= 0");
  req(std::isfinite(eta1) && eta1 >= 0.0, "eta1 must be finite and >= 0");
  req(std::isfinite(eta2) && eta2 >= 0.0, "eta2 must be finite and >= 0");
  req(std::isfinite(gamma) && gamma >= 0.0, "gamma must be finite and >= 0");
  req(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
  req(std::isfinite(beta) && beta >= 0.0, "beta must be finite and >= 0");
  req(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must lie in [0, 1]");
  req(batch_size >= 1, "batch_size must be >= 1");
  req(max_epochs >= 0, "max_epochs must be >= 0");
  req(patience >= 1, "patience must be >= 1");
  req(k >= 1, "k must be >= 1");
  req(std::isfinite(init_std) && init_std > 0.0, "init_std must be > 0");
  req(mlp_layers >= 1, "mlp_layers must be >= 1");
  req(caged_epochs >= 1, "caged_epochs must be >= 1");
  req(iip_bins >= 1, "iip_bins must be >= 1");
}

void TrainConfig::apply_ablation(const std::string& name) {
  if (name == "wo-ts") two_stage = false;
  else if (name == "wo-uc") update_condition = false;
  else if (name == "wo-mu") momentum = false;
  else throw std::invalid_argument("unknown ablation '" + name + "' (expected wo-ts|wo-uc|wo-mu)");
}

void load_config_file(const std::filesystem::path& file, TrainConfig& config) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config file " + file.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(file.string() + ":" + std::to_string(lineno) + ": expected key=value");
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

}  // namespace caged::train
