#include "caged/data/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <utility>

#include "caged/core/error.hpp"
#include "caged/core/log.hpp"
#include "caged/core/rng.hpp"
#include "json.hpp"

namespace caged::data {
namespace {

std::vector<std::string_view> split_fields(std::string_view line, std::string_view delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + delim.size();
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

struct PairHash {
  std::size_t operator()(const std::pair<std::string, std::string>& p) const {
    const std::size_t h = std::hash<std::string>{}(p.first);
    return h ^ (std::hash<std::string>{}(p.second) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  }
};

}  // namespace

std::unordered_map<std::string, std::uint32_t> IndexedDataset::user_index() const {
  std::unordered_map<std::string, std::uint32_t> m;
  for (std::uint32_t i = 0; i < user_ids.size(); ++i) m.emplace(user_ids[i], i);
  return m;
}

std::unordered_map<std::string, std::uint32_t> IndexedDataset::item_index() const {
  std::unordered_map<std::string, std::uint32_t> m;
  for (std::uint32_t i = 0; i < item_ids.size(); ++i) m.emplace(item_ids[i], i);
  return m;
}

std::vector<RawInteraction> parse_interactions(std::istream& in, const std::string& delimiter) {
  if (delimiter.empty()) throw std::invalid_argument("delimiter must be non-empty");
  std::vector<RawInteraction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view, delimiter);
    if (fields.size() < 2) throw ParseError("expected at least 2 fields", lineno);
    RawInteraction rec;
    rec.user_id = std::string(trim(fields[0]));
    rec.item_id = std::string(trim(fields[1]));
    if (rec.user_id.empty() || rec.item_id.empty()) throw ParseError("empty user or item id", lineno);
    if (fields.size() >= 3 && !trim(fields[2]).empty()) {
      double r = 0.0;
      if (!parse_number(trim(fields[2]), r) || !std::isfinite(r)) throw ParseError("invalid rating", lineno);
      rec.rating = r;
    }
    if (fields.size() >= 4 && !trim(fields[3]).empty()) {
      std::int64_t ts = 0;
      if (!parse_number(trim(fields[3]), ts)) throw ParseError("invalid timestamp", lineno);
      rec.timestamp = ts;
    }
    out.push_back(std::move(rec));
  }
  if (in.bad()) throw std::runtime_error("I/O error while reading interactions");
  return out;
}

std::vector<RawInteraction> load_interactions(const std::filesystem::path& path, const std::string& delimiter) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interaction file: " + path.string());
  return parse_interactions(in, delimiter);
}

std::vector<RawInteraction> binarize(const std::vector<RawInteraction>& records, double keep_threshold) {
  std::vector<RawInteraction> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (!r.rating || *r.rating >= keep_threshold) out.push_back(r);
  }
  return out;
}

std::vector<RawInteraction> deduplicate(const std::vector<RawInteraction>& records) {
  std::unordered_map<std::pair<std::string, std::string>, bool, PairHash> seen;
  std::vector<RawInteraction> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (seen.emplace(std::make_pair(r.user_id, r.item_id), true).second) out.push_back(r);
  }
  return out;
}

std::vector<std::size_t> split_sizes(std::size_t n, const SplitRatios& ratios) {
  const double parts[3] = {ratios.train, ratios.validation, ratios.test};
  const double total = parts[0] + parts[1] + parts[2];
  std::vector<std::size_t> sizes(3);
  std::vector<double> remainders(3);
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = parts[s] / total * static_cast<double>(n);
    // Guard against 0.7 * 10 landing at 6.999...
    const double fl = std::floor(exact + 1e-9);
    sizes[s] = static_cast<std::size_t>(fl);
    remainders[s] = exact - fl;
    assigned += sizes[s];
  }
  std::vector<int> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) sizes[order[k % 3]] += 1;
  return sizes;
}

IndexedDataset split(const std::vector<RawInteraction>& records, const SplitRatios& ratios, std::uint64_t seed) {
  if (records.empty()) throw std::invalid_argument("split: no interactions");
  if (!(ratios.train > 0 && ratios.validation > 0 && ratios.test > 0))
    throw std::invalid_argument("split: ratios must be positive");

  IndexedDataset ds;
  std::unordered_map<std::string, std::uint32_t> users, items;
  std::vector<Interaction> all;
  all.reserve(records.size());
  for (const auto& r : records) {
    auto [uit, unew] = users.emplace(r.user_id, static_cast<std::uint32_t>(ds.user_ids.size()));
    if (unew) ds.user_ids.push_back(r.user_id);
    auto [iit, inew] = items.emplace(r.item_id, static_cast<std::uint32_t>(ds.item_ids.size()));
    if (inew) ds.item_ids.push_back(r.item_id);
    all.push_back({uit->second, iit->second});
  }
  ds.num_users = ds.user_ids.size();
  ds.num_items = ds.item_ids.size();
  {
    std::vector<Interaction> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("split: records must be deduplicated on (user, item)");
  }

  // Fisher-Yates with the standard engine and distribution.
  Rng rng = make_rng(seed, Stream::kSplit);
  std::shuffle(all.begin(), all.end(), rng);

  const auto sizes = split_sizes(all.size(), ratios);
  // Positions [0, n_train) train, then validation, then test.
  std::vector<int> bucket(all.size());
  for (std::size_t p = 0; p < all.size(); ++p) bucket[p] = p < sizes[0] ? 0 : (p < sizes[0] + sizes[1] ? 1 : 2);

  std::vector<char> has_train(ds.num_users, 0);
  for (std::size_t p = 0; p < sizes[0]; ++p) has_train[all[p].user] = 1;
  // First non-train position per user in permutation order: validation precedes test.
  std::vector<std::size_t> promote(ds.num_users, all.size());
  for (std::size_t p = sizes[0]; p < all.size(); ++p) {
    const auto u = all[p].user;
    if (!has_train[u] && promote[u] == all.size()) promote[u] = p;
  }
  for (std::uint32_t u = 0; u < ds.num_users; ++u) {
    if (has_train[u]) continue;
    bucket[promote[u]] = 0;
    ds.repaired_users.push_back(u);
  }
  if (!ds.repaired_users.empty())
    log::info("split: promoted one record into train for ", ds.repaired_users.size(), " user(s) without train data");

  for (std::size_t p = 0; p < all.size(); ++p) {
    auto& dst = bucket[p] == 0 ? ds.train : (bucket[p] == 1 ? ds.validation : ds.test);
    dst.push_back(all[p]);
  }
  return ds;
}

namespace {

void write_pairs(const std::vector<Interaction>& pairs, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  for (const auto& p : pairs) out << p.user << '\t' << p.item << '\n';
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

std::vector<Interaction> read_pairs(const std::filesystem::path& file, std::size_t m, std::size_t n) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::vector<Interaction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_fields(trim(line), "\t");
    std::uint32_t u = 0, i = 0;
    if (f.size() != 2 || !parse_number(f[0], u) || !parse_number(f[1], i) || u >= m || i >= n)
      throw ParseError("invalid split record in " + file.filename().string(), lineno);
    out.push_back({u, i});
  }
  return out;
}

}  // namespace

void save_dataset(const IndexedDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_pairs(ds.train, dir / "train.tsv");
  write_pairs(ds.validation, dir / "validation.tsv");
  write_pairs(ds.test, dir / "test.tsv");
  // ordered_json keeps insertion (= index) order, so reruns are byte-identical.
  nlohmann::ordered_json j;
  j["users"] = nlohmann::ordered_json::object();
  j["items"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < ds.user_ids.size(); ++i) j["users"][ds.user_ids[i]] = i;
  for (std::size_t i = 0; i < ds.item_ids.size(); ++i) j["items"][ds.item_ids[i]] = i;
  std::ofstream out(dir / "index_map.json");
  if (!out) throw std::runtime_error("cannot write index_map.json");
  out << j.dump(1) << '\n';
}

IndexedDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "index_map.json");
  if (!in) throw std::runtime_error("cannot open " + (dir / "index_map.json").string());
  const auto j = nlohmann::json::parse(in);
  IndexedDataset ds;
  auto fill = [](const nlohmann::json& obj, std::vector<std::string>& ids) {
    ids.assign(obj.size(), {});
    std::vector<char> seen(obj.size(), 0);
    for (const auto& [id, idx] : obj.items()) {
      const auto k = idx.get<std::size_t>();
      if (k >= ids.size() || seen[k]) throw std::runtime_error("index_map.json: indices are not a bijection");
      seen[k] = 1;
      ids[k] = id;
    }
  };
  fill(j.at("users"), ds.user_ids);
  fill(j.at("items"), ds.item_ids);
  ds.num_users = ds.user_ids.size();
  ds.num_items = ds.item_ids.size();
  ds.train = read_pairs(dir / "train.tsv", ds.num_users, ds.num_items);
  ds.validation = read_pairs(dir / "validation.tsv", ds.num_users, ds.num_items);
  ds.test = read_pairs(dir / "test.tsv", ds.num_users, ds.num_items);
  return ds;
}

}  // namespace caged::data
