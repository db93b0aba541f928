#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace caged::data {

struct RawInteraction {
  std::string user_id;
  std::string item_id;
  std::optional<double> rating;
  std::optional<std::int64_t> timestamp;

  friend bool operator==(const RawInteraction&, const RawInteraction&) = default;
};

/// Dense (user, item) pair; users in [0, M), items in [0, N).
struct Interaction {
  std::uint32_t user;
  std::uint32_t item;

  friend bool operator==(const Interaction&, const Interaction&) = default;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

struct SplitRatios {
  double train = 7.0;
  double validation = 1.0;
  double test = 2.0;
};

struct IndexedDataset {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<Interaction> train;
  std::vector<Interaction> validation;
  std::vector<Interaction> test;
  // index -> opaque id; the inverse maps are rebuilt on demand.
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  // Users that had one record promoted into train by the coverage repair.
  std::vector<std::uint32_t> repaired_users;

  std::unordered_map<std::string, std::uint32_t> user_index() const;
  std::unordered_map<std::string, std::uint32_t> item_index() const;

  friend bool operator==(const IndexedDataset&, const IndexedDataset&) = default;
};

/// Parses one interaction per non-empty line: user, item, [rating], [timestamp].
/// Throws ParseError with the 1-based line number on malformed input and
/// std::runtime_error when the file cannot be read.
std::vector<RawInteraction> load_interactions(const std::filesystem::path& path, const std::string& delimiter = "\t");
std::vector<RawInteraction> parse_interactions(std::istream& in, const std::string& delimiter = "\t");

/// Keeps records with rating >= keep_threshold; rating-free records are implicit positives.
std::vector<RawInteraction> binarize(const std::vector<RawInteraction>& records, double keep_threshold);

/// Drops repeated (user, item) pairs keeping the first occurrence.
std::vector<RawInteraction> deduplicate(const std::vector<RawInteraction>& records);

/// Target sizes for n records: each split is floor(ratio * n) or that plus one
/// (largest-remainder rounding), summing to n.
std::vector<std::size_t> split_sizes(std::size_t n, const SplitRatios& ratios);

/// Global seeded permutation cut at cumulative ratio boundaries, then a
/// coverage repair that promotes one record into train for every user that
/// would otherwise have none. Input must already be deduplicated.
IndexedDataset split(const std::vector<RawInteraction>& records, const SplitRatios& ratios, std::uint64_t seed);

/// Writes train.tsv / validation.tsv / test.tsv (dense indices) and index_map.json.
void save_dataset(const IndexedDataset& ds, const std::filesystem::path& dir);
IndexedDataset load_dataset(const std::filesystem::path& dir);

}  // namespace caged::data
