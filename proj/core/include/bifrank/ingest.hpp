#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "bifrank/rng.hpp"

namespace bifrank {

enum class RatingsFormat {
  Tab100k,        // user \t item \t rating \t timestamp
  DoubleColon1M,  // user::item::rating::timestamp
  CsvLatest,      // header userId,movieId,rating,timestamp
};

const char* to_string(RatingsFormat format);
/// Accepts "tab100k", "doublecolon1m", "csvlatest" (also "100k", "1m", "latest").
RatingsFormat ratings_format_from_string(const std::string& name);

struct Rating {
  std::size_t user = 0;  // dense 0-based index
  std::size_t item = 0;  // dense 0-based index
  double rating = 0.0;
  friend bool operator==(const Rating&, const Rating&) = default;
};

struct RatingsDataset {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<Rating> entries;
  RatingsFormat source_format = RatingsFormat::Tab100k;
  /// Raw ids by dense index, ascending. Dense index i maps back to user_ids[i].
  std::vector<std::int64_t> user_ids;
  std::vector<std::int64_t> item_ids;
  std::size_t malformed_lines = 0;
  std::size_t duplicates = 0;  // repeated (user, item) pairs; the last rating wins
};

/// Largest tolerated fraction of malformed data lines.
inline constexpr double kMaxMalformedFraction = 1e-3;

/// Parses a MovieLens ratings file. Ids are reindexed densely in ascending
/// raw-id order. Ratings outside [0.5, 5] count as malformed.
/// Throws IngestError if the file cannot be read, holds no ratings, or more
/// than 0.1% of its data lines are malformed.
RatingsDataset parse_movielens(const std::filesystem::path& path, RatingsFormat format);
RatingsDataset parse_movielens(std::istream& in, RatingsFormat format,
                               const std::string& source_name = "<stream>");

/// Canonical text form: the CsvLatest layout with raw ids, entries in dataset
/// order, ratings printed exactly and timestamp 0.
std::string to_canonical(const RatingsDataset& dataset);

/// Writes "dense,raw" mappings for users and items.
void write_id_map(const RatingsDataset& dataset, const std::filesystem::path& path);

/// b indices drawn i.i.d. uniformly with replacement from {0, ..., population-1}.
/// Throws SamplingError if b == 0 or population == 0.
std::vector<std::size_t> minibatch(std::size_t population, std::size_t b, RngStream& rng);

/// b (user, item) pairs drawn uniformly with replacement from the dataset's entries.
std::vector<std::pair<std::size_t, std::size_t>> minibatch(const RatingsDataset& dataset,
                                                           std::size_t b, RngStream& rng);

}  // namespace bifrank
